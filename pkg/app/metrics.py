"""
Métricas de rastreamento sobre o acumulador do motmetrics: MOTA, MOTP e IDSW
pelo casamento CLEAR quadro a quadro, IDF1 pelo casamento global de identidades.
"""
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import motmetrics as mm
import numpy as np

from app.geometry import BBox, to_topleft
from app.models import MetricsReport

logger = logging.getLogger(__name__)

MATCH_EVENTS = ("MATCH", "SWITCH")
SUMMARY_METRICS = [
    "num_objects",
    "num_predictions",
    "num_detections",
    "num_switches",
    "num_false_positives",
    "num_misses",
    "motp",
    "idtp",
]


@dataclass(frozen=True)
class TrackRecord:
    frame: int
    id: int
    box: BBox
    conf: float = 1.0


@dataclass
class TrackFile:
    records: List[TrackRecord] = field(default_factory=list)

    def by_frame(self) -> Dict[int, List[TrackRecord]]:
        frames: Dict[int, List[TrackRecord]] = defaultdict(list)
        for rec in self.records:
            frames[rec.frame].append(rec)
        return frames

    @property
    def ids(self) -> List[int]:
        return sorted({rec.id for rec in self.records})


def _tlwh(records: List[TrackRecord]) -> np.ndarray:
    return np.array([to_topleft(r.box) for r in records], dtype=np.float64).reshape(-1, 4)


def _check_threshold(iou_threshold: float):
    if not 0.0 < iou_threshold < 1.0:
        raise ValueError(f"Limiar de IoU deve estar em (0, 1): {iou_threshold}")


def accumulate(gt: TrackFile, hyp: TrackFile, iou_threshold: float = 0.5) -> mm.MOTAccumulator:
    """
    Alimenta um MOTAccumulator quadro a quadro com distância 1 − IoU; pares abaixo
    do limiar de IoU ficam como NaN (não casáveis).
    """
    _check_threshold(iou_threshold)
    acc = mm.MOTAccumulator(auto_id=False)
    gt_frames, hyp_frames = gt.by_frame(), hyp.by_frame()
    for frame in sorted(set(gt_frames) | set(hyp_frames)):
        gts, hyps = gt_frames.get(frame, []), hyp_frames.get(frame, [])
        if gts and hyps:
            dists = mm.distances.iou_matrix(_tlwh(gts), _tlwh(hyps), max_iou=1.0 - iou_threshold)
        else:
            dists = np.empty((len(gts), len(hyps)))
        acc.update([r.id for r in gts], [r.id for r in hyps], dists, frameid=frame)
    return acc


def clear_matches(
    gt: TrackFile, hyp: TrackFile, iou_threshold: float
) -> Dict[int, List[Tuple[int, int, float]]]:
    """
    Casamentos (id gt, id hyp, IoU) por quadro: pares do quadro anterior que ainda
    passam no limiar são mantidos; o restante é resolvido pelo algoritmo húngaro.
    """
    out: Dict[int, List[Tuple[int, int, float]]] = {
        frame: [] for frame in set(gt.by_frame()) | set(hyp.by_frame())
    }
    if not gt.records or not hyp.records:
        return out
    events = accumulate(gt, hyp, iou_threshold).mot_events
    matched = events[events["Type"].isin(MATCH_EVENTS)]
    for (frame, _), row in matched.iterrows():
        out[int(frame)].append((int(row["OId"]), int(row["HId"]), 1.0 - float(row["D"])))
    return out


def _empty_side_report(gt: TrackFile, hyp: TrackFile) -> MetricsReport:
    """Sem gt ou sem hipóteses não há casamentos; o acumulador não é necessário"""
    fn, fp = len(gt.records), len(hyp.records)
    if fn:
        mota = 0.0
    else:
        mota = 100.0 if fp == 0 else 0.0
    return MetricsReport(
        mota=mota,
        idf1=100.0 if fn + fp == 0 else 0.0,
        idsw=0,
        fp=fp,
        fn=fn,
        gt_count=fn,
        idfp=fp,
        idfn=fn,
        hyp_count=fp,
    )


def evaluate(gt: TrackFile, hyp: TrackFile, iou_threshold: float = 0.5) -> MetricsReport:
    _check_threshold(iou_threshold)
    if not gt.records or not hyp.records:
        report = _empty_side_report(gt, hyp)
    else:
        mh = mm.metrics.create()
        summary = mh.compute(
            accumulate(gt, hyp, iou_threshold), metrics=SUMMARY_METRICS, return_dataframe=False
        )
        gt_count = int(summary["num_objects"])
        hyp_count = int(summary["num_predictions"])
        matched = int(summary["num_detections"])  # casamentos, incluindo trocas
        idsw = int(summary["num_switches"])
        fp = int(summary["num_false_positives"])
        fn = int(summary["num_misses"])
        idtp = int(summary["idtp"])
        report = MetricsReport(
            mota=100.0 * (1.0 - (fn + fp + idsw) / gt_count),
            idf1=100.0 * 2 * idtp / (gt_count + hyp_count),
            idsw=idsw,
            fp=fp,
            fn=fn,
            gt_count=gt_count,
            # motp do motmetrics é a distância média 1 − IoU dos casamentos
            motp=100.0 * (1.0 - float(summary["motp"])) if matched else 0.0,
            matches=matched,
            idtp=idtp,
            idfp=hyp_count - idtp,
            idfn=gt_count - idtp,
            hyp_count=hyp_count,
        )
    logger.info(f"Avaliação: MOTA={report.mota:.3f} IDF1={report.idf1:.3f} IDSW={report.idsw}")
    return report


def first_and_final_identities(gt: TrackFile, hyp: TrackFile, iou_threshold: float = 0.5) -> Dict[int, Tuple[int, int]]:
    """
    Para cada identidade gt: (primeiro id hyp casado, id hyp casado no último quadro
    em que o gt aparece), -1 quando não houve casamento.
    """
    per_frame = clear_matches(gt, hyp, iou_threshold)
    last_frame = {}
    for rec in gt.records:
        last_frame[rec.id] = max(last_frame.get(rec.id, rec.frame), rec.frame)
    first: Dict[int, int] = {}
    final: Dict[int, int] = {}
    for frame in sorted(per_frame):
        for g_id, h_id, _ in per_frame[frame]:
            first.setdefault(g_id, h_id)
            if frame == last_frame.get(g_id):
                final[g_id] = h_id
    return {g: (first.get(g, -1), final.get(g, -1)) for g in last_frame}
