"""
Matriz de custo orientada ao alvo, atribuição húngara com portão e
classificação das trilhas em fortes, fracas e novas.
"""
import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, List, Sequence, Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment

from app.config import TrackerConfig
from app.geometry import BBox, center_distance, center_distance_matrix, diags, iou, iou_matrix
from app.models import Detection

if TYPE_CHECKING:
    from app.lifecycle import Track

logger = logging.getLogger(__name__)

_TIE_TOLERANCE = 1e-12


@dataclass
class CostMatrix:
    values: np.ndarray  # (T, D), entradas em [0, 1]
    track_ids: List[int] = field(default_factory=list)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.values.shape


@dataclass
class AssignmentResult:
    matches: List[Tuple[int, int]]  # (id da trilha, índice da detecção)
    unmatched_tracks: List[int]
    unmatched_detections: List[int]


@dataclass
class Classification:
    strong: List[Tuple[int, int]]
    weak: List[int]
    births: List[int]


def motion_cost(p: BBox, det: BBox, d_od: float) -> float:
    """(1 − IoU) × distância normalizada pelo limite d_od"""
    return (1.0 - iou(p, det)) * (min(center_distance(p, det), d_od) / d_od)


def build_cost_matrix(tracks: Sequence["Track"], dets: Sequence[Detection], cfg: TrackerConfig) -> CostMatrix:
    """
    C[i, j] = λ_p·média_s C_m + λ_d·(1 − conf_j) + λ_h·penalidade_i,
    com o custo de movimento médio sobre as partículas otimizadas da trilha.
    """
    n_t, n_d = len(tracks), len(dets)
    values = np.zeros((n_t, n_d))
    ids = [t.id for t in tracks]
    if n_t == 0 or n_d == 0:
        return CostMatrix(values, ids)

    det_boxes = np.array([d.box.as_array() for d in dets])
    det_conf = np.array([d.conf for d in dets])
    det_diags = diags(det_boxes)
    for i, track in enumerate(tracks):
        if track.particles is not None and len(track.particles):
            states = track.particles.states
        else:
            states = track.state.as_array()[None, :]
        d_od = 0.5 * (np.hypot(track.state.w, track.state.h) + det_diags)[None, :]
        c_iou = 1.0 - iou_matrix(states, det_boxes)
        c_d = np.minimum(center_distance_matrix(states, det_boxes), d_od) / d_od
        motion = (c_iou * c_d).mean(axis=0)
        values[i] = cfg.lambda_p * motion + cfg.lambda_d * (1.0 - det_conf) + cfg.lambda_h * track.penalty
    return CostMatrix(np.clip(values, 0.0, 1.0), ids)


def _optimal_total(values: np.ndarray) -> float:
    if values.size == 0:
        return 0.0
    rows, cols = linear_sum_assignment(values)
    return float(values[rows, cols].sum())


def _lexicographic(values: np.ndarray) -> List[Tuple[int, int]]:
    """
    Entre as atribuições de custo mínimo, escolhe a de menor ordem (linha, coluna):
    cada linha, em ordem, fica com a menor coluna que ainda permite o ótimo.
    """
    rows, cols = linear_sum_assignment(values)
    best = float(values[rows, cols].sum())
    assigned = dict(zip(rows.tolist(), cols.tolist()))

    free_rows = list(range(values.shape[0]))
    free_cols = list(range(values.shape[1]))
    fixed_cost = 0.0
    pairs: List[Tuple[int, int]] = []
    while free_rows and free_cols:
        i = free_rows.pop(0)
        current = assigned.get(i)
        chosen = current
        sub_rows = free_rows
        for j in free_cols:
            if current is not None and j >= current:
                break
            rest_cols = [c for c in free_cols if c != j]
            sub = values[np.ix_(sub_rows, rest_cols)]
            total = fixed_cost + values[i, j] + _optimal_total(sub)
            if total <= best + _TIE_TOLERANCE:
                chosen = j
                break
        if chosen is None:
            continue
        if chosen != current:
            rest_cols = [c for c in free_cols if c != chosen]
            sub = values[np.ix_(sub_rows, rest_cols)]
            sub_r, sub_c = linear_sum_assignment(sub) if sub.size else ([], [])
            assigned = {sub_rows[r]: rest_cols[c] for r, c in zip(sub_r, sub_c)}
        pairs.append((i, chosen))
        fixed_cost += float(values[i, chosen])
        free_cols.remove(chosen)
    return pairs


def solve_assignment(c: CostMatrix, gate: float) -> AssignmentResult:
    """Atribuição de custo total mínimo; pares com custo acima do portão são desfeitos"""
    n_t, n_d = c.shape
    ids = c.track_ids or list(range(n_t))
    if n_t == 0 or n_d == 0:
        return AssignmentResult([], list(ids), list(range(n_d)))

    matches = []
    matched_rows, matched_cols = set(), set()
    for i, j in _lexicographic(c.values):
        if c.values[i, j] > gate:
            continue
        matches.append((ids[i], j))
        matched_rows.add(i)
        matched_cols.add(j)

    return AssignmentResult(
        matches=matches,
        unmatched_tracks=[ids[i] for i in range(n_t) if i not in matched_rows],
        unmatched_detections=[j for j in range(n_d) if j not in matched_cols],
    )


def classify(assign: AssignmentResult, dets: Sequence[Detection], conf_new: float) -> Classification:
    births = [j for j in assign.unmatched_detections if dets[j].conf >= conf_new]
    logger.debug(
        f"Associação: {len(assign.matches)} fortes, {len(assign.unmatched_tracks)} fracas, "
        f"{len(births)} novas"
    )
    return Classification(strong=list(assign.matches), weak=list(assign.unmatched_tracks), births=births)
