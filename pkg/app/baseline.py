"""
Rastreador de referência estilo SORT sem modelo de movimento: casamento guloso por IoU
contra a última caixa conhecida de cada trilha.
"""
import logging
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from app.exceptions import DataError
from app.geometry import BBox, iou_matrix
from app.models import FrameInput, TrackOutput, TrackStatus

logger = logging.getLogger(__name__)


@dataclass
class _BaselineTrack:
    id: int
    box: BBox
    misses: int = 0


class IouGreedyTracker:
    def __init__(self, iou_threshold: float = 0.3, max_age: int = 1, conf_new: float = 0.6):
        if not 0.0 < iou_threshold <= 1.0:
            raise ValueError(f"iou_threshold deve estar em (0, 1]: {iou_threshold}")
        if max_age < 0:
            raise ValueError(f"max_age deve ser >= 0: {max_age}")
        self.iou_threshold = iou_threshold
        self.max_age = max_age
        self.conf_new = conf_new
        self.reset()

    def reset(self):
        self._tracks: List[_BaselineTrack] = []
        self._next_id = 1
        self.frame_index: Optional[int] = None

    def step(self, frame: FrameInput) -> List[TrackOutput]:
        if self.frame_index is not None and frame.frame_index <= self.frame_index:
            raise DataError(
                f"Quadro {frame.frame_index} fora de ordem (último processado: {self.frame_index})"
            )
        dets = list(frame.detections)
        matched_tracks, matched_dets = set(), set()

        if self._tracks and dets:
            overlap = iou_matrix(
                np.array([tr.box.as_array() for tr in self._tracks]),
                np.array([d.box.as_array() for d in dets]),
            )
            # Pares em ordem decrescente de IoU; empates pela ordem (trilha, detecção)
            order = np.argsort(-overlap, axis=None, kind="stable")
            for flat in order:
                i, j = np.unravel_index(flat, overlap.shape)
                if overlap[i, j] < self.iou_threshold:
                    break
                if i in matched_tracks or j in matched_dets:
                    continue
                matched_tracks.add(int(i))
                matched_dets.add(int(j))
                self._tracks[i].box = dets[j].box
                self._tracks[i].misses = 0

        survivors: List[_BaselineTrack] = []
        for i, track in enumerate(self._tracks):
            if i not in matched_tracks:
                track.misses += 1
            if track.misses <= self.max_age:
                survivors.append(track)
        self._tracks = survivors

        for j, det in enumerate(dets):
            if j not in matched_dets and det.conf >= self.conf_new:
                self._tracks.append(_BaselineTrack(self._next_id, det.box))
                self._next_id += 1

        self.frame_index = frame.frame_index
        return [
            TrackOutput(
                tr.id,
                tr.box,
                TrackStatus.STRONG if tr.misses == 0 else TrackStatus.WEAK,
                0.0 if tr.misses == 0 else min(1.0, tr.misses / (self.max_age + 1)),
                float(tr.misses),
            )
            for tr in sorted(self._tracks, key=lambda x: x.id)
        ]
