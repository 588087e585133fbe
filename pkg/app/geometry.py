"""
Caixas delimitadoras no formato centro (u, v, w, h), medidas de sobreposição
e distância, e conversões para o formato canto superior esquerdo do MOTChallenge.
"""
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np


@dataclass(frozen=True, slots=True)
class BBox:
    u: float
    v: float
    w: float
    h: float

    def __post_init__(self):
        if not all(math.isfinite(x) for x in (self.u, self.v, self.w, self.h)):
            raise ValueError(f"Caixa com valores não finitos: {self}")
        if self.w <= 0 or self.h <= 0:
            raise ValueError(f"Caixa com tamanho não positivo: w={self.w}, h={self.h}")

    @property
    def center(self) -> Tuple[float, float]:
        return (self.u, self.v)

    def as_array(self) -> np.ndarray:
        return np.array([self.u, self.v, self.w, self.h], dtype=np.float64)

    @classmethod
    def from_array(cls, values) -> "BBox":
        u, v, w, h = (float(x) for x in values)
        return cls(u, v, w, h)

    def with_center(self, u: float, v: float) -> "BBox":
        return BBox(float(u), float(v), self.w, self.h)


@dataclass(frozen=True, slots=True)
class Velocity4:
    du: float = 0.0
    dv: float = 0.0
    dw: float = 0.0
    dh: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(x) for x in (self.du, self.dv, self.dw, self.dh)):
            raise ValueError(f"Velocidade com valores não finitos: {self}")

    @property
    def center_speed(self) -> float:
        return math.hypot(self.du, self.dv)

    def as_array(self) -> np.ndarray:
        return np.array([self.du, self.dv, self.dw, self.dh], dtype=np.float64)

    @classmethod
    def from_array(cls, values) -> "Velocity4":
        du, dv, dw, dh = (float(x) for x in values)
        return cls(du, dv, dw, dh)


ZERO_VELOCITY = Velocity4()


def iou(a: BBox, b: BBox) -> float:
    """Interseção sobre união de duas caixas, em [0, 1]"""
    iw = min(a.u + a.w / 2, b.u + b.w / 2) - max(a.u - a.w / 2, b.u - b.w / 2)
    ih = min(a.v + a.h / 2, b.v + b.h / 2) - max(a.v - a.h / 2, b.v - b.h / 2)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    union = a.w * a.h + b.w * b.h - inter
    return min(1.0, max(0.0, inter / union))


def center_distance(a: BBox, b: BBox) -> float:
    return math.hypot(a.u - b.u, a.v - b.v)


def diag(a: BBox) -> float:
    return math.hypot(a.w, a.h)


def to_topleft(a: BBox) -> Tuple[float, float, float, float]:
    return (a.u - a.w / 2, a.v - a.h / 2, a.w, a.h)


def from_topleft(left: float, top: float, w: float, h: float) -> BBox:
    if w <= 0 or h <= 0:
        raise ValueError(f"Tamanho não positivo: w={w}, h={h}")
    return BBox(left + w / 2, top + h / 2, w, h)


# Versões vetorizadas sobre arrays (N, 4) no formato centro

def iou_matrix(boxes_a: np.ndarray, boxes_b: np.ndarray) -> np.ndarray:
    """IoU entre cada linha de `boxes_a` (N, 4) e cada linha de `boxes_b` (M, 4)"""
    a = np.asarray(boxes_a, dtype=np.float64).reshape(-1, 4)
    b = np.asarray(boxes_b, dtype=np.float64).reshape(-1, 4)
    a_lo = a[:, None, :2] - a[:, None, 2:] / 2
    a_hi = a[:, None, :2] + a[:, None, 2:] / 2
    b_lo = b[None, :, :2] - b[None, :, 2:] / 2
    b_hi = b[None, :, :2] + b[None, :, 2:] / 2
    wh = np.clip(np.minimum(a_hi, b_hi) - np.maximum(a_lo, b_lo), 0.0, None)
    inter = wh[..., 0] * wh[..., 1]
    area_a = (a[:, 2] * a[:, 3])[:, None]
    area_b = (b[:, 2] * b[:, 3])[None, :]
    union = area_a + area_b - inter
    return np.clip(inter / union, 0.0, 1.0)


def center_distance_matrix(boxes_a: np.ndarray, boxes_b: np.ndarray) -> np.ndarray:
    a = np.asarray(boxes_a, dtype=np.float64).reshape(-1, 4)
    b = np.asarray(boxes_b, dtype=np.float64).reshape(-1, 4)
    delta = a[:, None, :2] - b[None, :, :2]
    return np.hypot(delta[..., 0], delta[..., 1])


def diags(boxes: np.ndarray) -> np.ndarray:
    arr = np.asarray(boxes, dtype=np.float64).reshape(-1, 4)
    return np.hypot(arr[:, 2], arr[:, 3])
