"""
Características HoG sobre recortes em tons de cinza e a similaridade de cosseno
usada no termo de aparência da aptidão.
"""
import logging
from dataclasses import dataclass
from typing import Dict, Optional, Protocol, Tuple

import numpy as np

from app.exceptions import ConfigError, OutOfFrameError
from app.geometry import BBox

logger = logging.getLogger(__name__)

FeatureVec = np.ndarray  # vetor 1-D não negativo de tamanho fixo


@dataclass(frozen=True)
class GrayImage:
    width: int
    height: int
    pixels: np.ndarray  # (height, width), luminância em [0, 255]

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError(f"Imagem vazia: {self.width}x{self.height}")
        if self.pixels.shape != (self.height, self.width):
            raise ValueError(
                f"Pixels {self.pixels.shape} não correspondem a {self.height}x{self.width}"
            )

    @classmethod
    def from_array(cls, pixels) -> "GrayImage":
        arr = np.asarray(pixels)
        if arr.ndim != 2:
            raise ValueError(f"Esperada matriz 2-D, recebido shape {arr.shape}")
        return cls(width=arr.shape[1], height=arr.shape[0], pixels=arr)


@dataclass(frozen=True)
class HogParams:
    patch: int = 48
    cell: int = 8
    bins: int = 9
    block: int = 2
    clip: float = 0.2

    @property
    def length(self) -> int:
        cells = self.patch // self.cell
        blocks = cells - self.block + 1
        return blocks * blocks * self.block * self.block * self.bins

    @classmethod
    def from_config(cls, cfg) -> "HogParams":
        return cls(cfg.hog_patch, cfg.hog_cell, cfg.hog_bins, cfg.hog_block, cfg.hog_clip)


def _resample_bilinear(img: GrayImage, box: BBox, size: int) -> np.ndarray:
    """Reamostra o recorte da caixa para size x size (pixels fora da imagem replicam a borda)"""
    left = box.u - box.w / 2
    top = box.v - box.h / 2
    steps = (np.arange(size, dtype=np.float64) + 0.5) / size
    xs = np.clip(left + steps * box.w - 0.5, 0.0, img.width - 1)
    ys = np.clip(top + steps * box.h - 0.5, 0.0, img.height - 1)

    x0 = np.floor(xs).astype(np.int64)
    y0 = np.floor(ys).astype(np.int64)
    x1 = np.minimum(x0 + 1, img.width - 1)
    y1 = np.minimum(y0 + 1, img.height - 1)
    fx = (xs - x0)[None, :]
    fy = (ys - y0)[:, None]

    p = img.pixels.astype(np.float64)
    top_row = p[np.ix_(y0, x0)] * (1 - fx) + p[np.ix_(y0, x1)] * fx
    bottom_row = p[np.ix_(y1, x0)] * (1 - fx) + p[np.ix_(y1, x1)] * fx
    return top_row * (1 - fy) + bottom_row * fy


def extract_hog(img: GrayImage, box: BBox, params: HogParams = HogParams()) -> FeatureVec:
    """
    Extrai o descritor HoG da região da caixa.
    Levanta OutOfFrameError quando a caixa não cobre nenhum pixel da imagem.
    """
    left, right = box.u - box.w / 2, box.u + box.w / 2
    top, bottom = box.v - box.h / 2, box.v + box.h / 2
    if right <= 0 or bottom <= 0 or left >= img.width or top >= img.height:
        raise OutOfFrameError(f"Caixa {box} fora da imagem {img.width}x{img.height}")

    patch = _resample_bilinear(img, box, params.patch)

    gx = np.zeros_like(patch)
    gy = np.zeros_like(patch)
    gx[:, 1:-1] = patch[:, 2:] - patch[:, :-2]
    gy[1:-1, :] = patch[2:, :] - patch[:-2, :]
    magnitude = np.hypot(gx, gy)
    angle = np.mod(np.degrees(np.arctan2(gy, gx)), 180.0)
    bins = np.minimum((angle / (180.0 / params.bins)).astype(np.int64), params.bins - 1)

    # Histogramas por célula
    n_cells = params.patch // params.cell
    rows = np.arange(params.patch) // params.cell
    cell_index = (rows[:, None] * n_cells + rows[None, :]) * params.bins + bins
    hist = np.bincount(
        cell_index.ravel(), weights=magnitude.ravel(), minlength=n_cells * n_cells * params.bins
    ).reshape(n_cells, n_cells, params.bins)

    # Normalização L2 com corte por bloco
    n_blocks = n_cells - params.block + 1
    blocks = []
    eps = 1e-12
    for by in range(n_blocks):
        for bx in range(n_blocks):
            v = hist[by:by + params.block, bx:bx + params.block, :].ravel()
            v = v / np.sqrt(np.dot(v, v) + eps)
            v = np.minimum(v, params.clip)
            v = v / np.sqrt(np.dot(v, v) + eps)
            blocks.append(v)
    return np.concatenate(blocks)


def cosine_sim(a: FeatureVec, b: FeatureVec) -> float:
    """Similaridade de cosseno em [0, 1]; 0 quando um dos vetores é nulo"""
    if a.shape != b.shape:
        raise ConfigError([f"vetores de características com tamanhos diferentes: {a.shape} vs {b.shape}"])
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return min(1.0, max(0.0, float(np.dot(a, b)) / (na * nb)))


class FeatureProvider(Protocol):
    def features(self, box: BBox) -> Optional[FeatureVec]:
        ...


class NullFeatureProvider:
    """Modo sem imagens: nenhuma característica de aparência"""

    def features(self, box: BBox) -> Optional[FeatureVec]:
        return None


class HogFeatureProvider:
    """
    Extrai HoG do quadro atual com cache por centro arredondado e tamanho.
    Uma instância por quadro; partículas que andam menos de 1 px reutilizam o vetor.
    """

    def __init__(self, image: GrayImage, params: HogParams):
        self.image = image
        self.params = params
        self._cache: Dict[Tuple[int, int, int, int], Optional[FeatureVec]] = {}

    def features(self, box: BBox) -> Optional[FeatureVec]:
        key = (round(box.u), round(box.v), round(box.w), round(box.h))
        if key not in self._cache:
            try:
                self._cache[key] = extract_hog(self.image, box, self.params)
            except OutOfFrameError as e:
                logger.debug(f"Aparência desligada para a caixa: {e}")
                self._cache[key] = None
        return self._cache[key]
