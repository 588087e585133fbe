"""
Desenho de trilhas sobre quadros PGM: contorno sólido para trilhas casadas
e tracejado para trilhas penalizadas (conf < 1).
"""
import logging
from pathlib import Path
from typing import Dict, List

import numpy as np

from app.appearance import GrayImage
from app.geometry import BBox
from app.io_formats import PathLike, read_pgm, write_pgm
from app.metrics import TrackFile, TrackRecord

logger = logging.getLogger(__name__)

LINE = 255
GAP = 0
DASH_LENGTH = 4
THICKNESS = 2


def _edge_mask(length: int, dashed: bool) -> np.ndarray:
    if not dashed:
        return np.ones(length, dtype=bool)
    return (np.arange(length) // DASH_LENGTH) % 2 == 0


def draw_box(pixels: np.ndarray, box: BBox, dashed: bool = False):
    """Desenha o contorno da caixa in-place, recortado aos limites da imagem"""
    height, width = pixels.shape
    left = int(round(box.u - box.w / 2))
    right = int(round(box.u + box.w / 2)) - 1
    top = int(round(box.v - box.h / 2))
    bottom = int(round(box.v + box.h / 2)) - 1

    for k in range(THICKNESS):
        # horizontais
        for row in (top + k, bottom - k):
            if 0 <= row < height:
                cols = np.arange(left, right + 1)
                mask = _edge_mask(len(cols), dashed)
                inside = (cols >= 0) & (cols < width)
                value = np.where(mask, LINE, GAP)
                pixels[row, cols[inside]] = value[inside]
        # verticais
        for col in (left + k, right - k):
            if 0 <= col < width:
                rows = np.arange(top, bottom + 1)
                mask = _edge_mask(len(rows), dashed)
                inside = (rows >= 0) & (rows < height)
                value = np.where(mask, LINE, GAP)
                pixels[rows[inside], col] = value[inside]


def render_frame(img: GrayImage, records: List[TrackRecord]) -> GrayImage:
    pixels = np.array(img.pixels, dtype=np.uint8, copy=True)
    for rec in sorted(records, key=lambda r: r.id):
        draw_box(pixels, rec.box, dashed=rec.conf < 1.0)
    return GrayImage(img.width, img.height, pixels)


def overlay_sequence(frames_dir: PathLike, tracks: TrackFile, out_dir: PathLike) -> int:
    """
    Desenha as trilhas de cada quadro `%06d.pgm` de frames_dir e grava em out_dir
    com o mesmo nome. Retorna o número de quadros escritos.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    by_frame: Dict[int, List[TrackRecord]] = tracks.by_frame()

    written = 0
    for path in sorted(Path(frames_dir).glob("*.pgm")):
        try:
            frame = int(path.stem)
        except ValueError:
            logger.warning(f"Arquivo ignorado (nome não numérico): {path.name}")
            continue
        img = read_pgm(path)
        write_pgm(render_frame(img, by_frame.get(frame, [])), out / path.name)
        written += 1

    logger.info(f"Overlay: {written} quadros escritos em {out}")
    return written
