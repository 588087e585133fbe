"""
Leitura e escrita de arquivos: MOTChallenge (det/gt/resultados), quadros PGM (P5)
e configuração texto `chave = valor`.
"""
import logging
import math
from pathlib import Path
from typing import Dict, Iterable, List, Tuple, Union

import numpy as np
from pydantic import ValidationError

from app.appearance import GrayImage
from app.config import TrackerConfig
from app.exceptions import ConfigError, DataError
from app.geometry import BBox, from_topleft, to_topleft
from app.metrics import TrackFile, TrackRecord
from app.models import Detection, TrackOutput, TrackStatus

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
FRAME_NAME = "{:06d}.pgm"


def _integral(text: str, path: str, line_no: int) -> int:
    """Aceita "3" ou "3.0"; valores fracionários como "1.5" são rejeitados"""
    value = float(text)
    if not value.is_integer():
        raise DataError(f"esperado inteiro, encontrado {text!r}", path, line_no)
    return int(value)


def _parse_mot_line(raw: str, path: str, line_no: int) -> Tuple[int, int, float, float, float, float, float]:
    parts = [p.strip() for p in raw.split(",")]
    if len(parts) < 6:
        raise DataError(f"esperadas pelo menos 6 colunas, encontradas {len(parts)}", path, line_no)
    try:
        frame, track_id = (_integral(parts[k], path, line_no) for k in (0, 1))
        left, top, w, h = (float(x) for x in parts[2:6])
        conf = float(parts[6]) if len(parts) > 6 else 1.0
    except DataError:
        raise
    except ValueError as e:
        raise DataError(f"valor não numérico: {str(e)}", path, line_no)
    if not all(math.isfinite(x) for x in (left, top, w, h, conf)):
        raise DataError("valor não finito", path, line_no)
    if frame < 1:
        raise DataError(f"quadro deve ser >= 1 (valor {frame})", path, line_no)
    return frame, track_id, left, top, w, h, conf


def _box(left: float, top: float, w: float, h: float, path: str, line_no: int) -> BBox:
    try:
        return from_topleft(left, top, w, h)
    except ValueError as e:
        raise DataError(str(e), path, line_no)


def _mot_rows(lines: Iterable[str], name: str) -> Iterable[Tuple[int, Tuple]]:
    for line_no, raw in enumerate(lines, start=1):
        if not raw.strip():
            continue
        yield line_no, _parse_mot_line(raw, name, line_no)


def parse_det_file(path: PathLike) -> Dict[int, List[Detection]]:
    """
    Lê detecções "frame,id,left,top,w,h,conf,x,y,z" e converte para o formato centro.
    Quadros ausentes simplesmente não aparecem no dicionário.
    """
    frames: Dict[int, List[Detection]] = {}
    with open(path, "r", encoding="utf-8") as f:
        lines = f.readlines()
    for line_no, (frame, _, left, top, w, h, conf) in _mot_rows(lines, str(path)):
        if w <= 0 or h <= 0:
            logger.warning(f"{path}:{line_no}: caixa com tamanho não positivo ignorada")
            continue
        if not 0.0 <= conf <= 1.0:
            logger.warning(f"{path}:{line_no}: confiança {conf} ajustada para [0, 1]")
            conf = min(1.0, max(0.0, conf))
        frames.setdefault(frame, []).append(Detection(_box(left, top, w, h, str(path), line_no), conf))
    return frames


def read_track_file(path: PathLike) -> TrackFile:
    """Lê arquivo gt ou de resultados (6 a 10 colunas); ids repetidos no mesmo quadro são erro"""
    with open(path, "r", encoding="utf-8") as f:
        return parse_track_lines(f.readlines(), str(path))


def parse_track_lines(lines: Iterable[str], name: str = "<entrada>") -> TrackFile:
    records: List[TrackRecord] = []
    seen = set()
    for line_no, (frame, track_id, left, top, w, h, conf) in _mot_rows(lines, name):
        if w <= 0 or h <= 0:
            logger.warning(f"{name}:{line_no}: caixa com tamanho não positivo ignorada")
            continue
        if (frame, track_id) in seen:
            raise DataError(f"id {track_id} repetido no quadro {frame}", name, line_no)
        seen.add((frame, track_id))
        records.append(TrackRecord(frame, track_id, _box(left, top, w, h, name, line_no), conf))
    return TrackFile(records)


def format_row(frame: int, track_id: int, box, conf: float) -> str:
    left, top, w, h = to_topleft(box)
    return f"{frame},{track_id},{left:.2f},{top:.2f},{w:.2f},{h:.2f},{conf:.4f},-1,-1,-1"


def track_file_from_outputs(
    tracks_per_frame: Dict[int, List[TrackOutput]], include_weak: bool = True
) -> TrackFile:
    """Saídas do rastreador como registros com conf = 1 − penalidade"""
    records = [
        TrackRecord(frame, out.id, out.box, 1.0 - out.penalty)
        for frame in sorted(tracks_per_frame)
        for out in sorted(tracks_per_frame[frame], key=lambda o: o.id)
        if include_weak or out.status != TrackStatus.WEAK
    ]
    return TrackFile(records)


def write_result_file(
    tracks_per_frame: Dict[int, List[TrackOutput]],
    path: PathLike,
    include_weak: bool = True,
):
    """Escreve resultados ordenados por (quadro, id)"""
    rows = [
        format_row(r.frame, r.id, r.box, r.conf)
        for r in track_file_from_outputs(tracks_per_frame, include_weak).records
    ]
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write("".join(row + "\n" for row in rows))
    except OSError as e:
        raise OSError(f"Erro ao escrever resultados em {path}: {str(e)}") from e


def write_track_file(track_file: TrackFile, path: PathLike):
    records = sorted(track_file.records, key=lambda r: (r.frame, r.id))
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("".join(format_row(r.frame, r.id, r.box, r.conf) + "\n" for r in records))


# PGM (P5, 8 bits)

def _pgm_tokens(data: bytes, count: int) -> Tuple[List[bytes], int]:
    tokens: List[bytes] = []
    pos = 0
    while len(tokens) < count:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise DataError("cabeçalho PGM incompleto")
        tokens.append(data[start:pos])
    return tokens, pos + 1


def read_pgm(path: PathLike) -> GrayImage:
    data = Path(path).read_bytes()
    try:
        tokens, offset = _pgm_tokens(data, 4)
    except DataError as e:
        raise DataError(str(e), str(path))
    if tokens[0] != b"P5":
        raise DataError(f"formato {tokens[0]!r} não suportado (esperado P5)", str(path))
    try:
        width, height, maxval = (int(t) for t in tokens[1:4])
    except ValueError:
        raise DataError(f"cabeçalho PGM não numérico: {b' '.join(tokens[1:4])!r}", str(path))
    if width < 1 or height < 1:
        raise DataError(f"dimensões inválidas {width}x{height}", str(path))
    if maxval > 255:
        raise DataError(f"apenas PGM de 8 bits é suportado (maxval {maxval})", str(path))
    if len(data) - offset < width * height:
        raise DataError(
            f"corpo PGM truncado: {max(0, len(data) - offset)} de {width * height} bytes", str(path)
        )
    pixels = np.frombuffer(data, dtype=np.uint8, count=width * height, offset=offset)
    return GrayImage(width, height, pixels.reshape(height, width).copy())


def write_pgm(img: GrayImage, path: PathLike):
    header = f"P5\n{img.width} {img.height}\n255\n".encode("ascii")
    body = np.clip(np.rint(img.pixels), 0, 255).astype(np.uint8).tobytes()
    Path(path).write_bytes(header + body)


def frame_path(frames_dir: PathLike, frame: int) -> Path:
    return Path(frames_dir) / FRAME_NAME.format(frame)


# Configuração chave = valor

def read_key_values(path: PathLike) -> List[Tuple[int, str, str]]:
    """Linhas `chave = valor` (comentários com #); retorna (linha, chave, valor)"""
    entries = []
    with open(path, "r", encoding="utf-8") as f:
        for line_no, raw in enumerate(f, start=1):
            text = raw.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise DataError(f"esperado 'chave = valor': {text!r}", str(path), line_no)
            key, value = (part.strip() for part in text.split("=", 1))
            if not key:
                raise DataError("chave vazia", str(path), line_no)
            entries.append((line_no, key, value))
    return entries


def _floats(value: str, count: int, path: str, line_no: int) -> List[float]:
    try:
        numbers = [float(x) for x in value.split(",")]
    except ValueError:
        raise DataError(f"esperados {count} números separados por vírgula: {value!r}", path, line_no)
    if len(numbers) != count:
        raise DataError(f"esperados {count} números, encontrados {len(numbers)}", path, line_no)
    return numbers


def parse_config(path: PathLike) -> TrackerConfig:
    """
    Lê TrackerConfig de texto `chave = valor`. Chaves desconhecidas são rejeitadas,
    chaves ausentes usam o padrão e todas as violações são reportadas juntas.
    """
    fields = set(TrackerConfig.model_fields)
    values: Dict[str, object] = {}
    areas: List[Tuple[float, float, float, float]] = []
    problems: List[str] = []

    for line_no, key, value in read_key_values(path):
        if key == "entrance_area":
            areas.append(tuple(_floats(value, 4, str(path), line_no)))
        elif key not in fields or key == "entrance_areas":
            problems.append(f"chave desconhecida '{key}' (linha {line_no})")
        elif key in values:
            problems.append(f"chave '{key}' repetida (linha {line_no})")
        else:
            values[key] = value
    if areas:
        values["entrance_areas"] = areas
    if problems:
        raise ConfigError(problems)

    try:
        cfg = TrackerConfig.model_validate(values)
    except ValidationError as e:
        raise ConfigError(
            [f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors()]
        )
    return cfg.validated()
