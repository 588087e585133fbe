"""
Geração de cenários sintéticos: trajetórias lineares por partes, detecções ruidosas
com perdas, oclusões e falsos positivos, e quadros PGM opcionais.
"""
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field, ValidationError, model_validator

from app.appearance import GrayImage
from app.exceptions import ConfigError, DataError
from app.geometry import BBox
from app.io_formats import (
    PathLike,
    _floats,
    format_row,
    frame_path,
    read_key_values,
    write_pgm,
    write_track_file,
)
from app.metrics import TrackFile, TrackRecord
from app.models import Detection

logger = logging.getLogger(__name__)

Waypoint = Tuple[int, float, float]  # quadro, u, v

BACKGROUND = 40


class ScenarioSpec(BaseModel):
    n_targets: int = Field(..., ge=1)
    n_frames: int = Field(..., ge=1)
    image_width: int = Field(640, ge=1)
    image_height: int = Field(480, ge=1)
    box_width: float = Field(30.0, gt=0)
    box_height: float = Field(60.0, gt=0)
    waypoints: Dict[int, List[Waypoint]] = Field(default_factory=dict)
    sizes: Dict[int, Tuple[float, float]] = Field(default_factory=dict)
    occlusions: List[Tuple[int, int, int]] = Field(default_factory=list)  # alvo, início, fim
    noise: float = Field(0.0, ge=0, description="σ_det do ruído de centro (px)")
    dropout: float = Field(0.0, ge=0, le=1)
    fp_rate: float = Field(0.0, ge=0, description="Falsos positivos esperados por quadro")
    conf_noise: float = Field(0.0, ge=0)
    seed: int = Field(0, ge=0)
    frames: bool = False

    @model_validator(mode="after")
    def _check(self) -> "ScenarioSpec":
        problems = []
        for target in range(1, self.n_targets + 1):
            if not self.waypoints.get(target):
                problems.append(f"alvo {target} sem waypoints")
        for target in self.waypoints:
            if not 1 <= target <= self.n_targets:
                problems.append(f"waypoint de alvo inexistente {target}")
        for target, start, end in self.occlusions:
            if not 1 <= target <= self.n_targets:
                problems.append(f"oclusão de alvo inexistente {target}")
            if not 1 <= start <= end <= self.n_frames:
                problems.append(f"oclusão do alvo {target} fora de [1, {self.n_frames}]: {start}-{end}")
        if problems:
            raise ValueError("; ".join(problems))
        return self

    def size_of(self, target: int) -> Tuple[float, float]:
        return self.sizes.get(target, (self.box_width, self.box_height))

    def occluded(self, target: int, frame: int) -> bool:
        return any(t == target and start <= frame <= end for t, start, end in self.occlusions)


@dataclass
class ScenarioData:
    gt: TrackFile
    detections: Dict[int, List[Detection]]
    frames: Optional[List[GrayImage]] = None


def _position(points: List[Waypoint], frame: int) -> Optional[Tuple[float, float]]:
    ordered = sorted(points)
    frames = [p[0] for p in ordered]
    if frame < frames[0] or frame > frames[-1]:
        return None
    u = float(np.interp(frame, frames, [p[1] for p in ordered]))
    v = float(np.interp(frame, frames, [p[2] for p in ordered]))
    return u, v


def _render(spec: ScenarioSpec, boxes: List[Tuple[int, BBox]]) -> GrayImage:
    pixels = np.full((spec.image_height, spec.image_width), BACKGROUND, dtype=np.uint8)
    for target, box in boxes:
        intensity = 90 + (160 * (target - 1)) // max(1, spec.n_targets - 1) if spec.n_targets > 1 else 200
        left = int(max(0, round(box.u - box.w / 2)))
        right = int(min(spec.image_width, round(box.u + box.w / 2)))
        top = int(max(0, round(box.v - box.h / 2)))
        bottom = int(min(spec.image_height, round(box.v + box.h / 2)))
        if right > left and bottom > top:
            pixels[top:bottom, left:right] = intensity
    return GrayImage(spec.image_width, spec.image_height, pixels)


def generate_scenario(spec: ScenarioSpec) -> ScenarioData:
    """Função pura do cenário: a mesma semente gera exatamente os mesmos dados"""
    rng = np.random.default_rng(spec.seed)
    gt_records: List[TrackRecord] = []
    detections: Dict[int, List[Detection]] = {}
    frames: Optional[List[GrayImage]] = [] if spec.frames else None
    mean_w = float(np.mean([spec.size_of(t)[0] for t in range(1, spec.n_targets + 1)]))
    mean_h = float(np.mean([spec.size_of(t)[1] for t in range(1, spec.n_targets + 1)]))

    for frame in range(1, spec.n_frames + 1):
        dets: List[Detection] = []
        visible: List[Tuple[int, BBox]] = []
        for target in range(1, spec.n_targets + 1):
            # Sorteios sempre consumidos na mesma ordem
            noise = rng.normal(0.0, 1.0, size=2) * spec.noise
            drop = rng.random() < spec.dropout
            conf = 1.0 - min(1.0, abs(float(rng.normal(0.0, 1.0))) * spec.conf_noise)

            pos = _position(spec.waypoints[target], frame)
            if pos is None:
                continue
            w, h = spec.size_of(target)
            box = BBox(pos[0], pos[1], w, h)
            gt_records.append(TrackRecord(frame, target, box, 1.0))
            if spec.occluded(target, frame):
                continue
            visible.append((target, box))
            if not drop:
                dets.append(Detection(BBox(box.u + noise[0], box.v + noise[1], w, h), conf))

        for _ in range(int(rng.poisson(spec.fp_rate)) if spec.fp_rate > 0 else 0):
            u = float(rng.uniform(0, spec.image_width))
            v = float(rng.uniform(0, spec.image_height))
            scale = float(rng.uniform(0.7, 1.3))
            dets.append(Detection(BBox(u, v, mean_w * scale, mean_h * scale), float(rng.uniform(0.3, 0.9))))

        if dets:
            detections[frame] = dets
        if frames is not None:
            frames.append(_render(spec, visible))

    logger.info(
        f"Cenário gerado: {spec.n_targets} alvos, {spec.n_frames} quadros, "
        f"{sum(len(d) for d in detections.values())} detecções"
    )
    return ScenarioData(TrackFile(gt_records), detections, frames)


def write_det_file(detections: Dict[int, List[Detection]], path: PathLike):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for frame in sorted(detections):
            for det in detections[frame]:
                f.write(format_row(frame, -1, det.box, det.conf) + "\n")


def write_scenario(data: ScenarioData, out_dir: PathLike) -> Dict[str, Path]:
    """Grava gt.txt, det.txt e, se houver, frames/%06d.pgm"""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"gt": out / "gt.txt", "det": out / "det.txt"}
    write_track_file(data.gt, paths["gt"])
    write_det_file(data.detections, paths["det"])
    if data.frames is not None:
        frames_dir = out / "frames"
        frames_dir.mkdir(exist_ok=True)
        for k, img in enumerate(data.frames, start=1):
            write_pgm(img, frame_path(frames_dir, k))
        paths["frames"] = frames_dir
    return paths


_SCALAR_KEYS = {
    "n_targets", "n_frames", "image_width", "image_height", "box_width", "box_height",
    "noise", "dropout", "fp_rate", "conf_noise", "seed", "frames",
}


def parse_scenario_spec(path: PathLike) -> ScenarioSpec:
    """
    Especificação de cenário em `chave = valor`, com linhas repetidas
    `waypoint.<alvo> = quadro,u,v`, `size.<alvo> = w,h` e `occlusion.<alvo> = início,fim`.
    """
    name = str(path)
    values: Dict[str, object] = {}
    waypoints: Dict[int, List[Waypoint]] = {}
    sizes: Dict[int, Tuple[float, float]] = {}
    occlusions: List[Tuple[int, int, int]] = []

    for line_no, key, value in read_key_values(path):
        prefix, _, suffix = key.partition(".")
        if suffix:
            try:
                target = int(suffix)
            except ValueError:
                raise DataError(f"alvo inválido em '{key}'", name, line_no)
            if prefix == "waypoint":
                frame, u, v = _floats(value, 3, name, line_no)
                waypoints.setdefault(target, []).append((int(frame), u, v))
            elif prefix == "size":
                w, h = _floats(value, 2, name, line_no)
                sizes[target] = (w, h)
            elif prefix == "occlusion":
                start, end = _floats(value, 2, name, line_no)
                occlusions.append((target, int(start), int(end)))
            else:
                raise DataError(f"chave desconhecida '{key}'", name, line_no)
        elif key in _SCALAR_KEYS:
            values[key] = value
        else:
            raise DataError(f"chave desconhecida '{key}'", name, line_no)

    try:
        return ScenarioSpec(waypoints=waypoints, sizes=sizes, occlusions=occlusions, **values)
    except ValidationError as e:
        raise ConfigError([f"{'.'.join(str(p) for p in err['loc']) or 'cenário'}: {err['msg']}" for err in e.errors()])
