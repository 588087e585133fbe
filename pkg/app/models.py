from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field

from app.appearance import GrayImage
from app.geometry import BBox, from_topleft, to_topleft


class TrackStatus(str, Enum):
    STRONG = "strong"
    WEAK = "weak"
    NEW = "new"


@dataclass(frozen=True)
class Detection:
    box: BBox
    conf: float


@dataclass
class FrameInput:
    frame_index: int
    detections: List[Detection] = field(default_factory=list)
    image: Optional[GrayImage] = None


@dataclass(frozen=True)
class TrackOutput:
    id: int
    box: BBox
    status: TrackStatus
    penalty: float
    age: float


# Modelos da API

class DetectionIn(BaseModel):
    model_config = ConfigDict(allow_inf_nan=False)

    left: float = Field(..., description="Canto esquerdo (px)")
    top: float = Field(..., description="Canto superior (px)")
    w: float = Field(..., gt=0, description="Largura (px)")
    h: float = Field(..., gt=0, description="Altura (px)")
    conf: float = Field(1.0, ge=0.0, le=1.0, description="Confiança da detecção")

    def to_detection(self) -> Detection:
        return Detection(box=from_topleft(self.left, self.top, self.w, self.h), conf=self.conf)


class FrameRequest(BaseModel):
    frame_index: int = Field(..., ge=1, description="Índice do quadro (crescente)")
    detections: List[DetectionIn] = Field(default_factory=list)


class TrackOut(BaseModel):
    id: int
    left: float
    top: float
    w: float
    h: float
    u: float
    v: float
    status: TrackStatus
    penalty: float
    age: float

    @classmethod
    def from_output(cls, out: TrackOutput) -> "TrackOut":
        left, top, w, h = to_topleft(out.box)
        return cls(
            id=out.id, left=left, top=top, w=w, h=h, u=out.box.u, v=out.box.v,
            status=out.status, penalty=out.penalty, age=out.age,
        )


class FrameResponse(BaseModel):
    frame_index: int
    tracks: List[TrackOut]


class SessionRequest(BaseModel):
    config: Dict[str, Any] = Field(default_factory=dict, description="Sobrescritas de TrackerConfig")


class SessionResponse(BaseModel):
    session_id: str
    config: Dict[str, Any]


class HealthResponse(BaseModel):
    status: str
    service: str
    version: str


class MetricsReport(BaseModel):
    mota: float
    idf1: float
    idsw: int
    fp: int
    fn: int
    gt_count: int
    motp: float = 0.0
    matches: int = 0
    idtp: int = 0
    idfp: int = 0
    idfn: int = 0
    hyp_count: int = 0

    def table(self) -> str:
        """Tabela de texto para o terminal"""
        header = f"{'MOTA':>8} {'IDF1':>8} {'MOTP':>8} {'IDSW':>6} {'FP':>6} {'FN':>6} {'GT':>7}"
        row = (
            f"{self.mota:8.3f} {self.idf1:8.3f} {self.motp:8.3f} {self.idsw:6d} "
            f"{self.fp:6d} {self.fn:6d} {self.gt_count:7d}"
        )
        return f"{header}\n{row}"
