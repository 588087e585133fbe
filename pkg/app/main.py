import logging
import threading
import uuid
from dataclasses import dataclass, field
from typing import Dict

import uvicorn
from fastapi import FastAPI, File, Form, HTTPException, UploadFile, status
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import ValidationError

from app.config import TrackerConfig, load_default_config, settings
from app.exceptions import ConfigError, DataError
from app.io_formats import parse_track_lines
from app.metrics import evaluate
from app.models import (
    FrameInput,
    FrameRequest,
    FrameResponse,
    HealthResponse,
    MetricsReport,
    SessionRequest,
    SessionResponse,
    TrackOut,
)
from app.tracking_service import ParticleSwarmTracker

# Configurar logging
logging.basicConfig(level=settings.LOG_LEVEL)
logger = logging.getLogger(__name__)

# Criar app FastAPI
app = FastAPI(
    title=settings.API_TITLE,
    version=settings.API_VERSION,
    description="API de rastreamento multiobjeto quadro a quadro com filtro de partículas guiado por PSO"
)

# Configurar CORS
app.add_middleware(
    CORSMiddleware,
    allow_origins=settings.ALLOWED_ORIGINS,
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)


@dataclass
class Session:
    tracker: ParticleSwarmTracker
    lock: threading.Lock = field(default_factory=threading.Lock)


sessions: Dict[str, Session] = {}
sessions_lock = threading.Lock()


def _base_config() -> TrackerConfig:
    try:
        return load_default_config() or TrackerConfig()
    except (ConfigError, DataError, OSError) as e:
        logger.error(f"TRACKER_CONFIG inválido, usando padrões: {str(e)}")
        return TrackerConfig()


def _get_session(session_id: str) -> Session:
    session = sessions.get(session_id)
    if session is None:
        raise HTTPException(
            status_code=status.HTTP_404_NOT_FOUND,
            detail=f"Sessão não encontrada: {session_id}"
        )
    return session


@app.get("/health", response_model=HealthResponse)
async def health_check():
    """Endpoint de health check"""
    return HealthResponse(
        status="healthy",
        service="pso-tracker-api",
        version=settings.API_VERSION
    )


@app.get("/config/defaults")
async def config_defaults():
    """Configuração padrão das novas sessões"""
    return _base_config().model_dump(mode="json")


@app.post("/sessions", response_model=SessionResponse, status_code=status.HTTP_201_CREATED)
def create_session(request: SessionRequest):
    """
    Cria uma sessão de rastreamento com sobrescritas opcionais de configuração
    """
    merged = {**_base_config().model_dump(), **request.config}
    try:
        cfg = TrackerConfig.model_validate(merged).validated()
    except ValidationError as e:
        raise HTTPException(
            status_code=status.HTTP_400_BAD_REQUEST,
            detail={
                "message": "Configuração inválida",
                "violations": [f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors()],
            }
        )
    except ConfigError as e:
        raise HTTPException(
            status_code=status.HTTP_400_BAD_REQUEST,
            detail={"message": "Configuração inválida", "violations": e.violations}
        )

    with sessions_lock:
        if len(sessions) >= settings.MAX_SESSIONS:
            raise HTTPException(
                status_code=status.HTTP_429_TOO_MANY_REQUESTS,
                detail=f"Limite de sessões atingido. Máximo: {settings.MAX_SESSIONS}"
            )
        session_id = uuid.uuid4().hex
        sessions[session_id] = Session(ParticleSwarmTracker(cfg))

    logger.info(f"Sessão criada: {session_id}")
    return SessionResponse(session_id=session_id, config=cfg.model_dump(mode="json"))


def _frame_input(request: FrameRequest) -> FrameInput:
    detections = []
    for k, det in enumerate(request.detections):
        try:
            detections.append(det.to_detection())
        except ValueError as e:
            raise DataError(f"Detecção #{k} do quadro {request.frame_index}: {str(e)}", index=k)
    return FrameInput(request.frame_index, detections)


@app.post("/sessions/{session_id}/frames", response_model=FrameResponse)
def push_frame(session_id: str, request: FrameRequest):
    """
    Processa um quadro de detecções e retorna as trilhas vivas
    """
    session = _get_session(session_id)
    with session.lock:
        try:
            outputs = session.tracker.step(_frame_input(request))
        except DataError as e:
            raise HTTPException(
                status_code=status.HTTP_422_UNPROCESSABLE_ENTITY,
                detail={"message": str(e), "index": e.index}
            )
    logger.debug(f"Sessão {session_id}, quadro {request.frame_index}: {len(outputs)} trilhas")
    return FrameResponse(
        frame_index=request.frame_index,
        tracks=[TrackOut.from_output(o) for o in outputs]
    )


@app.post("/sessions/{session_id}/reset")
def reset_session(session_id: str):
    """Descarta as trilhas da sessão mantendo a configuração"""
    session = _get_session(session_id)
    with session.lock:
        session.tracker.reset()
    return {"session_id": session_id, "status": "reset"}


@app.delete("/sessions/{session_id}")
def delete_session(session_id: str):
    with sessions_lock:
        if sessions.pop(session_id, None) is None:
            raise HTTPException(
                status_code=status.HTTP_404_NOT_FOUND,
                detail=f"Sessão não encontrada: {session_id}"
            )
    logger.info(f"Sessão removida: {session_id}")
    return {"session_id": session_id, "status": "deleted"}


async def _read_upload(upload: UploadFile) -> str:
    data = await upload.read()
    if len(data) > settings.MAX_FILE_SIZE:
        raise HTTPException(
            status_code=status.HTTP_413_REQUEST_ENTITY_TOO_LARGE,
            detail=f"Arquivo muito grande. Máximo: {settings.MAX_FILE_SIZE} bytes"
        )
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError:
        raise HTTPException(
            status_code=status.HTTP_400_BAD_REQUEST,
            detail=f"Arquivo {upload.filename} não é texto UTF-8"
        )


@app.post("/evaluate", response_model=MetricsReport)
async def evaluate_files(
    gt: UploadFile = File(..., description="Ground truth MOTChallenge"),
    hyp: UploadFile = File(..., description="Resultados MOTChallenge"),
    iou: float = Form(0.5),
):
    """
    Avalia resultados contra o ground truth (MOTA, IDF1, IDSW, MOTP)
    """
    try:
        gt_text = await _read_upload(gt)
        hyp_text = await _read_upload(hyp)
        return evaluate(
            parse_track_lines(gt_text.splitlines(), gt.filename or "gt"),
            parse_track_lines(hyp_text.splitlines(), hyp.filename or "hyp"),
            iou,
        )
    except HTTPException:
        raise
    except DataError as e:
        raise HTTPException(
            status_code=status.HTTP_422_UNPROCESSABLE_ENTITY,
            detail=str(e)
        )
    except ValueError as e:
        raise HTTPException(
            status_code=status.HTTP_400_BAD_REQUEST,
            detail=str(e)
        )


@app.exception_handler(Exception)
async def global_exception_handler(request, exc):
    """Handler global de exceções"""
    logger.error(f"Erro não tratado: {str(exc)}")
    return JSONResponse(
        status_code=500,
        content={"detail": "Erro interno do servidor"}
    )


if __name__ == "__main__":
    uvicorn.run(
        "app.main:app",
        host=settings.API_HOST,
        port=settings.API_PORT,
        reload=True
    )
