import os
from enum import Enum
from typing import List, Optional, Tuple

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field

from app.exceptions import ConfigError

load_dotenv()


class Settings:
    # API
    API_TITLE = os.getenv("TRACKER_API_TITLE", "PSO Multi-Object Tracker API")
    API_VERSION = os.getenv("TRACKER_API_VERSION", "1.0.0")
    API_HOST = os.getenv("API_HOST", "0.0.0.0")
    API_PORT = int(os.getenv("API_PORT", "8000"))

    # CORS
    ALLOWED_ORIGINS = os.getenv("ALLOWED_ORIGINS", "*").split(",")

    # Logs
    LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")

    # Rastreador
    TRACKER_CONFIG = os.getenv("TRACKER_CONFIG")  # arquivo key = value opcional
    MAX_SESSIONS = int(os.getenv("MAX_SESSIONS", "16"))

    # Validação
    MAX_FILE_SIZE = int(os.getenv("MAX_FILE_SIZE", str(10 * 1024 * 1024)))  # 10MB


settings = Settings()


class ResampleMode(str, Enum):
    REPLACE = "replace"
    DISCARD = "discard"


class SampleSource(str, Enum):
    OPTIMAL = "optimal"
    PARTICLES = "particles"


EntranceArea = Tuple[float, float, float, float]  # left, top, right, bottom


class TrackerConfig(BaseModel):
    """
    Todos os escalares do rastreador com seus valores padrão.
    Os campos aceitam valores fora de faixa; use validate_config para listar violações.
    """

    model_config = ConfigDict(extra="forbid", use_enum_values=False)

    # Amostragem (modelo de movimento aleatório)
    particles: int = Field(8, description="S, partículas por alvo")
    eps_v: float = Field(1.0, description="ε_V, exploração de velocidade")
    eps_x: float = Field(1.0, description="ε_X, exploração de estado")
    lambda_x: float = Field(1.0, description="λ_X, peso do ruído de estado")
    lambda_v: float = Field(1.0, description="λ_V, peso da velocidade")
    alpha_x: float = 0.10
    alpha_s: float = 0.02
    alpha_v: float = 0.05
    alpha_sv: float = 0.01
    beta: float = 0.5
    beta_s: float = 0.05
    sample_source: SampleSource = SampleSource.OPTIMAL
    min_box_size: float = 1.0

    # PSO
    pso_iterations: int = 5
    inertia: float = 0.6
    c1: float = 1.5
    c2: float = 1.5
    sigma_h: float = 0.5
    sigma_p: float = 0.2
    sigma_i: float = 0.3
    lambda_s: float = 0.4
    lambda_m: float = 0.6
    xi_p: float = 0.7
    xi_v: float = 0.3
    radius_scale: float = 1.0
    expanded_radius_scale: float = 2.0

    # Reamostragem
    resample_mode: ResampleMode = ResampleMode.REPLACE
    rho_discard: float = 0.3
    jitter_scale: float = 0.05

    # Associação
    lambda_p: float = 0.6
    lambda_d: float = 0.2
    lambda_h: float = 0.2
    gate: float = 0.8
    conf_new: float = 0.6

    # Ciclo de vida
    gamma_o: float = 0.25
    tau_v_scale: float = 0.02
    delta_d: float = 0.9
    sigma_g: float = 0.5
    eps_s: float = 0.1
    rho_re: float = 0.5
    entrance_penalty: float = 0.0
    entrance_areas: List[EntranceArea] = Field(default_factory=list)
    age_max: float = 30.0
    history_length: int = 10
    frame_window: int = 5
    tau_scale: float = 0.5
    history_includes_predictions: bool = True

    # HoG
    hog_patch: int = 48
    hog_cell: int = 8
    hog_bins: int = 9
    hog_block: int = 2
    hog_clip: float = 0.2

    # Execução
    seed: int = 0
    frameless: bool = False
    workers: int = 1

    def validated(self) -> "TrackerConfig":
        violations = validate_config(self)
        if violations:
            raise ConfigError(violations)
        return self


_UNIT_KEYS = (
    "sigma_h", "sigma_p", "sigma_i", "lambda_s", "lambda_m", "xi_p", "xi_v",
    "lambda_p", "lambda_d", "lambda_h", "gate", "conf_new", "delta_d", "sigma_g",
    "rho_re", "rho_discard",
)
_NON_NEGATIVE_KEYS = (
    "eps_v", "eps_x", "lambda_x", "lambda_v", "alpha_x", "alpha_s", "alpha_v",
    "alpha_sv", "inertia", "c1", "c2", "jitter_scale", "tau_v_scale", "eps_s",
    "entrance_penalty",
)
_POSITIVE_KEYS = (
    "beta", "beta_s", "radius_scale", "expanded_radius_scale", "gamma_o", "tau_scale",
    "min_box_size", "hog_clip",
)
_SIMPLEX_GROUPS = (
    ("sigma_h", "sigma_p", "sigma_i"),
    ("lambda_s", "lambda_m"),
    ("xi_p", "xi_v"),
    ("lambda_p", "lambda_d", "lambda_h"),
)
_SIMPLEX_TOLERANCE = 1e-9


def validate_config(cfg: TrackerConfig) -> List[str]:
    """
    Verifica todas as invariantes da configuração.
    Retorna a lista completa de violações (vazia quando válida).
    """
    violations: List[str] = []

    for group in _SIMPLEX_GROUPS:
        total = sum(getattr(cfg, key) for key in group)
        if abs(total - 1.0) > _SIMPLEX_TOLERANCE:
            violations.append(f"{' + '.join(group)} deve somar 1 (soma atual {total:g})")

    for key in _UNIT_KEYS:
        value = getattr(cfg, key)
        if not 0.0 <= value <= 1.0:
            violations.append(f"{key} deve estar em [0, 1] (valor {value:g})")
    for key in _NON_NEGATIVE_KEYS:
        value = getattr(cfg, key)
        if value < 0:
            violations.append(f"{key} deve ser não negativo (valor {value:g})")
    for key in _POSITIVE_KEYS:
        value = getattr(cfg, key)
        if value <= 0:
            violations.append(f"{key} deve ser positivo (valor {value:g})")

    if cfg.particles < 1:
        violations.append(f"particles deve ser >= 1 (valor {cfg.particles})")
    if cfg.pso_iterations < 0:
        violations.append(f"pso_iterations deve ser >= 0 (valor {cfg.pso_iterations})")
    if cfg.history_length < 1:
        violations.append(f"history_length deve ser >= 1 (valor {cfg.history_length})")
    if not 0 < cfg.frame_window <= cfg.history_length:
        violations.append(
            f"frame_window deve satisfazer 0 < F <= H "
            f"(F={cfg.frame_window}, H={cfg.history_length})"
        )
    if cfg.age_max <= 0:
        violations.append(f"age_max deve ser positivo (valor {cfg.age_max:g})")
    if cfg.workers < 1:
        violations.append(f"workers deve ser >= 1 (valor {cfg.workers})")
    if cfg.seed < 0:
        violations.append(f"seed deve ser não negativo (valor {cfg.seed})")

    if cfg.hog_cell < 1 or cfg.hog_patch < cfg.hog_cell or cfg.hog_patch % cfg.hog_cell:
        violations.append(
            f"hog_patch deve ser múltiplo positivo de hog_cell "
            f"(patch={cfg.hog_patch}, cell={cfg.hog_cell})"
        )
    elif cfg.hog_block < 1 or cfg.hog_block > cfg.hog_patch // cfg.hog_cell:
        violations.append(f"hog_block fora do intervalo de células (valor {cfg.hog_block})")
    if cfg.hog_bins < 1:
        violations.append(f"hog_bins deve ser >= 1 (valor {cfg.hog_bins})")

    for k, (left, top, right, bottom) in enumerate(cfg.entrance_areas):
        if right <= left or bottom <= top:
            violations.append(f"entrance_area #{k + 1} degenerada: {(left, top, right, bottom)}")

    return violations


def load_default_config() -> Optional[TrackerConfig]:
    """Carrega TRACKER_CONFIG se definido no ambiente"""
    if not settings.TRACKER_CONFIG:
        return None
    from app.io_formats import parse_config

    return parse_config(settings.TRACKER_CONFIG)
