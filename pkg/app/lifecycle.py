"""
Atualização de estado das trilhas fortes, novas e fracas, penalidade e idade,
remoção de trilhas expiradas e regressão da velocidade de tendência.
"""
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Deque, Dict, List, Optional, Sequence

import numpy as np

from app.appearance import FeatureVec
from app.config import TrackerConfig
from app.geometry import BBox, Velocity4, ZERO_VELOCITY, center_distance, diag
from app.models import Detection, TrackStatus
from app.particles import ParticleSet
from app.swarm import Neighbour, SwarmResult, neighbours


@dataclass(eq=False)
class Track:
    id: int
    state: BBox
    vel: Velocity4 = ZERO_VELOCITY
    penalty: float = 0.0
    age: float = 0.0
    status: TrackStatus = TrackStatus.NEW
    miss_count: int = 0
    history: Deque[BBox] = field(default_factory=lambda: deque(maxlen=10))
    particles: Optional[ParticleSet] = None
    appearance: Optional[FeatureVec] = None  # HoG do último estado confirmado por detecção
    prev_state: Optional[BBox] = None  # estado no início do quadro


@dataclass(frozen=True)
class SlopeWindow:
    H: int = 10
    F: int = 5
    tau_scale: float = 0.5

    def __post_init__(self):
        if not 0 < self.F <= self.H:
            raise ValueError(f"Janela inválida: F={self.F}, H={self.H}")

    @classmethod
    def from_config(cls, cfg: TrackerConfig) -> "SlopeWindow":
        return cls(cfg.history_length, cfg.frame_window, cfg.tau_scale)


def update_strong(track: Track, det: Detection, cfg: TrackerConfig) -> Track:
    """
    Saltos a partir de d_o = γ_o·diagonal são suavizados pelo ponto médio;
    saltos menores adotam a detecção.
    """
    d_o = cfg.gamma_o * diag(track.state)
    if center_distance(track.state, det.box) >= d_o:
        prev, box = track.state.as_array(), det.box.as_array()
        track.state = BBox.from_array(0.5 * (prev + box))
    else:
        track.state = det.box
    track.penalty = 0.0
    track.age = 0.0
    track.miss_count = 0
    track.status = TrackStatus.STRONG
    track.history.append(track.state)
    return track


def create_track(det: Detection, next_id: int, cfg: TrackerConfig) -> Track:
    history: Deque[BBox] = deque([det.box], maxlen=cfg.history_length)
    return Track(id=next_id, state=det.box, history=history, status=TrackStatus.NEW)


def penalty_age_update(
    track: Track,
    gbest_hist_fitness: float,
    has_strong_neighbour: bool,
    delta_e: float,
    cfg: TrackerConfig,
) -> Track:
    """Δ_t = (1 − e^{−l²/2σ²})·(1 − f + Δ_e), com σ = idade máxima / 6"""
    sigma = cfg.age_max / 6.0
    l = track.miss_count
    delta = (1.0 - math.exp(-(l * l) / (2.0 * sigma * sigma))) * (1.0 - gbest_hist_fitness + delta_e)
    zeta = 1.0
    if has_strong_neighbour:
        zeta = float(np.sign(cfg.rho_re - gbest_hist_fitness + delta_e))
    track.penalty = min(1.0, max(0.0, track.penalty + zeta * delta))
    track.age = min(cfg.age_max, max(0.0, track.age + zeta * delta * cfg.age_max))
    return track


def trend_velocity(history: Sequence[BBox], win: SlopeWindow) -> Velocity4:
    """
    Mediana das inclinações entre pares (i, j) com i < j <= i + F nos últimos H estados,
    descartando inclinações acima do limite τ de cada componente.
    """
    states = np.array([b.as_array() for b in list(history)[-win.H:]])
    n = states.shape[0]
    if n < 2:
        return ZERO_VELOCITY

    current = history[-1]
    d = diag(current)
    tau = win.tau_scale * np.array([d, d, current.w, current.h])

    i, j = np.triu_indices(n, k=1)
    within = (j - i) <= win.F
    i, j = i[within], j[within]
    slopes = (states[j] - states[i]) / (j - i).astype(np.float64)[:, None]

    velocity = []
    for k in range(4):
        gamma = np.sort(slopes[np.abs(slopes[:, k]) <= tau[k], k])
        q = gamma.shape[0]
        if q == 0:
            velocity.append(0.0)
        elif q % 2 == 1:
            velocity.append(float(gamma[q // 2]))
        else:
            velocity.append(float(0.5 * (gamma[q // 2 - 1] + gamma[q // 2])))
    return Velocity4.from_array(velocity)


def _median_rows(rows: np.ndarray) -> np.ndarray:
    """Mediana por componente; conjuntos pares usam a média dos dois centrais"""
    ordered = np.sort(rows, axis=0)
    q = ordered.shape[0]
    if q % 2 == 1:
        return ordered[q // 2]
    return 0.5 * (ordered[q // 2 - 1] + ordered[q // 2])


def trusted_neighbours(
    track: Track,
    swarm: SwarmResult,
    all_tracks: Sequence[Track],
    cfg: TrackerConfig,
) -> List[Track]:
    """
    Vizinhos confiáveis (trilhas fortes neste quadro). Sem vizinhos pós-PSO,
    repete a busca com o raio expandido.
    """
    found: List[Neighbour] = swarm.neighbours
    if not found:
        found = neighbours(track, all_tracks, cfg.expanded_radius_scale)
    by_id: Dict[int, Track] = {t.id: t for t in all_tracks}
    return [
        by_id[nb.track_id]
        for nb in found
        if nb.track_id in by_id and by_id[nb.track_id].status == TrackStatus.STRONG
    ]


def update_weak(track: Track, swarm: SwarmResult, strong_tracks: Sequence[Track], cfg: TrackerConfig) -> Track:
    """
    Desloca o centro da trilha fraca sem alterar largura e altura:
    velocidade própria, deslocamento junto a vizinhos que se movem igual,
    ou desvio de obstáculo combinado com o gbest.
    """
    trusted = trusted_neighbours(track, swarm, strong_tracks, cfg)
    prev = np.array([track.state.u, track.state.v])
    own_v = np.array([track.vel.du, track.vel.dv])
    own_speed = track.vel.center_speed
    tau_v = cfg.tau_v_scale * diag(track.state)

    center = prev
    median_v = None
    if trusted:
        median_v = _median_rows(np.array([[t.vel.du, t.vel.dv] for t in trusted]))

    if median_v is None or float(np.hypot(*median_v)) < tau_v:
        if own_speed >= tau_v:
            center = prev + own_v
    else:
        median_speed = float(np.hypot(*median_v))
        delta = 0.0 if own_speed == 0.0 else float(np.dot(own_v, median_v)) / (own_speed * median_speed)
        now = _median_rows(np.array([[t.state.u, t.state.v] for t in trusted]))
        if delta >= cfg.delta_d:
            before = _median_rows(
                np.array([[(t.prev_state or t.state).u, (t.prev_state or t.state).v] for t in trusted])
            )
            center = now - before + prev
        else:
            center_o = prev + own_v
            offset = prev - now
            gap = float(np.hypot(*offset))
            if gap > 0.0:
                normal = np.array([-offset[1], offset[0]]) / gap
                if float(np.dot(normal, median_v)) > 0.0:
                    normal = -normal
                eps_o = cfg.eps_s * (own_speed / gap) * diag(track.state)
                center_o = prev + own_v + eps_o * normal
            gbest = swarm.gbest_state
            center = (1.0 - cfg.sigma_g) * center_o + cfg.sigma_g * np.array([gbest.u, gbest.v])

    track.state = track.state.with_center(center[0], center[1])
    track.status = TrackStatus.WEAK
    track.miss_count += 1
    if cfg.history_includes_predictions:
        track.history.append(track.state)
    return track


def prune(tracks: Sequence[Track], age_max: float) -> List[Track]:
    return [t for t in tracks if t.age < age_max]
