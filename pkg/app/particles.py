"""
Conjunto de partículas por alvo: amostragem pelo modelo de movimento aleatório
e reamostragem após o PSO.
"""
from dataclasses import dataclass
from enum import IntEnum
from typing import TYPE_CHECKING, Iterator, Sequence

import numpy as np

from app.config import ResampleMode, SampleSource, TrackerConfig
from app.exceptions import ConfigError
from app.geometry import BBox, Velocity4

if TYPE_CHECKING:
    from app.lifecycle import Track

_SEED_MASK = (1 << 64) - 1


@dataclass(frozen=True)
class Particle:
    state: BBox
    vel: Velocity4
    pbest_state: BBox
    pbest_fitness: float = 0.0
    fitness: float = 0.0


@dataclass(eq=False)
class ParticleSet:
    """
    Partículas de um alvo em arrays (S, 4); indexar devolve Particle.
    """

    states: np.ndarray
    vels: np.ndarray
    pbest_states: np.ndarray
    pbest_fitness: np.ndarray
    fitness: np.ndarray

    def __len__(self) -> int:
        return self.states.shape[0]

    def __getitem__(self, k: int) -> Particle:
        return Particle(
            state=BBox.from_array(self.states[k]),
            vel=Velocity4.from_array(self.vels[k]),
            pbest_state=BBox.from_array(self.pbest_states[k]),
            pbest_fitness=float(self.pbest_fitness[k]),
            fitness=float(self.fitness[k]),
        )

    def __iter__(self) -> Iterator[Particle]:
        for k in range(len(self)):
            yield self[k]

    @classmethod
    def from_particles(cls, particles: Sequence[Particle]) -> "ParticleSet":
        return cls(
            states=np.array([p.state.as_array() for p in particles]).reshape(-1, 4),
            vels=np.array([p.vel.as_array() for p in particles]).reshape(-1, 4),
            pbest_states=np.array([p.pbest_state.as_array() for p in particles]).reshape(-1, 4),
            pbest_fitness=np.array([p.pbest_fitness for p in particles], dtype=np.float64),
            fitness=np.array([p.fitness for p in particles], dtype=np.float64),
        )

    @classmethod
    def fresh(cls, states: np.ndarray, vels: np.ndarray) -> "ParticleSet":
        n = states.shape[0]
        return cls(
            states=states,
            vels=vels,
            pbest_states=states.copy(),
            pbest_fitness=np.zeros(n),
            fitness=np.zeros(n),
        )

    def select(self, mask: np.ndarray) -> "ParticleSet":
        return ParticleSet(
            states=self.states[mask],
            vels=self.vels[mask],
            pbest_states=self.pbest_states[mask],
            pbest_fitness=self.pbest_fitness[mask],
            fitness=self.fitness[mask],
        )


class Stage(IntEnum):
    SAMPLE = 0
    PSO = 1
    RESAMPLE = 2


class Rng:
    """
    Gerador determinístico baseado em contador (Philox), com chave
    (semente, quadro, id do alvo, etapa). A ordem de processamento dos alvos
    não altera os números sorteados.
    """

    def __init__(self, seed: int):
        self.seed = int(seed) & _SEED_MASK

    def stream(self, frame: int, track_id: int, stage: Stage) -> np.random.Generator:
        seq = np.random.SeedSequence([self.seed, int(frame), int(track_id), int(stage)])
        return np.random.Generator(np.random.Philox(seq))


@dataclass(frozen=True)
class MotionBounds:
    ux_max: np.ndarray  # limite do ruído de estado U_X
    uv_max: np.ndarray  # limite do ruído de velocidade U_V
    v_max: np.ndarray   # limite de velocidade V_max

    @property
    def social_speed_cap(self) -> float:
        """V_s^max: módulo dos limites de (du, dv) de V_max + U_V^max"""
        cap = self.v_max[:2] + self.uv_max[:2]
        return float(np.hypot(cap[0], cap[1]))


def motion_bounds(box: BBox, cfg: TrackerConfig) -> MotionBounds:
    w, h = box.w, box.h
    return MotionBounds(
        ux_max=np.array([cfg.alpha_x * w, cfg.alpha_x * h, cfg.alpha_s * w, cfg.alpha_s * h]),
        uv_max=np.array([cfg.alpha_v * w, cfg.alpha_v * h, cfg.alpha_sv * w, cfg.alpha_sv * h]),
        v_max=np.array([cfg.beta * w, cfg.beta * h, cfg.beta_s * w, cfg.beta_s * h]),
    )


def clamp_sizes(states: np.ndarray, min_size: float) -> np.ndarray:
    states[:, 2:] = np.maximum(states[:, 2:], min_size)
    return states


def sample_particles(track: "Track", cfg: TrackerConfig, rng: np.random.Generator) -> ParticleSet:
    """
    Gera S partículas: V = V_prev + ε_V·U_V e X = X_prev + λ_V·V + λ_X·ε_X·U_X,
    com limites proporcionais ao tamanho da caixa anterior.
    """
    n = cfg.particles
    if n < 1:
        raise ConfigError([f"particles deve ser >= 1 (valor {n})"])

    bounds = motion_bounds(track.state, cfg)
    if cfg.sample_source == SampleSource.PARTICLES and track.particles is not None and len(track.particles):
        picks = np.arange(n) % len(track.particles)
        base_x = track.particles.states[picks].copy()
        base_v = track.particles.vels[picks].copy()
    else:
        base_x = np.tile(track.state.as_array(), (n, 1))
        base_v = np.tile(track.vel.as_array(), (n, 1))

    base_v = np.clip(base_v, -bounds.v_max, bounds.v_max)
    u_v = rng.uniform(-1.0, 1.0, size=(n, 4)) * bounds.uv_max
    u_x = rng.uniform(-1.0, 1.0, size=(n, 4)) * bounds.ux_max

    vels = base_v + cfg.eps_v * u_v
    states = base_x + cfg.lambda_v * vels + cfg.lambda_x * cfg.eps_x * u_x
    return ParticleSet.fresh(clamp_sizes(states, cfg.min_box_size), vels)


def resample(
    particles: ParticleSet,
    gbest: Particle,
    cfg: TrackerConfig,
    rng: np.random.Generator,
) -> ParticleSet:
    """
    Descarta (modo discard) ou substitui por cópias perturbadas do gbest (modo replace)
    as partículas com aptidão abaixo de ρ_discard.
    """
    low = particles.fitness < cfg.rho_discard
    if not low.any():
        return particles

    if cfg.resample_mode == ResampleMode.DISCARD:
        kept = particles.select(~low)
        if len(kept) == 0:
            return ParticleSet.from_particles([gbest])
        return kept

    out = ParticleSet(
        states=particles.states.copy(),
        vels=particles.vels.copy(),
        pbest_states=particles.pbest_states.copy(),
        pbest_fitness=particles.pbest_fitness.copy(),
        fitness=particles.fitness.copy(),
    )
    n_low = int(low.sum())
    jitter = rng.uniform(-1.0, 1.0, size=(n_low, 4)) * (
        cfg.jitter_scale * motion_bounds(gbest.state, cfg).ux_max
    )
    replaced = clamp_sizes(gbest.state.as_array() + jitter, cfg.min_box_size)
    out.states[low] = replaced
    out.vels[low] = gbest.vel.as_array()
    out.pbest_states[low] = replaced
    out.pbest_fitness[low] = gbest.fitness
    out.fitness[low] = gbest.fitness
    return out
