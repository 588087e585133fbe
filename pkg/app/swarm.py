"""
Refinamento das partículas de cada alvo por PSO com a aptidão combinada
(histórico, exploração e social) e a busca de vizinhos.
"""
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, List, Optional, Sequence, Tuple

import numpy as np

from app.appearance import FeatureProvider, FeatureVec, NullFeatureProvider, cosine_sim
from app.config import TrackerConfig
from app.geometry import BBox, Velocity4, center_distance, diag
from app.particles import MotionBounds, Particle, ParticleSet, clamp_sizes, motion_bounds

if TYPE_CHECKING:
    from app.lifecycle import Track


@dataclass(frozen=True)
class FitnessWeights:
    sigma_h: float = 0.5
    sigma_p: float = 0.2
    sigma_i: float = 0.3
    lambda_s: float = 0.4
    lambda_m: float = 0.6
    xi_p: float = 0.7
    xi_v: float = 0.3

    def __post_init__(self):
        for group in ((self.sigma_h, self.sigma_p, self.sigma_i), (self.lambda_s, self.lambda_m), (self.xi_p, self.xi_v)):
            if abs(sum(group) - 1.0) > 1e-9:
                raise ValueError(f"Pesos devem somar 1: {group}")

    @classmethod
    def from_config(cls, cfg: TrackerConfig, frameless: bool = False) -> "FitnessWeights":
        lambda_s, lambda_m = (0.0, 1.0) if frameless else (cfg.lambda_s, cfg.lambda_m)
        return cls(cfg.sigma_h, cfg.sigma_p, cfg.sigma_i, lambda_s, lambda_m, cfg.xi_p, cfg.xi_v)


@dataclass(frozen=True)
class Neighbour:
    track_id: int
    state: BBox
    vel: Velocity4
    status: str


@dataclass
class SwarmResult:
    particles: ParticleSet
    gbest_state: BBox
    gbest_vel: Velocity4
    gbest_fitness: float
    gbest_history_fitness: float
    neighbours: List[Neighbour]

    @property
    def gbest(self) -> Particle:
        return Particle(
            state=self.gbest_state,
            vel=self.gbest_vel,
            pbest_state=self.gbest_state,
            pbest_fitness=self.gbest_fitness,
            fitness=self.gbest_fitness,
        )


def neighbours(target: "Track", all_tracks: Sequence["Track"], radius_scale: float) -> List[Neighbour]:
    """Alvos a até radius_scale × diagonal do centro do alvo, ordenados por id"""
    eps_nei = radius_scale * diag(target.state)
    found = [
        Neighbour(t.id, t.state, t.vel, t.status.value)
        for t in all_tracks
        if t.id != target.id and center_distance(t.state, target.state) <= eps_nei
    ]
    return sorted(found, key=lambda n: n.track_id)


def pair_fitness(
    candidate: Tuple[BBox, Optional[FeatureVec]],
    reference: Tuple[BBox, Optional[FeatureVec]],
    d_om: float,
    weights: FitnessWeights = FitnessWeights(),
) -> float:
    """λ_s·f_s + λ_m·f_m; sem características, apenas o termo de movimento"""
    cand_box, cand_feat = candidate
    ref_box, ref_feat = reference
    f_m = 1.0 - min(center_distance(cand_box, ref_box), d_om) / d_om
    if cand_feat is None or ref_feat is None:
        return f_m
    return weights.lambda_s * cosine_sim(cand_feat, ref_feat) + weights.lambda_m * f_m


def social_fitness(
    p: Particle,
    nbrs: Sequence[Neighbour],
    eps_nei: float,
    v_s_max: float,
    weights: FitnessWeights = FitnessWeights(),
) -> float:
    """Aptidão social: maior quanto mais afastada a partícula dos vizinhos; 1 sem vizinhos"""
    if not nbrs:
        return 1.0
    n = len(nbrs)
    pos_term = sum(min(center_distance(p.state, nb.state), 2 * eps_nei) / (2 * eps_nei) for nb in nbrs)
    vel_term = sum(
        min(math.hypot(p.vel.du - nb.vel.du, p.vel.dv - nb.vel.dv), v_s_max) / v_s_max for nb in nbrs
    )
    return weights.xi_p / n * pos_term + weights.xi_v / n * vel_term


class _FitnessModel:
    """Avaliação vetorizada da aptidão de um enxame inteiro"""

    def __init__(
        self,
        target: "Track",
        nbrs: Sequence[Neighbour],
        provider: FeatureProvider,
        weights: FitnessWeights,
        bounds: MotionBounds,
        cfg: TrackerConfig,
        frameless: bool,
    ):
        self.weights = weights
        self.provider = provider
        self.reference = target.state.as_array()
        self.ref_diag = diag(target.state)
        # HoG do último estado confirmado da trilha
        self.ref_features = None if frameless else target.appearance
        self.eps_nei = cfg.radius_scale * self.ref_diag
        self.v_s_max = bounds.social_speed_cap
        self.nbr_centers = np.array([[nb.state.u, nb.state.v] for nb in nbrs]).reshape(-1, 2)
        self.nbr_vels = np.array([[nb.vel.du, nb.vel.dv] for nb in nbrs]).reshape(-1, 2)

    def _features(self, states: np.ndarray) -> List[Optional[FeatureVec]]:
        return [self.provider.features(BBox.from_array(row)) for row in states]

    def _pair(self, states, feats, ref_states, ref_feats, ref_diags) -> np.ndarray:
        dist = np.hypot(states[:, 0] - ref_states[:, 0], states[:, 1] - ref_states[:, 1])
        f = 1.0 - np.minimum(dist, ref_diags) / ref_diags
        if feats is None:
            return f
        out = f.copy()
        for k, (a, b) in enumerate(zip(feats, ref_feats)):
            if a is not None and b is not None:
                out[k] = self.weights.lambda_s * cosine_sim(a, b) + self.weights.lambda_m * f[k]
        return out

    def history(self, states: np.ndarray, feats) -> np.ndarray:
        n = states.shape[0]
        refs = np.tile(self.reference, (n, 1))
        return self._pair(states, feats, refs, [self.ref_features] * n, np.full(n, self.ref_diag))

    def social(self, states: np.ndarray, vels: np.ndarray) -> np.ndarray:
        if self.nbr_centers.shape[0] == 0:
            return np.ones(states.shape[0])
        n_nbrs = self.nbr_centers.shape[0]
        d_pos = states[:, None, :2] - self.nbr_centers[None, :, :]
        pos = np.minimum(np.hypot(d_pos[..., 0], d_pos[..., 1]), 2 * self.eps_nei) / (2 * self.eps_nei)
        d_vel = vels[:, None, :2] - self.nbr_vels[None, :, :]
        vel = np.minimum(np.hypot(d_vel[..., 0], d_vel[..., 1]), self.v_s_max) / self.v_s_max
        return self.weights.xi_p / n_nbrs * pos.sum(axis=1) + self.weights.xi_v / n_nbrs * vel.sum(axis=1)

    def evaluate(self, states, vels, prev_states, prev_feats, first: bool):
        """Retorna (aptidão combinada, aptidão de histórico, características)"""
        feats = self._features(states) if self.ref_features is not None else None
        f_h = self.history(states, feats)
        if first:
            f_p = np.ones(states.shape[0])
        else:
            prev_diags = np.hypot(prev_states[:, 2], prev_states[:, 3])
            f_p = self._pair(states, feats, prev_states, prev_feats or [None] * len(states), prev_diags)
        f_i = self.social(states, vels)
        w = self.weights
        total = np.clip(w.sigma_h * f_h + w.sigma_p * f_p + w.sigma_i * f_i, 0.0, 1.0)
        return total, f_h, feats


def optimize(
    target: "Track",
    particles: ParticleSet,
    frame_features: Optional[FeatureProvider],
    nbrs: Sequence[Neighbour],
    cfg: TrackerConfig,
    rng: np.random.Generator,
) -> SwarmResult:
    """
    PSO canônico por I_pso iterações:
    v ← ω·v + c₁·r₁·(pbest − x) + c₂·r₂·(gbest − x); x ← x + v.
    """
    provider = frame_features or NullFeatureProvider()
    frameless = cfg.frameless or isinstance(provider, NullFeatureProvider)
    weights = FitnessWeights.from_config(cfg, frameless=frameless)
    bounds = motion_bounds(target.state, cfg)
    model = _FitnessModel(target, nbrs, provider, weights, bounds, cfg, frameless)
    vel_cap = bounds.v_max + bounds.uv_max

    pos = particles.states.copy()
    vels = particles.vels.copy()
    step = np.zeros_like(pos)

    fitness, f_h, feats = model.evaluate(pos, vels, None, None, first=True)
    pbest = pos.copy()
    pbest_vel = vels.copy()
    pbest_fit = fitness.copy()
    g = int(np.argmax(pbest_fit))
    gbest, gbest_vel, gbest_fit = pbest[g].copy(), pbest_vel[g].copy(), float(pbest_fit[g])

    for _ in range(cfg.pso_iterations):
        r1 = rng.random(pos.shape)
        r2 = rng.random(pos.shape)
        step = cfg.inertia * step + cfg.c1 * r1 * (pbest - pos) + cfg.c2 * r2 * (gbest - pos)
        step = np.clip(step, -bounds.ux_max, bounds.ux_max)

        prev_pos, prev_feats = pos, feats
        pos = clamp_sizes(pos + step, cfg.min_box_size)
        vels = np.clip(vels + (pos - prev_pos), -vel_cap, vel_cap)

        fitness, f_h, feats = model.evaluate(pos, vels, prev_pos, prev_feats, first=False)
        improved = fitness > pbest_fit
        pbest[improved] = pos[improved]
        pbest_vel[improved] = vels[improved]
        pbest_fit[improved] = fitness[improved]

        g = int(np.argmax(pbest_fit))
        if pbest_fit[g] > gbest_fit:
            gbest, gbest_vel, gbest_fit = pbest[g].copy(), pbest_vel[g].copy(), float(pbest_fit[g])

    gbest_feats = None
    if model.ref_features is not None:
        gbest_feats = [provider.features(BBox.from_array(gbest))]
    history_fitness = float(model.history(gbest[None, :], gbest_feats)[0])

    optimized = ParticleSet(
        states=pos,
        vels=vels,
        pbest_states=pbest,
        pbest_fitness=pbest_fit,
        fitness=fitness,
    )
    return SwarmResult(
        particles=optimized,
        gbest_state=BBox.from_array(gbest),
        gbest_vel=Velocity4.from_array(gbest_vel),
        gbest_fitness=gbest_fit,
        gbest_history_fitness=min(1.0, max(0.0, history_fitness)),
        neighbours=list(nbrs),
    )
