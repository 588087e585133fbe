import numpy as np
import pytest

from app.appearance import GrayImage, HogFeatureProvider, HogParams, extract_hog
from app.config import TrackerConfig
from app.geometry import BBox, Velocity4, center_distance, diag
from app.models import TrackStatus
from app.particles import Particle, ParticleSet, Rng, Stage, sample_particles
from app.swarm import FitnessWeights, Neighbour, neighbours, optimize, pair_fitness, social_fitness
from conftest import as_neighbour, make_track

FRAMELESS = TrackerConfig(frameless=True)


def _particle(u, v, du=0.0, dv=0.0) -> Particle:
    box = BBox(u, v, 20, 40)
    return Particle(state=box, vel=Velocity4(du, dv), pbest_state=box)


def test_neighbours_examples():
    lone = make_track(1)
    assert neighbours(lone, [lone], 1.0) == []

    a, b = make_track(1), make_track(2)
    assert [n.track_id for n in neighbours(a, [a, b], 1.0)] == [2]
    assert [n.track_id for n in neighbours(b, [a, b], 1.0)] == [1]

    target = make_track(1, u=0, v=0, w=60, h=80)  # diagonal 100
    near = make_track(2, u=99, v=0)
    far = make_track(3, u=101, v=0)
    assert [n.track_id for n in neighbours(target, [target, far, near], 1.0)] == [2]


def test_pair_fitness_examples():
    box = BBox(50, 50, 20, 40)
    feat = np.array([0.3, 0.1, 0.6])
    assert pair_fitness((box, feat), (box, feat), 10.0) == pytest.approx(1.0)

    far = BBox(80, 50, 20, 40)
    assert pair_fitness((far, np.array([1.0, 0.0])), (box, np.array([0.0, 1.0])), 10.0) == pytest.approx(0.0)

    half = BBox(55, 50, 20, 40)
    motion_only = FitnessWeights(lambda_s=0.0, lambda_m=1.0)
    assert pair_fitness((half, feat), (box, feat), 10.0, motion_only) == pytest.approx(0.5)
    assert pair_fitness((half, None), (box, None), 10.0) == pytest.approx(0.5)


def test_social_fitness_examples():
    p = _particle(10, 10, 1, 1)
    assert social_fitness(p, [], 5.0, 2.0) == 1.0

    same = Neighbour(2, p.state, p.vel, "strong")
    assert social_fitness(p, [same], 5.0, 2.0) == pytest.approx(0.0)

    away = Neighbour(2, BBox(30, 10, 20, 40), Velocity4(4, 1), "strong")
    assert social_fitness(p, [away], 5.0, 2.0) == pytest.approx(1.0)


def test_fitness_terms_stay_in_unit_interval():
    rng = np.random.default_rng(42)
    for _ in range(10_000):
        u, v, du, dv = rng.uniform(-100, 100, 4)
        p = _particle(u, v, du, dv)
        nbrs = [
            Neighbour(k, BBox(*rng.uniform(-100, 100, 2), 20, 40), Velocity4(*rng.uniform(-10, 10, 2)), "strong")
            for k in range(int(rng.integers(0, 4)))
        ]
        s = social_fitness(p, nbrs, float(rng.uniform(1, 50)), float(rng.uniform(0.5, 20)))
        f = pair_fitness(
            (p.state, rng.uniform(0, 1, 5)),
            (BBox(*rng.uniform(-100, 100, 2), 20, 40), rng.uniform(0, 1, 5)),
            float(rng.uniform(1, 100)),
        )
        assert 0.0 <= s <= 1.0
        assert 0.0 <= f <= 1.0


def test_social_fitness_antitone_in_proximity():
    rng = np.random.default_rng(7)
    for _ in range(1_000):
        p = _particle(0, 0, 0, 0)
        direction = rng.normal(size=2)
        direction /= np.linalg.norm(direction)
        d_far, d_near = sorted(rng.uniform(0, 60, 2), reverse=True)
        v_far, v_near = sorted(rng.uniform(0, 10, 2), reverse=True)
        far = Neighbour(2, BBox(*(direction * d_far), 20, 40), Velocity4(v_far, 0), "strong")
        near = Neighbour(2, BBox(*(direction * d_near), 20, 40), Velocity4(v_near, 0), "strong")
        assert social_fitness(p, [near], 20.0, 5.0) <= social_fitness(p, [far], 20.0, 5.0) + 1e-12


def test_zero_iterations_keeps_particles_and_picks_argmax():
    cfg = TrackerConfig(frameless=True, pso_iterations=0)
    track = make_track()
    states = np.array([[110.0, 100, 20, 40], [101.0, 100, 20, 40], [90.0, 95, 20, 40]])
    particles = ParticleSet.fresh(states.copy(), np.zeros((3, 4)))
    result = optimize(track, particles, None, [], cfg, Rng(0).stream(1, 1, Stage.PSO))
    assert np.array_equal(result.particles.states, states)
    assert result.gbest_state == BBox(101.0, 100, 20, 40)


def test_particle_on_previous_state_has_unit_fitness():
    track = make_track()
    particles = ParticleSet.fresh(track.state.as_array()[None, :], np.zeros((1, 4)))
    result = optimize(track, particles, None, [], FRAMELESS, Rng(0).stream(1, 1, Stage.PSO))
    assert result.gbest_fitness == pytest.approx(1.0)
    assert result.gbest_history_fitness == pytest.approx(1.0)


def test_gbest_converges_to_attractor():
    cfg = TrackerConfig(frameless=True, pso_iterations=10)
    track = make_track()
    for seed in range(100):
        rng = Rng(seed)
        particles = sample_particles(track, cfg, rng.stream(1, 1, Stage.SAMPLE))
        result = optimize(track, particles, None, [], cfg, rng.stream(1, 1, Stage.PSO))
        assert center_distance(result.gbest_state, track.state) <= 0.05 * diag(track.state)


def test_gbest_fitness_never_decreases_with_iterations():
    track = make_track()
    other = make_track(2, u=115, v=100, vel=(1.0, 0.0, 0.0, 0.0))
    base = sample_particles(track, FRAMELESS, Rng(3).stream(1, 1, Stage.SAMPLE))
    previous = -1.0
    for iterations in range(8):
        cfg = TrackerConfig(frameless=True, pso_iterations=iterations)
        result = optimize(track, base, None, [as_neighbour(other)], cfg, Rng(3).stream(1, 1, Stage.PSO))
        assert result.gbest_fitness >= previous
        previous = result.gbest_fitness


def test_optimize_is_deterministic_and_bounded():
    cfg = TrackerConfig()
    track = make_track(vel=(2.0, 0.0, 0.0, 0.0))
    other = make_track(2, u=120, v=100, status=TrackStatus.WEAK)
    runs = []
    for _ in range(2):
        rng = Rng(8)
        particles = sample_particles(track, cfg, rng.stream(4, 1, Stage.SAMPLE))
        runs.append(optimize(track, particles, None, [as_neighbour(other)], cfg, rng.stream(4, 1, Stage.PSO)))
    a, b = runs
    assert np.array_equal(a.particles.states, b.particles.states)
    assert a.gbest_state == b.gbest_state
    assert np.all((a.particles.fitness >= 0) & (a.particles.fitness <= 1))
    assert np.all(a.particles.pbest_fitness >= a.particles.fitness)


def _textured_scene(u: int) -> GrayImage:
    """Fundo liso com um alvo texturizado 20x40 centrado em (u, 100)"""
    pixels = np.full((200, 200), 100, dtype=np.uint8)
    texture = np.random.default_rng(21).integers(0, 256, size=(40, 20), dtype=np.uint8)
    pixels[80:120, u - 10:u + 10] = texture
    return GrayImage.from_array(pixels)


def test_history_appearance_follows_the_stored_template():
    cfg = TrackerConfig(pso_iterations=0, lambda_s=0.8, lambda_m=0.2)
    track = make_track(u=100)
    track.appearance = extract_hog(_textured_scene(100), track.state)
    assert np.linalg.norm(track.appearance) > 0

    # O alvo andou 30 px, mais que a própria largura; o local antigo ficou vazio
    provider = HogFeatureProvider(_textured_scene(130), HogParams())
    states = np.array([[130.0, 100, 20, 40], [100.0, 100, 20, 40]])
    particles = ParticleSet.fresh(states.copy(), np.zeros((2, 4)))
    result = optimize(track, particles, provider, [], cfg, Rng(0).stream(2, 1, Stage.PSO))
    on_target, left_behind = result.particles.fitness
    assert on_target > left_behind
    assert result.gbest_state == BBox(130.0, 100, 20, 40)

    track.appearance = None
    result = optimize(track, particles, provider, [], cfg, Rng(0).stream(2, 1, Stage.PSO))
    assert result.gbest_state == BBox(100.0, 100, 20, 40)
