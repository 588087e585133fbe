"""Fixtures compartilhadas pelos testes"""
from typing import Optional

import numpy as np
import pytest

from app.config import TrackerConfig
from app.geometry import BBox, Velocity4
from app.lifecycle import Track
from app.models import Detection, FrameInput, TrackStatus
from app.swarm import Neighbour, SwarmResult
from app.particles import ParticleSet


@pytest.fixture
def cfg() -> TrackerConfig:
    return TrackerConfig()


def make_track(
    track_id: int = 1,
    u: float = 100.0,
    v: float = 100.0,
    w: float = 20.0,
    h: float = 40.0,
    vel=(0.0, 0.0, 0.0, 0.0),
    status: TrackStatus = TrackStatus.STRONG,
    penalty: float = 0.0,
    prev: Optional[BBox] = None,
) -> Track:
    track = Track(id=track_id, state=BBox(u, v, w, h), vel=Velocity4(*vel), penalty=penalty, status=status)
    track.prev_state = prev if prev is not None else track.state
    track.history.append(track.state)
    return track


def make_swarm(track: Track, gbest: Optional[BBox] = None, nbrs=()) -> SwarmResult:
    state = gbest or track.state
    particles = ParticleSet.fresh(state.as_array()[None, :], np.zeros((1, 4)))
    return SwarmResult(
        particles=particles,
        gbest_state=state,
        gbest_vel=track.vel,
        gbest_fitness=1.0,
        gbest_history_fitness=1.0,
        neighbours=list(nbrs),
    )


def as_neighbour(track: Track) -> Neighbour:
    return Neighbour(track.id, track.state, track.vel, track.status.value)


def frame(index: int, *boxes, conf: float = 0.9) -> FrameInput:
    """Quadro com detecções (u, v, w, h) de mesma confiança"""
    return FrameInput(index, [Detection(BBox(*b), conf) for b in boxes])
