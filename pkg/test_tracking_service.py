import numpy as np
import pytest

from app.appearance import GrayImage, extract_hog
from app.benchmark import crossing_scenario, scenario_frames
from app.config import TrackerConfig
from app.exceptions import ConfigError, DataError
from app.geometry import BBox
from app.models import Detection, FrameInput, TrackStatus
from app.scenario import generate_scenario
from app.tracking_service import ParticleSwarmTracker, detections_only, run_sequence
from conftest import frame


def test_empty_first_frame_yields_nothing():
    tracker = ParticleSwarmTracker()
    assert tracker.step(FrameInput(1, [])) == []
    assert tracker.frame_index == 1


def test_single_detection_creates_track_one():
    out = ParticleSwarmTracker().step(frame(1, (50, 60, 10, 20)))
    assert len(out) == 1
    assert out[0].id == 1
    assert out[0].box == BBox(50, 60, 10, 20)
    assert out[0].penalty == 0.0 and out[0].age == 0.0


def test_low_confidence_detection_is_not_born():
    assert ParticleSwarmTracker().step(frame(1, (50, 60, 10, 20), conf=0.3)) == []


def test_two_frame_step_follows_detection():
    tracker = ParticleSwarmTracker()
    tracker.step(frame(1, (100, 100, 20, 40)))
    out = tracker.step(frame(2, (104, 100, 20, 40)))
    assert len(out) == 1
    assert out[0].id == 1
    assert out[0].status == TrackStatus.STRONG
    assert out[0].box == BBox(104, 100, 20, 40)
    assert tracker.tracks[0].vel.du == pytest.approx(4.0)


def test_out_of_order_frame_is_rejected():
    tracker = ParticleSwarmTracker()
    tracker.step(frame(2, (10, 10, 4, 4)))
    with pytest.raises(DataError):
        tracker.step(frame(2, (10, 10, 4, 4)))
    with pytest.raises(DataError):
        tracker.step(frame(1))


def test_bad_confidence_reports_detection_index():
    tracker = ParticleSwarmTracker()
    bad = FrameInput(1, [Detection(BBox(5, 5, 2, 2), 0.9), Detection(BBox(50, 5, 2, 2), 1.5)])
    with pytest.raises(DataError) as excinfo:
        tracker.step(bad)
    assert excinfo.value.index == 1


def test_invalid_config_is_rejected():
    with pytest.raises(ConfigError):
        ParticleSwarmTracker(TrackerConfig(frame_window=0))


def test_ids_are_consecutive_and_never_reused():
    tracker = ParticleSwarmTracker()
    out = tracker.step(frame(1, (50, 50, 20, 40), (250, 50, 20, 40), (450, 50, 20, 40)))
    assert [o.id for o in out] == [1, 2, 3]
    out = tracker.step(frame(2, (50, 50, 20, 40), (250, 50, 20, 40), (450, 50, 20, 40), (50, 400, 20, 40)))
    assert [o.id for o in out] == [1, 2, 3, 4]


def test_separate_targets_keep_their_ids():
    tracker = ParticleSwarmTracker()
    for k in range(1, 21):
        out = tracker.step(frame(k, (50 + 2 * k, 100, 20, 40), (300 - 2 * k, 300, 20, 40)))
        assert [o.id for o in out] == [1, 2]
        assert out[0].box == BBox(50 + 2 * k, 100, 20, 40)
        assert out[1].box == BBox(300 - 2 * k, 300, 20, 40)


def test_missing_track_turns_weak_and_accumulates_penalty():
    tracker = ParticleSwarmTracker()
    tracker.step(frame(1, (100, 100, 20, 40)))
    last_penalty = 0.0
    for k in range(2, 12):
        out = tracker.step(frame(k))
        assert [o.id for o in out] == [1]
        assert out[0].status == TrackStatus.WEAK
        assert out[0].penalty >= last_penalty
        last_penalty = out[0].penalty
    assert tracker.tracks[0].miss_count == 10


def test_entrance_area_removes_lost_track():
    cfg = TrackerConfig(entrance_penalty=1.0, entrance_areas=[(0.0, 0.0, 200.0, 200.0)])
    tracker = ParticleSwarmTracker(cfg)
    tracker.step(frame(1, (100, 100, 20, 40)))
    sigma = cfg.age_max / 6
    limit = int(cfg.age_max + np.ceil(3 * sigma))
    outputs = [tracker.step(frame(k)) for k in range(2, limit + 2)]
    assert outputs[-1] == []


def test_reset_restarts_ids():
    tracker = ParticleSwarmTracker()
    tracker.step(frame(1, (50, 50, 20, 40), (250, 50, 20, 40)))
    tracker.reset()
    assert tracker.tracks == () and tracker.frame_index is None
    out = tracker.step(frame(1, (400, 400, 20, 40)))
    assert [o.id for o in out] == [1]


def test_same_seed_same_output_regardless_of_workers():
    spec = crossing_scenario(0)
    data = generate_scenario(spec)
    runs = [
        run_sequence(ParticleSwarmTracker(TrackerConfig(seed=3, workers=w)), scenario_frames(data, spec.n_frames))
        for w in (1, 1, 4)
    ]
    assert runs[0] == runs[1] == runs[2]


def test_tracks_with_appearance_features():
    tracker = ParticleSwarmTracker()
    for k in range(1, 6):
        pixels = np.full((200, 200), 30, dtype=np.uint8)
        u = 60 + 3 * k
        pixels[80:120, u - 10:u + 10] = 220
        out = tracker.step(FrameInput(k, [Detection(BBox(u, 100, 20, 40), 0.95)], GrayImage.from_array(pixels)))
        assert [o.id for o in out] == [1]
        assert out[0].box == BBox(u, 100, 20, 40)


def test_detections_only_fills_gaps():
    dets = {2: [Detection(BBox(5, 5, 2, 2), 1.0)]}
    frames = detections_only(dets, 4)
    assert [f.frame_index for f in frames] == [1, 2, 3, 4]
    assert [len(f.detections) for f in frames] == [0, 1, 0, 0]
    assert detections_only({}) == []


def test_appearance_template_is_taken_when_track_is_confirmed():
    pixels = np.full((200, 200), 30, dtype=np.uint8)
    pixels[80:120, 90:110] = np.random.default_rng(3).integers(0, 256, size=(40, 20), dtype=np.uint8)
    image = GrayImage.from_array(pixels)
    box = BBox(100, 100, 20, 40)

    tracker = ParticleSwarmTracker()
    tracker.step(FrameInput(1, [Detection(box, 0.95)], image))
    (track,) = tracker.tracks
    assert np.array_equal(track.appearance, extract_hog(image, box))

    template = track.appearance
    tracker.step(FrameInput(2, []))  # sem imagem e sem detecção: o modelo anterior fica
    assert track.status == TrackStatus.WEAK
    assert track.appearance is template

    frameless = ParticleSwarmTracker(TrackerConfig(frameless=True))
    frameless.step(FrameInput(1, [Detection(box, 0.95)], image))
    assert frameless.tracks[0].appearance is None
