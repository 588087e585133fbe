from pathlib import Path

import pytest
from pydantic import ValidationError

from app.exceptions import ConfigError, DataError
from app.geometry import BBox
from app.io_formats import parse_det_file, read_pgm, read_track_file
from app.scenario import ScenarioSpec, generate_scenario, parse_scenario_spec, write_scenario


def _spec(**overrides) -> ScenarioSpec:
    values = dict(
        n_targets=2,
        n_frames=10,
        waypoints={1: [(1, 100.0, 100.0), (10, 190.0, 100.0)], 2: [(1, 400.0, 300.0), (10, 310.0, 300.0)]},
    )
    values.update(overrides)
    return ScenarioSpec(**values)


def test_noiseless_detections_equal_ground_truth():
    data = generate_scenario(_spec())
    assert len(data.gt.records) == 20
    for rec in data.gt.records:
        det_boxes = [d.box for d in data.detections[rec.frame]]
        assert rec.box in det_boxes
        assert rec.conf == 1.0
    assert all(d.conf == 1.0 for dets in data.detections.values() for d in dets)


def test_positions_are_interpolated_between_waypoints():
    data = generate_scenario(_spec())
    boxes = {(r.frame, r.id): r.box for r in data.gt.records}
    assert boxes[(1, 1)] == BBox(100.0, 100.0, 30.0, 60.0)
    assert boxes[(4, 1)].u == pytest.approx(130.0)
    assert boxes[(10, 2)].u == pytest.approx(310.0)


def test_occluded_target_has_ground_truth_but_no_detection():
    data = generate_scenario(_spec(occlusions=[(2, 3, 5)]))
    for frame in range(1, 11):
        ids_in_gt = sorted(r.id for r in data.gt.records if r.frame == frame)
        assert ids_in_gt == [1, 2]
        expected = 1 if 3 <= frame <= 5 else 2
        assert len(data.detections[frame]) == expected


def test_same_seed_writes_identical_files(tmp_path):
    spec = _spec(noise=2.0, dropout=0.2, fp_rate=0.5, conf_noise=0.1, seed=11, frames=True)
    a = write_scenario(generate_scenario(spec), tmp_path / "a")
    b = write_scenario(generate_scenario(spec), tmp_path / "b")
    for key in ("gt", "det"):
        assert a[key].read_bytes() == b[key].read_bytes()
    frames_a = sorted(p.name for p in a["frames"].iterdir())
    assert frames_a == [f"{k:06d}.pgm" for k in range(1, 11)]
    for name in frames_a:
        assert (a["frames"] / name).read_bytes() == (b["frames"] / name).read_bytes()


def test_written_files_parse_back(tmp_path):
    spec = _spec(noise=1.0, seed=3, frames=True)
    data = generate_scenario(spec)
    paths = write_scenario(data, tmp_path)
    assert len(read_track_file(paths["gt"]).records) == 20
    assert sum(len(d) for d in parse_det_file(paths["det"]).values()) == 20
    img = read_pgm(paths["frames"] / "000001.pgm")
    assert (img.width, img.height) == (spec.image_width, spec.image_height)
    assert img.pixels[100, 100] != img.pixels[0, 0]


def test_different_seeds_differ():
    a = generate_scenario(_spec(noise=1.0, seed=1))
    b = generate_scenario(_spec(noise=1.0, seed=2))
    assert a.detections != b.detections


@pytest.mark.parametrize(
    "overrides",
    [
        {"waypoints": {1: [(1, 0.0, 0.0)]}},
        {"occlusions": [(3, 1, 2)]},
        {"occlusions": [(1, 5, 2)]},
        {"n_frames": 0},
    ],
)
def test_invalid_specs(overrides):
    with pytest.raises(ValidationError):
        _spec(**overrides)


def test_parse_sample_scenario():
    spec = parse_scenario_spec(Path(__file__).parent / "config" / "crossing.scenario")
    assert (spec.n_targets, spec.n_frames, spec.seed) == (2, 40, 7)
    assert spec.waypoints[1] == [(1, 260.0, 236.0), (40, 380.0, 236.0)]
    assert spec.occlusions == [(2, 15, 24)]
    assert spec.frames is True


def test_parse_scenario_errors(tmp_path):
    unknown = tmp_path / "a.scenario"
    unknown.write_text("n_targets = 1\nn_frames = 2\nwaypoint.1 = 1, 0, 0\nspeed = 3\n", encoding="utf-8")
    with pytest.raises(DataError) as excinfo:
        parse_scenario_spec(unknown)
    assert excinfo.value.line == 4

    invalid = tmp_path / "b.scenario"
    invalid.write_text("n_targets = 2\nn_frames = 2\nwaypoint.1 = 1, 0, 0\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        parse_scenario_spec(invalid)
