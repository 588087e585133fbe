import numpy as np
import pytest

from app.geometry import BBox
from app.metrics import TrackFile, TrackRecord, accumulate, clear_matches, evaluate, first_and_final_identities


def _walk(track_id, frames, u0=100.0, v=100.0, step=5.0):
    return [TrackRecord(f, track_id, BBox(u0 + step * f, v, 20, 40)) for f in frames]


def _relabel(track_file: TrackFile, mapping) -> TrackFile:
    return TrackFile([TrackRecord(r.frame, mapping[r.id], r.box, r.conf) for r in track_file.records])


@pytest.fixture
def gt() -> TrackFile:
    return TrackFile(_walk(1, range(1, 11)) + _walk(2, range(1, 11), v=300.0))


def test_perfect_hypothesis(gt):
    report = evaluate(gt, gt)
    assert report.mota == pytest.approx(100.0)
    assert report.idf1 == pytest.approx(100.0)
    assert report.motp == pytest.approx(100.0)
    assert (report.idsw, report.fp, report.fn) == (0, 0, 0)
    assert report.gt_count == 20 and report.matches == 20


def test_single_identity_switch():
    gt = TrackFile(_walk(1, range(1, 11)))
    hyp = TrackFile(_walk(10, range(1, 7)) + _walk(20, range(7, 11)))
    report = evaluate(gt, hyp)
    assert report.mota == pytest.approx(90.0)
    assert report.idf1 == pytest.approx(60.0)
    assert report.idsw == 1
    assert (report.idtp, report.idfp, report.idfn) == (6, 4, 4)


def test_empty_hypothesis(gt):
    report = evaluate(gt, TrackFile())
    assert report.mota == pytest.approx(0.0)
    assert report.idf1 == pytest.approx(0.0)
    assert report.fn == 20 and report.fp == 0


def test_empty_ground_truth():
    assert evaluate(TrackFile(), TrackFile()).mota == 100.0
    report = evaluate(TrackFile(), TrackFile(_walk(1, [1, 2])))
    assert report.mota == 0.0 and report.fp == 2


def test_false_positives_never_improve_scores(gt):
    rng = np.random.default_rng(0)
    hyp = TrackFile(list(gt.records))
    previous = evaluate(gt, hyp)
    for k in range(10):
        frame = int(rng.integers(1, 11))
        hyp.records.append(TrackRecord(frame, 100 + k, BBox(float(rng.uniform(500, 600)), 50.0, 20, 40)))
        report = evaluate(gt, hyp)
        assert report.mota <= previous.mota
        assert report.idf1 <= previous.idf1
        previous = report
    assert previous.fp == 10


def test_relabelling_hypothesis_changes_nothing(gt):
    hyp = TrackFile(_walk(5, range(1, 6)) + _walk(6, range(6, 11)) + _walk(7, range(2, 9), v=300.0))
    base = evaluate(gt, hyp)
    relabelled = evaluate(gt, _relabel(hyp, {5: 42, 6: 3, 7: 900}))
    assert relabelled == base


def test_previous_match_is_kept_while_above_threshold():
    gt = TrackFile([TrackRecord(f, 1, BBox(0, 0, 10, 10)) for f in (1, 2)])
    hyp = TrackFile(
        [
            TrackRecord(1, 7, BBox(2, 0, 10, 10)),  # IoU 8/12
            TrackRecord(2, 7, BBox(2, 0, 10, 10)),
            TrackRecord(2, 8, BBox(0, 0, 10, 10)),  # IoU 1, mas 7 continua válido
        ]
    )
    matches = clear_matches(gt, hyp, 0.5)
    assert [(g, h) for g, h, _ in matches[2]] == [(1, 7)]
    report = evaluate(gt, hyp)
    assert report.idsw == 0 and report.fp == 1


def test_first_and_final_identities():
    gt = TrackFile(_walk(1, range(1, 11)) + _walk(2, range(1, 5), v=300.0))
    hyp = TrackFile(_walk(10, range(1, 7)) + _walk(20, range(7, 11)))
    assert first_and_final_identities(gt, hyp) == {1: (10, 20), 2: (-1, -1)}


@pytest.mark.parametrize("threshold", [0.0, 1.0, -0.2, 1.5])
def test_threshold_outside_open_interval(gt, threshold):
    with pytest.raises(ValueError):
        evaluate(gt, gt, threshold)


def test_accumulator_records_the_switch_event():
    gt = TrackFile(_walk(1, range(1, 11)))
    hyp = TrackFile(_walk(10, range(1, 7)) + _walk(20, range(7, 11)))
    events = accumulate(gt, hyp).mot_events
    switches = events[events["Type"] == "SWITCH"]
    assert len(switches) == 1
    (frame, _), row = next(switches.iterrows())
    assert frame == 7 and int(row["HId"]) == 20


def test_pairs_below_threshold_are_never_matched():
    gt = TrackFile([TrackRecord(1, 1, BBox(0, 0, 10, 10))])
    hyp = TrackFile([TrackRecord(1, 2, BBox(6, 0, 10, 10))])  # IoU 4/16
    assert clear_matches(gt, hyp, 0.5) == {1: []}
    assert clear_matches(gt, hyp, 0.2)[1] == [(1, 2, pytest.approx(0.25))]
    report = evaluate(gt, hyp)
    assert (report.fp, report.fn, report.matches) == (1, 1, 0)
