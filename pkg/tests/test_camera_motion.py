import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import boxes
from geotrack.association import cascade_match
from geotrack.camera_motion import (
    NO_MOTION,
    CameraMotionEstimate,
    apply_shift,
    estimate_shift,
    rematch_with_compensation,
)
from geotrack.config import TrackerConfig
from geotrack.geometry import Box
from geotrack.synth import ScenarioSpec, ScoreModel, TargetSpec, generate

CFG = TrackerConfig()


def test_estimate_shift_examples():
    pairs = [(Box(2, -1, 5, 5), Box(0, 0, 5, 5)), (Box(14, 7, 5, 5), Box(10, 10, 5, 5))]
    est = estimate_shift(pairs)
    assert (est.du, est.dv, est.support) == (3.0, -2.0, 2)
    same = [(Box(3, 4, 5, 6), Box(3, 4, 5, 6))] * 3
    est = estimate_shift(same)
    assert (est.du, est.dv, est.support) == (0.0, 0.0, 3)
    assert estimate_shift([]) == NO_MOTION == CameraMotionEstimate(0.0, 0.0, 0)


def test_injected_shift_recovered():
    rng = np.random.default_rng(4)
    preds = [Box(*rng.uniform(0, 1900, 1), *rng.uniform(0, 1000, 1), *rng.uniform(20, 100, 2)) for _ in range(15)]
    dets = [b.shifted(12, -7) for b in preds]
    est = estimate_shift(list(zip(dets, preds)))
    assert est.du == pytest.approx(12, abs=1e-9)
    assert est.dv == pytest.approx(-7, abs=1e-9)


def test_apply_shift_examples():
    pred = [(1, Box(5, 5, 10, 10)), (2, Box(-3, 8, 4, 6))]
    assert apply_shift(pred, NO_MOTION) == pred
    assert apply_shift(pred[:1], CameraMotionEstimate(3, -2, 1)) == [(1, Box(8, 3, 10, 10))]


@given(st.lists(st.tuples(boxes, boxes), min_size=1, max_size=8))
def test_apply_then_estimate_leaves_no_residual(pairs):
    est = estimate_shift(pairs)
    shifted = apply_shift([(i, p) for i, (_, p) in enumerate(pairs)], est)
    residual = estimate_shift([(d, p) for (d, _), (_, p) in zip(pairs, shifted)])
    scale = 1 + max(abs(b.u) + abs(b.v) for pair in pairs for b in pair)
    assert abs(residual.du) <= 1e-9 * scale
    assert abs(residual.dv) <= 1e-9 * scale


@given(st.lists(st.tuples(boxes, boxes), min_size=1, max_size=8),
       st.floats(-500, 500), st.floats(-500, 500))
def test_estimate_is_translation_equivariant(pairs, a, b):
    base = estimate_shift(pairs)
    moved = estimate_shift([(d.shifted(a, b), p) for d, p in pairs])
    scale = 1 + max(abs(x.u) + abs(x.v) for pair in pairs for x in pair) + abs(a) + abs(b)
    assert moved.du == pytest.approx(base.du + a, abs=1e-9 * scale)
    assert moved.dv == pytest.approx(base.dv + b, abs=1e-9 * scale)


@given(boxes, st.floats(-100, 100), st.floats(-100, 100))
def test_apply_shift_preserves_size(b, du, dv):
    (_, out), = apply_shift([(0, b)], CameraMotionEstimate(du, dv, 1))
    assert (out.w, out.h) == (b.w, b.h)
    assert out.w / out.h == b.w / b.h


def test_trimmed_mean_ignores_outlier_pairs():
    pairs = [(Box(10, 0, 5, 5), Box(0, 0, 5, 5))] * 9 + [(Box(500, 0, 5, 5), Box(0, 0, 5, 5))]
    assert estimate_shift(pairs).du == pytest.approx(59.0)
    assert estimate_shift(pairs, trim=0.1).du == pytest.approx(10.0)


def _two_frames(pan):
    sizes = [(120.0, 280.0), (110.0, 260.0), (100.0, 240.0)] + [(20.0, 50.0)] * 7
    targets = tuple(
        TargetSpec(1, 2, Box(150.0 + 170.0 * k, 300.0 + 300.0 * (k % 2), w, h)) for k, (w, h) in enumerate(sizes))
    spec = ScenarioSpec(frames=2, targets=targets, pan_events=((2, pan, 0.0),),
                        score_model=ScoreModel(tp_std=0.0), seed=1)
    sc = generate(spec)
    preds = [(g.id, g.box) for g in sc.gt[1]]
    return sc, preds


def test_compensated_pass_recovers_small_targets():
    sc, preds = _two_frames(40.0)
    dets = sc.dets[2]
    first = cascade_match(dets, preds, CFG)
    assert len(first.matches) == 3
    big = {g.id for g in sc.gt[1] if g.box.w > 50}
    assert {t for t, _ in first.matches} == big
    res, est = rematch_with_compensation(dets, preds, CFG)
    assert est.du == pytest.approx(40.0, abs=1e-9) and est.dv == pytest.approx(0.0, abs=1e-9)
    assert len(res.matches) == 10
    truth = sc.det_truth[2]
    assert all(truth[d] == t for t, d in res.matches)


def test_no_motion_second_pass_is_identical():
    sc, preds = _two_frames(0.0)
    dets = sc.dets[2]
    first = cascade_match(dets, preds, CFG)
    res, est = rematch_with_compensation(dets, preds, CFG)
    assert (est.du, est.dv) == (0.0, 0.0)
    assert sorted(res.matches) == sorted(first.matches)


def test_empty_frame():
    res, est = rematch_with_compensation([], [(1, Box(0, 0, 5, 5)), (2, Box(50, 0, 5, 5))], CFG)
    assert res.matches == [] and res.unmatched_tracks == [1, 2] and est == NO_MOTION


@pytest.mark.parametrize("pan", [-60.0, -25.0, 15.0, 45.0])
def test_second_pass_never_matches_fewer_under_pure_translation(pan):
    sc, preds = _two_frames(pan)
    dets = sc.dets[2]
    first = cascade_match(dets, preds, CFG)
    res, _ = rematch_with_compensation(dets, preds, CFG)
    assert len(res.matches) >= len(first.matches)
