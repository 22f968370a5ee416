import numpy as np
import pytest
from hypothesis import given, strategies as st

from followahead.errors import InvalidArgumentError, NotReadyError
from followahead.predictor import (
    LinearMotionFit,
    PoseHistory,
    fit_line,
    fit_or_stationary,
    predict,
    predict_horizon,
    stationary_fit,
)


def history(samples, **kw):
    h = PoseHistory(**kw)
    for s in samples:
        h.push(*s)
    return h


def test_push_first_sample():
    h = PoseHistory().push(0, 1, 2)
    assert list(h.samples) == [(0.0, 1.0, 2.0)]


def test_window_evicts_old_samples():
    h = history([(0.5 * k, k, 0) for k in range(8)])
    assert [s[0] for s in h.samples] == [0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5]


def test_push_rejects_non_increasing_time():
    h = PoseHistory().push(1.0, 0, 0)
    with pytest.raises(InvalidArgumentError):
        h.push(1.0, 0, 0)
    with pytest.raises(InvalidArgumentError):
        h.push(0.5, 0, 0)


def test_fit_collinear():
    fit = fit_line(history([(-1, 0, 0), (-0.5, 0.3, 0), (0, 0.6, 0)]))
    assert fit.v == pytest.approx((0.6, 0.0), abs=1e-12)
    assert fit.p0 == pytest.approx((0.6, 0.0), abs=1e-12)
    assert fit.heading == pytest.approx(0.0, abs=1e-12)


def test_fit_stationary_keeps_heading():
    fit = fit_line(history([(0, 2, 3), (0.5, 2, 3), (1, 2, 3)], heading=77.0))
    assert fit.v == (0.0, 0.0)
    assert fit.p0 == pytest.approx((2, 3))
    assert fit.heading == 77.0


def test_fit_heading_frozen_below_speed_threshold():
    h = history([(0, 0, 0), (1, 0.01, 0.01)], heading=-30.0)
    assert fit_line(h).heading == -30.0


def test_fit_matches_normal_equations():
    rng = np.random.default_rng(2)
    t = np.arange(0, 3.01, 0.5)
    x = 0.4 * t + 1 + rng.normal(0, 0.05, t.size)
    y = -0.2 * t + rng.normal(0, 0.05, t.size)
    fit = fit_line(history(zip(t, x, y)))
    A = np.column_stack([np.ones_like(t), t])
    cx = np.linalg.solve(A.T @ A, A.T @ x)
    cy = np.linalg.solve(A.T @ A, A.T @ y)
    assert fit.v == pytest.approx((cx[1], cy[1]), abs=1e-12)
    assert fit.p0 == pytest.approx((cx[0] + cx[1] * t[-1], cy[0] + cy[1] * t[-1]), abs=1e-12)


@pytest.mark.parametrize("samples", [[], [(0, 0, 0)], [(0, 0, 0), (0.25, 1, 0)]])
def test_fit_not_ready(samples):
    with pytest.raises(NotReadyError):
        fit_line(history(samples))


def test_fallback_to_stationary():
    h = history([(0, 1, 1)], heading=10.0)
    assert fit_or_stationary(h) == stationary_fit(h) == LinearMotionFit((1.0, 1.0), (0.0, 0.0), 10.0)


@pytest.mark.parametrize("fit, dt, pose", [
    (LinearMotionFit((0.6, 0), (0.6, 0), 0.0), 3.0, (2.4, 0, 0)),
    (LinearMotionFit((0.6, 0), (0.6, 0), 0.0), 0.0, (0.6, 0, 0)),
    (LinearMotionFit((1, 1), (0, 0.3), 90.0), 0.5, (1, 1.15, 90)),
])
def test_predict(fit, dt, pose):
    p = predict(fit, dt)
    assert (p.x, p.y, p.theta) == pytest.approx(pose, abs=1e-12)


def test_predict_rejects_negative_dt():
    with pytest.raises(InvalidArgumentError):
        predict(LinearMotionFit((0, 0), (0, 0), 0), -0.1)


def test_predict_horizon_offsets():
    poses = predict_horizon(LinearMotionFit((0, 0), (1, 0), 0))
    assert [p.x for p in poses] == pytest.approx([0.5, 1, 1.5, 2, 2.5, 3])


@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(-5, 5), st.floats(-5, 5))
def test_exact_line_is_recovered(vx, vy, x0, y0):
    t = np.arange(0.0, 3.01, 0.5)
    fit = fit_line(history(zip(t, x0 + vx * t, y0 + vy * t)))
    assert fit.v == pytest.approx((vx, vy), abs=1e-9)
    assert fit.p0 == pytest.approx((x0 + 3 * vx, y0 + 3 * vy), abs=1e-9)
