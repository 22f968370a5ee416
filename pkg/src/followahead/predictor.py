"""Short-horizon human motion prediction by a least-squares line fit."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

from .errors import InvalidArgumentError, NotReadyError
from .geometry import Pose2D

WINDOW = 3.0
MIN_SPAN = 0.5
V_EPS = 0.05
PLANNER_OFFSETS = (0.5, 1.0, 1.5, 2.0, 2.5, 3.0)


class PoseHistory:
    """Timestamped human positions inside a sliding window."""

    def __init__(self, window: float = WINDOW, heading: float = 0.0):
        if not window > 0:
            raise InvalidArgumentError("window must be positive")
        self.window = window
        self.samples: deque[tuple[float, float, float]] = deque()
        self.last_heading = heading

    def __len__(self):
        return len(self.samples)

    @property
    def newest(self) -> tuple[float, float, float]:
        if not self.samples:
            raise NotReadyError("history is empty")
        return self.samples[-1]

    def push(self, t: float, x: float, y: float, heading: float | None = None) -> "PoseHistory":
        if not all(math.isfinite(v) for v in (t, x, y)):
            raise InvalidArgumentError("pose sample must be finite")
        if self.samples and not t > self.samples[-1][0]:
            raise InvalidArgumentError(
                f"timestamp {t} is not after the newest sample {self.samples[-1][0]}"
            )
        self.samples.append((float(t), float(x), float(y)))
        if heading is not None:
            self.last_heading = float(heading)
        while self.samples[0][0] < t - self.window:
            self.samples.popleft()
        return self


def push_pose(history: PoseHistory, t: float, x: float, y: float) -> PoseHistory:
    return history.push(t, x, y)


@dataclass(frozen=True)
class LinearMotionFit:
    p0: tuple[float, float]
    v: tuple[float, float]
    heading: float

    @property
    def speed(self) -> float:
        return math.hypot(*self.v)


def fit_line(history: PoseHistory, v_eps: float = V_EPS) -> LinearMotionFit:
    """Independent least-squares lines ``x(t)``, ``y(t)`` evaluated at the newest time."""
    samples = history.samples
    if len(samples) < 2 or samples[-1][0] - samples[0][0] < MIN_SPAN:
        raise NotReadyError(f"need >= 2 samples spanning >= {MIN_SPAN} s")
    n = len(samples)
    tm = sum(s[0] for s in samples) / n
    xm = sum(s[1] for s in samples) / n
    ym = sum(s[2] for s in samples) / n
    stt = sxt = syt = 0.0
    for t, x, y in samples:
        dt = t - tm
        stt += dt * dt
        sxt += dt * (x - xm)
        syt += dt * (y - ym)
    vx, vy = sxt / stt, syt / stt
    t_new = samples[-1][0] - tm
    p0 = (xm + vx * t_new, ym + vy * t_new)
    if math.hypot(vx, vy) > v_eps:
        heading = math.degrees(math.atan2(vy, vx))
    else:
        heading = history.last_heading
    return LinearMotionFit(p0, (vx, vy), heading)


def stationary_fit(history: PoseHistory) -> LinearMotionFit:
    """Zero-velocity fallback at the newest sample."""
    _, x, y = history.newest
    return LinearMotionFit((x, y), (0.0, 0.0), history.last_heading)


def fit_or_stationary(history: PoseHistory) -> LinearMotionFit:
    try:
        return fit_line(history)
    except NotReadyError:
        return stationary_fit(history)


def predict(fit: LinearMotionFit, dt: float) -> Pose2D:
    if not dt >= 0:
        raise InvalidArgumentError(f"dt must be non-negative, got {dt!r}")
    return Pose2D(fit.p0[0] + fit.v[0] * dt, fit.p0[1] + fit.v[1] * dt, fit.heading)


def predict_horizon(fit: LinearMotionFit, offsets=PLANNER_OFFSETS) -> list[Pose2D]:
    return [predict(fit, dt) for dt in offsets]
