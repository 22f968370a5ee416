"""Planar poses, the discrete robot motion model and relative quantities.

Angles are exchanged in degrees, normalized into (-180, 180].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum

from .errors import DegenerateGeometryError, InvalidArgumentError

STEP_LENGTH = 0.3


def normalize_angle(theta: float) -> float:
    """Wrap an angle in degrees into (-180, 180]."""
    if not math.isfinite(theta):
        raise InvalidArgumentError(f"angle must be finite, got {theta!r}")
    if -180.0 < theta <= 180.0:
        return float(theta)
    wrapped = math.fmod(theta, 360.0)
    if wrapped > 180.0:
        wrapped -= 360.0
    elif wrapped <= -180.0:
        wrapped += 360.0
    return wrapped


@dataclass(frozen=True)
class Pose2D:
    x: float
    y: float
    theta: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise InvalidArgumentError(f"non-finite position ({self.x!r}, {self.y!r})")
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        object.__setattr__(self, "theta", normalize_angle(float(self.theta)))

    @property
    def xy(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True)
class WorldState:
    robot: Pose2D
    human: Pose2D


@dataclass(frozen=True)
class Observation:
    dx: float
    dy: float
    dtheta: float

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.dx, self.dy, self.dtheta)


class RobotAction(IntEnum):
    """Heading change per step in degrees.

    Members are enumerated in a fixed order (-45, 0, +45); ``index`` is the
    position in that order and the output slot of the value network.
    """

    CW = -45
    STRAIGHT = 0
    CCW = 45

    @property
    def psi(self) -> float:
        return float(self.value)

    @property
    def index(self) -> int:
        return ACTIONS.index(self)


ACTIONS: tuple[RobotAction, ...] = (RobotAction.CW, RobotAction.STRAIGHT, RobotAction.CCW)
ACTION_PSI: tuple[float, ...] = tuple(a.psi for a in ACTIONS)


def step_robot(pose: Pose2D, action: RobotAction | float, d: float = STEP_LENGTH) -> Pose2D:
    """Advance ``d`` meters along ``theta + psi`` and turn by ``psi``."""
    if not d > 0:
        raise InvalidArgumentError(f"step length must be positive, got {d!r}")
    psi = float(action)
    heading = math.radians(pose.theta + psi)
    return Pose2D(pose.x + d * math.cos(heading), pose.y + d * math.sin(heading), pose.theta + psi)


def relative_observation(state: WorldState) -> Observation:
    """Human pose minus robot pose, componentwise (world frame)."""
    r, h = state.robot, state.human
    return Observation(h.x - r.x, h.y - r.y, normalize_angle(h.theta - r.theta))


def egocentric_observation(state: WorldState) -> Observation:
    """The relative observation with its offset rotated into the robot frame.

    This is what the value network consumes: it is invariant under rigid
    motions of the whole world, unlike the world-frame difference.
    """
    r, h = state.robot, state.human
    c, s = math.cos(math.radians(r.theta)), math.sin(math.radians(r.theta))
    dx, dy = h.x - r.x, h.y - r.y
    return Observation(c * dx + s * dy, -s * dx + c * dy, normalize_angle(h.theta - r.theta))


def human_robot_distance(state: WorldState) -> float:
    return math.hypot(state.human.x - state.robot.x, state.human.y - state.robot.y)


def signed_bearing(state: WorldState) -> float:
    """Angle from the human heading to the human->robot vector, in (-180, 180].

    Positive when the robot is to the human's left (counter-clockwise).
    """
    vx = state.robot.x - state.human.x
    vy = state.robot.y - state.human.y
    if vx == 0.0 and vy == 0.0:
        raise DegenerateGeometryError("robot and human positions coincide")
    return normalize_angle(math.degrees(math.atan2(vy, vx)) - state.human.theta)


def bearing_alpha(state: WorldState) -> float:
    """Unsigned angle in [0, 180] between human heading and human->robot vector."""
    vx = state.robot.x - state.human.x
    vy = state.robot.y - state.human.y
    if vx == 0.0 and vy == 0.0:
        raise DegenerateGeometryError("robot and human positions coincide")
    t = math.radians(state.human.theta)
    hx, hy = math.cos(t), math.sin(t)
    return math.degrees(math.atan2(abs(hx * vy - hy * vx), hx * vx + hy * vy))
