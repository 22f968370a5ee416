"""Scripted human trajectories and scenario configuration files."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import yaml

from .errors import ConfigError, InvalidArgumentError
from .geometry import Pose2D
from .grid import OccupancyGrid, load_map
from .planner import PlannerConfig

HUMAN_KINDS = ("straight", "circle", "s-shape", "u-shape", "l-corridor", "waypoints")
METHODS = ("mcts-drl", "mcts-random", "drl-greedy")


@dataclass(frozen=True)
class Segment:
    """Constant speed and turn rate (rad/s) for ``duration`` seconds."""

    duration: float
    speed: float
    turn_rate: float = 0.0


def _advance(x, y, th, seg_speed, seg_turn, tau):
    """Closed-form unicycle motion; ``th`` in radians."""
    if seg_turn == 0.0:
        return x + seg_speed * tau * math.cos(th), y + seg_speed * tau * math.sin(th), th
    r = seg_speed / seg_turn
    th1 = th + seg_turn * tau
    return x + r * (math.sin(th1) - math.sin(th)), y - r * (math.cos(th1) - math.cos(th)), th1


@dataclass(frozen=True)
class PiecewisePath:
    """Human path made of straight and constant-curvature pieces.

    ``headings`` optionally overrides the heading at the start of each
    segment (used by waypoint polylines, whose heading jumps at corners).
    """

    start: Pose2D
    segments: tuple[Segment, ...]
    headings: tuple[float | None, ...] = ()

    def pose(self, t: float) -> Pose2D:
        if t < 0:
            raise InvalidArgumentError(f"time must be non-negative, got {t}")
        x, y, th = self.start.x, self.start.y, math.radians(self.start.theta)
        remaining = t
        for i, seg in enumerate(self.segments):
            if i < len(self.headings) and self.headings[i] is not None:
                th = math.radians(self.headings[i])
            last = i == len(self.segments) - 1
            tau = remaining if last else min(remaining, seg.duration)
            x, y, th = _advance(x, y, th, seg.speed, seg.turn_rate, tau)
            remaining -= tau
            if remaining <= 0:
                break
        return Pose2D(x, y, math.degrees(th))

    @property
    def duration(self) -> float:
        return sum(s.duration for s in self.segments)


def build_path(kind: str, params: dict) -> PiecewisePath:
    """Construct the closed-form path for one of the scripted trajectory kinds.

    Curved kinds take ``speed`` (m/s) and ``angular`` (rad/s, turn rate of
    the arcs); radius is ``speed / angular``.
    """
    p = dict(params)
    start = Pose2D(*p.pop("start", (0.0, 0.0, 0.0)))
    speed = float(p.pop("speed", 0.6 if kind == "straight" else 0.3))
    w = float(p.pop("angular", 0.3))
    lead = float(p.pop("lead", 0.0))
    direction = 1.0 if float(p.pop("direction", 1.0)) >= 0 else -1.0
    if kind == "straight":
        segs = [Segment(math.inf, speed)]
    elif kind == "circle":
        segs = [Segment(lead, speed), Segment(math.inf, speed, direction * w)]
    elif kind == "s-shape":
        turn = math.radians(float(p.pop("turn", 90.0))) / w
        segs = [Segment(lead, speed), Segment(turn, speed, direction * w),
                Segment(turn, speed, -direction * w), Segment(math.inf, speed)]
    elif kind in ("u-shape", "l-corridor"):
        default = 180.0 if kind == "u-shape" else 90.0
        turn = math.radians(float(p.pop("turn", default))) / w
        segs = [Segment(lead, speed), Segment(turn, speed, direction * w), Segment(math.inf, speed)]
    elif kind == "waypoints":
        pts = [tuple(map(float, q)) for q in p.pop("points", [])]
        if len(pts) < 2:
            raise ConfigError("waypoints trajectory needs at least two points")
        segs, heads = [], []
        for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
            length = math.hypot(x1 - x0, y1 - y0)
            segs.append(Segment(length / speed, speed))
            heads.append(math.degrees(math.atan2(y1 - y0, x1 - x0)))
        segs.append(Segment(math.inf, 0.0))
        heads.append(None)
        return PiecewisePath(Pose2D(*pts[0], heads[0]), tuple(segs), tuple(heads))
    else:
        raise ConfigError(f"unknown human trajectory kind {kind!r}")
    if p:
        raise ConfigError(f"unknown parameters for {kind!r}: {sorted(p)}")
    return PiecewisePath(start, tuple(s for s in segs if s.duration > 0))


def scripted_human_pose(kind: str, params: dict, t: float) -> Pose2D:
    return build_path(kind, params).pose(t)


@dataclass(frozen=True)
class RobotLimits:
    linear: tuple[float, float] = (0.5, 0.65)
    angular: tuple[float, float] = (-2.0, 2.0)

    def __post_init__(self):
        if not 0 <= self.linear[0] <= self.linear[1] or not self.angular[0] < 0 < self.angular[1]:
            raise ConfigError(f"invalid velocity limits {self.linear}, {self.angular}")


@dataclass(frozen=True)
class ScenarioConfig:
    grid: OccupancyGrid
    human_kind: str = "straight"
    human_params: dict = field(default_factory=dict)
    robot_start: Pose2D = Pose2D(1.5, 0.0, 0.0)
    limits: RobotLimits = RobotLimits()
    robot_radius: float = 0.15
    duration: float = 30.0
    dt: float = 0.5
    planner: PlannerConfig = PlannerConfig()
    method: str = "mcts-drl"
    seed: int = 0
    human_noise: float = 0.0
    name: str = ""
    map_path: str | None = None
    params_path: str | None = None

    def __post_init__(self):
        if self.duration < 0 or not self.dt > 0:
            raise ConfigError("duration must be >= 0 and dt > 0")
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if self.human_kind not in HUMAN_KINDS:
            raise ConfigError(f"unknown human trajectory kind {self.human_kind!r}")
        build_path(self.human_kind, self.human_params)

    def with_(self, **changes) -> "ScenarioConfig":
        return replace(self, **changes)

    @property
    def path(self) -> PiecewisePath:
        return build_path(self.human_kind, self.human_params)


_PLANNER_KEYS = {f.name for f in fields(PlannerConfig)}


def scenario_from_dict(doc: dict, base_dir: Path | None = None) -> ScenarioConfig:
    """Build a :class:`ScenarioConfig` from a parsed scenario document."""
    if not isinstance(doc, dict):
        raise ConfigError("scenario document must be a mapping")
    doc = dict(doc)
    base_dir = Path(base_dir or ".")
    try:
        map_ref = doc.pop("map")
    except KeyError:
        raise ConfigError("scenario needs a 'map' entry") from None
    map_path = (base_dir / map_ref).resolve()
    try:
        grid = load_map(map_path)
    except OSError as exc:
        raise ConfigError(f"cannot read map {map_path}: {exc}") from None

    human = dict(doc.pop("human", {}))
    kind = human.pop("kind", "straight")
    robot = dict(doc.pop("robot", {}))
    start = robot.pop("start", (1.5, 0.0, 0.0))
    limits = RobotLimits(tuple(robot.pop("linear", (0.5, 0.65))), tuple(robot.pop("angular", (-2.0, 2.0))))
    radius = float(robot.pop("radius", 0.15))
    planner = dict(doc.pop("planner", {}) or {})
    bad = set(planner) - _PLANNER_KEYS
    if bad:
        raise ConfigError(f"unknown planner settings {sorted(bad)}")
    params = doc.pop("params", None)
    if params is not None:
        params = str((base_dir / params).resolve())
    cfg = ScenarioConfig(
        grid=grid,
        human_kind=kind,
        human_params=human,
        robot_start=Pose2D(*start),
        limits=limits,
        robot_radius=radius,
        duration=float(doc.pop("duration", 30.0)),
        dt=float(doc.pop("dt", 0.5)),
        planner=PlannerConfig(**planner),
        method=doc.pop("method", "mcts-drl"),
        seed=int(doc.pop("seed", 0)),
        human_noise=float(doc.pop("human_noise", 0.0)),
        name=str(doc.pop("name", "")),
        map_path=str(map_path),
        params_path=params,
    )
    if robot:
        raise ConfigError(f"unknown robot settings {sorted(robot)}")
    if doc:
        raise ConfigError(f"unknown scenario keys {sorted(doc)}")
    return cfg


def load_scenario(path) -> ScenarioConfig:
    path = Path(path)
    try:
        doc = yaml.safe_load(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read scenario {path}: {exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    try:
        return scenario_from_dict(doc, path.parent)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{path}: {exc}") from None


def scenario_dir() -> Path:
    return Path(__file__).parent / "data" / "scenarios"


def shipped_scenario(name: str) -> ScenarioConfig:
    """Load one of the bundled scenarios by file stem, e.g. ``"circle-obstacles"``."""
    return load_scenario(scenario_dir() / f"{name}.yaml")
