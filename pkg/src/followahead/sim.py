"""Closed-loop follow-ahead simulation, baselines and trace output."""

from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DegenerateGeometryError, PlanningInfeasibleError
from .geometry import (
    ACTIONS,
    Pose2D,
    WorldState,
    bearing_alpha,
    egocentric_observation,
    human_robot_distance,
    normalize_angle,
    signed_bearing,
    step_robot,
)
from .grid import is_occluded, point_collides, segment_blocked
from .planner import human_poses_for, search
from .predictor import PoseHistory, fit_or_stationary
from .qnet import QFunctionParams, load_default_params, load_params, q_forward
from .reward import step_reward
from .scenario import RobotLimits, ScenarioConfig

ARRIVAL_TOLERANCE = 0.05
CONTROL_SUBSTEPS = 10
TRACE_COLUMNS = (
    "t", "robot_x", "robot_y", "robot_theta", "human_x", "human_y", "human_theta",
    "distance", "alpha_signed", "alpha", "reward", "occluded", "collided", "infeasible",
)


def follow_path(pose: Pose2D, waypoints, limits: RobotLimits, dt: float,
                blocked=None, substeps: int = CONTROL_SUBSTEPS, keepout=None) -> tuple[Pose2D, bool]:
    """Rotate-then-drive tracking of a waypoint sequence for one control period.

    Heading changes by at most ``max|angular| * dt``; the robot drives at the
    upper linear limit only while its heading error is below 45 degrees and
    never moves past the current waypoint.  Waypoints already within the
    arrival tolerance are skipped.  ``blocked(x, y)`` may veto a sub-step
    move (the robot then stays put); the second return value reports whether
    that happened.  ``keepout(x, y)`` vetoes a move the same way without
    counting as a bump (a navigation layer refusing to enter inflated space).
    """
    x, y, th = pose.x, pose.y, math.radians(pose.theta)
    th0 = th
    targets = list(waypoints)
    while targets and math.hypot(targets[0].x - x, targets[0].y - y) <= ARRIVAL_TOLERANCE:
        targets.pop(0)
    h = dt / substeps
    w_max = min(-limits.angular[0], limits.angular[1]) * h
    v_step = limits.linear[1] * h
    bumped = False
    for _ in range(substeps):
        if not targets:
            break
        gx, gy = targets[0].x, targets[0].y
        dist = math.hypot(gx - x, gy - y)
        err = math.remainder(math.atan2(gy - y, gx - x) - th, 2 * math.pi)
        turn = max(-w_max, min(w_max, err))
        th += turn
        if abs(err - turn) < math.pi / 4:
            step = min(v_step, dist)
            nx, ny = x + step * math.cos(th), y + step * math.sin(th)
            if blocked is not None and blocked(nx, ny):
                bumped = True
            elif keepout is not None and keepout(nx, ny):
                pass
            else:
                x, y = nx, ny
                if step >= dist or math.hypot(gx - x, gy - y) <= 1e-9:
                    targets.pop(0)
    theta = pose.theta if th == th0 else math.degrees(th)
    return Pose2D(x, y, theta), bumped


def robot_controller(pose: Pose2D, goal: Pose2D, limits: RobotLimits = RobotLimits(),
                     dt: float = 0.5) -> Pose2D:
    return follow_path(pose, [goal], limits, dt)[0]


def _segment_clear(grid, a: Pose2D, b: Pose2D, radius: float, spacing: float = 0.05) -> bool:
    n = max(1, int(math.ceil(math.hypot(b.x - a.x, b.y - a.y) / spacing)))
    r = radius / grid.resolution
    for i in range(n + 1):
        f = i / n
        u, v = grid.to_cell_units(a.x + f * (b.x - a.x), a.y + f * (b.y - a.y))
        if point_collides(grid.cells, u, v, r):
            return False
    return True


def paced_waypoints(robot: Pose2D, path: list[Pose2D], grid, radius: float,
                    human_next: Pose2D | None = None, alternatives=()) -> list[Pose2D]:
    """This tick's target on the way to the goal at the end of ``path``.

    The goal is scheduled ``len(path)`` ticks ahead, so the robot covers
    ``1/len(path)`` of the straight-line distance to it now.  That target is
    dropped when the line to the goal passes within ``radius`` of an obstacle
    or when it would lose sight of ``human_next``; the first tree step and
    then ``alternatives`` (other one-step poses, best first) are tried in turn.
    """
    if not path:
        return []
    goal = path[-1]
    f = 1.0 / len(path)
    candidates = []
    if _segment_clear(grid, robot, goal, radius):
        candidates.append(Pose2D(robot.x + f * (goal.x - robot.x), robot.y + f * (goal.y - robot.y), goal.theta))
    candidates.append(path[0])
    candidates.extend(alternatives)
    if human_next is None or not grid.in_bounds(*human_next.xy):
        return candidates[:1]
    for c in candidates:
        if not is_occluded(grid, c.xy, human_next.xy):
            return [c]
    return candidates[:1]


def _root_alternatives(tree) -> list[Pose2D]:
    kids = [int(c) for c in tree.children[0] if c >= 0]
    kids.sort(key=lambda c: -tree.w[c] / tree.n[c])
    return [tree.pose(c) for c in kids]


@dataclass(frozen=True)
class TickRecord:
    t: float
    robot: Pose2D
    human: Pose2D
    distance: float
    alpha_signed: float
    alpha: float
    reward: float
    occluded: bool
    collided: bool
    infeasible: bool
    latency: float = 0.0

    def row(self) -> tuple:
        return (
            self.t, self.robot.x, self.robot.y, self.robot.theta,
            self.human.x, self.human.y, self.human.theta,
            self.distance, self.alpha_signed, self.alpha, self.reward,
            int(self.occluded), int(self.collided), int(self.infeasible),
        )


def _longest_run(flags) -> int:
    best = run = 0
    for f in flags:
        run = run + 1 if f else 0
        best = max(best, run)
    return best


@dataclass
class MetricsTrace:
    records: list[TickRecord] = field(default_factory=list)
    method: str = ""
    scenario: str = ""
    seed: int = 0

    def __len__(self):
        return len(self.records)

    @property
    def cumulative_reward(self) -> float:
        return math.fsum(r.reward for r in self.records)

    @property
    def latencies(self) -> np.ndarray:
        return np.array([r.latency for r in self.records])

    def summary(self) -> dict:
        d = np.array([r.distance for r in self.records])
        a_s = np.array([r.alpha_signed for r in self.records])
        a = np.array([r.alpha for r in self.records])

        def stats(v):
            return (float(v.mean()), float(v.std())) if len(v) else (0.0, 0.0)

        return {
            "ticks": len(self.records),
            "distance_mean": stats(d)[0],
            "distance_std": stats(d)[1],
            "alpha_signed_mean": stats(a_s)[0],
            "alpha_signed_std": stats(a_s)[1],
            "alpha_mean": stats(a)[0],
            "alpha_std": stats(a)[1],
            "cumulative_reward": self.cumulative_reward,
            "occluded_ticks": sum(r.occluded for r in self.records),
            "max_occlusion_streak": _longest_run(r.occluded for r in self.records),
            "collision_ticks": sum(r.collided for r in self.records),
            "infeasible_ticks": sum(r.infeasible for r in self.records),
        }


def tick_reward(state: WorldState) -> float:
    """Step reward with coincident positions scored as the worst case."""
    try:
        return step_reward(state)
    except DegenerateGeometryError:
        return -1.0


def _bearings(state: WorldState) -> tuple[float, float]:
    try:
        return signed_bearing(state), bearing_alpha(state)
    except DegenerateGeometryError:
        return 0.0, 0.0


def _resolve_params(cfg: ScenarioConfig, q: QFunctionParams | None) -> QFunctionParams | None:
    if q is not None or cfg.method == "mcts-random":
        return q
    if cfg.params_path:
        return load_params(cfg.params_path)
    return load_default_params()


def run_scenario(cfg: ScenarioConfig, q: QFunctionParams | None = None) -> MetricsTrace:
    """Simulate one scenario tick by tick, reproducible from ``cfg.seed``."""
    q = _resolve_params(cfg, q)
    rng = np.random.default_rng(cfg.seed)
    grid = cfg.grid
    occ = grid.cells
    body = cfg.robot_radius / grid.resolution
    path = cfg.path
    pcfg = cfg.planner

    def cell(x, y):
        return grid.to_cell_units(x, y)

    def blocked(x, y):
        return bool(point_collides(occ, *cell(x, y), body))

    inflated = pcfg.inflation / grid.resolution

    def keepout(x, y):
        return bool(point_collides(occ, *cell(x, y), inflated))

    history = PoseHistory()
    robot = cfg.robot_start
    trace = MetricsTrace(method=cfg.method, scenario=cfg.name, seed=cfg.seed)
    n_ticks = int(math.floor(cfg.duration / cfg.dt + 1e-9))
    bumped = False
    for k in range(n_ticks):
        t = k * cfg.dt
        human = path.pose(t)
        state = WorldState(robot, human)
        occluded = bool(segment_blocked(occ, *cell(robot.x, robot.y), *cell(human.x, human.y)))
        collided = bumped or blocked(robot.x, robot.y)

        seen = human
        if cfg.human_noise > 0:
            nx, ny = rng.normal(0.0, cfg.human_noise, size=2)
            seen = Pose2D(human.x + nx, human.y + ny, human.theta)
        history.push(t, seen.x, seen.y, seen.theta)
        fit = fit_or_stationary(history)

        start = time.perf_counter()
        infeasible = False
        waypoints: list[Pose2D] = []
        if cfg.method == "drl-greedy":
            values = q_forward(q, egocentric_observation(WorldState(robot, seen)))
            waypoints = [step_robot(robot, ACTIONS[int(np.argmax(values))], pcfg.step_length)]
        else:
            random_values = None
            if cfg.method == "mcts-random":
                random_values = rng.uniform(-1.0, 1.0, size=1 + 3 * pcfg.expansion_budget)
            try:
                predicted = human_poses_for(seen, fit, pcfg)
                result = search(
                    WorldState(robot, seen), grid, predicted,
                    None if random_values is not None else q, pcfg, random_values=random_values,
                )
                waypoints = paced_waypoints(robot, result.path, grid, pcfg.inflation, predicted[1],
                                            _root_alternatives(result.tree))
            except PlanningInfeasibleError:
                infeasible = True
        latency = time.perf_counter() - start

        sa, a = _bearings(state)
        trace.records.append(TickRecord(
            t=t, robot=robot, human=human,
            distance=human_robot_distance(state), alpha_signed=sa, alpha=a,
            reward=tick_reward(state), occluded=occluded, collided=collided,
            infeasible=infeasible, latency=latency,
        ))
        guard = keepout if cfg.method != "drl-greedy" and not keepout(robot.x, robot.y) else None
        robot, bumped = follow_path(robot, waypoints, cfg.limits, cfg.dt, blocked=blocked, keepout=guard)
    return trace


@dataclass(frozen=True)
class MethodStats:
    method: str
    trials: int
    mean: float
    std: float
    minimum: float
    maximum: float
    collision_ticks: int
    max_occlusion_streak: int

    def row(self) -> tuple:
        return (self.method, self.trials, self.mean, self.std, self.minimum, self.maximum,
                self.collision_ticks, self.max_occlusion_streak)


COMPARE_COLUMNS = ("method", "trials", "reward_mean", "reward_std", "reward_min", "reward_max",
                   "collision_ticks", "max_occlusion_streak")


def compare_methods(cfg: ScenarioConfig, n_trials: int = 20, methods=None,
                    q: QFunctionParams | None = None) -> list[MethodStats]:
    """Cumulative reward per method over ``n_trials`` seeds ``cfg.seed + i``."""
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    methods = methods or ("mcts-drl", "mcts-random", "drl-greedy")
    rows = []
    for method in methods:
        traces = [run_scenario(cfg.with_(method=method, seed=cfg.seed + i), q) for i in range(n_trials)]
        rewards = np.array([tr.cumulative_reward for tr in traces])
        rows.append(MethodStats(
            method=method,
            trials=n_trials,
            mean=float(rewards.mean()),
            std=float(rewards.std()),
            minimum=float(rewards.min()),
            maximum=float(rewards.max()),
            collision_ticks=sum(tr.summary()["collision_ticks"] for tr in traces),
            max_occlusion_streak=max(tr.summary()["max_occlusion_streak"] for tr in traces),
        ))
    return rows


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, float):
        return f"{v:.9g}"
    return str(v)


def format_trace(trace: MetricsTrace, timing: bool = False) -> str:
    """CSV text: header, one row per tick, summary as trailing ``#`` comments.

    Wall-clock latency is only written with ``timing=True`` so that default
    output is byte-for-byte reproducible.  An empty trace is just the header.
    """
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRACE_COLUMNS + (("latency",) if timing else ()))
    for rec in trace.records:
        row = rec.row() + ((rec.latency,) if timing else ())
        writer.writerow([_fmt(v) for v in row])
    if not trace.records:
        return buf.getvalue()
    summary = trace.summary()
    buf.write(f"# method: {trace.method}\n# scenario: {trace.scenario}\n# seed: {trace.seed}\n")
    for key, value in summary.items():
        buf.write(f"# {key}: {_fmt(value)}\n")
    if timing and len(trace):
        buf.write(f"# latency_p99: {_fmt(float(np.percentile(trace.latencies, 99)))}\n")
    return buf.getvalue()


def write_trace(trace: MetricsTrace, destination, timing: bool = False) -> None:
    text = format_trace(trace, timing)
    if hasattr(destination, "write"):
        destination.write(text)
        return
    path = Path(destination)
    try:
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write trace to {path}: {exc}") from exc


def read_trace(source) -> tuple[list[dict], dict]:
    """Parse a trace CSV back into row dicts (floats) and the summary comments."""
    text = source.read() if hasattr(source, "read") else Path(source).read_text()
    lines = text.splitlines()
    data = [ln for ln in lines if not ln.startswith("#")]
    summary = {}
    for ln in lines:
        if ln.startswith("# "):
            key, _, value = ln[2:].partition(": ")
            summary[key] = value
    reader = csv.reader(data)
    header = next(reader)
    rows = [{k: float(v) for k, v in zip(header, row)} for row in reader]
    return rows, summary


def format_comparison(rows: list[MethodStats]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COMPARE_COLUMNS)
    for r in rows:
        writer.writerow([_fmt(v) for v in r.row()])
    return buf.getvalue()


def recompute_rewards(trace: MetricsTrace) -> list[float]:
    """Per-tick rewards recomputed from the recorded poses."""
    return [tick_reward(WorldState(r.robot, r.human)) for r in trace.records]


def heading_change(a: Pose2D, b: Pose2D) -> float:
    """Absolute heading change in radians between two poses."""
    return abs(math.radians(normalize_angle(b.theta - a.theta)))
