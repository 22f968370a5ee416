"""Command line entry point: ``followahead train|plan|simulate|compare``.

Exit codes: 0 success, 2 configuration or parse error, 3 planning infeasible
at t=0, 4 training failure.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import yaml

from .errors import ConfigError, ParseError, PlanningInfeasibleError, TrainingError
from .geometry import Pose2D, WorldState
from .grid import OccupancyGrid, load_map
from .planner import PlannerConfig, search, human_poses_for
from .predictor import LinearMotionFit, PoseHistory, fit_or_stationary
from .qnet import TrainConfig, load_default_params, load_params, save_params, train
from .scenario import METHODS, load_scenario, scenario_dir
from .sim import compare_methods, format_comparison, run_scenario, write_trace

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_TRAINING = 0, 2, 3, 4


def _scenario(ref: str):
    path = Path(ref)
    if not path.exists() and (scenario_dir() / f"{ref}.yaml").exists():
        path = scenario_dir() / f"{ref}.yaml"
    return load_scenario(path)


def _params(path):
    return load_params(path) if path else None


def _write(text: str, out) -> None:
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def cmd_train(args) -> int:
    from .dataset import generate_dataset

    t0 = time.perf_counter()
    data = generate_dataset(args.tuples, episode_length=args.episode_length, seed=args.seed)
    cfg = TrainConfig(mode=args.mode, seed=args.seed, epochs=args.epochs, episode_length=args.episode_length)
    if args.lr is not None:
        cfg.lr = cfg.lr_final = args.lr
    try:
        result = train(data, cfg)
    except TrainingError as exc:
        print(f"training failed: {exc}", file=sys.stderr)
        return EXIT_TRAINING
    save_params(result.params, args.out)
    h = result.loss_history
    print(f"{len(data)} tuples, {len(h)} steps, loss {h[0]:.5f} -> {h[-min(100, len(h)):].mean():.5f}, "
          f"{time.perf_counter() - t0:.1f}s", file=sys.stderr)
    return EXIT_OK


def _pose(doc, key) -> Pose2D:
    try:
        return Pose2D(*map(float, doc[key]))
    except KeyError:
        raise ConfigError(f"state file needs {key!r}") from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad {key!r}: {exc}") from None


def load_plan_state(path):
    """Read a plan state document; returns (state, grid, fit, params, planner config)."""
    path = Path(path)
    try:
        doc = yaml.safe_load(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read state file {path}: {exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("state file must be a mapping")
    robot, human = _pose(doc, "robot"), _pose(doc, "human")
    if "map" in doc:
        map_path = path.parent / doc["map"]
        try:
            grid = load_map(map_path)
        except OSError as exc:
            raise ConfigError(f"cannot read map {map_path}: {exc}") from None
    else:
        grid = OccupancyGrid.empty(200, 200, 0.1, (robot.x - 10.0, robot.y - 10.0))
    if "human_velocity" in doc:
        vx, vy = map(float, doc["human_velocity"])
        fit = LinearMotionFit((human.x, human.y), (vx, vy), human.theta)
    else:
        history = PoseHistory(heading=human.theta)
        for sample in doc.get("history", []) or []:
            history.push(*map(float, sample[:3]))
        if not len(history):
            history.push(0.0, human.x, human.y)
        fit = fit_or_stationary(history)
    params = load_params(path.parent / doc["params"]) if "params" in doc else None
    try:
        cfg = PlannerConfig(**(doc.get("planner") or {}))
    except TypeError as exc:
        raise ConfigError(f"bad planner settings: {exc}") from None
    return WorldState(robot, human), grid, fit, params, cfg


def cmd_plan(args) -> int:
    state, grid, fit, params, cfg = load_plan_state(args.state)
    q = _params(args.params) or params or load_default_params()
    try:
        result = search(state, grid, human_poses_for(state.human, fit, cfg), q, cfg)
    except PlanningInfeasibleError as exc:
        print(f"planning infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    g = result.goal
    print(f"goal {g.x:.6f} {g.y:.6f} {g.theta:.6f}")
    print("actions " + " ".join(a.name for a in result.actions))
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = _scenario(args.scenario)
    cfg = cfg.with_(**{k: v for k, v in (("method", args.method), ("seed", args.seed)) if v is not None})
    trace = run_scenario(cfg, _params(args.params))
    if args.out in (None, "-"):
        write_trace(trace, sys.stdout, timing=args.timing)
    else:
        write_trace(trace, args.out, timing=args.timing)
    if trace.records and trace.records[0].infeasible:
        print("planning infeasible at t=0", file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg = _scenario(args.scenario)
    if args.seed is not None:
        cfg = cfg.with_(seed=args.seed)
    methods = tuple(args.methods.split(",")) if args.methods else None
    if methods and set(methods) - set(METHODS):
        raise ConfigError(f"unknown methods {sorted(set(methods) - set(METHODS))}")
    rows = compare_methods(cfg, args.trials, methods, _params(args.params))
    _write(format_comparison(rows), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="followahead", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="generate experience and fit the value network")
    p.add_argument("--tuples", type=int, default=200_000)
    p.add_argument("--mode", choices=("mc", "ddqn"), default="mc")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int, default=TrainConfig.epochs)
    p.add_argument("--episode-length", type=int, default=TrainConfig.episode_length)
    p.add_argument("--lr", type=float, help="constant learning rate instead of the cosine schedule")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("plan", help="plan once from a state file and print the goal")
    p.add_argument("state")
    p.add_argument("--params")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("simulate", help="run one scenario and write its trace")
    p.add_argument("--scenario", required=True, help="scenario file or bundled scenario name")
    p.add_argument("--method", choices=METHODS)
    p.add_argument("--seed", type=int)
    p.add_argument("--params")
    p.add_argument("--timing", action="store_true", help="include per-tick plan latency")
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", help="cumulative reward of every method over seeded trials")
    p.add_argument("--scenario", required=True)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--seed", type=int)
    p.add_argument("--methods", help="comma separated subset of " + ",".join(METHODS))
    p.add_argument("--params")
    p.add_argument("--out")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
