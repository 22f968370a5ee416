"""Compiled vs pure-Python timings for the hot kernels and one full plan.

    python benchmarks/bench_kernels.py [--repeat 5]

Kernels are timed in-process through the dispatcher and its ``py_func``.
The full plan is timed in a child process with FOLLOWAHEAD_DISABLE_NUMBA=1,
because the planner loop calls other kernels that would stay compiled.
"""

import argparse
import json
import os
import subprocess
import sys
import timeit

import numpy as np

from followahead._jit import NUMBA_ENABLED, python_impl
from followahead.grid import point_collides, segment_blocked
from followahead.qnet import load_default_params, mlp_forward_flat

PLAN_SNIPPET = """
import json, time
from followahead import Pose2D, WorldState, PlannerConfig, load_map
from followahead.planner import search, human_poses_for, warm_up
from followahead.predictor import LinearMotionFit
from followahead.qnet import load_default_params
from followahead.scenario import shipped_scenario
cfg = shipped_scenario("circle-obstacles")
q = load_default_params()
pc = PlannerConfig(time_budget=None)
state = WorldState(Pose2D(1.5, 0.0, 0.0), Pose2D(0.0, 0.0, 0.0))
humans = human_poses_for(state.human, LinearMotionFit((0.0, 0.0), (0.3, 0.0), 0.0), pc)
warm_up()
times = []
for _ in range({repeat}):
    t = time.perf_counter()
    search(state, cfg.grid, humans, q, pc)
    times.append(time.perf_counter() - t)
print(json.dumps(min(times)))
"""


def best(stmt, repeat, number):
    return min(timeit.repeat(stmt, repeat=repeat, number=number)) / number


def plan_time(repeat, disable):
    env = dict(os.environ)
    env.pop("FOLLOWAHEAD_DISABLE_NUMBA", None)
    if disable:
        env["FOLLOWAHEAD_DISABLE_NUMBA"] = "1"
    out = subprocess.run([sys.executable, "-c", PLAN_SNIPPET.format(repeat=repeat)],
                         env=env, capture_output=True, text=True, check=True)
    return json.loads(out.stdout)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not NUMBA_ENABLED:
        sys.exit("numba is disabled or missing; nothing to compare")

    rng = np.random.default_rng(0)
    occ = rng.random((140, 160)) < 0.05
    segs = rng.uniform(0, 140, size=(200, 4))
    pts = rng.uniform(0, 140, size=(200, 2))
    q = load_default_params()
    flat, sizes = q.flat(), np.array(q.sizes, dtype=np.int64)
    xs = rng.uniform(-1, 1, size=(200, 3))
    bufs = [np.zeros(64) for _ in range(3)]

    def seg(f):
        return lambda: [f(occ, *s) for s in segs]

    def pt(f):
        return lambda: [f(occ, u, v, 3.0) for u, v in pts]

    def mlp(f):
        return lambda: [f(flat, sizes, x, *bufs) for x in xs]

    rows = []
    for name, make, kernel in (("segment_blocked x200", seg, segment_blocked),
                               ("point_collides x200", pt, point_collides),
                               ("mlp_forward_flat x200", mlp, mlp_forward_flat)):
        make(kernel)()  # compile outside the timing
        fast = best(make(kernel), args.repeat, 20)
        slow = best(make(python_impl(kernel)), args.repeat, 2)
        rows.append((name, fast, slow))
    rows.append(("search (200 expansions)", plan_time(args.repeat, False), plan_time(args.repeat, True)))

    print(f"{'kernel':<26}{'numba':>12}{'python':>12}{'speedup':>10}")
    for name, fast, slow in rows:
        print(f"{name:<26}{fast * 1e3:>10.3f}ms{slow * 1e3:>10.2f}ms{slow / fast:>9.0f}x")


if __name__ == "__main__":
    main()
