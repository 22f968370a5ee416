"""Receding-horizon goal selection by tree search over joint robot/human states.

The tree lives in flat arrays so the expansion loop can run compiled.  Every
node stores the robot pose; the human pose is shared per depth (one
prediction per tree level).  A new child is valued by

* collision at its robot position: the child is discarded;
* blocked line of sight to the human at that depth: -1;
* otherwise the value network's output for the child's action, evaluated at
  the parent's observation and clamped to [-1, 1].

Values are backpropagated as sums with visit counts.  Expansion repeatedly
picks the open leaf with the highest UCB; the goal is the leaf with the best
mean value.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from ._jit import njit
from .errors import InvalidArgumentError, PlanningInfeasibleError
from .geometry import ACTION_PSI, ACTIONS, STEP_LENGTH, Pose2D, RobotAction, WorldState
from .grid import DEFAULT_INFLATION, OccupancyGrid, point_collides, segment_blocked
from .predictor import LinearMotionFit, predict
from .qnet import QFunctionParams, mlp_forward_flat

OPEN, EXPANDED, DEAD_END, HORIZON = 0, 1, 2, 3
VALUE_Q, VALUE_RANDOM = 0, 1


@dataclass(frozen=True)
class PlannerConfig:
    expansion_budget: int = 200
    c_explore: float = 1.4
    horizon_steps: int = 6
    dt: float = 0.5
    inflation: float = DEFAULT_INFLATION
    time_budget: float | None = 0.45
    step_length: float = STEP_LENGTH
    # leaves whose means differ by less than this count as tied; ties go to the deeper leaf
    tie_tolerance: float = 1e-9

    def __post_init__(self):
        if self.expansion_budget < 1:
            raise InvalidArgumentError("expansion_budget must be >= 1")
        if self.horizon_steps < 1:
            raise InvalidArgumentError("horizon_steps must be >= 1")
        if not self.dt > 0 or not self.step_length > 0:
            raise InvalidArgumentError("dt and step_length must be positive")
        if self.inflation < 0 or self.c_explore < 0:
            raise InvalidArgumentError("inflation and c_explore must be non-negative")


def ucb(w_total: float, n_visits: int, parent_visits: int, c: float) -> float:
    """Mean value plus exploration bonus; unvisited nodes score +inf."""
    if n_visits <= 0:
        return math.inf
    bonus = c * math.sqrt(math.log(parent_visits) / n_visits) if c else 0.0
    return w_total / n_visits + bonus


@njit
def _wrap_deg(a):
    # exact for |a| < 540, matching geometry.normalize_angle
    while a > 180.0:
        a -= 360.0
    while a <= -180.0:
        a += 360.0
    return a


@njit
def _ego_normalized(rx, ry, rth, hx, hy, hth, offset, scale, out):
    t = math.radians(rth)
    c = math.cos(t)
    s = math.sin(t)
    dx = hx - rx
    dy = hy - ry
    dth = _wrap_deg(hth - rth)
    out[0] = (c * dx + s * dy - offset[0]) * scale[0]
    out[1] = (-s * dx + c * dy - offset[1]) * scale[1]
    out[2] = (dth - offset[2]) * scale[2]


@njit
def _backprop(parent, n, w, node, value):
    while node >= 0:
        n[node] += 1
        w[node] += value
        node = parent[node]


@njit
def _expand(
    p, rx, ry, rth, depth, parent, action, n, w, status, children, meta,
    human, occ, grid_geom, inflation_cells, step_length, psi,
    value_mode, flat, sizes, in_offset, in_scale, rand_vals, scratch,
):
    """Create and evaluate all children of open node ``p``; returns how many survived."""
    horizon = human.shape[0] - 1
    d = depth[p]
    qout = scratch[0]
    if value_mode == 0:
        _ego_normalized(rx[p], ry[p], rth[p], human[d, 0], human[d, 1], human[d, 2],
                        in_offset, in_scale, scratch[1])
        mlp_forward_flat(flat, sizes, scratch[1], scratch[2], scratch[3], qout)
    ox, oy, res = grid_geom[0], grid_geom[1], grid_geom[2]
    hx, hy = human[d + 1, 0], human[d + 1, 1]
    hu, hv = (hx - ox) / res, (hy - oy) / res
    made = 0
    for i in range(psi.shape[0]):
        th = rth[p] + psi[i]
        a = math.radians(th)
        cx = rx[p] + step_length * math.cos(a)
        cy = ry[p] + step_length * math.sin(a)
        cu, cv = (cx - ox) / res, (cy - oy) / res
        if point_collides(occ, cu, cv, inflation_cells):
            continue
        if segment_blocked(occ, cu, cv, hu, hv):
            value = -1.0
        elif value_mode == 0:
            value = min(1.0, max(-1.0, qout[i]))
        else:
            value = rand_vals[meta[0]]
        c = meta[0]
        meta[0] += 1
        rx[c] = cx
        ry[c] = cy
        rth[c] = _wrap_deg(th)
        depth[c] = d + 1
        parent[c] = p
        action[c] = i
        n[c] = 0
        w[c] = 0.0
        status[c] = HORIZON if d + 1 >= horizon else OPEN
        children[c, 0] = -1
        children[c, 1] = -1
        children[c, 2] = -1
        children[p, i] = c
        _backprop(parent, n, w, c, value)
        made += 1
    if made == 0:
        status[p] = DEAD_END
        _backprop(parent, n, w, p, -1.0)
    else:
        status[p] = EXPANDED
    return made


@njit
def _select(parent, n, w, status, count, c_explore):
    best = -1
    best_score = -np.inf
    for i in range(count):
        if status[i] != OPEN:
            continue
        p = parent[i]
        if p < 0 or n[i] == 0:
            return i
        score = w[i] / n[i] + c_explore * math.sqrt(math.log(n[p]) / n[i])
        if score > best_score:
            best_score = score
            best = i
    return best


@njit
def _run(
    max_iters, c_explore,
    rx, ry, rth, depth, parent, action, n, w, status, children, meta,
    human, occ, grid_geom, inflation_cells, step_length, psi,
    value_mode, flat, sizes, in_offset, in_scale, rand_vals, scratch,
):
    """Up to ``max_iters`` select/expand rounds; returns False once no open leaf remains."""
    for _ in range(max_iters):
        node = _select(parent, n, w, status, meta[0], c_explore)
        if node < 0:
            return False
        _expand(node, rx, ry, rth, depth, parent, action, n, w, status, children, meta,
                human, occ, grid_geom, inflation_cells, step_length, psi,
                value_mode, flat, sizes, in_offset, in_scale, rand_vals, scratch)
        meta[1] += 1
    return True


@njit
def _best_leaf(n, w, depth, children, count, tol):
    best = -1
    best_mean = -np.inf
    for i in range(1, count):
        if children[i, 0] >= 0 or children[i, 1] >= 0 or children[i, 2] >= 0:
            continue
        mean = w[i] / n[i]
        if best < 0 or mean > best_mean + tol:
            best, best_mean = i, mean
        elif mean >= best_mean - tol and depth[i] > depth[best]:
            best, best_mean = i, max(mean, best_mean)
    return best


@dataclass(frozen=True)
class TreeNode:
    """Read-only view of one node of a :class:`SearchTree`."""

    index: int
    state: WorldState
    depth: int
    action_from_parent: RobotAction | None
    n_visits: int
    w_total: float
    children: tuple[int, ...]
    parent: int | None
    status: int

    @property
    def mean_value(self) -> float:
        return self.w_total / self.n_visits if self.n_visits else 0.0

    @property
    def is_leaf(self) -> bool:
        return not self.children


@dataclass
class SearchTree:
    """Array-backed search tree rooted at one joint state."""

    grid: OccupancyGrid
    human_poses: list[Pose2D]
    cfg: PlannerConfig
    q: QFunctionParams | None = None
    random_values: np.ndarray | None = None
    capacity: int = 0
    iterations: int = field(default=0, init=False)

    def __post_init__(self):
        if len(self.human_poses) != self.cfg.horizon_steps + 1:
            raise InvalidArgumentError(
                f"need {self.cfg.horizon_steps + 1} human poses (root plus one per depth)"
            )
        if (self.q is None) == (self.random_values is None):
            raise InvalidArgumentError("provide exactly one of q or random_values")
        cap = self.capacity or 1 + len(ACTIONS) * self.cfg.expansion_budget
        self.capacity = cap
        self.rx = np.zeros(cap)
        self.ry = np.zeros(cap)
        self.rth = np.zeros(cap)
        self.depth = np.zeros(cap, dtype=np.int64)
        self.parent = np.full(cap, -1, dtype=np.int64)
        self.action = np.full(cap, -1, dtype=np.int64)
        self.n = np.zeros(cap, dtype=np.int64)
        self.w = np.zeros(cap)
        self.status = np.zeros(cap, dtype=np.int64)
        self.children = np.full((cap, len(ACTIONS)), -1, dtype=np.int64)
        self.meta = np.zeros(2, dtype=np.int64)
        self.human = np.array([[h.x, h.y, h.theta] for h in self.human_poses])
        g = self.grid
        self._geom = np.array([g.origin[0], g.origin[1], g.resolution])
        self._infl = self.cfg.inflation / g.resolution
        self._psi = np.array(ACTION_PSI)
        if self.q is not None:
            self._mode = VALUE_Q
            self._flat = self.q.flat()
            self._sizes = np.array(self.q.sizes, dtype=np.int64)
            self._in_off = self.q.input_offset
            self._in_scale = self.q.input_scale
            self._rand = np.zeros(1)
            width = max(self.q.sizes)
        else:
            self._mode = VALUE_RANDOM
            self._flat = np.zeros(1)
            self._sizes = np.array([3, 3], dtype=np.int64)
            self._in_off = np.zeros(3)
            self._in_scale = np.ones(3)
            self._rand = np.asarray(self.random_values, dtype=np.float64)
            if len(self._rand) < cap:
                raise InvalidArgumentError(f"need {cap} random values, got {len(self._rand)}")
            width = 3
        self._scratch = np.zeros((4, width))

    def set_root(self, robot: Pose2D):
        self.rx[0], self.ry[0], self.rth[0] = robot.x, robot.y, robot.theta
        self.status[0] = HORIZON if self.cfg.horizon_steps == 0 else OPEN
        self.meta[0] = 1

    @property
    def size(self) -> int:
        return int(self.meta[0])

    def _args(self):
        return (
            self.rx, self.ry, self.rth, self.depth, self.parent, self.action, self.n, self.w,
            self.status, self.children, self.meta, self.human, self.grid.cells, self._geom,
            self._infl, self.cfg.step_length, self._psi, self._mode, self._flat, self._sizes,
            self._in_off, self._in_scale, self._rand, self._scratch,
        )

    def expand(self, index: int) -> list[int]:
        """Expand one open node; returns the indices of the surviving children."""
        if not 0 <= index < self.size:
            raise InvalidArgumentError(f"no node {index}")
        if self.status[index] != OPEN:
            raise InvalidArgumentError(f"node {index} is not an open leaf")
        if self.size + len(ACTIONS) > self.capacity:
            raise InvalidArgumentError("tree capacity exhausted")
        _expand(index, *self._args())
        self.iterations += 1
        self.meta[1] = self.iterations
        return [int(c) for c in self.children[index] if c >= 0]

    def run(self, max_iters: int) -> bool:
        """Select/expand up to ``max_iters`` times; False once the tree is exhausted."""
        max_iters = min(max_iters, (self.capacity - self.size) // len(ACTIONS))
        before = int(self.meta[1])
        more = bool(_run(max_iters, self.cfg.c_explore, *self._args()))
        self.iterations += int(self.meta[1]) - before
        return more and max_iters > 0

    def select(self) -> int:
        return int(_select(self.parent, self.n, self.w, self.status, self.size, self.cfg.c_explore))

    def best_leaf(self) -> int:
        return int(_best_leaf(self.n, self.w, self.depth, self.children, self.size, self.cfg.tie_tolerance))

    def pose(self, index: int) -> Pose2D:
        return Pose2D(self.rx[index], self.ry[index], self.rth[index])

    def node(self, index: int) -> TreeNode:
        d = int(self.depth[index])
        a = int(self.action[index])
        return TreeNode(
            index=index,
            state=WorldState(self.pose(index), self.human_poses[d]),
            depth=d,
            action_from_parent=ACTIONS[a] if a >= 0 else None,
            n_visits=int(self.n[index]),
            w_total=float(self.w[index]),
            children=tuple(int(c) for c in self.children[index] if c >= 0),
            parent=int(self.parent[index]) if self.parent[index] >= 0 else None,
            status=int(self.status[index]),
        )

    def nodes(self) -> list[TreeNode]:
        return [self.node(i) for i in range(self.size)]

    def path_to(self, index: int) -> list[int]:
        """Node indices from the first move to ``index`` (root excluded)."""
        path = []
        while index > 0:
            path.append(index)
            index = int(self.parent[index])
        return path[::-1]


def human_poses_for(root_human: Pose2D, fit: LinearMotionFit, cfg: PlannerConfig) -> list[Pose2D]:
    return [root_human] + [predict(fit, k * cfg.dt) for k in range(1, cfg.horizon_steps + 1)]


def expand_node(tree: SearchTree, node: int | TreeNode) -> list[TreeNode]:
    """Expand ``node`` and return its evaluated, non-pruned children."""
    index = node.index if isinstance(node, TreeNode) else node
    return [tree.node(c) for c in tree.expand(index)]


@dataclass
class PlanResult:
    goal: Pose2D
    path: list[Pose2D]
    actions: list[RobotAction]
    tree: SearchTree
    latency: float


def build_tree(root_state: WorldState, grid: OccupancyGrid, human_poses: list[Pose2D],
               q: QFunctionParams | None, cfg: PlannerConfig, random_values=None) -> SearchTree:
    if point_collides(grid.cells, *grid.to_cell_units(root_state.robot.x, root_state.robot.y),
                      cfg.inflation / grid.resolution):
        raise PlanningInfeasibleError(
            f"robot at ({root_state.robot.x:.3f}, {root_state.robot.y:.3f}) is in collision"
        )
    tree = SearchTree(grid, human_poses, cfg, q=q, random_values=random_values)
    tree.set_root(root_state.robot)
    return tree


_WARM = False


def warm_up() -> None:
    """Compile the kernels once so that JIT time never eats into a time budget."""
    global _WARM
    if _WARM:
        return
    grid = OccupancyGrid.empty(8, 8, 0.5, (-2.0, -2.0))
    state = WorldState(Pose2D(0.0, 0.0, 0.0), Pose2D(-1.0, 0.0, 0.0))
    cfg = PlannerConfig(expansion_budget=2, horizon_steps=2, time_budget=None)
    humans = [state.human] * 3
    for q, rv in ((QFunctionParams.zeros(hidden=(2,)), None), (None, np.zeros(7))):
        tree = build_tree(state, grid, humans, q, cfg, rv)
        tree.run(2)
        tree.best_leaf()
    _WARM = True


def search(root_state: WorldState, grid: OccupancyGrid, human_poses: list[Pose2D],
           q: QFunctionParams | None, cfg: PlannerConfig, random_values=None,
           chunk: int = 25) -> PlanResult:
    """Run the budgeted search and extract the goal leaf."""
    warm_up()
    start = time.perf_counter()
    tree = build_tree(root_state, grid, human_poses, q, cfg, random_values)
    remaining = cfg.expansion_budget
    while remaining > 0:
        step = min(chunk, remaining)
        before = tree.iterations
        more = tree.run(step)
        remaining -= tree.iterations - before
        if not more:
            break
        if cfg.time_budget is not None and time.perf_counter() - start >= cfg.time_budget:
            break
    if not tree.node(0).children:
        raise PlanningInfeasibleError("every first move collides")
    goal = tree.best_leaf()
    path = tree.path_to(goal)
    return PlanResult(
        goal=tree.pose(goal),
        path=[tree.pose(i) for i in path],
        actions=[ACTIONS[int(tree.action[i])] for i in path],
        tree=tree,
        latency=time.perf_counter() - start,
    )


def plan_goal(root_state: WorldState, grid: OccupancyGrid, fit: LinearMotionFit,
              q: QFunctionParams, cfg: PlannerConfig | None = None) -> Pose2D:
    """Navigational goal for the robot from the current joint state and human motion fit."""
    cfg = cfg or PlannerConfig()
    return search(root_state, grid, human_poses_for(root_state.human, fit, cfg), q, cfg).goal
