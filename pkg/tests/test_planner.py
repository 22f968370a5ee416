import math
import time

import numpy as np
import pytest

from followahead.errors import InvalidArgumentError, PlanningInfeasibleError
from followahead.geometry import ACTIONS, Pose2D, RobotAction, WorldState, egocentric_observation, step_robot
from followahead.grid import OccupancyGrid, is_occluded
from followahead.planner import (
    PlannerConfig,
    build_tree,
    expand_node,
    human_poses_for,
    plan_goal,
    search,
    ucb,
)
from followahead.predictor import LinearMotionFit, predict
from followahead.qnet import QFunctionParams, q_forward
from followahead.reward import step_reward

from oracle import best_leaf_value, node_values, rollout_argmax

EXHAUST = dict(expansion_budget=400, time_budget=None)


def still(pose):
    return LinearMotionFit(pose.xy, (0.0, 0.0), pose.theta)


def tree_for(state, grid, q, horizon=6, fit=None, **cfg):
    cfg = PlannerConfig(horizon_steps=horizon, **cfg)
    humans = human_poses_for(state.human, fit or still(state.human), cfg)
    return build_tree(state, grid, humans, q, cfg), humans


def test_ucb_examples():
    assert ucb(0.5, 1, 2, 1.4) == pytest.approx(0.5 + 1.4 * math.sqrt(math.log(2)), abs=1e-9)
    assert ucb(-2.0, 4, 10, 0.0) == pytest.approx(-0.5, abs=1e-12)
    assert ucb(3.0, 0, 5, 1.4) == math.inf
    assert ucb(1.0, 2, 7, 1.4) == ucb(1.0, 2, 7, 1.4)


def test_config_validation():
    with pytest.raises(InvalidArgumentError):
        PlannerConfig(expansion_budget=0)
    with pytest.raises(InvalidArgumentError):
        PlannerConfig(horizon_steps=0)


def test_root_expansion_on_empty_map(open_grid, trained_params):
    state = WorldState(Pose2D(0, 0, 0), Pose2D(-1.5, 0, 0))
    tree, _ = tree_for(state, open_grid, trained_params)
    kids = expand_node(tree, 0)
    assert [k.action_from_parent for k in kids] == list(ACTIONS)
    for k in kids:
        assert k.depth == 1
        assert k.state.robot == step_robot(state.robot, k.action_from_parent)


def test_collision_prunes_straight_child(open_grid, trained_params):
    grid = open_grid.with_obstacles([(0.25, -0.05, 0.35, 0.05)])
    state = WorldState(Pose2D(0, 0, 0), Pose2D(-2.0, 0, 0))
    tree, _ = tree_for(state, grid, trained_params, inflation=0.1)
    kids = expand_node(tree, 0)
    assert [k.action_from_parent for k in kids] == [RobotAction.CW, RobotAction.CCW]


def test_occluded_child_gets_minus_one(open_grid):
    # a wall segment between the CCW child and the human only
    robot = Pose2D(0, 0, 0)
    ccw = step_robot(robot, RobotAction.CCW)
    grid = open_grid.with_obstacles([(-1.6, 0.18, -1.4, 0.5)])
    human = Pose2D(-3.0, ccw.y, 0)
    assert is_occluded(grid, ccw.xy, human.xy)
    q = QFunctionParams.initialize(seed=0)
    tree, _ = tree_for(WorldState(robot, human), grid, q, inflation=0.1)
    kids = {k.action_from_parent: k for k in expand_node(tree, 0)}
    assert kids[RobotAction.CCW].mean_value == -1.0
    for a in (RobotAction.CW, RobotAction.STRAIGHT):
        assert not is_occluded(grid, kids[a].state.robot.xy, human.xy)
        assert kids[a].mean_value != -1.0


def test_children_valued_by_parent_observation(open_grid):
    q = QFunctionParams.initialize(seed=2)
    state = WorldState(Pose2D(0.3, -0.2, 20), Pose2D(1.0, 1.0, 150))
    tree, _ = tree_for(state, open_grid, q)
    qv = q_forward(q, egocentric_observation(state))
    for k in expand_node(tree, 0):
        assert k.w_total == pytest.approx(np.clip(qv[k.action_from_parent.index], -1, 1), abs=1e-12)


def test_horizon_one_is_three_way_argmax(open_grid):
    rng = np.random.default_rng(4)
    for seed in range(20):
        q = QFunctionParams.initialize(seed=seed)
        state = WorldState(Pose2D(*rng.uniform(-2, 2, 2), rng.uniform(-180, 180)),
                           Pose2D(*rng.uniform(-2, 2, 2), rng.uniform(-180, 180)))
        cfg = PlannerConfig(horizon_steps=1, **EXHAUST)
        goal = plan_goal(state, open_grid, still(state.human), q, cfg)
        qv = np.clip(q_forward(q, egocentric_observation(state)), -1, 1)
        assert goal == step_robot(state.robot, ACTIONS[int(np.argmax(qv))])


def test_wall_ahead_forces_turn(open_grid, trained_params):
    grid = open_grid.with_obstacles([(0.2, -0.2, 0.5, 0.2)])
    state = WorldState(Pose2D(-0.3, 0, 0), Pose2D(-1.5, 0, 0))
    result = search(state, grid, human_poses_for(state.human, still(state.human), PlannerConfig()),
                    trained_params, PlannerConfig(inflation=0.2))
    assert result.actions[0] != RobotAction.STRAIGHT


def test_open_field_goal_matches_rollout_oracle(open_grid, trained_params):
    fit = LinearMotionFit((0.0, 0.0), (0.6, 0.0), 0.0)
    state = WorldState(Pose2D(1.5, 0, 0), Pose2D(0, 0, 0))
    _, oracle_pose, seq = rollout_argmax(state, lambda k: predict(fit, 0.5 * k), 6, step_reward)
    assert (oracle_pose.x, oracle_pose.y) == pytest.approx((3.3, 0.0), abs=1e-9)
    goal = plan_goal(state, open_grid, fit, trained_params)
    assert math.hypot(goal.x - oracle_pose.x, goal.y - oracle_pose.y) <= 0.2


def random_instance(rng):
    grid = OccupancyGrid.empty(32, 32, 0.25, (-4.0, -4.0))
    boxes = []
    for _ in range(rng.integers(0, 4)):
        x, y = rng.uniform(-3, 3, 2)
        w, h = rng.uniform(0.2, 1.0, 2)
        boxes.append((x, y, x + w, y + h))
    grid = grid.with_obstacles(boxes)
    while True:
        robot = Pose2D(*rng.uniform(-1.5, 1.5, 2), rng.uniform(-180, 180))
        human = Pose2D(*rng.uniform(-2, 2, 2), rng.uniform(-180, 180))
        if not grid.cells[grid.cell_of(*robot.xy)[::-1]] and not grid.cells[grid.cell_of(*human.xy)[::-1]]:
            break
    v = rng.uniform(-0.4, 0.4, 2)
    fit = LinearMotionFit(human.xy, tuple(v), human.theta)
    return grid, WorldState(robot, human), fit


def test_oracle_equivalence_small_horizon(trained_params):
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    checked = 0
    for i in range(80):
        grid, state, fit = random_instance(rng)
        horizon = 1 + i % 3
        q = trained_params if i % 2 else QFunctionParams.initialize(seed=i)
        cfg = PlannerConfig(horizon_steps=horizon, inflation=0.2, **EXHAUST)
        humans = human_poses_for(state.human, fit, cfg)
        try:
            result = search(state, grid, humans, q, cfg)
        except PlanningInfeasibleError:
            continue
        want = best_leaf_value(state, grid, humans, q, horizon, cfg.inflation)
        tree = result.tree
        leaf = tree.path_to(tree.best_leaf())[-1]
        got = tree.w[leaf] / tree.n[leaf]
        assert got == pytest.approx(want, abs=1e-12)
        # exhausted: every surviving node of the enumeration is in the tree
        assert tree.size - 1 == len(node_values(state, grid, humans, q, horizon, cfg.inflation))
        checked += 1
    assert checked >= 50
    assert time.perf_counter() - t0 < 30


def test_tree_invariants(trained_params):
    rng = np.random.default_rng(9)
    for _ in range(10):
        grid, state, fit = random_instance(rng)
        cfg = PlannerConfig(time_budget=None, inflation=0.2)
        try:
            result = search(state, grid, human_poses_for(state.human, fit, cfg), trained_params, cfg)
        except PlanningInfeasibleError:
            continue
        tree = result.tree
        nodes = tree.nodes()
        for nd in nodes:
            own = 1 if nd.index > 0 else 0
            if nd.children:
                dead = 0
            else:
                dead = 1 if nd.status == 2 else 0
            assert nd.n_visits == own + dead + sum(nodes[c].n_visits for c in nd.children)
            if nd.index:
                assert -1.0 - 1e-12 <= nd.mean_value <= 1.0 + 1e-12
                parent = nodes[nd.parent]
                assert nd.depth == parent.depth + 1 <= cfg.horizon_steps
                assert nd.state.robot == step_robot(parent.state.robot, nd.action_from_parent)
        # no pruned (colliding) node is present anywhere
        from followahead.grid import is_collision
        assert not any(is_collision(grid, nd.state.robot.xy, cfg.inflation) for nd in nodes[1:])
        # replay the action list from the root
        p = state.robot
        for a in result.actions:
            p = step_robot(p, a)
        assert p == result.goal
        assert 1 <= len(result.actions) <= cfg.horizon_steps


def test_extraction_depends_only_on_means(trained_params, open_grid):
    state = WorldState(Pose2D(0, 0, 30), Pose2D(-1, 0.5, 0))
    tree, _ = tree_for(state, open_grid, trained_params, time_budget=None)
    tree.run(200)
    before = tree.best_leaf()
    tree.w[:tree.size] *= 3
    tree.n[:tree.size] *= 3
    assert tree.best_leaf() == before


def test_deterministic(trained_params):
    rng = np.random.default_rng(1)
    grid, state, fit = random_instance(rng)
    cfg = PlannerConfig(time_budget=None)
    a = plan_goal(state, grid, fit, trained_params, cfg)
    b = plan_goal(state, grid, fit, trained_params, cfg)
    assert a == b


def test_root_in_collision(open_grid, trained_params):
    grid = open_grid.with_obstacles([(-0.2, -0.2, 0.2, 0.2)])
    with pytest.raises(PlanningInfeasibleError):
        plan_goal(WorldState(Pose2D(0, 0, 0), Pose2D(2, 0, 0)), grid, still(Pose2D(2, 0, 0)), trained_params)


def test_all_first_moves_pruned(trained_params):
    grid = OccupancyGrid.empty(40, 40, 0.1, (-2, -2)).with_obstacles(
        [(-2, -2, 2, -0.2), (-2, 0.2, 2, 2), (-2, -2, -0.2, 2), (0.2, -2, 2, 2)])
    state = WorldState(Pose2D(0, 0, 0), Pose2D(0.1, 0.0, 0))
    with pytest.raises(PlanningInfeasibleError):
        plan_goal(state, grid, still(state.human), trained_params, PlannerConfig(inflation=0.05))


def test_random_mode_requires_values(open_grid):
    cfg = PlannerConfig()
    humans = [Pose2D(0, 0)] * 7
    with pytest.raises(InvalidArgumentError):
        build_tree(WorldState(Pose2D(1, 0), Pose2D(0, 0)), open_grid, humans, None, cfg)
