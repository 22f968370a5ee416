"""Follow-ahead planning: tree search over robot moves valued by a learned Q-function."""

from .errors import (
    ConfigError,
    DegenerateGeometryError,
    InvalidArgumentError,
    NotReadyError,
    ParseError,
    PlanningInfeasibleError,
    TrainingError,
)
from .geometry import (
    ACTIONS,
    Observation,
    Pose2D,
    RobotAction,
    WorldState,
    bearing_alpha,
    egocentric_observation,
    human_robot_distance,
    normalize_angle,
    relative_observation,
    signed_bearing,
    step_robot,
)
from .grid import OccupancyGrid, is_collision, is_occluded, load_map, loads_map, supercover_cells
from .planner import PlannerConfig, plan_goal, search, ucb
from .predictor import LinearMotionFit, PoseHistory, fit_line, predict
from .qnet import QFunctionParams, TrainConfig, load_params, q_forward, save_params, train
from .reward import DEFAULT_REWARD, RewardConfig, episode_return, step_reward
from .scenario import ScenarioConfig, load_scenario, scripted_human_pose, shipped_scenario
from .sim import compare_methods, robot_controller, run_scenario, write_trace

__version__ = "0.1.0"

__all__ = [
    "ACTIONS",
    "ConfigError",
    "DEFAULT_REWARD",
    "DegenerateGeometryError",
    "InvalidArgumentError",
    "LinearMotionFit",
    "NotReadyError",
    "Observation",
    "OccupancyGrid",
    "ParseError",
    "PlannerConfig",
    "PlanningInfeasibleError",
    "Pose2D",
    "PoseHistory",
    "QFunctionParams",
    "RewardConfig",
    "RobotAction",
    "ScenarioConfig",
    "TrainConfig",
    "TrainingError",
    "WorldState",
    "bearing_alpha",
    "compare_methods",
    "egocentric_observation",
    "episode_return",
    "fit_line",
    "human_robot_distance",
    "is_collision",
    "is_occluded",
    "load_map",
    "load_params",
    "load_scenario",
    "loads_map",
    "normalize_angle",
    "plan_goal",
    "predict",
    "q_forward",
    "relative_observation",
    "robot_controller",
    "run_scenario",
    "save_params",
    "scripted_human_pose",
    "search",
    "shipped_scenario",
    "signed_bearing",
    "step_reward",
    "step_robot",
    "supercover_cells",
    "train",
    "ucb",
    "write_trace",
]
