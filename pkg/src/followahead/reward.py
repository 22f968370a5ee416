"""Follow-ahead reward shaping and discounted returns."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidArgumentError
from .geometry import WorldState, bearing_alpha, human_robot_distance


@dataclass(frozen=True)
class RewardConfig:
    gamma: float = 0.99
    d_lo: float = 1.0
    d_hi: float = 2.0
    d_near: float = 0.5
    d_far: float = 5.0
    alpha_scale: float = 45.0

    def __post_init__(self):
        if not 0 < self.d_near < self.d_lo < self.d_hi < self.d_far:
            raise InvalidArgumentError("need 0 < d_near < d_lo < d_hi < d_far")
        if not 0 < self.gamma < 1:
            raise InvalidArgumentError("gamma must lie in (0, 1)")
        if not self.alpha_scale > 0:
            raise InvalidArgumentError("alpha_scale must be positive")


DEFAULT_REWARD = RewardConfig()


def distance_reward(d_h: float, cfg: RewardConfig = DEFAULT_REWARD) -> float:
    """Zero inside [d_lo, d_hi], linear ramps outside, -1 beyond the near/far cutoffs."""
    if not d_h >= 0:
        raise InvalidArgumentError(f"distance must be non-negative, got {d_h!r}")
    if cfg.d_near < d_h < cfg.d_lo:
        return -(cfg.d_lo - d_h)
    if cfg.d_lo <= d_h <= cfg.d_hi:
        return 0.0
    if cfg.d_hi < d_h < cfg.d_far:
        return -0.25 * (d_h - cfg.d_lo)
    return -1.0


def angle_reward(alpha: float, cfg: RewardConfig = DEFAULT_REWARD) -> float:
    if not 0.0 <= alpha <= 180.0:
        raise InvalidArgumentError(f"alpha must lie in [0, 180], got {alpha!r}")
    return (cfg.alpha_scale - alpha) / cfg.alpha_scale


def step_reward(state: WorldState, cfg: RewardConfig = DEFAULT_REWARD) -> float:
    r = distance_reward(human_robot_distance(state), cfg) + angle_reward(bearing_alpha(state), cfg)
    return max(r, -1.0)


def episode_return(rewards: Sequence[float], gamma: float = DEFAULT_REWARD.gamma) -> float:
    """Sum of ``gamma**i * r_i``."""
    if len(rewards) == 0:
        raise InvalidArgumentError("reward sequence is empty")
    if not 0 < gamma < 1:
        raise InvalidArgumentError("gamma must lie in (0, 1)")
    total = 0.0
    for r in reversed(rewards):
        total = r + gamma * total
    return total


def discount_sum(gamma: float, n: int) -> float:
    """``sum(gamma**i for i in range(n))``: the return of ``n`` rewards of 1."""
    return (1.0 - gamma**n) / (1.0 - gamma)


def step_reward_batch(rx, ry, hx, hy, htheta, cfg: RewardConfig = DEFAULT_REWARD) -> np.ndarray:
    """Vectorized :func:`step_reward` for arrays of positions and human headings (degrees).

    Coincident positions get alpha = 0; their distance term is already -1.
    """
    vx = np.asarray(rx, dtype=float) - hx
    vy = np.asarray(ry, dtype=float) - hy
    d = np.hypot(vx, vy)
    t = np.radians(htheta)
    hcx, hcy = np.cos(t), np.sin(t)
    alpha = np.degrees(np.arctan2(np.abs(hcx * vy - hcy * vx), hcx * vx + hcy * vy))
    rd = np.full_like(d, -1.0)
    near = (d > cfg.d_near) & (d < cfg.d_lo)
    band = (d >= cfg.d_lo) & (d <= cfg.d_hi)
    far = (d > cfg.d_hi) & (d < cfg.d_far)
    rd[near] = -(cfg.d_lo - d[near])
    rd[band] = 0.0
    rd[far] = -0.25 * (d[far] - cfg.d_lo)
    return np.maximum(rd + (cfg.alpha_scale - alpha) / cfg.alpha_scale, -1.0)


def reward_from_observation(obs, cfg: RewardConfig = DEFAULT_REWARD) -> np.ndarray:
    """Step reward computed from robot-frame observations ``(dx, dy, dtheta)``.

    In the robot frame the robot sits at the origin and the human heading is
    ``dtheta``, so the reward needs nothing else.
    """
    obs = np.atleast_2d(np.asarray(obs, dtype=float))
    return step_reward_batch(0.0, 0.0, obs[:, 0], obs[:, 1], obs[:, 2], cfg)

