"""Experience generation for the value network.

Each episode applies one fixed robot action for ``n`` steps while a sampled
human walks a straight line, a constant turn or a wave; the label is the
discounted return of the per-step follow-ahead rewards.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError
from .geometry import ACTION_PSI, STEP_LENGTH, Observation, RobotAction
from .reward import DEFAULT_REWARD, RewardConfig, step_reward_batch

DT = 0.5
# one step per episode: labels are the next-step reward (see notes on horizon)
EPISODE_LENGTH = 1
HUMAN_KINDS = ("straight", "turn", "wave")


@dataclass(frozen=True)
class ExperienceTuple:
    o: Observation
    a: RobotAction
    R: float
    o_next: Observation


@dataclass(eq=False)
class ExperienceBatch:
    """Column-oriented experience tuples; observations are robot-frame."""

    o: np.ndarray
    a: np.ndarray
    R: np.ndarray
    o_next: np.ndarray
    episode: np.ndarray
    offset: np.ndarray

    def __len__(self):
        return len(self.R)

    def __getitem__(self, i) -> ExperienceTuple:
        return ExperienceTuple(
            Observation(*map(float, self.o[i])),
            RobotAction(int(ACTION_PSI[int(self.a[i])])),
            float(self.R[i]),
            Observation(*map(float, self.o_next[i])),
        )

    def to_bytes(self) -> bytes:
        return b"".join(
            np.ascontiguousarray(x).tobytes()
            for x in (self.o, self.a, self.R, self.o_next, self.episode, self.offset)
        )


@dataclass(frozen=True)
class TrajectorySampler:
    """Random human paths and robot start poses relative to the human."""

    speed_range: tuple[float, float] = (0.2, 0.75)
    turn_rate_max: float = 0.6
    wave_amplitude_max: float = 0.8
    wave_period_range: tuple[float, float] = (2.0, 8.0)
    kinds: tuple[str, ...] = HUMAN_KINDS
    distance_range: tuple[float, float] = (0.3, 5.5)
    frontal_fraction: float = 0.5
    substeps: int = 10

    def human_paths(self, rng: np.random.Generator, n_episodes: int, n_steps: int, dt: float):
        """Human poses (x, y, theta_deg) at ``n_steps + 1`` ticks, shape (E, n+1, 3)."""
        kind = rng.integers(0, len(self.kinds), size=n_episodes)
        speed = rng.uniform(*self.speed_range, size=n_episodes)
        heading0 = rng.uniform(-np.pi, np.pi, size=n_episodes)
        turn = rng.uniform(-self.turn_rate_max, self.turn_rate_max, size=n_episodes)
        amp = rng.uniform(0.0, self.wave_amplitude_max, size=n_episodes)
        period = rng.uniform(*self.wave_period_range, size=n_episodes)
        phase = rng.uniform(0.0, 2 * np.pi, size=n_episodes)
        names = np.array(self.kinds)[kind]

        h = dt / self.substeps
        out = np.zeros((n_episodes, n_steps + 1, 3))
        x = np.zeros(n_episodes)
        y = np.zeros(n_episodes)
        th = heading0.copy()
        out[:, 0, 2] = np.degrees(th)
        for k in range(n_steps * self.substeps):
            t = (k + 0.5) * h
            omega = np.where(names == "turn", turn, 0.0)
            omega = np.where(names == "wave", amp * np.sin(2 * np.pi * t / period + phase), omega)
            mid = th + 0.5 * omega * h
            x += speed * np.cos(mid) * h
            y += speed * np.sin(mid) * h
            th = th + omega * h
            if (k + 1) % self.substeps == 0:
                j = (k + 1) // self.substeps
                out[:, j, 0] = x
                out[:, j, 1] = y
                out[:, j, 2] = np.degrees(th)
        return out

    def robot_starts(self, rng: np.random.Generator, human0: np.ndarray) -> np.ndarray:
        """Robot poses (x, y, theta_deg) around the initial human poses."""
        e = len(human0)
        dist = rng.uniform(*self.distance_range, size=e)
        frontal = rng.random(e) < self.frontal_fraction
        bearing = np.where(frontal, rng.uniform(-60, 60, size=e), rng.uniform(-180, 180, size=e))
        rel_heading = np.where(frontal, rng.uniform(-60, 60, size=e), rng.uniform(-180, 180, size=e))
        b = np.radians(human0[:, 2] + bearing)
        return np.column_stack(
            [human0[:, 0] + dist * np.cos(b), human0[:, 1] + dist * np.sin(b), human0[:, 2] + rel_heading]
        )


def robot_rollout(robot0: np.ndarray, action_idx: np.ndarray, n_steps: int, d: float = STEP_LENGTH):
    """Robot poses under a fixed action per episode, shape (E, n+1, 3)."""
    psi = np.asarray(ACTION_PSI)[action_idx]
    out = np.empty((len(robot0), n_steps + 1, 3))
    out[:, 0] = robot0
    for k in range(n_steps):
        heading = np.radians(out[:, k, 2] + psi)
        out[:, k + 1, 0] = out[:, k, 0] + d * np.cos(heading)
        out[:, k + 1, 1] = out[:, k, 1] + d * np.sin(heading)
        out[:, k + 1, 2] = out[:, k, 2] + psi
    return out


def robot_frame(robot: np.ndarray, human: np.ndarray) -> np.ndarray:
    """Vectorized robot-frame observation of the human, angles wrapped to (-180, 180]."""
    t = np.radians(robot[..., 2])
    c, s = np.cos(t), np.sin(t)
    dx = human[..., 0] - robot[..., 0]
    dy = human[..., 1] - robot[..., 1]
    dth = np.fmod(human[..., 2] - robot[..., 2], 360.0)
    dth = np.where(dth > 180.0, dth - 360.0, dth)
    dth = np.where(dth <= -180.0, dth + 360.0, dth)
    return np.stack([c * dx + s * dy, -s * dx + c * dy, dth], axis=-1)


def episode_rewards(robot: np.ndarray, human: np.ndarray, cfg: RewardConfig = DEFAULT_REWARD):
    """Per-step rewards for ticks 1..n, shape (E, n)."""
    return step_reward_batch(
        robot[:, 1:, 0], robot[:, 1:, 1], human[:, 1:, 0], human[:, 1:, 1], human[:, 1:, 2], cfg
    )


def discounted_suffix_returns(rewards: np.ndarray, gamma: float) -> np.ndarray:
    """``R[:, j] = sum_{i>=j} gamma**(i-j) * r[:, i]`` for every start offset j."""
    out = np.empty_like(rewards)
    acc = np.zeros(rewards.shape[0])
    for j in range(rewards.shape[1] - 1, -1, -1):
        acc = rewards[:, j] + gamma * acc
        out[:, j] = acc
    return out


def build_experience(robot, human, action_idx, gamma=DEFAULT_REWARD.gamma, offsets=1,
                     cfg: RewardConfig = DEFAULT_REWARD) -> ExperienceBatch:
    """Experience tuples from explicit episode rollouts ``(E, n+1, 3)``."""
    n_steps = robot.shape[1] - 1
    if not 1 <= offsets <= n_steps:
        raise InvalidArgumentError(f"offsets must lie in [1, {n_steps}]")
    rewards = episode_rewards(robot, human, cfg)
    returns = discounted_suffix_returns(rewards, gamma)
    obs = robot_frame(robot, human)
    e = robot.shape[0]
    # episode-major ordering: all offsets of episode 0, then episode 1, ...
    ep = np.repeat(np.arange(e), offsets)
    off = np.tile(np.arange(offsets), e)
    return ExperienceBatch(
        o=obs[ep, off],
        a=np.asarray(action_idx, dtype=np.int64)[ep],
        R=returns[ep, off],
        o_next=obs[ep, off + 1],
        episode=ep,
        offset=off,
    )


def generate_dataset(
    n_tuples: int,
    episode_length: int = EPISODE_LENGTH,
    sampler: TrajectorySampler | None = None,
    seed: int = 0,
    offsets: int = 1,
    gamma: float = DEFAULT_REWARD.gamma,
    dt: float = DT,
) -> ExperienceBatch:
    """Sample episodes and label each (episode, start offset) with its return."""
    if n_tuples <= 0:
        raise InvalidArgumentError("n_tuples must be positive")
    if episode_length <= 0:
        raise InvalidArgumentError("episode_length must be positive")
    sampler = sampler or TrajectorySampler()
    rng = np.random.default_rng(seed)
    n_episodes = -(-n_tuples // offsets)
    human = sampler.human_paths(rng, n_episodes, episode_length, dt)
    robot0 = sampler.robot_starts(rng, human[:, 0])
    actions = rng.integers(0, len(ACTION_PSI), size=n_episodes)
    robot = robot_rollout(robot0, actions, episode_length)
    batch = build_experience(robot, human, actions, gamma, offsets)
    if len(batch) > n_tuples:
        batch = ExperienceBatch(*(x[:n_tuples] for x in (
            batch.o, batch.a, batch.R, batch.o_next, batch.episode, batch.offset)))
    return batch
