"""Action-value network: a small tanh MLP mapping a robot-frame observation to
one estimated return per action, with training and a text parameter format.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._jit import njit
from .errors import InvalidArgumentError, ParseError, TrainingError
from .geometry import Observation
from .reward import DEFAULT_REWARD, discount_sum, reward_from_observation

FORMAT_VERSION = "QPARAMS v1"
N_ACTIONS = 3
# dx, dy scaled by the far cutoff (5 m), dtheta by 180 degrees
DEFAULT_INPUT_SCALE = (0.2, 0.2, 1.0 / 180.0)
ACTIVATIONS = ("tanh",)


@dataclass(eq=False)
class QFunctionParams:
    sizes: tuple[int, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    activation: str = "tanh"
    input_offset: np.ndarray = field(default_factory=lambda: np.zeros(3))
    input_scale: np.ndarray = field(default_factory=lambda: np.array(DEFAULT_INPUT_SCALE))
    return_scale: float = 1.0

    def __post_init__(self):
        self.sizes = tuple(int(s) for s in self.sizes)
        if len(self.sizes) < 2 or self.sizes[0] != 3 or self.sizes[-1] != N_ACTIONS:
            raise InvalidArgumentError(f"layer sizes must run 3 -> ... -> {N_ACTIONS}, got {self.sizes}")
        if self.activation not in ACTIVATIONS:
            raise InvalidArgumentError(f"unknown activation {self.activation!r}")
        if len(self.weights) != len(self.sizes) - 1 or len(self.biases) != len(self.sizes) - 1:
            raise InvalidArgumentError("need one weight matrix and bias per layer")
        self.weights = [np.ascontiguousarray(w, dtype=np.float64) for w in self.weights]
        self.biases = [np.ascontiguousarray(b, dtype=np.float64) for b in self.biases]
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (self.sizes[i + 1], self.sizes[i]) or b.shape != (self.sizes[i + 1],):
                raise InvalidArgumentError(f"layer {i}: shape {w.shape}/{b.shape} does not match sizes")
        self.input_offset = np.asarray(self.input_offset, dtype=np.float64).reshape(3)
        self.input_scale = np.asarray(self.input_scale, dtype=np.float64).reshape(3)
        self.return_scale = float(self.return_scale)
        if not self.return_scale > 0:
            raise InvalidArgumentError("return_scale must be positive")

    @classmethod
    def zeros(cls, hidden=(64, 64), **kw) -> "QFunctionParams":
        sizes = (3, *hidden, N_ACTIONS)
        return cls(
            sizes,
            [np.zeros((o, i)) for i, o in zip(sizes[:-1], sizes[1:])],
            [np.zeros(o) for o in sizes[1:]],
            **kw,
        )

    @classmethod
    def initialize(cls, hidden=(64, 64), seed=0, **kw) -> "QFunctionParams":
        """Glorot-uniform weights, zero biases."""
        rng = np.random.default_rng(seed)
        sizes = (3, *hidden, N_ACTIONS)
        weights = []
        for i, o in zip(sizes[:-1], sizes[1:]):
            limit = math.sqrt(6.0 / (i + o))
            weights.append(rng.uniform(-limit, limit, size=(o, i)))
        return cls(sizes, weights, [np.zeros(o) for o in sizes[1:]], **kw)

    def copy(self) -> "QFunctionParams":
        return QFunctionParams(
            self.sizes,
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
            self.activation,
            self.input_offset.copy(),
            self.input_scale.copy(),
            self.return_scale,
        )

    def __eq__(self, other):
        if not isinstance(other, QFunctionParams):
            return NotImplemented
        return (
            self.sizes == other.sizes
            and self.activation == other.activation
            and self.return_scale == other.return_scale
            and np.array_equal(self.input_offset, other.input_offset)
            and np.array_equal(self.input_scale, other.input_scale)
            and all(np.array_equal(a, b) for a, b in zip(self.weights, other.weights))
            and all(np.array_equal(a, b) for a, b in zip(self.biases, other.biases))
        )

    def is_finite(self) -> bool:
        return all(np.isfinite(a).all() for a in (*self.weights, *self.biases))

    def flat(self) -> np.ndarray:
        """All weights then biases per layer, row-major, for the compiled forward pass."""
        parts = []
        for w, b in zip(self.weights, self.biases):
            parts.append(w.ravel())
            parts.append(b)
        return np.concatenate(parts)

    def normalize(self, obs) -> np.ndarray:
        return (np.asarray(obs, dtype=np.float64) - self.input_offset) * self.input_scale


@njit
def mlp_forward_flat(flat, sizes, x, buf_a, buf_b, out):
    """tanh MLP on one normalized input; linear output layer."""
    n_layers = sizes.shape[0] - 1
    for i in range(sizes[0]):
        buf_a[i] = x[i]
    pos = 0
    for layer in range(n_layers):
        n_in = sizes[layer]
        n_out = sizes[layer + 1]
        bias0 = pos + n_in * n_out
        for j in range(n_out):
            acc = flat[bias0 + j]
            row = pos + j * n_in
            for i in range(n_in):
                acc += flat[row + i] * buf_a[i]
            buf_b[j] = acc if layer == n_layers - 1 else math.tanh(acc)
        pos = bias0 + n_out
        for j in range(n_out):
            buf_a[j] = buf_b[j]
    for j in range(sizes[n_layers]):
        out[j] = buf_a[j]


def _forward_batch(params: QFunctionParams, xn: np.ndarray):
    """Forward pass on normalized inputs (N, 3); returns activations per layer."""
    acts = [xn]
    h = xn
    last = len(params.weights) - 1
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        z = h @ w.T + b
        h = z if i == last else np.tanh(z)
        acts.append(h)
    return acts


def _as_obs_array(o) -> np.ndarray:
    if isinstance(o, Observation):
        o = o.as_tuple()
    arr = np.asarray(o, dtype=np.float64)
    if not np.isfinite(arr).all():
        raise InvalidArgumentError("observation must be finite")
    return arr


def q_forward(params: QFunctionParams, o) -> np.ndarray:
    """Estimated return for each action, in action enumeration order.

    Accepts one observation (``Observation`` or length-3) or an (N, 3) batch.
    """
    arr = _as_obs_array(o)
    single = arr.ndim == 1
    xn = params.normalize(np.atleast_2d(arr))
    out = _forward_batch(params, xn)[-1] * params.return_scale
    return out[0] if single else out


def q_values_normalized(params: QFunctionParams, o) -> np.ndarray:
    """``q_forward`` divided by the return scale: per-step average reward units."""
    return q_forward(params, o) / params.return_scale


def loss_and_grads(params: QFunctionParams, obs, actions, targets):
    """Mean squared error of the chosen-action output against normalized targets.

    ``targets`` are in network units (returns divided by ``return_scale``).
    Returns ``(loss, grad_weights, grad_biases)``.
    """
    xn = params.normalize(obs)
    acts = _forward_batch(params, xn)
    n = xn.shape[0]
    idx = np.arange(n)
    pred = acts[-1][idx, actions]
    err = pred - targets
    loss = float(np.mean(err * err))
    delta = np.zeros_like(acts[-1])
    delta[idx, actions] = 2.0 * err / n
    gw = [None] * len(params.weights)
    gb = [None] * len(params.biases)
    for layer in range(len(params.weights) - 1, -1, -1):
        gw[layer] = delta.T @ acts[layer]
        gb[layer] = delta.sum(axis=0)
        if layer > 0:
            delta = (delta @ params.weights[layer]) * (1.0 - acts[layer] ** 2)
    return loss, gw, gb


@dataclass
class TrainConfig:
    mode: str = "mc-regression"
    hidden: tuple[int, ...] = (64, 64)
    epochs: int = 12
    batch_size: int = 256
    lr: float = 2e-3
    lr_final: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    gamma: float = DEFAULT_REWARD.gamma
    target_sync: int = 500
    episode_length: int = 1

    def __post_init__(self):
        if self.mode in ("mc", "mc-regression"):
            self.mode = "mc-regression"
        elif self.mode != "ddqn":
            raise InvalidArgumentError(f"unknown training mode {self.mode!r}")
        self.hidden = tuple(int(h) for h in self.hidden)


@dataclass
class TrainResult:
    params: QFunctionParams
    loss_history: np.ndarray


class _Adam:
    def __init__(self, params: QFunctionParams, cfg: TrainConfig):
        self.cfg = cfg
        self.t = 0
        self.m = [np.zeros_like(a) for a in (*params.weights, *params.biases)]
        self.v = [np.zeros_like(a) for a in (*params.weights, *params.biases)]

    def step(self, params: QFunctionParams, gw, gb, lr):
        c = self.cfg
        self.t += 1
        tensors = (*params.weights, *params.biases)
        grads = (*gw, *gb)
        bc1 = 1.0 - c.beta1**self.t
        bc2 = 1.0 - c.beta2**self.t
        for p, g, m, v in zip(tensors, grads, self.m, self.v):
            m *= c.beta1
            m += (1.0 - c.beta1) * g
            v *= c.beta2
            v += (1.0 - c.beta2) * g * g
            p -= lr * (m / bc1) / (np.sqrt(v / bc2) + c.eps)


def train(dataset, cfg: TrainConfig | None = None) -> TrainResult:
    """Fit Q on an experience batch.

    ``mc-regression`` regresses Q(o, a) on the stored returns R.  ``ddqn``
    bootstraps from the one-step reward recovered from o' with a periodically
    synced target network selecting actions by the online network.
    """
    cfg = cfg or TrainConfig()
    obs, actions, returns, next_obs = dataset.o, dataset.a, dataset.R, dataset.o_next
    n = len(returns)
    if n == 0:
        raise InvalidArgumentError("dataset is empty")
    if cfg.mode == "mc-regression":
        scale = discount_sum(cfg.gamma, cfg.episode_length)
    else:
        scale = 1.0 / (1.0 - cfg.gamma)
    params = QFunctionParams.initialize(cfg.hidden, seed=cfg.seed, return_scale=scale)
    rng = np.random.default_rng(cfg.seed + 1)
    opt = _Adam(params, cfg)

    if cfg.mode == "ddqn":
        step_rewards = reward_from_observation(next_obs)
        target = params.copy()
    else:
        mc_targets = returns / scale

    batch = min(cfg.batch_size, n)
    steps_per_epoch = max(1, n // batch)
    total = cfg.epochs * steps_per_epoch
    history = np.empty(total)
    step = 0
    for _ in range(cfg.epochs):
        perm = rng.permutation(n)
        for k in range(steps_per_epoch):
            idx = perm[k * batch:(k + 1) * batch]
            if cfg.mode == "ddqn":
                nx = next_obs[idx]
                a_star = np.argmax(q_forward(params, nx), axis=1)
                q_next = q_forward(target, nx)[np.arange(len(idx)), a_star]
                y = (step_rewards[idx] + cfg.gamma * q_next) / scale
            else:
                y = mc_targets[idx]
            # overflow shows up as a non-finite loss, reported below
            with np.errstate(over="ignore", invalid="ignore"):
                loss, gw, gb = loss_and_grads(params, obs[idx], actions[idx], y)
            if not math.isfinite(loss):
                raise TrainingError("loss became non-finite", step=step)
            frac = step / max(total - 1, 1)
            lr = cfg.lr_final + 0.5 * (cfg.lr - cfg.lr_final) * (1.0 + math.cos(math.pi * frac))
            opt.step(params, gw, gb, lr)
            history[step] = loss
            step += 1
            if cfg.mode == "ddqn" and step % cfg.target_sync == 0:
                target = params.copy()
    if not params.is_finite():
        raise TrainingError("parameters became non-finite", step=step)
    return TrainResult(params, history)


def dataset_loss(params: QFunctionParams, dataset) -> float:
    """Mean squared error over a whole dataset, in network units."""
    y = dataset.R / params.return_scale
    return loss_and_grads(params, dataset.o, dataset.a, y)[0]


def dumps_params(params: QFunctionParams) -> str:
    """Serialize to the versioned text format (exact: floats written with ``repr``)."""
    def fmt(arr):
        return " ".join(repr(float(v)) for v in arr)

    lines = [
        FORMAT_VERSION,
        f"activation {params.activation}",
        "layers " + " ".join(str(s) for s in params.sizes),
        "input_offset " + fmt(params.input_offset),
        "input_scale " + fmt(params.input_scale),
        f"return_scale {params.return_scale!r}",
    ]
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        lines.append(f"weight {i} {w.shape[0]} {w.shape[1]}")
        lines.extend(fmt(row) for row in w)
        lines.append(f"bias {i} {b.shape[0]}")
        lines.append(fmt(b))
    lines.append("end")
    return "\n".join(lines) + "\n"


def _floats(text: str, count: int, lineno: int, what: str) -> np.ndarray:
    try:
        vals = [float(t) for t in text.split()]
    except ValueError:
        raise ParseError(f"{what}: non-numeric value", line=lineno) from None
    if len(vals) != count:
        raise ParseError(f"{what}: expected {count} values, found {len(vals)}", line=lineno)
    return np.array(vals)


def loads_params(text: str) -> QFunctionParams:
    lines = text.splitlines()
    pos = 0

    def take(prefix: str) -> tuple[str, int]:
        nonlocal pos
        if pos >= len(lines):
            raise ParseError(f"truncated document: expected {prefix!r}", line=pos + 1)
        line = lines[pos]
        pos += 1
        if prefix and not line.startswith(prefix):
            raise ParseError(f"expected {prefix!r}, found {line[:40]!r}", line=pos)
        return line[len(prefix):].strip(), pos

    header, _ = take("")
    if header.strip() != FORMAT_VERSION:
        raise ParseError(f"unsupported format {header.strip()!r}, expected {FORMAT_VERSION!r}", line=1)
    activation, _ = take("activation ")
    layer_text, ln = take("layers ")
    try:
        sizes = tuple(int(t) for t in layer_text.split())
    except ValueError:
        raise ParseError("layer sizes must be integers", line=ln) from None
    if len(sizes) < 2 or any(s <= 0 for s in sizes):
        raise ParseError(f"invalid layer sizes {sizes}", line=ln)
    off_text, ln = take("input_offset ")
    offset = _floats(off_text, 3, ln, "input_offset")
    sc_text, ln = take("input_scale ")
    scale = _floats(sc_text, 3, ln, "input_scale")
    rs_text, ln = take("return_scale ")
    return_scale = _floats(rs_text, 1, ln, "return_scale")[0]

    weights, biases = [], []
    for i in range(len(sizes) - 1):
        n_out, n_in = sizes[i + 1], sizes[i]
        head, ln = take(f"weight {i} ")
        if head.split() != [str(n_out), str(n_in)]:
            raise ParseError(
                f"layer {i}: weight header {head!r} does not match layer sizes {n_out}x{n_in}", line=ln
            )
        rows = []
        for r in range(n_out):
            row_text, ln = take("")
            rows.append(_floats(row_text, n_in, ln, f"layer {i} weight row {r}"))
        head, ln = take(f"bias {i} ")
        if head.split() != [str(n_out)]:
            raise ParseError(f"layer {i}: bias header {head!r} does not match layer size {n_out}", line=ln)
        b_text, ln = take("")
        weights.append(np.vstack(rows))
        biases.append(_floats(b_text, n_out, ln, f"layer {i} bias"))
    take("end")
    try:
        return QFunctionParams(sizes, weights, biases, activation, offset, scale, return_scale)
    except InvalidArgumentError as exc:
        raise ParseError(str(exc)) from None


def save_params(params: QFunctionParams, path) -> None:
    Path(path).write_text(dumps_params(params))


def load_params(path) -> QFunctionParams:
    return loads_params(Path(path).read_text())


def default_params_path() -> Path:
    return Path(__file__).parent / "data" / "qparams_default.txt"


def load_default_params() -> QFunctionParams:
    """The pinned parameters shipped with the package."""
    return load_params(default_params_path())
