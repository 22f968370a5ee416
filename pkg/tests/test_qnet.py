import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from followahead._jit import python_impl
from followahead.dataset import ExperienceBatch
from followahead.errors import InvalidArgumentError, ParseError, TrainingError
from followahead.geometry import Observation
from followahead.qnet import (
    QFunctionParams,
    TrainConfig,
    dumps_params,
    load_params,
    loads_params,
    loss_and_grads,
    mlp_forward_flat,
    q_forward,
    save_params,
    train,
)


def batch(obs, actions, returns):
    obs = np.asarray(obs, dtype=float)
    return ExperienceBatch(obs, np.asarray(actions), np.asarray(returns, dtype=float), obs.copy(),
                           np.arange(len(obs)), np.zeros(len(obs), dtype=int))


def test_zero_params_give_zero():
    q = QFunctionParams.zeros()
    assert np.array_equal(q_forward(q, Observation(1.0, -2.0, 30.0)), np.zeros(3))


def test_forward_is_deterministic():
    q = QFunctionParams.initialize(seed=3)
    o = (0.3, 1.2, -40.0)
    assert np.array_equal(q_forward(q, o), q_forward(q, o))


def test_forward_batch_matches_single():
    q = QFunctionParams.initialize(seed=4)
    obs = np.random.default_rng(0).uniform(-3, 3, size=(10, 3))
    out = q_forward(q, obs)
    for o, row in zip(obs, out):
        assert np.allclose(q_forward(q, o), row, atol=1e-14)


def test_forward_rejects_non_finite():
    with pytest.raises(InvalidArgumentError):
        q_forward(QFunctionParams.zeros(), (np.nan, 0, 0))


def test_trained_prefers_straight_behind_walker(trained_params):
    # human 1.5 m ahead, both facing +x
    assert int(np.argmax(q_forward(trained_params, (1.5, 0.0, 0.0)))) == 1


def test_flat_kernel_matches_numpy():
    q = QFunctionParams.initialize(hidden=(16, 8), seed=1)
    flat, sizes = q.flat(), np.array(q.sizes, dtype=np.int64)
    buf = [np.zeros(16) for _ in range(3)]
    for o in np.random.default_rng(1).uniform(-3, 3, size=(50, 3)):
        xn = q.normalize(o)
        mlp_forward_flat(flat, sizes, xn, *buf)
        fast = buf[2][:3].copy()
        python_impl(mlp_forward_flat)(flat, sizes, xn, *buf)
        assert np.allclose(fast, buf[2][:3], atol=1e-12)
        assert np.allclose(fast, q_forward(q, o), atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-4, 4), min_size=3, max_size=3), st.integers(0, 2), st.floats(1e-7, 1e-3))
def test_trained_forward_lipschitz(trained_params, o, axis, eps):
    # measured on 15k coordinate probes: largest slope 1.54 per unit input
    step = np.zeros(3)
    step[axis] = eps
    a = q_forward(trained_params, o)
    b = q_forward(trained_params, np.add(o, step))
    assert np.abs(a - b).max() <= 2.0 * eps


@pytest.mark.parametrize("seed", range(5))
def test_gradients_match_finite_differences(seed):
    rng = np.random.default_rng(seed)
    q = QFunctionParams.initialize(hidden=(6, 5), seed=seed)
    for b in q.biases:
        b[:] = rng.normal(0, 0.3, b.shape)
    obs = rng.uniform(-4, 4, size=(12, 3)) * [1, 1, 40]
    acts = rng.integers(0, 3, size=12)
    y = rng.uniform(-1, 1, size=12)
    _, gw, gb = loss_and_grads(q, obs, acts, y)
    tensors = [*q.weights, *q.biases]
    grads = [*gw, *gb]
    coords = [(t, idx) for t in range(len(tensors)) for idx in np.ndindex(tensors[t].shape)]
    pick = rng.choice(len(coords), size=20, replace=False)
    h = 1e-6
    for k in pick:
        t, idx = coords[k]
        orig = tensors[t][idx]
        tensors[t][idx] = orig + h
        up = loss_and_grads(q, obs, acts, y)[0]
        tensors[t][idx] = orig - h
        down = loss_and_grads(q, obs, acts, y)[0]
        tensors[t][idx] = orig
        fd = (up - down) / (2 * h)
        an = grads[t][idx]
        assert abs(fd - an) <= 1e-4 * max(abs(fd), abs(an), 1e-6)


def test_overfit_three_tuples():
    data = batch([[1.5, 0, 180], [0.5, 1, 20], [3, -2, -90]], [1, 0, 2], [0.8, -0.3, -0.9])
    cfg = TrainConfig(hidden=(32, 32), epochs=1500, batch_size=3, lr=1e-2, lr_final=1e-3)
    result = train(data, cfg)
    pred = q_forward(result.params, data.o)[np.arange(3), data.a]
    assert np.mean((pred - data.R) ** 2) < 1e-3


def test_training_is_deterministic():
    data = batch(np.random.default_rng(0).uniform(-3, 3, (300, 3)), np.arange(300) % 3, np.linspace(-1, 1, 300))
    a = train(data, TrainConfig(hidden=(8,), epochs=3, seed=5))
    b = train(data, TrainConfig(hidden=(8,), epochs=3, seed=5))
    assert a.params == b.params
    assert np.array_equal(a.loss_history, b.loss_history)


def test_ddqn_mode_runs():
    data = batch(np.random.default_rng(0).uniform(-3, 3, (300, 3)), np.arange(300) % 3, np.zeros(300))
    res = train(data, TrainConfig(mode="ddqn", hidden=(8,), epochs=2, target_sync=10))
    assert res.params.is_finite()


def test_divergence_reports_step():
    data = batch(np.random.default_rng(0).uniform(-3, 3, (64, 3)), np.zeros(64, dtype=int), np.ones(64))
    cfg = TrainConfig(hidden=(8,), epochs=2, lr=1e300, lr_final=1e300, batch_size=16)
    with pytest.raises(TrainingError) as err:
        train(data, cfg)
    assert err.value.step is not None


def test_train_rejects_empty_and_unknown_mode():
    with pytest.raises(InvalidArgumentError):
        train(batch(np.zeros((0, 3)), [], []))
    with pytest.raises(InvalidArgumentError):
        TrainConfig(mode="sarsa")


def test_params_round_trip(tmp_path):
    q = QFunctionParams.initialize(hidden=(5, 4), seed=2, return_scale=5.85)
    path = tmp_path / "q.txt"
    save_params(q, path)
    assert load_params(path) == q


def test_truncated_document():
    text = dumps_params(QFunctionParams.initialize(hidden=(4,)))
    with pytest.raises(ParseError):
        loads_params(text[: len(text) // 2])


def test_layer_size_mismatch_names_layer():
    text = dumps_params(QFunctionParams.initialize(hidden=(4,)))
    bad = text.replace("layers 3 4 3", "layers 3 5 3")
    with pytest.raises(ParseError, match="layer 0"):
        loads_params(bad)


def test_version_mismatch():
    text = dumps_params(QFunctionParams.zeros(hidden=(2,)))
    with pytest.raises(ParseError, match="unsupported"):
        loads_params(text.replace("QPARAMS v1", "QPARAMS v9"))


def test_shipped_params_are_reproducible(trained_params):
    from followahead.dataset import generate_dataset

    result = train(generate_dataset(200_000, seed=0), TrainConfig(seed=0))
    assert result.params == trained_params
