import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from seqcast.errors import DimensionError, ParameterError
from seqcast.forecaster import ForecasterConfig, StackedForecaster
from seqcast.optim import (
    EarlyStopTracker, Optimizer, TrainConfig, clip_gradient, early_stop_update, fit, global_norm,
    momentum_step, rmsprop_step, sgd_step,
)

finite = st.floats(-1e3, 1e3, allow_nan=False)


def test_sgd_examples():
    theta = np.array([1.0, -2.0])
    assert np.array_equal(sgd_step(theta, [3.0, 4.0], 0.0), theta)
    assert sgd_step(np.array(5.0), np.array(2.0), 0.1) == pytest.approx(4.8, abs=1e-15)
    t = np.array(1.0)
    seen = [float(t)]
    for _ in range(50):
        t = sgd_step(t, t, 0.1)  # grad of 0.5 t^2
        seen.append(float(t))
    assert np.allclose(seen, 0.9 ** np.arange(51), rtol=1e-12, atol=0)
    assert all(a > b > 0 for a, b in zip(seen, seen[1:]))


def test_sgd_errors_and_dicts():
    with pytest.raises(DimensionError):
        sgd_step(np.zeros(2), np.zeros(3), 0.1)
    with pytest.raises(DimensionError):
        sgd_step({"a": np.zeros(1)}, {"b": np.zeros(1)}, 0.1)
    out = sgd_step({"a": np.ones(2), "b": np.ones((1, 1))}, {"a": np.ones(2), "b": 2 * np.ones((1, 1))}, 0.5)
    assert out["a"].tolist() == [0.5, 0.5] and out["b"].tolist() == [[0.0]]


def test_momentum_examples():
    theta = np.array([0.0])
    th, V = momentum_step(theta, np.array([1.0]), None, 0.9, 1.0)
    assert V[0] == pytest.approx(0.1, abs=1e-15)
    th, V = momentum_step(th, np.array([1.0]), V, 0.9, 1.0)
    assert V[0] == pytest.approx(0.19, abs=1e-15)
    V = None
    g = np.array([2.0, -3.0])
    for t in range(1, 30):
        _, V = momentum_step(np.zeros(2), g, V, 0.8, 0.1)
        assert np.allclose(V, (1 - 0.8**t) * g, rtol=1e-12, atol=1e-15)


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, 4, elements=finite), arrays(np.float64, 4, elements=finite), st.floats(1e-4, 1.0))
def test_momentum_beta_zero_is_sgd(theta, grad, alpha):
    new, V = momentum_step(theta, grad, None, 0.0, alpha)
    assert np.array_equal(new, sgd_step(theta, grad, alpha)) and np.array_equal(V, grad)


def test_rmsprop_examples():
    theta = np.array([1.0, 2.0])
    new, _ = rmsprop_step(theta, np.zeros(2), None, 0.9, 0.01, 1e-7)
    assert np.array_equal(new, theta)
    g, a, e = 0.37, 0.01, 1e-7
    new, V = rmsprop_step(np.array([0.0]), np.array([g]), None, 0.0, a, e, mode="linear")
    assert new[0] == pytest.approx(-a * g / (np.sqrt(g) + e), rel=1e-15)
    sq, _ = rmsprop_step(np.zeros(2), np.array([100.0, 0.01]), None, 0.0, 0.01, 1e-7)
    ratio = abs(sq[0]) / abs(sq[1])
    assert 0.1 <= ratio <= 10.0
    plain = sgd_step(np.zeros(2), np.array([100.0, 0.01]), 0.01)
    assert abs(plain[0] / plain[1]) == pytest.approx(1e4)


def test_rmsprop_linear_mode_breaks_on_sign_change():
    _, V = rmsprop_step(np.zeros(1), np.array([0.5]), None, 0.9, 0.01, 1e-7, mode="linear")
    with pytest.raises(FloatingPointError):
        rmsprop_step(np.zeros(1), np.array([-10.0]), V, 0.9, 0.01, 1e-7, mode="linear")
    with pytest.raises(ParameterError):
        rmsprop_step(np.zeros(1), np.zeros(1), None, 0.9, 0.01, 0.0)


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, 3, elements=finite), arrays(np.float64, 3, elements=st.floats(-1, 1)), st.floats(1e-4, 1.0))
def test_rmsprop_with_unit_accumulator_is_sgd(theta, grad, alpha):
    # choose the previous accumulator so that V_t = 1 exactly; eps ~ 0 leaves alpha * grad
    prev = 2.0 - grad * grad
    new, V = rmsprop_step(theta, grad, prev, 0.5, alpha, 1e-300)
    assert np.allclose(V, 1.0, rtol=0, atol=1e-15)
    assert np.allclose(new, sgd_step(theta, grad, alpha), rtol=1e-12, atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, (2, 3), elements=finite), arrays(np.float64, (2, 3), elements=finite), st.sampled_from(["sgd", "momentum", "rmsprop"]))
def test_steps_preserve_shape_and_finiteness(theta, grad, kind):
    opt = Optimizer(kind, lr=0.01)
    for _ in range(3):
        theta = opt.step(theta, grad)
        assert theta.shape == (2, 3) and np.all(np.isfinite(theta))


def test_clip_examples():
    g = np.array([3.0, 0.0])
    assert clip_gradient(g, 5.0) is g
    big = {"a": np.array([6.0]), "b": np.array([8.0])}
    out = clip_gradient(big, 5.0)
    assert global_norm(out) == pytest.approx(5.0, rel=1e-15)
    assert out["a"][0] == pytest.approx(3.0) and out["b"][0] == pytest.approx(4.0)
    assert not clip_gradient(np.zeros(3), 1.0).any()
    with pytest.raises(ParameterError):
        clip_gradient(g, 0.0)


def test_early_stop_examples():
    t = EarlyStopTracker(3)
    assert all(early_stop_update(t, 1.0 / (k + 1)) == "continue" for k in range(100))
    t = EarlyStopTracker(3)
    decisions = []
    while not decisions or decisions[-1] != "stop":
        decisions.append(early_stop_update(t, 1.0))
        assert t.epochs_since_best <= t.patience
    assert len(decisions) == 4
    t = EarlyStopTracker(3)
    assert [early_stop_update(t, v) for v in (1.0, 1.0, 0.9, 1.0)] == ["continue"] * 4
    t = EarlyStopTracker(2)
    early_stop_update(t, 1.0)
    assert early_stop_update(t, 1.0 - 1e-13) == "continue" and t.epochs_since_best == 1


class FrozenModel:
    """Model with zero gradients, so every epoch reports the same losses."""

    def __init__(self):
        self.params = {"w": np.array([0.5])}

    def gradients(self, X, y, state=None):
        return 0.0, {"w": np.zeros(1)}, None

    def mse(self, X, y):
        return float(np.mean((self.params["w"][0] * X[:, 0] - y) ** 2))

    @staticmethod
    def slice_state(state, k):
        return state


def test_fit_constant_validation_stops_early():
    X = np.arange(10.0)[:, None]
    h = fit(FrozenModel(), (X, X[:, 0]), (X, X[:, 0]), TrainConfig(epochs=100, patience=10))
    assert h.stop_reason == "early_stop" and h.epochs <= 11
    assert len(h.train_mse) == len(h.val_mse) == h.epochs


def _sine_data(n=120, tau=4):
    s = 0.5 + 0.4 * np.sin(2 * np.pi * np.arange(n + tau) / 15)
    X = np.stack([s[i : i + tau] for i in range(n)])[:, :, None]
    return X, s[tau:]


def test_fit_is_deterministic_and_records_losses():
    X, y = _sine_data()
    runs = []
    for _ in range(2):
        m = StackedForecaster(ForecasterConfig(1, (4, 1), 4, seed=3))
        h = fit(m, (X[:90], y[:90]), (X[90:], y[90:]), TrainConfig(lr=1e-2, epochs=5, batch_size=16, seed=7))
        runs.append((h.to_csv(), m))
    assert runs[0][0] == runs[1][0]
    h_lines = runs[0][0].splitlines()
    assert h_lines[0] == "epoch,train_mse,val_mse" and len(h_lines) == 6
    last_val = float(h_lines[-1].split(",")[2])
    assert last_val == runs[0][1].mse(X[90:], y[90:])


def test_fit_errors():
    m = FrozenModel()
    with pytest.raises(DimensionError):
        fit(m, (np.zeros((0, 1)), np.zeros(0)), (np.zeros((1, 1)), np.zeros(1)), TrainConfig())
    with pytest.raises(DimensionError):
        fit(m, (np.zeros((3, 1)), np.zeros(2)), (np.zeros((1, 1)), np.zeros(1)), TrainConfig())


def test_fit_clipping_bounds_each_step():
    X, y = _sine_data(40)
    m = StackedForecaster(ForecasterConfig(1, (3, 1), 4, seed=1))
    before = {k: v.copy() for k, v in m.params.items()}
    fit(m, (X, y), (X, y), TrainConfig(optimizer="sgd", lr=1.0, epochs=1, batch_size=40, clip_norm=1e-3, shuffle=False))
    moved = np.sqrt(sum(np.sum((m.params[k] - before[k]) ** 2) for k in before))
    assert moved <= 1e-3 + 1e-12
