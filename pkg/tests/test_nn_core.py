import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import central_diff, rel_err
from seqcast import checkpoint
from seqcast.errors import DimensionError, ParameterError
from seqcast.nn_core import (
    DenseLayer, LayeredNetwork, backprop_gradients, batch_gradients, forward, gradient_step,
    init_network, l2_regularize, squared_loss, tail_jacobian,
)


def net_of(*layers):
    return LayeredNetwork(tuple(DenseLayer(np.array(W, float), np.array(b, float), a) for W, b, a in layers))


def test_forward_examples():
    zero = net_of((np.zeros((2, 3)), np.zeros(2), "identity"))
    assert not forward(zero, [1, 2, 3]).output.any()
    ident = net_of((np.eye(3), np.zeros(3), "identity"))
    assert np.array_equal(forward(ident, [1, 2, 3]).output, [1, 2, 3])
    two = net_of(([[1, 0], [0, 1]], [1, 1], "tanh"), ([[1, 1]], [0], "identity"))
    out = forward(two, [0, 0]).output
    assert out.shape == (1,)
    assert abs(out[0] - 2 * np.tanh(1.0)) < 1e-15
    assert abs(out[0] - 1.52318) < 1e-5


def test_forward_states_and_purity(rng):
    net = init_network([3, 4, 2], ["tanh", "sigmoid"], seed=5)
    x = rng.normal(size=3)
    s1, s2 = forward(net, x), forward(net, x)
    assert len(s1.xs) == len(net) + 1
    for a, b in zip(s1.xs, s2.xs):
        assert a.tobytes() == b.tobytes()
    with pytest.raises(DimensionError):
        forward(net, np.ones(4))


def test_layer_conformance():
    with pytest.raises(DimensionError):
        net_of((np.zeros((2, 3)), np.zeros(2), "tanh"), (np.zeros((1, 3)), np.zeros(1), "tanh"))
    with pytest.raises(DimensionError):
        DenseLayer(np.zeros((2, 3)), np.zeros(3), "tanh")


def test_squared_loss_examples():
    assert squared_loss([1, 2], [1, 2]) == 0.0
    assert squared_loss([1, 0], [0, 0]) == 0.5
    e = np.array([0.3, -1.2, 2.0])
    assert abs(squared_loss(2 * e, np.zeros(3)) - 4 * squared_loss(e, np.zeros(3))) < 1e-14
    with pytest.raises(DimensionError):
        squared_loss([1], [1, 2])


def test_backprop_examples():
    net = init_network([2, 3, 2], ["tanh", "identity"], seed=1)
    x = np.array([0.2, -0.4])
    s = forward(net, x)
    for g in backprop_gradients(net, s, s.output):
        assert not g.dW.any() and not g.db.any()
    lin = net_of(([[2.0]], [0.0], "identity"))
    (g,) = backprop_gradients(lin, forward(lin, [1.0]), [0.0])
    assert g.dW.tolist() == [[2.0]] and g.db.tolist() == [2.0]


def _fd_check(net, x, y):
    params = net.params()
    grads = backprop_gradients(net, forward(net, x), y)
    fd = central_diff(lambda p: squared_loss(y, forward(net.with_params(p), x).output), params)
    worst = 0.0
    for i, g in enumerate(grads):
        worst = max(worst, rel_err(g.dW, fd[f"W{i}"]), rel_err(g.db, fd[f"b{i}"]))
    return worst


def test_backprop_matches_finite_differences_three_layers(rng):
    net = init_network([4, 5, 3, 2], ["tanh", "sigmoid", "identity"], seed=3)
    net = net.with_params({k: v + rng.normal(scale=0.3, size=v.shape) for k, v in net.params().items()})
    assert _fd_check(net, rng.normal(size=4), rng.normal(size=2)) <= 1e-5


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(1, 8), min_size=2, max_size=5), st.integers(0, 2**31 - 1))
def test_recursive_errors_equal_explicit_chain(sizes, seed):
    rng = np.random.default_rng(seed)
    acts = [("tanh", "sigmoid", "identity", "relu")[k] for k in rng.integers(4, size=len(sizes) - 1)]
    net = init_network(sizes, acts, seed)
    x, y = rng.normal(size=sizes[0]), rng.normal(size=sizes[-1])
    s = forward(net, x)
    _, errors = backprop_gradients(net, s, y, return_errors=True)
    for i, e in enumerate(errors):
        assert np.max(np.abs(e - tail_jacobian(net, s, i).T @ (s.output - y)), initial=0) <= 1e-12


def test_batch_gradient_is_mean(rng):
    net = init_network([3, 2], ["tanh"], seed=0)
    X, Y = rng.normal(size=(4, 3)), rng.normal(size=(4, 2))
    mean = batch_gradients(net, X, Y)
    per = [backprop_gradients(net, forward(net, x), y) for x, y in zip(X, Y)]
    assert np.allclose(mean[0].dW, sum(p[0].dW for p in per) / 4, atol=1e-15)


def test_l2_regularize_examples():
    assert np.array_equal(l2_regularize(np.array([1.0, 2.0]), np.array([3.0, 4.0]), 0.0), [1.0, 2.0])
    assert np.array_equal(l2_regularize(np.array([1.0, 2.0]), np.zeros(2), 0.7), [1.0, 2.0])
    assert np.allclose(l2_regularize(np.zeros(2), np.array([1.0, -2.0]), 0.1), [0.1, -0.2], atol=1e-16)
    with pytest.raises(ParameterError):
        l2_regularize(np.zeros(2), np.zeros(2), -1.0)


def test_gradient_step_decreases_loss(rng):
    for seed in range(10):
        net = init_network([3, 4, 2], ["tanh", "sigmoid"], seed=seed)
        x, y = rng.normal(size=3), rng.normal(size=2)
        before = squared_loss(y, forward(net, x).output)
        after = squared_loss(y, forward(gradient_step(net, x, y, 1e-4), x).output)
        assert after < before


def test_checkpoint_round_trip(tmp_path):
    net = init_network([3, 4, 2], ["tanh", "relu"], seed=9)
    path = checkpoint.save(tmp_path / "net.json", net, meta={"note": "x"})
    back, pred, meta = checkpoint.load(path)
    assert pred is None and meta == {"note": "x"}
    for k, v in net.params().items():
        assert back.params()[k].tobytes() == v.tobytes()
    assert [l.act.kind for l in back.layers] == ["tanh", "relu"]
