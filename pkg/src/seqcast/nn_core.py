"""Generic layered network F = f_L o ... o f_1 with f_i(x) = Psi(W_i x + b_i).

Gradients follow the adjoint recursion: the top error e_L = y_hat - y is sent
backwards through D*f_{i+1} = W_{i+1}^T diag(Psi'(z_{i+1})) and each layer's
parameter gradient is its adjoint parameter derivative applied to e_i.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, ParameterError
from .linalg import ElementwiseFn, activation, as_matrix, as_vector

__all__ = [
    "DenseLayer",
    "LayeredNetwork",
    "LayerStates",
    "LayerGrad",
    "glorot_uniform",
    "init_network",
    "forward",
    "squared_loss",
    "backprop_gradients",
    "batch_gradients",
    "l2_regularize",
    "gradient_step",
    "tail_jacobian",
]


def glorot_uniform(rng: np.random.Generator, fan_out: int, fan_in: int) -> np.ndarray:
    r = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-r, r, size=(fan_out, fan_in))


@dataclass(frozen=True)
class DenseLayer:
    W: np.ndarray
    b: np.ndarray
    act: ElementwiseFn = field(default_factory=lambda: activation("identity"))

    def __post_init__(self):
        W = as_matrix(self.W)
        b = as_vector(self.b)
        if W.shape[0] != b.size:
            raise DimensionError(f"W has {W.shape[0]} rows but b has length {b.size}")
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "act", activation(self.act))

    @property
    def n_in(self) -> int:
        return self.W.shape[1]

    @property
    def n_out(self) -> int:
        return self.W.shape[0]


@dataclass(frozen=True)
class LayeredNetwork:
    layers: tuple

    def __post_init__(self):
        layers = tuple(self.layers)
        if not layers:
            raise DimensionError("network needs at least one layer")
        for i in range(len(layers) - 1):
            if layers[i].n_out != layers[i + 1].n_in:
                raise DimensionError(
                    f"layer {i} outputs {layers[i].n_out} but layer {i + 1} expects {layers[i + 1].n_in}"
                )
        object.__setattr__(self, "layers", layers)

    def __len__(self):
        return len(self.layers)

    def params(self) -> dict:
        out = {}
        for i, layer in enumerate(self.layers):
            out[f"W{i}"] = layer.W
            out[f"b{i}"] = layer.b
        return out

    def with_params(self, params: dict) -> "LayeredNetwork":
        return LayeredNetwork(
            tuple(
                DenseLayer(params[f"W{i}"], params[f"b{i}"], layer.act)
                for i, layer in enumerate(self.layers)
            )
        )


@dataclass(frozen=True)
class LayerStates:
    """States x_1..x_{L+1} plus the cached pre-activations z_1..z_L."""

    xs: tuple
    zs: tuple

    @property
    def output(self) -> np.ndarray:
        return self.xs[-1]


@dataclass(frozen=True)
class LayerGrad:
    dW: np.ndarray
    db: np.ndarray


def init_network(sizes, activations, seed: int = 0) -> LayeredNetwork:
    """Build a network with layer widths ``sizes`` (input first).

    Weights are Glorot-uniform, biases zero.
    """
    if len(activations) != len(sizes) - 1:
        raise DimensionError("need one activation per layer")
    rng = np.random.default_rng(seed)
    layers = []
    for n_in, n_out, act in zip(sizes[:-1], sizes[1:], activations):
        layers.append(DenseLayer(glorot_uniform(rng, n_out, n_in), np.zeros(n_out), act))
    return LayeredNetwork(tuple(layers))


def forward(net: LayeredNetwork, x) -> LayerStates:
    x = as_vector(x)
    if x.size != net.layers[0].n_in:
        raise DimensionError(f"input length {x.size}, network expects {net.layers[0].n_in}")
    xs = [x]
    zs = []
    for layer in net.layers:
        z = layer.W @ xs[-1] + layer.b
        zs.append(z)
        xs.append(layer.act.value(z))
    return LayerStates(tuple(xs), tuple(zs))


def squared_loss(y, y_hat) -> float:
    y = as_vector(y)
    y_hat = as_vector(y_hat)
    if y.shape != y_hat.shape:
        raise DimensionError(f"target length {y.size} vs prediction length {y_hat.size}")
    e = y - y_hat
    return 0.5 * float(e @ e)


def backprop_gradients(net: LayeredNetwork, states: LayerStates, y, return_errors: bool = False):
    """Per-layer gradients of the squared loss at one data point.

    With ``return_errors`` also returns the error vectors e_1..e_L.
    """
    y = as_vector(y)
    if len(states.zs) != len(net) or states.output.shape != y.shape:
        raise DimensionError("states do not belong to this network/target")
    L = len(net)
    grads = [None] * L
    errors = [None] * L
    e = states.output - y
    for i in range(L - 1, -1, -1):
        if i < L - 1:
            nxt = net.layers[i + 1]
            e = nxt.W.T @ (nxt.act.d1(states.zs[i + 1]) * e)
        errors[i] = e
        delta = net.layers[i].act.d1(states.zs[i]) * e
        grads[i] = LayerGrad(np.outer(delta, states.xs[i]), delta)
    if return_errors:
        return grads, errors
    return grads


def batch_gradients(net: LayeredNetwork, X, Y):
    """Mean of per-point gradients over a batch, reduced in index order."""
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if len(X) == 0 or len(X) != len(Y):
        raise DimensionError("batch inputs and targets must be non-empty and equal in count")
    dW = [np.zeros_like(layer.W) for layer in net.layers]
    db = [np.zeros_like(layer.b) for layer in net.layers]
    for x, y in zip(X, Y):
        for k, g in enumerate(backprop_gradients(net, forward(net, x), y)):
            dW[k] += g.dW
            db[k] += g.db
    n = len(X)
    return [LayerGrad(w / n, b / n) for w, b in zip(dW, db)]


def l2_regularize(grads, params, lam: float):
    """grad + lam * theta, elementwise over matching arrays or LayerGrad lists."""
    if lam < 0:
        raise ParameterError(f"regularization weight must be >= 0, got {lam}")
    if isinstance(grads, dict):
        return {k: _l2(grads[k], params[k], lam) for k in grads}
    if isinstance(grads, (list, tuple)) and grads and isinstance(grads[0], LayerGrad):
        return [LayerGrad(_l2(g.dW, p.W, lam), _l2(g.db, p.b, lam)) for g, p in zip(grads, params)]
    return _l2(grads, params, lam)


def _l2(g, p, lam):
    g = np.asarray(g, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    if g.shape != p.shape:
        raise DimensionError(f"gradient shape {g.shape} vs parameter shape {p.shape}")
    return g + lam * p


def gradient_step(net: LayeredNetwork, x, y, eta: float, lam: float = 0.0) -> LayeredNetwork:
    """One iteration of plain gradient descent on a single data point."""
    grads = backprop_gradients(net, forward(net, x), y)
    if lam:
        grads = l2_regularize(grads, net.layers, lam)
    return LayeredNetwork(
        tuple(
            DenseLayer(layer.W - eta * g.dW, layer.b - eta * g.db, layer.act)
            for layer, g in zip(net.layers, grads)
        )
    )


def tail_jacobian(net: LayeredNetwork, states: LayerStates, i: int) -> np.ndarray:
    """Explicit matrix of D omega_{i+1}(x_{i+1}) = D f_L ... D f_{i+1} (0-based layer ``i``).

    For the top layer this is the identity. Used as an independent check on the
    recursive error vectors.
    """
    L = len(net)
    J = np.eye(states.output.size)
    for k in range(L - 1, i, -1):
        layer = net.layers[k]
        J = J @ (layer.act.d1(states.zs[k])[:, None] * layer.W)
    return J
