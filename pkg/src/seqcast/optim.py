"""First-order optimizers, gradient clipping, early stopping and the training loop.

Parameters and gradients are either single arrays or dicts of arrays keyed by
parameter name; every step function handles both.

Momentum keeps an exponential moving average of the gradient and steps along
it. RMSProp divides the raw gradient by the root of a moving average; by
default the average is of the squared gradient (``mode="squared"``). The
``mode="linear"`` variant feeds the gradient itself into the average, which is
only defined while the average stays non-negative.
"""

from __future__ import annotations

import copy
import csv
import io
import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, ParameterError

log = logging.getLogger(__name__)

__all__ = [
    "OptimizerState",
    "Optimizer",
    "sgd_step",
    "momentum_step",
    "rmsprop_step",
    "clip_gradient",
    "global_norm",
    "EarlyStopTracker",
    "early_stop_update",
    "TrainConfig",
    "TrainHistory",
    "fit",
]


def _map(fn, *trees):
    first = trees[0]
    if isinstance(first, dict):
        for t in trees[1:]:
            if set(t) != set(first):
                raise DimensionError(f"parameter names differ: {sorted(first)} vs {sorted(t)}")
        return {k: fn(*(t[k] for t in trees)) for k in first}
    return fn(*trees)


def _arr(a):
    return np.asarray(a, dtype=np.float64)


def _same_shape(*arrays):
    shapes = {np.shape(a) for a in arrays}
    if len(shapes) != 1:
        raise DimensionError(f"shape mismatch: {sorted(shapes)}")


def _zeros_like(tree):
    return _map(lambda a: np.zeros_like(_arr(a)), tree)


def sgd_step(theta, grad, eta: float):
    if eta < 0:
        raise ParameterError(f"learning rate must be >= 0, got {eta}")

    def step(t, g):
        _same_shape(t, g)
        return _arr(t) - eta * _arr(g)

    return _map(step, theta, grad)


def momentum_step(theta, grad, state, beta: float, alpha: float):
    """V_t = beta V_{t-1} + (1 - beta) grad; theta <- theta - alpha V_t."""
    if not 0.0 <= beta < 1.0:
        raise ParameterError(f"beta must lie in [0, 1), got {beta}")
    if state is None:
        state = _zeros_like(theta)

    def accumulate(v, g):
        _same_shape(v, g)
        return beta * _arr(v) + (1.0 - beta) * _arr(g)

    V = _map(accumulate, state, grad)
    new = _map(lambda t, v: _arr(t) - alpha * v, theta, V)
    return new, V


def rmsprop_step(theta, grad, state, beta: float, alpha: float, eps: float, mode: str = "squared"):
    """theta <- theta - alpha * grad / (sqrt(V_t) + eps).

    ``mode="squared"`` accumulates grad*grad; ``mode="linear"`` accumulates
    grad as is and raises ``FloatingPointError`` once any V_t entry goes negative.
    """
    if eps <= 0:
        raise ParameterError(f"eps must be > 0, got {eps}")
    if not 0.0 <= beta < 1.0:
        raise ParameterError(f"beta must lie in [0, 1), got {beta}")
    if mode not in ("squared", "linear"):
        raise ParameterError(f"unknown rmsprop mode {mode!r}")
    if state is None:
        state = _zeros_like(theta)

    def accumulate(v, g):
        _same_shape(v, g)
        g = _arr(g)
        fed = g * g if mode == "squared" else g
        out = beta * _arr(v) + (1.0 - beta) * fed
        if np.any(out < 0):
            raise FloatingPointError("linear-mode accumulator went negative; sqrt(V) undefined")
        return out

    V = _map(accumulate, state, grad)

    def update(t, g, v):
        _same_shape(t, g)
        return _arr(t) - alpha * _arr(g) / (np.sqrt(v) + eps)

    new = _map(update, theta, grad, V)
    return new, V


def global_norm(grad) -> float:
    if isinstance(grad, dict):
        return float(np.sqrt(sum(float(np.sum(_arr(g) ** 2)) for g in grad.values())))
    return float(np.linalg.norm(_arr(grad)))


def clip_gradient(grad, max_norm: float):
    """Rescale so the global L2 norm is at most ``max_norm``."""
    if max_norm <= 0:
        raise ParameterError(f"max_norm must be > 0, got {max_norm}")
    norm = global_norm(grad)
    if norm <= max_norm:
        return grad
    scale = max_norm / norm
    return _map(lambda g: _arr(g) * scale, grad)


@dataclass
class OptimizerState:
    kind: str
    lr: float
    beta: float = 0.9
    eps: float = 1e-7
    mode: str = "squared"
    V: object = None

    def __post_init__(self):
        if self.kind not in ("sgd", "momentum", "rmsprop"):
            raise ParameterError(f"unknown optimizer {self.kind!r}")
        if self.lr <= 0:
            raise ParameterError(f"learning rate must be > 0, got {self.lr}")
        if not 0.0 <= self.beta < 1.0:
            raise ParameterError(f"beta must lie in [0, 1), got {self.beta}")
        if self.eps <= 0:
            raise ParameterError(f"eps must be > 0, got {self.eps}")


class Optimizer:
    """Stateful wrapper dispatching to the step functions above."""

    def __init__(self, kind="rmsprop", lr=1e-3, beta=0.9, eps=1e-7, mode="squared"):
        self.state = OptimizerState(kind, lr, beta, eps, mode)

    def step(self, theta, grad):
        s = self.state
        if s.kind == "sgd":
            return sgd_step(theta, grad, s.lr)
        if s.kind == "momentum":
            new, s.V = momentum_step(theta, grad, s.V, s.beta, s.lr)
            return new
        new, s.V = rmsprop_step(theta, grad, s.V, s.beta, s.lr, s.eps, s.mode)
        return new


@dataclass
class EarlyStopTracker:
    patience: int
    best_val: float = float("inf")
    epochs_since_best: int = 0
    best_epoch: int = -1
    epoch: int = 0
    min_delta: float = 1e-12


def early_stop_update(tracker: EarlyStopTracker, val_loss: float) -> str:
    """Record one epoch's validation loss; return ``"stop"`` or ``"continue"``."""
    if val_loss < tracker.best_val - tracker.min_delta:
        tracker.best_val = float(val_loss)
        tracker.epochs_since_best = 0
        tracker.best_epoch = tracker.epoch
    else:
        tracker.epochs_since_best += 1
    tracker.epoch += 1
    return "stop" if tracker.epochs_since_best >= tracker.patience else "continue"


@dataclass
class TrainConfig:
    optimizer: str = "rmsprop"
    lr: float = 1e-4
    beta: float = 0.9
    eps: float = 1e-7
    rmsprop_mode: str = "squared"
    epochs: int = 300
    batch_size: int = 20
    patience: int = 10
    clip_norm: float | None = None
    l2: float = 0.0
    seed: int = 0
    shuffle: bool = True
    stateful: bool = False
    restore_best: bool = False
    target_val_mse: float | None = None  # stop as soon as validation MSE drops below this


@dataclass
class TrainHistory:
    train_mse: list = field(default_factory=list)
    val_mse: list = field(default_factory=list)
    stop_reason: str = ""
    best_epoch: int = -1

    @property
    def epochs(self) -> int:
        return len(self.train_mse)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["epoch", "train_mse", "val_mse"])
        for i, (tr, va) in enumerate(zip(self.train_mse, self.val_mse), start=1):
            w.writerow([i, repr(float(tr)), repr(float(va))])
        return buf.getvalue()


def _batches(n: int, batch_size: int, rng, shuffle: bool):
    order = rng.permutation(n) if shuffle else np.arange(n)
    # final short batch is kept
    return [order[i : i + batch_size] for i in range(0, n, batch_size)]


def fit(model, train_set, val_set, config: TrainConfig) -> TrainHistory:
    """Mini-batch training of ``model`` in place.

    ``model`` must expose ``params`` (dict of arrays), ``gradients(X, y,
    state)`` returning ``(loss, grads, final_state)`` with grads the batch-mean
    gradient of 0.5*(y_hat - y)^2, ``mse(X, y)``, and ``slice_state(state, k)``
    for stateful carrying. Datasets are ``(X, y)`` pairs.
    """
    X, y = (np.asarray(a, dtype=np.float64) for a in train_set)
    Xv, yv = (np.asarray(a, dtype=np.float64) for a in val_set)
    if len(X) == 0:
        raise DimensionError("empty training set")
    if len(X) != len(y) or len(Xv) != len(yv):
        raise DimensionError("inputs and targets differ in sample count")
    if config.epochs < 1 or config.batch_size < 1:
        raise ParameterError("epochs and batch_size must be >= 1")
    rng = np.random.default_rng(config.seed)
    opt = Optimizer(config.optimizer, config.lr, config.beta, config.eps, config.rmsprop_mode)
    tracker = EarlyStopTracker(config.patience)
    history = TrainHistory()
    best_params = None
    shuffle = config.shuffle and not config.stateful
    for epoch in range(config.epochs):
        state = None
        for idx in _batches(len(X), config.batch_size, rng, shuffle):
            init = model.slice_state(state, len(idx)) if (config.stateful and state is not None) else None
            _, grads, state = model.gradients(X[idx], y[idx], init)
            if config.l2:
                grads = {k: g + config.l2 * model.params[k] for k, g in grads.items()}
            if config.clip_norm:
                grads = clip_gradient(grads, config.clip_norm)
            model.params = opt.step(model.params, grads)
        history.train_mse.append(model.mse(X, y))
        val = model.mse(Xv, yv) if len(Xv) else history.train_mse[-1]
        history.val_mse.append(val)
        decision = early_stop_update(tracker, val)
        if tracker.best_epoch == epoch and config.restore_best:
            best_params = copy.deepcopy(model.params)
        log.debug("epoch %d train %.6g val %.6g", epoch + 1, history.train_mse[-1], val)
        if config.target_val_mse is not None and val < config.target_val_mse:
            history.stop_reason = "target"
            break
        if decision == "stop":
            history.stop_reason = "early_stop"
            break
    else:
        history.stop_reason = "max_epochs"
    history.best_epoch = tracker.best_epoch + 1
    if config.restore_best and best_params is not None:
        model.params = best_params
    return history
