"""Recurrent networks with shared transition f and prediction g.

h_i = f(h_{i-1}; x_i, theta), y_hat_i = g(h_i; zeta), and the total loss is
the sum of per-step squared losses. Transition gradients are computed two ways
that must agree exactly: forward sensitivity propagation (RTRL) and the
backward recursion over time (BPTT).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, ParameterError
from .linalg import ElementwiseFn, activation, as_matrix, as_vector
from .nn_core import glorot_uniform

__all__ = [
    "RnnParams",
    "PredictParams",
    "SequenceBatch",
    "RnnGradients",
    "RnnTrace",
    "init_rnn",
    "init_predict",
    "vanilla_transition",
    "vanilla_predict",
    "rnn_forward",
    "total_loss",
    "bptt_gradients",
    "rtrl_gradients",
    "truncated_bptt_gradients",
]


@dataclass(frozen=True)
class RnnParams:
    W: np.ndarray  # hidden-to-hidden, n_h x n_h
    U: np.ndarray  # input-to-hidden, n_h x n_x
    b: np.ndarray
    act: ElementwiseFn = field(default_factory=lambda: activation("tanh"))

    def __post_init__(self):
        W, U, b = as_matrix(self.W), as_matrix(self.U), as_vector(self.b)
        n_h = b.size
        if W.shape != (n_h, n_h) or U.shape[0] != n_h:
            raise DimensionError(f"W {W.shape}, U {U.shape}, b ({n_h},) do not conform")
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "U", U)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "act", activation(self.act))

    @property
    def n_h(self) -> int:
        return self.b.size

    @property
    def n_x(self) -> int:
        return self.U.shape[1]

    def params(self) -> dict:
        return {"W": self.W, "U": self.U, "b": self.b}

    def replace(self, **arrays) -> "RnnParams":
        p = self.params() | arrays
        return RnnParams(p["W"], p["U"], p["b"], self.act)


@dataclass(frozen=True)
class PredictParams:
    V: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        V, c = as_matrix(self.V), as_vector(self.c)
        if V.shape[0] != c.size:
            raise DimensionError(f"V has {V.shape[0]} rows but c has length {c.size}")
        object.__setattr__(self, "V", V)
        object.__setattr__(self, "c", c)

    def params(self) -> dict:
        return {"V": self.V, "c": self.c}

    def replace(self, **arrays) -> "PredictParams":
        p = self.params() | arrays
        return PredictParams(p["V"], p["c"])


@dataclass(frozen=True)
class SequenceBatch:
    """Inputs x_1..x_L (rows of ``xs``), targets y_1..y_L and the initial state."""

    xs: np.ndarray
    ys: np.ndarray
    h0: np.ndarray | None = None

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=np.float64)
        ys = np.asarray(self.ys, dtype=np.float64)
        if xs.ndim != 2 or ys.ndim != 2:
            raise DimensionError("xs and ys must be (L, n) arrays")
        if len(xs) != len(ys) or len(xs) < 1:
            raise DimensionError(f"need L >= 1 with equal lengths, got {len(xs)} and {len(ys)}")
        if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
            raise ValueError("non-finite entries in sequence batch")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)
        if self.h0 is not None:
            object.__setattr__(self, "h0", as_vector(self.h0))

    def __len__(self):
        return len(self.xs)


@dataclass(frozen=True)
class RnnGradients:
    dW: np.ndarray
    dU: np.ndarray
    db: np.ndarray
    dV: np.ndarray
    dc: np.ndarray

    def as_dict(self) -> dict:
        return {"W": self.dW, "U": self.dU, "b": self.db, "V": self.dV, "c": self.dc}

    def norm(self) -> float:
        return float(np.sqrt(sum(np.sum(g * g) for g in self.as_dict().values())))


@dataclass(frozen=True)
class RnnTrace:
    """Everything a forward pass produced: h_0..h_L, z_1..z_L, y_hat_1..y_hat_L."""

    hs: np.ndarray
    zs: np.ndarray
    y_hats: np.ndarray
    cs: np.ndarray | None = None  # LSTM cell states c_0..c_L
    cache: object = None


def init_rnn(n_h: int, n_x: int, act="tanh", seed: int = 0) -> RnnParams:
    rng = np.random.default_rng(seed)
    return RnnParams(glorot_uniform(rng, n_h, n_h), glorot_uniform(rng, n_h, n_x), np.zeros(n_h), act)


def init_predict(n_y: int, n_h: int, seed: int = 0) -> PredictParams:
    rng = np.random.default_rng(seed)
    return PredictParams(glorot_uniform(rng, n_y, n_h), np.zeros(n_y))


def vanilla_transition(p: RnnParams, h, x):
    """Return (h_next, z) with z = W h + U x + b and h_next = Psi(z)."""
    h = as_vector(h)
    x = as_vector(x)
    if h.size != p.n_h or x.size != p.n_x:
        raise DimensionError(f"state {h.size}/input {x.size} vs cell ({p.n_h}, {p.n_x})")
    z = p.W @ h + p.U @ x + p.b
    return p.act.value(z), z


def vanilla_predict(p: PredictParams, h) -> np.ndarray:
    h = as_vector(h)
    if h.size != p.V.shape[1]:
        raise DimensionError(f"state length {h.size} vs V {p.V.shape}")
    return p.V @ h + p.c


def _check(cell, pred: PredictParams, batch: SequenceBatch):
    if batch.xs.shape[1] != cell.n_x:
        raise DimensionError(f"inputs have {batch.xs.shape[1]} features, cell expects {cell.n_x}")
    if pred.V.shape != (batch.ys.shape[1], cell.n_h):
        raise DimensionError(f"V {pred.V.shape} vs targets {batch.ys.shape[1]} and n_h {cell.n_h}")
    if batch.h0 is not None and batch.h0.size != cell.n_h:
        raise DimensionError(f"h0 length {batch.h0.size} vs n_h {cell.n_h}")


def _h0(cell, batch) -> np.ndarray:
    return np.zeros(cell.n_h) if batch.h0 is None else batch.h0


def rnn_forward(cell, pred: PredictParams, batch: SequenceBatch) -> RnnTrace:
    """Run the recurrence over the whole sequence keeping every state."""
    from .lstm import LstmParams, lstm_sequence_forward

    _check(cell, pred, batch)
    if isinstance(cell, LstmParams):
        return lstm_sequence_forward(cell, pred, batch)
    L = len(batch)
    hs = np.empty((L + 1, cell.n_h))
    zs = np.empty((L, cell.n_h))
    hs[0] = _h0(cell, batch)
    for i in range(L):
        zs[i] = cell.W @ hs[i] + cell.U @ batch.xs[i] + cell.b
        hs[i + 1] = cell.act.value(zs[i])
    y_hats = hs[1:] @ pred.V.T + pred.c
    return RnnTrace(hs, zs, y_hats)


def total_loss(cell, pred: PredictParams, batch: SequenceBatch) -> float:
    e = rnn_forward(cell, pred, batch).y_hats - batch.ys
    return 0.5 * float(np.sum(e * e))


def _prediction_grads(pred, trace, batch):
    errors = trace.y_hats - batch.ys
    dV = errors.T @ trace.hs[1:]
    dc = errors.sum(axis=0)
    return errors, dV, dc


def bptt_gradients(cell: RnnParams, pred: PredictParams, batch: SequenceBatch) -> RnnGradients:
    trace = rnn_forward(cell, pred, batch)
    errors, dV, dc = _prediction_grads(pred, trace, batch)
    L = len(batch)
    dW = np.zeros_like(cell.W)
    dU = np.zeros_like(cell.U)
    db = np.zeros_like(cell.b)
    eps = np.zeros(cell.n_h)  # eps_{L+1}
    for i in range(L - 1, -1, -1):
        if i < L - 1:
            eps = cell.W.T @ (cell.act.d1(trace.zs[i + 1]) * eps)
        eps = eps + pred.V.T @ errors[i]
        delta = cell.act.d1(trace.zs[i]) * eps
        db += delta
        dW += np.outer(delta, trace.hs[i])
        dU += np.outer(delta, batch.xs[i])
    return RnnGradients(dW, dU, db, dV, dc)


def _apply_param_adjoint(dpsi, h_prev, x, v):
    """Adjoint parameter derivative of one transition applied to ``v``, flattened."""
    delta = dpsi * v
    return np.concatenate([np.outer(delta, h_prev).ravel(), np.outer(delta, x).ravel(), delta])


def _param_adjoint_matrix(dpsi, h_prev, x) -> np.ndarray:
    """The same map as an explicit (dim theta, n_h) matrix."""
    D = np.diag(dpsi)
    n_h = dpsi.size
    blk_W = np.einsum("aj,b->abj", D, h_prev).reshape(n_h * n_h, n_h)
    blk_U = np.einsum("aj,b->abj", D, x).reshape(n_h * x.size, n_h)
    return np.vstack([blk_W, blk_U, D])


def rtrl_gradients(cell: RnnParams, pred: PredictParams, batch: SequenceBatch) -> RnnGradients:
    """Forward-mode gradients: propagate the adjoint sensitivity of h_i w.r.t. theta.

    ``sens`` holds the adjoint of d h_{i-1} / d theta as a (dim theta, n_h)
    matrix; each step composes it with the adjoint of the transition Jacobian
    and adds the transition's own parameter adjoint.
    """
    trace = rnn_forward(cell, pred, batch)
    errors, dV, dc = _prediction_grads(pred, trace, batch)
    n_h, n_x = cell.n_h, cell.n_x
    dim = n_h * n_h + n_h * n_x + n_h
    sens = np.zeros((dim, n_h))  # h_0 does not depend on theta
    grad = np.zeros(dim)
    for i in range(len(batch)):
        h, x = trace.hs[i], batch.xs[i]
        dpsi = cell.act.d1(trace.zs[i])
        jac_adj = cell.W.T * dpsi  # W^T diag(Psi'(z_i))
        w = pred.V.T @ errors[i]
        grad += sens @ (jac_adj @ w) + _apply_param_adjoint(dpsi, h, x, w)
        sens = sens @ jac_adj + _param_adjoint_matrix(dpsi, h, x)
    dW = grad[: n_h * n_h].reshape(n_h, n_h)
    dU = grad[n_h * n_h : n_h * n_h + n_h * n_x].reshape(n_h, n_x)
    db = grad[n_h * n_h + n_h * n_x :].copy()
    return RnnGradients(dW, dU, db, dV, dc)


def truncated_bptt_gradients(cell: RnnParams, pred: PredictParams, batch: SequenceBatch, m: int) -> RnnGradients:
    """BPTT where each loss term reaches back over at most ``m`` time-steps (itself included).

    ``m == len(batch)`` reproduces full BPTT; ``m == 1`` keeps only the
    direct V^T e_i contribution at each step.
    """
    L = len(batch)
    if not 1 <= m <= L:
        raise ParameterError(f"truncation window must lie in [1, {L}], got {m}")
    if m == L:
        return bptt_gradients(cell, pred, batch)
    trace = rnn_forward(cell, pred, batch)
    errors, dV, dc = _prediction_grads(pred, trace, batch)
    dW = np.zeros_like(cell.W)
    dU = np.zeros_like(cell.U)
    db = np.zeros_like(cell.b)
    dpsi = cell.act.d1(trace.zs)
    for j in range(L):
        eps = pred.V.T @ errors[j]
        for i in range(j, max(j - m, -1), -1):
            if i < j:
                eps = cell.W.T @ (dpsi[i + 1] * eps)
            delta = dpsi[i] * eps
            db += delta
            dW += np.outer(delta, trace.hs[i])
            dU += np.outer(delta, batch.xs[i])
    return RnnGradients(dW, dU, db, dV, dc)
