"""LSTM cell with forget/input/output gates and exact BPTT over the (h, c) state pair.

Gate equations, with sigma the logistic function and phi the candidate
nonlinearity (tanh by default, sigmoid also supported)::

    f  = sigma(b_f + U_f x + W_f h)
    g  = sigma(b_g + U_g x + W_g h)
    c' = f * c + g * phi(b + U x + W h)
    q  = sigma(b_o + U_o x + W_o h)
    h' = tanh(c') * q

The layer functions work on batched arrays: inputs ``(T, B, n_x)``, states
``(B, n_h)``. Single-sequence helpers wrap them with ``B = 1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError
from .linalg import SIGMOID, TANH, ElementwiseFn, activation, as_matrix, as_vector
from .nn_core import glorot_uniform
from .rnn import PredictParams, RnnTrace, SequenceBatch, _check

__all__ = [
    "GATES",
    "LSTM_PARAM_NAMES",
    "LstmParams",
    "LstmState",
    "LstmCache",
    "init_lstm",
    "lstm_step",
    "lstm_layer_forward",
    "lstm_layer_backward",
    "lstm_sequence_forward",
    "lstm_bptt_gradients",
]

# gate order used when the four affine maps are stacked into one matrix
GATES = ("f", "g", "o", "")
LSTM_PARAM_NAMES = tuple(f"{kind}{gate}" for gate in GATES for kind in ("b", "U", "W"))


@dataclass(frozen=True)
class LstmParams:
    bf: np.ndarray
    Uf: np.ndarray
    Wf: np.ndarray
    bg: np.ndarray
    Ug: np.ndarray
    Wg: np.ndarray
    bo: np.ndarray
    Uo: np.ndarray
    Wo: np.ndarray
    b: np.ndarray
    U: np.ndarray
    W: np.ndarray
    cand: ElementwiseFn = field(default_factory=lambda: activation("tanh"))

    def __post_init__(self):
        n_h = as_vector(self.b).size
        n_x = as_matrix(self.U).shape[1]
        for gate in GATES:
            b = as_vector(getattr(self, f"b{gate}"))
            U = as_matrix(getattr(self, f"U{gate}"))
            W = as_matrix(getattr(self, f"W{gate}"))
            if b.size != n_h or U.shape != (n_h, n_x) or W.shape != (n_h, n_h):
                raise DimensionError(f"gate {gate or 'cell'!r} does not conform to n_h={n_h}, n_x={n_x}")
            object.__setattr__(self, f"b{gate}", b)
            object.__setattr__(self, f"U{gate}", U)
            object.__setattr__(self, f"W{gate}", W)
        object.__setattr__(self, "cand", activation(self.cand))

    @property
    def n_h(self) -> int:
        return self.b.size

    @property
    def n_x(self) -> int:
        return self.U.shape[1]

    def params(self) -> dict:
        return {name: getattr(self, name) for name in LSTM_PARAM_NAMES}

    def replace(self, **arrays) -> "LstmParams":
        p = self.params() | arrays
        return LstmParams(**p, cand=self.cand)

    def stacked(self):
        """(W_all, U_all, b_all) with gate blocks in ``GATES`` order."""
        W = np.vstack([getattr(self, f"W{g}") for g in GATES])
        U = np.vstack([getattr(self, f"U{g}") for g in GATES])
        b = np.concatenate([getattr(self, f"b{g}") for g in GATES])
        return W, U, b


@dataclass(frozen=True)
class LstmState:
    h: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        h, c = as_vector(self.h), as_vector(self.c)
        if h.shape != c.shape:
            raise DimensionError(f"h length {h.size} vs c length {c.size}")
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "c", c)


def init_lstm(n_h: int, n_x: int, cand="tanh", seed: int = 0, forget_bias: float = 1.0) -> LstmParams:
    rng = np.random.default_rng(seed)
    arrays = {}
    for gate in GATES:
        arrays[f"U{gate}"] = glorot_uniform(rng, n_h, n_x)
        arrays[f"W{gate}"] = glorot_uniform(rng, n_h, n_h)
        arrays[f"b{gate}"] = np.zeros(n_h)
    arrays["bf"] = np.full(n_h, float(forget_bias))
    return LstmParams(**arrays, cand=cand)


def lstm_step(p: LstmParams, s: LstmState, x) -> LstmState:
    x = as_vector(x)
    if x.size != p.n_x or s.h.size != p.n_h:
        raise DimensionError(f"input {x.size}/state {s.h.size} vs cell ({p.n_h}, {p.n_x})")
    f = SIGMOID(p.bf + p.Uf @ x + p.Wf @ s.h)
    g = SIGMOID(p.bg + p.Ug @ x + p.Wg @ s.h)
    c = f * s.c + g * p.cand(p.b + p.U @ x + p.W @ s.h)
    q = SIGMOID(p.bo + p.Uo @ x + p.Wo @ s.h)
    return LstmState(TANH(c) * q, c)


@dataclass
class LstmCache:
    xs: np.ndarray  # (T, B, n_x)
    hs: np.ndarray  # (T+1, B, n_h), hs[0] = h0
    cs: np.ndarray  # (T+1, B, n_h)
    gates: np.ndarray  # (T, B, 3*n_h) post-sigmoid f, g, q
    pre_cand: np.ndarray  # (T, B, n_h)
    cand: np.ndarray  # (T, B, n_h)
    tanh_c: np.ndarray  # (T, B, n_h)


def lstm_layer_forward(p: LstmParams, xs, h0=None, c0=None) -> LstmCache:
    xs = np.asarray(xs, dtype=np.float64)
    if xs.ndim != 3 or xs.shape[2] != p.n_x:
        raise DimensionError(f"inputs must be (T, B, {p.n_x}), got {xs.shape}")
    T, B, _ = xs.shape
    n = p.n_h
    W, U, b = p.stacked()
    hs = np.empty((T + 1, B, n))
    cs = np.empty((T + 1, B, n))
    hs[0] = 0.0 if h0 is None else h0
    cs[0] = 0.0 if c0 is None else c0
    gates = np.empty((T, B, 3 * n))
    pre_cand = np.empty((T, B, n))
    cand = np.empty((T, B, n))
    tanh_c = np.empty((T, B, n))
    xproj = xs @ U.T + b  # input projections for all steps at once
    for t in range(T):
        a = xproj[t] + hs[t] @ W.T
        gates[t] = SIGMOID(a[:, : 3 * n])
        pre_cand[t] = a[:, 3 * n :]
        cand[t] = p.cand.value(pre_cand[t])
        f, g, q = gates[t, :, :n], gates[t, :, n : 2 * n], gates[t, :, 2 * n :]
        cs[t + 1] = f * cs[t] + g * cand[t]
        tanh_c[t] = np.tanh(cs[t + 1])
        hs[t + 1] = tanh_c[t] * q
    return LstmCache(xs, hs, cs, gates, pre_cand, cand, tanh_c)


def lstm_layer_backward(p: LstmParams, cache: LstmCache, dhs, dh_last=None, dc_last=None):
    """Backpropagate through a layer given dJ/dh_t loss contributions ``dhs`` (T, B, n_h).

    Returns ``(grads, dxs, dh0, dc0)`` where ``grads`` maps parameter names to
    arrays and ``dxs`` is dJ/dx_t, used to chain stacked layers.
    """
    T, B, _ = cache.xs.shape
    n = p.n_h
    W, U, _ = p.stacked()
    dW = np.zeros_like(W)
    dU = np.zeros_like(U)
    db = np.zeros(4 * n)
    dxs = np.empty_like(cache.xs)
    dh = np.zeros((B, n)) if dh_last is None else np.array(dh_last, dtype=np.float64)
    dc = np.zeros((B, n)) if dc_last is None else np.array(dc_last, dtype=np.float64)
    da = np.empty((B, 4 * n))
    for t in range(T - 1, -1, -1):
        dh = dh + dhs[t]
        f, g, q = cache.gates[t, :, :n], cache.gates[t, :, n : 2 * n], cache.gates[t, :, 2 * n :]
        tc = cache.tanh_c[t]
        dq = dh * tc
        dc = dc + dh * q * (1.0 - tc * tc)
        da[:, :n] = dc * cache.cs[t] * f * (1.0 - f)
        da[:, n : 2 * n] = dc * cache.cand[t] * g * (1.0 - g)
        da[:, 2 * n : 3 * n] = dq * q * (1.0 - q)
        da[:, 3 * n :] = dc * g * p.cand.d1(cache.pre_cand[t])
        dc = dc * f
        dW += da.T @ cache.hs[t]
        dU += da.T @ cache.xs[t]
        db += da.sum(axis=0)
        dh = da @ W
        dxs[t] = da @ U
    grads = {}
    for k, gate in enumerate(GATES):
        rows = slice(k * n, (k + 1) * n)
        grads[f"b{gate}"] = db[rows].copy()
        grads[f"U{gate}"] = dU[rows].copy()
        grads[f"W{gate}"] = dW[rows].copy()
    return grads, dxs, dh, dc


def lstm_sequence_forward(p: LstmParams, pred: PredictParams, batch: SequenceBatch) -> RnnTrace:
    _check(p, pred, batch)
    h0 = None if batch.h0 is None else batch.h0[None, :]
    cache = lstm_layer_forward(p, batch.xs[:, None, :], h0)
    hs = cache.hs[:, 0, :]
    y_hats = hs[1:] @ pred.V.T + pred.c
    return RnnTrace(hs, cache.pre_cand[:, 0, :], y_hats, cs=cache.cs[:, 0, :], cache=cache)


def lstm_bptt_gradients(p: LstmParams, pred: PredictParams, batch: SequenceBatch) -> dict:
    """Exact gradient of sum_i 0.5*||y_hat_i - y_i||^2 for every LSTM and prediction parameter."""
    trace = lstm_sequence_forward(p, pred, batch)
    errors = trace.y_hats - batch.ys
    dhs = (errors @ pred.V)[:, None, :]
    grads, _, _, _ = lstm_layer_backward(p, trace.cache, dhs)
    grads["V"] = errors.T @ trace.hs[1:]
    grads["c"] = errors.sum(axis=0)
    return grads
