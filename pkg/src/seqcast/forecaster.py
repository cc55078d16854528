"""Stacked recurrent forecaster: recurrent layers, a relu dense layer, a sigmoid scalar output.

``widths`` lists the recurrent layer sizes followed by the output size, so the
default ``(100, 60, 20, 1)`` means three recurrent layers of 100, 60 and 20
units. Each recurrent layer's hidden-state sequence is the next layer's input
sequence; the top layer's final hidden state feeds the dense head.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ParameterError
from .linalg import activation
from .lstm import LSTM_PARAM_NAMES, LstmParams, init_lstm, lstm_layer_backward, lstm_layer_forward
from .nn_core import glorot_uniform

__all__ = [
    "ForecasterConfig",
    "StackedForecaster",
    "stacked_forecaster",
    "vanilla_layer_forward",
    "vanilla_layer_backward",
]

TABLE_WIDTHS = (100, 60, 20, 1)


@dataclass(frozen=True)
class ForecasterConfig:
    n_features: int
    widths: tuple = TABLE_WIDTHS
    time_step: int | None = 60
    cell: str = "lstm"
    dense_width: int | None = None  # defaults to the last recurrent width
    dense_act: str = "relu"
    out_act: str = "sigmoid"
    rnn_act: str = "tanh"  # vanilla cells only
    seed: int = 0

    def __post_init__(self):
        widths = tuple(int(w) for w in self.widths)
        if len(widths) < 2 or widths[-1] != 1:
            raise ParameterError(f"widths must list >= 1 recurrent layer and end in 1, got {widths}")
        if min(widths) < 1 or self.n_features < 1:
            raise ParameterError("layer widths and feature count must be positive")
        if self.cell not in ("lstm", "vanilla"):
            raise ParameterError(f"unknown cell kind {self.cell!r}")
        object.__setattr__(self, "widths", widths)

    @property
    def recurrent_widths(self) -> tuple:
        return self.widths[:-1]

    @property
    def head_width(self) -> int:
        return self.dense_width or self.recurrent_widths[-1]


def vanilla_layer_forward(W, U, b, act, xs, h0=None):
    """Batched h_t = act(W h_{t-1} + U x_t + b); returns (hs, zs)."""
    T, B, _ = xs.shape
    n = b.size
    hs = np.empty((T + 1, B, n))
    zs = np.empty((T, B, n))
    hs[0] = 0.0 if h0 is None else h0
    xproj = xs @ U.T + b
    for t in range(T):
        zs[t] = xproj[t] + hs[t] @ W.T
        hs[t + 1] = act.value(zs[t])
    return hs, zs


def vanilla_layer_backward(W, U, act, xs, hs, zs, dhs):
    T = xs.shape[0]
    dW = np.zeros_like(W)
    dU = np.zeros_like(U)
    db = np.zeros(W.shape[0])
    dxs = np.empty_like(xs)
    dh = np.zeros_like(hs[0])
    for t in range(T - 1, -1, -1):
        delta = act.d1(zs[t]) * (dh + dhs[t])
        dW += delta.T @ hs[t]
        dU += delta.T @ xs[t]
        db += delta.sum(axis=0)
        dh = delta @ W
        dxs[t] = delta @ U
    return {"W": dW, "U": dU, "b": db}, dxs


class StackedForecaster:
    """Value-like model holding a flat ``params`` dict; ``fit`` updates it in place."""

    def __init__(self, config: ForecasterConfig, params: dict | None = None):
        self.config = config
        self.dense_act = activation(config.dense_act)
        self.out_act = activation(config.out_act)
        self.rnn_act = activation(config.rnn_act)
        self.params = params if params is not None else self._init_params()

    def _init_params(self) -> dict:
        cfg = self.config
        rng = np.random.default_rng(cfg.seed)
        params = {}
        n_in = cfg.n_features
        for k, n in enumerate(cfg.recurrent_widths):
            seed = int(rng.integers(2**31))
            if cfg.cell == "lstm":
                for name, arr in init_lstm(n, n_in, seed=seed).params().items():
                    params[f"L{k}.{name}"] = arr
            else:
                r = np.random.default_rng(seed)
                params[f"L{k}.W"] = glorot_uniform(r, n, n)
                params[f"L{k}.U"] = glorot_uniform(r, n, n_in)
                params[f"L{k}.b"] = np.zeros(n)
            n_in = n
        params["dense.W"] = glorot_uniform(rng, cfg.head_width, n_in)
        params["dense.b"] = np.zeros(cfg.head_width)
        params["out.W"] = glorot_uniform(rng, 1, cfg.head_width)
        params["out.b"] = np.zeros(1)
        return params

    def copy(self) -> "StackedForecaster":
        return StackedForecaster(self.config, {k: v.copy() for k, v in self.params.items()})

    def _layer(self, k):
        if self.config.cell == "lstm":
            return LstmParams(**{name: self.params[f"L{k}.{name}"] for name in LSTM_PARAM_NAMES})
        return None

    def _check(self, X):
        X = np.asarray(X, dtype=np.float64)
        cfg = self.config
        if X.ndim != 3 or X.shape[2] != cfg.n_features:
            raise DimensionError(f"windows must be (batch, time-step, {cfg.n_features}), got {X.shape}")
        if cfg.time_step is not None and X.shape[1] != cfg.time_step:
            raise DimensionError(f"window length {X.shape[1]} vs configured time-step {cfg.time_step}")
        return X

    def forward(self, X, state=None):
        """Return (y_hat of shape (batch,), caches, final_state)."""
        X = self._check(X)
        seq = np.transpose(X, (1, 0, 2))  # (T, B, d)
        caches = []
        final = []
        for k in range(len(self.config.recurrent_widths)):
            h0, c0 = (None, None) if state is None else state[k]
            if self.config.cell == "lstm":
                p = self._layer(k)
                cache = lstm_layer_forward(p, seq, h0, c0)
                caches.append((seq, cache))
                final.append((cache.hs[-1], cache.cs[-1]))
                seq = cache.hs[1:]
            else:
                W, U, b = (self.params[f"L{k}.{n}"] for n in "WUb")
                hs, zs = vanilla_layer_forward(W, U, b, self.rnn_act, seq, h0)
                caches.append((seq, hs, zs))
                final.append((hs[-1], None))
                seq = hs[1:]
        top = seq[-1]
        dz = top @ self.params["dense.W"].T + self.params["dense.b"]
        d = self.dense_act.value(dz)
        oz = d @ self.params["out.W"].T + self.params["out.b"]
        y_hat = self.out_act.value(oz)[:, 0]
        return y_hat, (caches, top, dz, d, oz), final

    def predict(self, X, state=None) -> np.ndarray:
        return self.forward(X, state)[0]

    def mse(self, X, y) -> float:
        X = np.asarray(X)
        if len(X) == 0:
            return float("nan")
        e = self.predict(X) - np.asarray(y, dtype=np.float64)
        return float(np.mean(e * e))

    def loss(self, X, y, state=None) -> float:
        """Batch mean of 0.5*(y_hat - y)^2, the objective whose gradient ``gradients`` returns."""
        e = self.predict(X, state) - np.asarray(y, dtype=np.float64)
        return 0.5 * float(np.mean(e * e))

    @staticmethod
    def slice_state(state, k: int):
        if state is None:
            return None
        out = []
        for h, c in state:
            if len(h) < k:  # larger batch after a short one: pad with zeros
                h = np.vstack([h, np.zeros((k - len(h), h.shape[1]))])
                c = None if c is None else np.vstack([c, np.zeros((k - len(c), c.shape[1]))])
            out.append((h[:k], None if c is None else c[:k]))
        return out

    def gradients(self, X, y, state=None):
        """Batch-mean gradient of 0.5*(y_hat - y)^2 for every parameter.

        Incoming ``state`` is treated as a constant (no gradient flows into it).
        """
        y = np.asarray(y, dtype=np.float64)
        y_hat, (caches, top, dz, d, oz), final = self.forward(X, state)
        B = len(y_hat)
        e = y_hat - y
        loss = 0.5 * float(np.mean(e * e))
        grads = {}
        d_oz = (e / B)[:, None] * self.out_act.d1(oz)
        grads["out.W"] = d_oz.T @ d
        grads["out.b"] = d_oz.sum(axis=0)
        d_dz = (d_oz @ self.params["out.W"]) * self.dense_act.d1(dz)
        grads["dense.W"] = d_dz.T @ top
        grads["dense.b"] = d_dz.sum(axis=0)
        d_top = d_dz @ self.params["dense.W"]
        dhs = None
        for k in range(len(self.config.recurrent_widths) - 1, -1, -1):
            if dhs is None:
                T = caches[k][0].shape[0]
                dhs = np.zeros((T, B, top.shape[1]))
                dhs[-1] = d_top
            if self.config.cell == "lstm":
                seq_in, cache = caches[k]
                g, dxs, _, _ = lstm_layer_backward(self._layer(k), cache, dhs)
            else:
                seq_in, hs, zs = caches[k]
                W, U = self.params[f"L{k}.W"], self.params[f"L{k}.U"]
                g, dxs = vanilla_layer_backward(W, U, self.rnn_act, seq_in, hs, zs, dhs)
            for name, arr in g.items():
                grads[f"L{k}.{name}"] = arr
            dhs = dxs
        return loss, {k: grads[k] for k in self.params}, final


def stacked_forecaster(model: StackedForecaster, window) -> float:
    """Scalar prediction for a single (time-step, features) window."""
    window = np.asarray(window, dtype=np.float64)
    if window.ndim != 2:
        raise DimensionError(f"window must be (time-step, features), got {window.shape}")
    return float(model.predict(window[None])[0])
