"""INI run configuration. Every key has a default, so a minimal file only names ``[data] path``.

Model and optimizer defaults follow the reference LSTM hyperparameter table
(widths 100,60,20,1; learning rate 1e-4; 300 epochs; batch 20; time-step 60;
stateful layers; relu then sigmoid head).
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .errors import ConfigError

__all__ = ["RunConfig", "load_config", "parse_config"]


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _opt_float(s: str):
    return None if s.strip() == "" else float(s)


def _opt_int(s: str):
    return None if s.strip() == "" else int(s)


def _ints(s: str) -> tuple:
    return tuple(int(t) for t in s.replace(" ", "").split(",") if t)


def _words(s: str) -> tuple:
    return tuple(t.strip() for t in s.split(",") if t.strip())


@dataclass(frozen=True)
class RunConfig:
    # [data]
    path: str = ""
    column: str = "adj_close"
    target: str = "price"  # price | return
    # [features]
    indicators: bool = False
    fourier_k: tuple = ()
    add_returns: bool = False
    model_columns: tuple = ()  # model inputs; empty means the target alone
    # [stationarity]
    transform: str = "raw"  # raw | log | return | diff
    adf_lags: int = 1
    adf_trend: str = "drift"
    kpss_trend: str = "level"
    # [pipeline]
    tau: int = 60
    split: float = 0.8
    val_ratio: float = 0.1
    scaler: str = "minmax01"
    # [model]
    cell: str = "lstm"
    widths: tuple = (100, 60, 20, 1)
    dense_width: int | None = None
    dense_act: str = "relu"
    out_act: str = "sigmoid"
    rnn_act: str = "tanh"
    # [optim]
    optimizer: str = "rmsprop"
    lr: float = 1e-4
    beta: float = 0.9
    eps: float = 1e-7
    rmsprop_mode: str = "squared"
    epochs: int = 300
    batch_size: int = 20
    patience: int = 10
    clip_norm: float | None = None
    stateful: bool = True
    shuffle: bool = True
    restore_best: bool = False
    # [arma]
    p: int = 5
    q: int = 2
    auto: bool = False
    p_max: int = 5
    q_max: int = 5
    criterion: str = "bic"
    difference: int = 0
    h: int = 0  # 0: one-step-ahead over the test split; >0: h-step forecast from the train end
    # [eval]
    max_lag: int = 10
    # [run]
    seed: int = 0
    out: str = "out"
    base_dir: str = field(default=".", compare=False)

    def __post_init__(self):
        checks = {
            "target": (self.target, ("price", "return")),
            "transform": (self.transform, ("raw", "log", "return", "diff")),
            "adf_trend": (self.adf_trend, ("none", "drift", "drift+trend")),
            "kpss_trend": (self.kpss_trend, ("level", "trend")),
            "scaler": (self.scaler, ("minmax01", "affine")),
            "cell": (self.cell, ("lstm", "vanilla")),
            "optimizer": (self.optimizer, ("sgd", "momentum", "rmsprop")),
            "rmsprop_mode": (self.rmsprop_mode, ("squared", "linear")),
            "criterion": (self.criterion, ("aic", "bic")),
        }
        for key, (value, allowed) in checks.items():
            if value not in allowed:
                raise ConfigError(f"{key} must be one of {allowed}, got {value!r}")
        if not self.widths or self.widths[-1] != 1:
            raise ConfigError(f"widths must end in 1 for scalar forecasting, got {self.widths}")
        if not 0.0 < self.split <= 1.0 or not 0.0 <= self.val_ratio < 1.0:
            raise ConfigError("split must lie in (0, 1] and val_ratio in [0, 1)")
        if self.tau < 1 or self.epochs < 1 or self.batch_size < 1 or self.max_lag < 0:
            raise ConfigError("tau, epochs and batch_size must be >= 1; max_lag >= 0")
        if min(self.p, self.q, self.p_max, self.q_max, self.difference, self.h) < 0:
            raise ConfigError("ARMA orders, differencing and horizon must be >= 0")

    def data_path(self) -> Path:
        if not self.path:
            raise ConfigError("[data] path is required")
        p = Path(self.path)
        return p if p.is_absolute() else Path(self.base_dir) / p

    def out_path(self) -> Path:
        p = Path(self.out)
        return p if p.is_absolute() else Path(self.base_dir) / p

    def with_overrides(self, **kw) -> "RunConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


# section -> {ini key: (field name, parser)}
SCHEMA = {
    "data": {"path": ("path", str), "column": ("column", str), "target": ("target", str)},
    "features": {
        "indicators": ("indicators", _bool),
        "fourier_k": ("fourier_k", _ints),
        "returns": ("add_returns", _bool),
        "columns": ("model_columns", _words),
    },
    "stationarity": {
        "transform": ("transform", str),
        "adf_lags": ("adf_lags", int),
        "adf_trend": ("adf_trend", str),
        "kpss_trend": ("kpss_trend", str),
    },
    "pipeline": {
        "tau": ("tau", int),
        "split": ("split", float),
        "val_ratio": ("val_ratio", float),
        "scaler": ("scaler", str),
    },
    "model": {
        "cell": ("cell", str),
        "widths": ("widths", _ints),
        "dense_width": ("dense_width", _opt_int),
        "dense_act": ("dense_act", str),
        "out_act": ("out_act", str),
        "rnn_act": ("rnn_act", str),
    },
    "optim": {
        "optimizer": ("optimizer", str),
        "lr": ("lr", float),
        "beta": ("beta", float),
        "eps": ("eps", float),
        "rmsprop_mode": ("rmsprop_mode", str),
        "epochs": ("epochs", int),
        "batch_size": ("batch_size", int),
        "patience": ("patience", int),
        "clip_norm": ("clip_norm", _opt_float),
        "stateful": ("stateful", _bool),
        "shuffle": ("shuffle", _bool),
        "restore_best": ("restore_best", _bool),
    },
    "arma": {
        "p": ("p", int),
        "q": ("q", int),
        "auto": ("auto", _bool),
        "p_max": ("p_max", int),
        "q_max": ("q_max", int),
        "criterion": ("criterion", str),
        "difference": ("difference", int),
        "h": ("h", int),
    },
    "eval": {"max_lag": ("max_lag", int)},
    "run": {"seed": ("seed", int), "out": ("out", str)},
}

assert {f for sec in SCHEMA.values() for f, _ in sec.values()} == {f.name for f in fields(RunConfig)} - {"base_dir"}


def parse_config(text: str, base_dir=".") -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None, default_section="__defaults__")
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"unreadable config: {exc}") from exc
    values = {}
    for section in cp.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        for key, raw in cp.items(section):
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            name, parse = SCHEMA[section][key]
            try:
                values[name] = parse(raw)
            except ValueError as exc:
                raise ConfigError(f"[{section}] {key}: {exc}") from exc
    return RunConfig(base_dir=str(base_dir), **values)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, base_dir=path.parent)
