"""Regression error measures and the forecast-lag detector."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError, DimensionError, ParameterError

__all__ = ["MetricsReport", "LagReport", "regression_metrics", "detect_forecast_lag"]


@dataclass(frozen=True)
class MetricsReport:
    mse: float
    rmse: float
    mae: float
    mape: float | None  # percent; None when not requested
    r2: float

    def as_dict(self) -> dict:
        return {"mse": self.mse, "rmse": self.rmse, "mae": self.mae, "mape": self.mape, "r2": self.r2}

    def to_text(self) -> str:
        return "".join(f"{k}: {'' if v is None else repr(float(v))}\n" for k, v in self.as_dict().items())

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["metric", "value"])
        for k, v in self.as_dict().items():
            w.writerow([k, "" if v is None else repr(float(v))])
        return buf.getvalue()


def _pair(y, y_hat):
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    y_hat = np.asarray(y_hat, dtype=np.float64).reshape(-1)
    if y.size != y_hat.size:
        raise DimensionError(f"length mismatch: {y.size} targets vs {y_hat.size} predictions")
    if y.size == 0:
        raise DimensionError("empty series")
    return y, y_hat


def regression_metrics(y, y_hat, mape: bool = True) -> MetricsReport:
    """MSE, RMSE, MAE, MAPE (percent) and R^2 = 1 - SSE/SST.

    R^2 of a constant target is reported as 1.0 for a perfect fit and -inf otherwise.
    """
    y, y_hat = _pair(y, y_hat)
    e = y_hat - y
    sse = float(e @ e)
    mse = sse / y.size
    mape_val = None
    if mape:
        if np.any(y == 0):
            raise DataError("MAPE is undefined with zero targets")
        mape_val = 100.0 * float(np.mean(np.abs(e / y)))
    d = y - y.mean()
    sst = float(d @ d)
    if sst > 0:
        r2 = 1.0 - sse / sst
    else:
        r2 = 1.0 if sse == 0 else -math.inf
    return MetricsReport(mse, math.sqrt(mse), float(np.mean(np.abs(e))), mape_val, r2)


@dataclass(frozen=True)
class LagReport:
    best_lag: int
    correlation_by_lag: dict
    mse_by_lag: dict

    def to_text(self) -> str:
        lines = [f"best_lag: {self.best_lag}"]
        lines += [f"corr_lag_{k}: {v!r}" for k, v in self.correlation_by_lag.items()]
        lines += [f"mse_lag_{k}: {v!r}" for k, v in self.mse_by_lag.items()]
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["lag", "correlation", "mse"])
        for k in self.correlation_by_lag:
            w.writerow([k, repr(self.correlation_by_lag[k]), repr(self.mse_by_lag[k])])
        return buf.getvalue()


def _pearson(a, b) -> float:
    a = a - a.mean()
    b = b - b.mean()
    den = math.sqrt(float(a @ a) * float(b @ b))
    return float(a @ b) / den if den > 0 else 0.0


def detect_forecast_lag(y, y_hat, max_lag: int = 10) -> LagReport:
    """Correlate y_hat_t with y_{t-k} for k = 0..max_lag; best_lag is the argmax (ties -> smallest k).

    A best_lag above zero means the predictions track delayed truth better
    than the truth they were meant to forecast. Zero-variance overlaps count
    as correlation 0.
    """
    y, y_hat = _pair(y, y_hat)
    if max_lag < 0:
        raise ParameterError(f"max_lag must be >= 0, got {max_lag}")
    if y.size <= max_lag + 2:
        raise DataError(f"need more than {max_lag + 2} points for max_lag={max_lag}, got {y.size}")
    corr, mse = {}, {}
    for k in range(max_lag + 1):
        pred = y_hat[k:]
        truth = y[: y.size - k]
        corr[k] = _pearson(pred, truth)
        e = pred - truth
        mse[k] = float(e @ e) / e.size
    best = max(corr, key=lambda k: (corr[k], -k))
    return LagReport(best, corr, mse)
