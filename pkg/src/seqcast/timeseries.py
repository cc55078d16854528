"""Series ingestion, technical indicators, transforms, scaling and supervised windowing."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import DataError, DimensionError, ParameterError

__all__ = [
    "OHLCV_COLUMNS",
    "INDICATOR_COLUMNS",
    "SeriesFrame",
    "ScalerParams",
    "WindowedDataset",
    "load_csv",
    "load_ohlcv_csv",
    "rolling_mean",
    "rolling_std",
    "ema",
    "span_to_beta",
    "compute_indicators",
    "fourier_lowpass",
    "returns",
    "prices_from_returns",
    "difference",
    "log_transform",
    "scaler_fit",
    "scaler_apply",
    "scaler_invert",
    "median_smooth",
    "mean_smooth",
    "hanning_smooth",
    "hanning_53",
    "make_windows",
    "train_test_split",
]

OHLCV_COLUMNS = ("open", "high", "low", "close", "adj_close", "volume")
INDICATOR_COLUMNS = ("ma7", "ma21", "12EMA", "26EMA", "MACD", "20sd", "upper_band", "lower_band")


@dataclass(frozen=True)
class SeriesFrame:
    """Timestamped, equal-length named columns. NaN marks a not-yet-defined feature value."""

    timestamps: np.ndarray
    columns: dict = field(default_factory=dict)

    def __post_init__(self):
        ts = np.asarray(self.timestamps, dtype="datetime64[D]")
        cols = {k: np.asarray(v, dtype=np.float64) for k, v in self.columns.items()}
        for name, col in cols.items():
            if col.shape != ts.shape:
                raise DimensionError(f"column {name!r} has length {col.size}, timestamps {ts.size}")
        if ts.size > 1 and not np.all(ts[1:] > ts[:-1]):
            raise DataError("timestamps must be strictly increasing")
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "columns", cols)

    def __len__(self):
        return self.timestamps.size

    def __getitem__(self, name) -> np.ndarray:
        try:
            return self.columns[name]
        except KeyError:
            raise KeyError(f"no column {name!r}; have {list(self.columns)}") from None

    @property
    def names(self) -> list:
        return list(self.columns)

    def with_columns(self, **new) -> "SeriesFrame":
        return SeriesFrame(self.timestamps, self.columns | new)

    def rows(self, sl) -> "SeriesFrame":
        return SeriesFrame(self.timestamps[sl], {k: v[sl] for k, v in self.columns.items()})

    def dropna(self, subset=None) -> "SeriesFrame":
        names = self.names if subset is None else list(subset)
        keep = np.ones(len(self), dtype=bool)
        for name in names:
            keep &= ~np.isnan(self[name])
        return self.rows(keep)

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["date", *self.names])
        for i, ts in enumerate(self.timestamps):
            w.writerow([str(ts), *(_fmt(self.columns[k][i]) for k in self.names)])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text


def _fmt(x: float) -> str:
    return "" if math.isnan(x) else repr(float(x))


def load_csv(path, required=(), allow_missing: bool = False) -> SeriesFrame:
    """Read a ``date,<numeric columns...>`` CSV with ISO-8601 dates."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    reader = csv.reader(io.StringIO(text))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise DataError("empty file", line=1) from None
    if not header or header[0] != "date":
        raise DataError("first header field must be 'date'", line=1)
    missing = [c for c in required if c not in header]
    if missing:
        raise DataError(f"missing columns {missing}", line=1)
    dates = []
    values = []
    for line_no, row in enumerate(reader, start=2):
        if not row or all(not f.strip() for f in row):
            continue
        if len(row) != len(header):
            raise DataError(f"expected {len(header)} fields, got {len(row)}", line=line_no)
        try:
            dates.append(np.datetime64(row[0].strip(), "D"))
        except ValueError:
            raise DataError(f"bad date {row[0]!r}", line=line_no) from None
        parsed = []
        for name, raw in zip(header[1:], row[1:]):
            raw = raw.strip()
            if raw == "":
                if not allow_missing:
                    raise DataError(f"missing value in column {name!r}", line=line_no)
                parsed.append(math.nan)
                continue
            try:
                v = float(raw)
            except ValueError:
                raise DataError(f"non-numeric value {raw!r} in column {name!r}", line=line_no) from None
            if not math.isfinite(v):
                raise DataError(f"non-finite value in column {name!r}", line=line_no)
            parsed.append(v)
        values.append(parsed)
    if not dates:
        raise DataError("no data rows", line=2)
    ts = np.array(dates, dtype="datetime64[D]")
    bad = np.nonzero(ts[1:] <= ts[:-1])[0]
    if bad.size:
        raise DataError(f"dates not strictly increasing ({ts[bad[0]]} then {ts[bad[0] + 1]})", line=int(bad[0]) + 3)
    arr = np.array(values, dtype=np.float64).reshape(len(dates), len(header) - 1)
    return SeriesFrame(ts, {name: arr[:, j] for j, name in enumerate(header[1:])})


def load_ohlcv_csv(path) -> SeriesFrame:
    return load_csv(path, required=OHLCV_COLUMNS)


def rolling_mean(x, window: int) -> np.ndarray:
    """Trailing mean; the first ``window - 1`` entries are NaN."""
    x = np.asarray(x, dtype=np.float64)
    out = np.full(x.size, np.nan)
    if x.size >= window:
        out[window - 1 :] = sliding_window_view(x, window).mean(axis=1)
    return out


def rolling_std(x, window: int) -> np.ndarray:
    """Trailing population standard deviation (divide by ``window``)."""
    x = np.asarray(x, dtype=np.float64)
    out = np.full(x.size, np.nan)
    if x.size >= window:
        out[window - 1 :] = sliding_window_view(x, window).std(axis=1)
    return out


def span_to_beta(span: int) -> float:
    return 1.0 - 2.0 / (span + 1.0)


def ema(series, beta: float, v0_policy: str = "first") -> np.ndarray:
    """V_t = beta V_{t-1} + (1 - beta) S_t.

    ``v0_policy="first"`` starts from V_0 = S_0; ``"zero"`` starts the
    recurrence from V_{-1} = 0.
    """
    if not 0.0 <= beta < 1.0:
        raise ParameterError(f"beta must lie in [0, 1), got {beta}")
    s = np.asarray(series, dtype=np.float64)
    out = np.empty_like(s)
    if s.size == 0:
        return out
    if v0_policy == "first":
        v = s[0]
        out[0] = v
        start = 1
    elif v0_policy == "zero":
        v = 0.0
        start = 0
    else:
        raise ParameterError(f"unknown v0 policy {v0_policy!r}")
    for t in range(start, s.size):
        v = beta * v + (1.0 - beta) * s[t]
        out[t] = v
    return out


def compute_indicators(frame: SeriesFrame, price_col: str = "adj_close") -> SeriesFrame:
    p = frame[price_col]
    if p.size < 26:
        raise DataError(f"need at least 26 observations for indicators, got {p.size}")
    ma21 = rolling_mean(p, 21)
    sd20 = rolling_std(p, 20)
    e12 = ema(p, span_to_beta(12))
    e26 = ema(p, span_to_beta(26))
    return frame.with_columns(
        ma7=rolling_mean(p, 7),
        ma21=ma21,
        **{"12EMA": e12, "26EMA": e26, "MACD": e12 - e26, "20sd": sd20},
        upper_band=ma21 + 2.0 * sd20,
        lower_band=ma21 - 2.0 * sd20,
    )


def fourier_lowpass(series, K: int, return_residual: bool = False):
    """Keep the DC term and the K-1 lowest positive frequencies (plus conjugates).

    With ``return_residual`` also returns max |Im| of the inverse transform
    before it is discarded.
    """
    s = np.asarray(series, dtype=np.float64)
    n = s.size
    if not 1 <= K <= n:
        raise ParameterError(f"K must lie in [1, {n}], got {K}")
    coef = np.fft.fft(s)
    k = np.arange(n)
    coef[np.minimum(k, n - k) >= K] = 0.0
    back = np.fft.ifft(coef)
    residual = float(np.max(np.abs(back.imag))) if n else 0.0
    if return_residual:
        return back.real, residual
    return back.real


def returns(series) -> np.ndarray:
    """One-period simple returns P_t / P_{t-1} - 1 (length n - 1)."""
    p = np.asarray(series, dtype=np.float64)
    if p.size < 2:
        raise DataError("need at least two prices for returns")
    if np.any(p <= 0):
        raise DataError("prices must be positive")
    return p[1:] / p[:-1] - 1.0


def prices_from_returns(p0: float, r) -> np.ndarray:
    r = np.asarray(r, dtype=np.float64)
    out = np.empty(r.size + 1)
    out[0] = p0
    for t in range(r.size):
        out[t + 1] = out[t] * (1.0 + r[t])
    return out


def difference(series, d: int = 1) -> np.ndarray:
    if d < 1:
        raise ParameterError(f"differencing order must be >= 1, got {d}")
    return np.diff(np.asarray(series, dtype=np.float64), n=d)


def log_transform(series) -> np.ndarray:
    s = np.asarray(series, dtype=np.float64)
    if np.any(s <= 0):
        raise DataError("log requires positive values")
    return np.log(s)


@dataclass(frozen=True)
class ScalerParams:
    kind: str
    mins: dict
    maxs: dict
    L: float = 0.0
    U: float = 1.0

    def coeffs(self, name):
        """(a, b) such that scaled = a * x + b."""
        lo, hi = self.mins[name], self.maxs[name]
        if self.kind == "minmax01":
            a = 1.0 / (hi - lo)
            return a, -lo * a
        a = (self.U - self.L) / (hi - lo)
        return a, self.U - a * hi

    def apply(self, name, x):
        x = np.asarray(x, dtype=np.float64)
        if self.kind == "minmax01":
            lo, hi = self.mins[name], self.maxs[name]
            return (x - lo) / (hi - lo)
        a, b = self.coeffs(name)
        return a * x + b

    def invert(self, name, x):
        x = np.asarray(x, dtype=np.float64)
        lo, hi = self.mins[name], self.maxs[name]
        if self.kind == "minmax01":
            return x * (hi - lo) + lo
        a, b = self.coeffs(name)
        return (x - b) / a


def scaler_fit(frame: SeriesFrame, columns=None, kind: str = "minmax01", L: float = 0.05, U: float = 0.95) -> ScalerParams:
    """Fit per-column statistics; pass only the training partition."""
    if kind not in ("minmax01", "affine"):
        raise ParameterError(f"unknown scaler kind {kind!r}")
    if kind == "affine" and not L < U:
        raise ParameterError(f"need L < U, got L={L}, U={U}")
    columns = frame.names if columns is None else list(columns)
    mins, maxs = {}, {}
    for name in columns:
        col = frame[name]
        col = col[~np.isnan(col)]
        if col.size == 0 or col.max() <= col.min():
            raise DataError(f"column {name!r} is constant; cannot scale")
        mins[name] = float(col.min())
        maxs[name] = float(col.max())
    if kind == "minmax01":
        L, U = 0.0, 1.0
    return ScalerParams(kind, mins, maxs, float(L), float(U))


def scaler_apply(params: ScalerParams, frame: SeriesFrame) -> SeriesFrame:
    return frame.with_columns(**{n: params.apply(n, frame[n]) for n in params.mins if n in frame.columns})


def scaler_invert(params: ScalerParams, frame: SeriesFrame) -> SeriesFrame:
    return frame.with_columns(**{n: params.invert(n, frame[n]) for n in params.mins if n in frame.columns})


def _shrinking(x, half: int, reduce):
    x = np.asarray(x, dtype=np.float64)
    n = x.size
    out = np.empty(n)
    for i in range(n):
        r = min(half, i, n - 1 - i)
        out[i] = reduce(x[i - r : i + r + 1])
    return out


def median_smooth(x, width: int = 5) -> np.ndarray:
    return _shrinking(x, width // 2, np.median)


def mean_smooth(x, width: int = 3) -> np.ndarray:
    return _shrinking(x, width // 2, np.mean)


def hanning_smooth(z) -> np.ndarray:
    """u(i) = (z(i-1) + 2 z(i) + z(i+1)) / 4; endpoints pass through unchanged."""
    z = np.asarray(z, dtype=np.float64)
    u = z.copy()
    u[1:-1] = (z[:-2] + 2.0 * z[1:-1] + z[2:]) / 4.0
    return u


def hanning_53(series) -> np.ndarray:
    """5-point running median, 3-point running mean, then Hanning weights."""
    s = np.asarray(series, dtype=np.float64)
    if s.size < 5:
        raise DataError(f"need at least 5 observations, got {s.size}")
    return hanning_smooth(mean_smooth(median_smooth(s, 5), 3))


@dataclass(frozen=True)
class WindowedDataset:
    """Samples ``X[j] = rows j..j+tau-1`` with target ``y[j]`` at row ``j + tau``."""

    X: np.ndarray  # (samples, tau, d)
    y: np.ndarray  # (samples,)
    tau: int
    feature_cols: tuple
    target_col: str
    target_rows: np.ndarray  # row index of each target in the source frame
    timestamps: np.ndarray  # timestamp of each target

    @property
    def d(self) -> int:
        return self.X.shape[2]

    def __len__(self):
        return len(self.y)

    def subset(self, idx) -> "WindowedDataset":
        return WindowedDataset(
            self.X[idx], self.y[idx], self.tau, self.feature_cols, self.target_col,
            self.target_rows[idx], self.timestamps[idx],
        )


def make_windows(frame, feature_cols=None, target_col=None, tau: int | None = None) -> WindowedDataset:
    """One-step-ahead supervised windows over a frame (or a bare 1-D series)."""
    if tau is None:
        raise ParameterError("time-step tau is required")
    if not isinstance(frame, SeriesFrame):
        values = np.asarray(frame, dtype=np.float64)
        frame = SeriesFrame(np.arange(values.size).astype("datetime64[D]"), {"value": values})
        feature_cols, target_col = ["value"], "value"
    if feature_cols is None or target_col is None:
        raise ParameterError("feature_cols and target_col are required for frames")
    feature_cols = tuple(feature_cols)
    n = len(frame)
    if tau < 1:
        raise ParameterError(f"time-step must be >= 1, got {tau}")
    if n <= tau:
        raise DataError(f"series length {n} must exceed time-step {tau}")
    data = np.column_stack([frame[c] for c in feature_cols])  # (n, d)
    # sliding_window_view gives (n - tau + 1, d, tau); drop the last window, it has no target
    X = np.ascontiguousarray(sliding_window_view(data, tau, axis=0)[: n - tau].transpose(0, 2, 1))
    rows = np.arange(tau, n)
    return WindowedDataset(X, frame[target_col][rows].copy(), tau, feature_cols, target_col, rows, frame.timestamps[rows])


def train_test_split(data, ratio: float):
    """Chronological split: the first floor(ratio * n) items train, the rest test."""
    if not 0.0 < ratio <= 1.0:
        raise ParameterError(f"ratio must lie in (0, 1], got {ratio}")
    n = len(data)
    k = int(math.floor(ratio * n))
    if isinstance(data, SeriesFrame):
        return data.rows(slice(0, k)), data.rows(slice(k, n))
    if isinstance(data, WindowedDataset):
        return data.subset(slice(0, k)), data.subset(slice(k, n))
    arr = np.asarray(data)
    return arr[:k], arr[k:]
