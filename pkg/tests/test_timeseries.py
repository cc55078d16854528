import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import FIXTURES
from seqcast.errors import DataError, DimensionError, ParameterError
from seqcast.timeseries import (
    INDICATOR_COLUMNS, SeriesFrame, compute_indicators, difference, ema, fourier_lowpass, hanning_53,
    hanning_smooth, load_csv, load_ohlcv_csv, log_transform, make_windows, median_smooth, prices_from_returns,
    returns, scaler_apply, scaler_fit, scaler_invert, span_to_beta, train_test_split,
)

HEADER = "date,open,high,low,close,adj_close,volume\n"


def write(tmp_path, text, name="d.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


def frame_of(values, **extra):
    ts = np.datetime64("2020-01-01") + np.arange(len(values))
    return SeriesFrame(ts, {"adj_close": values, **extra})


# ---- loading


def test_load_three_rows(tmp_path):
    rows = "".join(f"2020-01-0{i},1,2,0.5,1.5,1.4,{100 * i}\n" for i in (1, 2, 3))
    f = load_ohlcv_csv(write(tmp_path, HEADER + rows))
    assert len(f) == 3 and f["volume"].tolist() == [100.0, 200.0, 300.0]
    assert str(f.timestamps[-1]) == "2020-01-03"


@pytest.mark.parametrize(
    "text,line",
    [
        ("", 1),
        (HEADER + "2020-01-01,1,2,0.5,1.5,1.4,100\n2020-01-01,1,2,0.5,1.5,1.4,100\n", 3),
        (HEADER + "2020-01-01,1,2,0.5,1.5,1.4,100\n2020-01-02,1,x,0.5,1.5,1.4,100\n", 3),
        (HEADER + "2020-01-01,1,2,0.5,,1.4,100\n", 2),
        (HEADER + "2020-01-01,1,2,0.5,1.4,100\n", 2),
        ("date,open\n2020-01-01,1\n", 1),
    ],
)
def test_load_errors_carry_line_numbers(tmp_path, text, line):
    with pytest.raises(DataError) as info:
        load_ohlcv_csv(write(tmp_path, text))
    assert info.value.line == line


def test_load_missing_file(tmp_path):
    with pytest.raises(DataError):
        load_csv(tmp_path / "nope.csv")


def test_fixture_loads():
    f = load_ohlcv_csv(FIXTURES / "random_walk.csv")
    assert len(f) == 2500 and np.all(f["adj_close"] > 0)


def test_frame_rejects_unequal_columns_and_round_trips_csv(tmp_path):
    with pytest.raises(DimensionError):
        SeriesFrame(np.arange(3).astype("datetime64[D]"), {"a": np.zeros(2)})
    f = frame_of(np.array([1.0, 2.5, 3.0]), x=np.array([np.nan, 0.1, 1e-17]))
    path = tmp_path / "f.csv"
    f.to_csv(path)
    back = load_csv(path, allow_missing=True)
    assert np.array_equal(back["x"], f["x"], equal_nan=True) and back["adj_close"].tobytes() == f["adj_close"].tobytes()
    assert len(f.dropna()) == 2


# ---- indicators


def test_constant_series_indicators():
    f = compute_indicators(frame_of(np.full(40, 7.0)))
    tail = slice(25, None)
    assert np.all(f["ma7"][tail] == 7.0) and np.allclose(f["MACD"], 0.0, atol=1e-12)
    assert np.all(f["20sd"][tail] == 0.0)
    assert np.allclose(f["upper_band"][tail], 7.0) and np.allclose(f["lower_band"][tail], 7.0)


def test_ma7_of_ramp_and_warmup():
    f = compute_indicators(frame_of(np.arange(1.0, 31.0)))
    assert f["ma7"][6] == 4.0 and np.all(np.isnan(f["ma7"][:6]))
    assert np.all(np.isnan(f["ma21"][:20])) and not np.isnan(f["ma21"][20])
    with pytest.raises(DataError):
        compute_indicators(frame_of(np.arange(1.0, 26.0)))


def _ema_expansion(s, beta):
    out = np.empty(s.size)
    for t in range(s.size):
        acc = beta**t * s[0]
        acc += (1 - beta) * sum(beta**i * s[t - i] for i in range(t))
        out[t] = acc
    return out


def test_indicators_match_brute_force(rng):
    p = 100 + np.cumsum(rng.normal(size=500))
    f = compute_indicators(frame_of(p))
    n = p.size
    for name, w in (("ma7", 7), ("ma21", 21)):
        brute = np.array([np.mean(p[t - w + 1 : t + 1]) if t >= w - 1 else np.nan for t in range(n)])
        assert np.allclose(f[name], brute, rtol=0, atol=1e-12, equal_nan=True)
    sd = np.array([math.sqrt(sum((v - np.mean(p[t - 19 : t + 1])) ** 2 for v in p[t - 19 : t + 1]) / 20) if t >= 19 else np.nan for t in range(n)])
    assert np.allclose(f["20sd"], sd, rtol=0, atol=1e-12, equal_nan=True)
    e12, e26 = _ema_expansion(p, span_to_beta(12)), _ema_expansion(p, span_to_beta(26))
    assert np.max(np.abs(f["12EMA"] - e12)) <= 1e-12 * np.max(np.abs(p))
    assert np.max(np.abs(f["MACD"] - (e12 - e26))) <= 1e-12 * np.max(np.abs(p))
    full = slice(20, None)
    assert np.all(np.isnan(f["upper_band"][:20]))
    assert np.allclose(f["upper_band"][full], f["ma21"][full] + 2 * sd[full], rtol=0, atol=1e-11)
    assert np.allclose(f["lower_band"][full], f["ma21"][full] - 2 * sd[full], rtol=0, atol=1e-11)
    assert set(INDICATOR_COLUMNS) <= set(f.names)


def test_ema_examples():
    s = np.array([3.0, -1.0, 4.0, 1.5])
    assert np.array_equal(ema(s, 0.0), s)
    assert np.allclose(ema(np.full(9, 2.5), 0.7), 2.5, rtol=0, atol=1e-15)
    assert ema([1.0, 2.0, 3.0], 0.5).tolist() == [1.0, 1.5, 2.25]
    assert ema([2.0, 2.0], 0.5, v0_policy="zero").tolist() == [1.0, 1.5]
    for bad in (-0.1, 1.0):
        with pytest.raises(ParameterError):
            ema(s, bad)
    assert span_to_beta(12) == pytest.approx(11 / 13)


# ---- fourier


def test_fourier_examples(rng):
    x = rng.normal(size=50)
    assert np.max(np.abs(fourier_lowpass(x, 50) - x)) <= 1e-9
    t = np.arange(64)
    c = np.cos(2 * np.pi * 3 * t / 64)
    assert np.max(np.abs(fourier_lowpass(c, 4) - c)) <= 1e-9
    assert np.max(np.abs(fourier_lowpass(c, 3))) <= 1e-9
    _, resid = fourier_lowpass(x, 7, return_residual=True)
    assert resid <= 1e-12
    assert fourier_lowpass(x, 1) == pytest.approx(np.full(50, x.mean()), abs=1e-12)
    for K in (0, 51):
        with pytest.raises(ParameterError):
            fourier_lowpass(x, K)


# ---- transforms


def test_returns_examples():
    assert not returns(np.full(5, 3.0)).any()
    assert returns([100.0, 110.0]) == pytest.approx([0.1], abs=1e-15)
    with pytest.raises(DataError):
        returns([1.0, 0.0, 2.0])
    with pytest.raises(DataError):
        returns([1.0])


@settings(max_examples=80, deadline=None)
@given(arrays(np.float64, st.integers(2, 60), elements=st.floats(0.5, 500.0)))
def test_returns_round_trip(p):
    back = prices_from_returns(p[0], returns(p))
    assert np.max(np.abs(back - p) / p) <= 1e-12


def test_difference_and_log():
    assert np.all(difference(np.arange(10.0) * 3 + 1) == 3.0)
    assert difference([1.0, 4.0, 9.0, 16.0], 2).tolist() == [2.0, 2.0]
    ramp = np.linspace(-2, 3, 11)
    assert np.allclose(log_transform(np.exp(ramp)), ramp, rtol=0, atol=1e-14)
    with pytest.raises(DataError):
        log_transform([1.0, -1.0])
    with pytest.raises(ParameterError):
        difference([1.0, 2.0], 0)


# ---- scaling


def test_scaler_examples(rng):
    x = rng.normal(size=30) * 5 + 2
    f = frame_of(x)
    mm = scaler_fit(f)
    s = scaler_apply(mm, f)["adj_close"]
    assert s[np.argmin(x)] == 0.0 and s[np.argmax(x)] == 1.0
    assert np.max(np.abs(scaler_invert(mm, scaler_apply(mm, f))["adj_close"] - x)) <= 1e-12
    af = scaler_fit(f, kind="affine", L=0.05, U=0.95)
    sa = af.apply("adj_close", x)
    assert sa[np.argmin(x)] == pytest.approx(0.05, abs=1e-15) and sa[np.argmax(x)] == pytest.approx(0.95, abs=1e-15)
    assert np.max(np.abs(af.invert("adj_close", sa) - x)) <= 1e-12
    with pytest.raises(DataError):
        scaler_fit(frame_of(np.ones(5)))
    with pytest.raises(ParameterError):
        scaler_fit(f, kind="affine", L=1.0, U=0.0)


def test_scaler_fits_train_only():
    x = np.concatenate([np.linspace(1, 2, 80), np.linspace(2, 3, 20)])
    train, test = train_test_split(frame_of(x), 0.8)
    params = scaler_fit(train)
    scaled_test = scaler_apply(params, test)["adj_close"]
    assert scaled_test.max() > 1.0


# ---- smoothing


def test_hanning_examples():
    assert np.array_equal(hanning_53(np.full(12, 4.2)), np.full(12, 4.2))
    assert hanning_smooth([0, 0, 1, 0, 0]).tolist() == [0, 0.25, 0.5, 0.25, 0]
    spike = np.array([0, 0, 0, 9, 0, 0, 0], dtype=float)
    assert median_smooth(spike, 5)[3] == 0.0
    assert np.array_equal(hanning_53(spike), np.zeros(7))
    with pytest.raises(DataError):
        hanning_53([1.0, 2.0, 3.0, 4.0])


# ---- windows and split


def test_window_examples():
    w = make_windows(np.arange(10.0, 100.0, 10.0), tau=3)
    assert w.X[0, :, 0].tolist() == [10, 20, 30] and w.y[0] == 40
    assert w.X[1, :, 0].tolist() == [20, 30, 40] and w.y[1] == 50
    assert len(make_windows(np.arange(9.0), tau=8)) == 1
    assert len(make_windows(np.arange(100.0), tau=60)) == 40
    with pytest.raises(DataError):
        make_windows(np.arange(5.0), tau=5)
    with pytest.raises(ParameterError):
        make_windows(np.arange(5.0), tau=0)


def test_windows_over_frames_track_rows(rng):
    f = frame_of(rng.normal(size=20) + 5, vol=rng.normal(size=20))
    w = make_windows(f, ["adj_close", "vol"], "adj_close", 4)
    assert w.X.shape == (16, 4, 2) and w.d == 2
    assert np.array_equal(w.X[3, :, 1], f["vol"][3:7])
    assert np.array_equal(w.timestamps, f.timestamps[4:]) and np.array_equal(w.target_rows, np.arange(4, 20))


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, st.integers(2, 80), elements=st.floats(-1e6, 1e6)), st.integers(1, 40))
def test_windows_reconstruct_series(s, tau):
    if tau >= s.size:
        return
    w = make_windows(s, tau=tau)
    rebuilt = np.concatenate([w.X[0, :, 0], w.y])
    assert np.array_equal(rebuilt, s)
    assert np.array_equal(w.X[1:, :-1, 0], w.X[:-1, 1:, 0])


def test_split_examples():
    f = frame_of(np.arange(100.0))
    train, test = train_test_split(f, 0.8)
    assert (len(train), len(test)) == (80, 20)
    assert train.timestamps.max() < test.timestamps.min()
    a, b = train_test_split(np.arange(7), 1.0)
    assert len(a) == 7 and len(b) == 0
    w = make_windows(np.arange(50.0), tau=5)
    wt, ws = train_test_split(w, 0.5)
    assert wt.target_rows.max() < ws.target_rows.min()
    for bad in (0.0, 1.5):
        with pytest.raises(ParameterError):
            train_test_split(f, bad)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 500), st.floats(0.01, 1.0))
def test_split_sizes(n, ratio):
    a, b = train_test_split(np.arange(n), ratio)
    assert len(a) == math.floor(ratio * n) and len(a) + len(b) == n
