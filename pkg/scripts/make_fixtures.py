"""Regenerate the seeded CSV fixtures under tests/fixtures/."""

import argparse
from pathlib import Path

import numpy as np

from seqcast.arma import simulate_arma
from seqcast.timeseries import SeriesFrame

START = np.datetime64("2010-01-04", "D")


def dates(n):
    return START + np.arange(n)


def random_walk_ohlcv(n=2500, seed=8):
    """Geometric random walk close with derived open/high/low and a volume column."""
    rng = np.random.default_rng(seed)
    close = 100.0 * np.exp(np.cumsum(rng.normal(0.0, 0.01, n)))
    open_ = np.concatenate([[100.0], close[:-1]])
    wiggle = np.abs(rng.normal(0.0, 0.003, (2, n)))
    high = np.maximum(open_, close) * (1.0 + wiggle[0])
    low = np.minimum(open_, close) * (1.0 - wiggle[1])
    volume = np.round(rng.lognormal(13.0, 0.3, n))
    cols = {"open": open_, "high": high, "low": low, "close": close, "adj_close": close, "volume": volume}
    return SeriesFrame(dates(n), {k: np.round(v, 6) for k, v in cols.items()})


def single(values):
    return SeriesFrame(dates(len(values)), {"value": np.round(values, 10)})


def build(out: Path):
    out.mkdir(parents=True, exist_ok=True)
    random_walk_ohlcv().to_csv(out / "random_walk.csv")
    single(np.random.default_rng(11).normal(size=1000)).to_csv(out / "white_noise.csv")
    single(np.sin(2.0 * np.pi * np.arange(400) / 20.0)).to_csv(out / "sine.csv")
    single(simulate_arma([0.7], [], 2000, seed=13)).to_csv(out / "ar1.csv")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "tests" / "fixtures"))
    build(Path(ap.parse_args().out))
