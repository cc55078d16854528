"""Command-line front end.

Exit codes: 0 success, 1 failed check, 2 configuration error, 3 data error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import arma, checkpoint, gradcheck, svg
from . import timeseries as ts
from .config import RunConfig, load_config
from .errors import ConfigError, ConvergenceError, DataError, DimensionError, ParameterError
from .forecaster import ForecasterConfig, StackedForecaster
from .metrics import detect_forecast_lag, regression_metrics
from .optim import TrainConfig, fit

log = logging.getLogger("seqcast")

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_DATA = 0, 1, 2, 3


def _write(out: Path, name: str, text: str) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    with open(path, "w", newline="\n") as fh:
        fh.write(text)
    return path


def _num(v) -> str:
    v = float(v)
    return "" if math.isnan(v) else repr(v)


def _rows_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _predictions_csv(stamps, y_true, y_pred) -> str:
    return _rows_csv(["date", "y_true", "y_pred"], ([str(d), _num(a), _num(b)] for d, a, b in zip(stamps, y_true, y_pred)))


def _load(cfg: RunConfig) -> ts.SeriesFrame:
    return ts.load_csv(cfg.data_path(), required=(cfg.column,))


def featurize(cfg: RunConfig, frame: ts.SeriesFrame) -> ts.SeriesFrame:
    """Add indicator, Fourier and return columns as configured. Missing values mark warm-up rows."""
    price = frame[cfg.column]
    if cfg.indicators:
        frame = ts.compute_indicators(frame, cfg.column)
    for K in cfg.fourier_k:
        try:
            frame = frame.with_columns(**{f"fourier_{K}": ts.fourier_lowpass(price, K)})
        except ParameterError as exc:
            raise ConfigError(f"fourier_k: {exc}") from exc
    if cfg.add_returns or cfg.target == "return":
        frame = frame.with_columns(**{"return": np.concatenate([[np.nan], ts.returns(price)])})
    return frame


def _target_col(cfg: RunConfig) -> str:
    return cfg.column if cfg.target == "price" else "return"


def _transformed(cfg: RunConfig, frame, transform: str):
    x = frame[cfg.column]
    stamps = frame.timestamps
    if transform == "log":
        return stamps, ts.log_transform(x)
    if transform == "return":
        return stamps[1:], ts.returns(x)
    if transform == "diff":
        return stamps[1:], ts.difference(x, 1)
    return stamps, x


def cmd_featurize(cfg: RunConfig, out: Path) -> int:
    frame = featurize(cfg, _load(cfg))
    _write(out, "features.csv", frame.to_csv())
    print(f"wrote {len(frame)} rows, columns: {','.join(frame.names)}")
    return EXIT_OK


def cmd_stationarity(cfg: RunConfig, out: Path) -> int:
    _, x = _transformed(cfg, _load(cfg), cfg.transform)
    adf = arma.adf_test(x, cfg.adf_lags, cfg.adf_trend)
    kpss = arma.kpss_test(x, cfg.kpss_trend)
    _write(out, "stationarity.txt", f"transform: {cfg.transform}\n\n{adf.to_text()}\n{kpss.to_text()}")
    print(f"adf: {adf.decision} kpss: {kpss.decision}")
    return EXIT_OK


def cmd_train(cfg: RunConfig, out: Path) -> int:
    frame = featurize(cfg, _load(cfg))
    target = _target_col(cfg)
    inputs = cfg.model_columns or (target,)
    needed = tuple(dict.fromkeys(inputs + (target,)))
    unknown = [c for c in needed if c not in frame.names]
    if unknown:
        raise ConfigError(f"columns {unknown} do not exist after featurization")
    frame = frame.dropna(subset=needed)
    n_train = int(math.floor(cfg.split * len(frame)))
    if n_train <= cfg.tau + 1:
        raise DataError(f"training split of {n_train} rows is too short for time-step {cfg.tau}")
    scaler = ts.scaler_fit(frame.rows(slice(0, n_train)), columns=needed, kind=cfg.scaler)
    windows = ts.make_windows(ts.scaler_apply(scaler, frame), inputs, target, cfg.tau)
    is_train = windows.target_rows < n_train
    train, test = windows.subset(is_train), windows.subset(~is_train)
    if len(test) <= cfg.max_lag + 2:
        raise DataError(f"test split has {len(test)} samples; need more than {cfg.max_lag + 2}")
    n_val = int(math.floor(cfg.val_ratio * len(train)))
    fit_part, val_part = train.subset(slice(0, len(train) - n_val)), train.subset(slice(len(train) - n_val, len(train)))

    model = StackedForecaster(
        ForecasterConfig(
            n_features=len(inputs), widths=cfg.widths, time_step=cfg.tau, cell=cfg.cell,
            dense_width=cfg.dense_width, dense_act=cfg.dense_act, out_act=cfg.out_act,
            rnn_act=cfg.rnn_act, seed=cfg.seed,
        )
    )
    history = fit(
        model, (fit_part.X, fit_part.y), (val_part.X, val_part.y),
        TrainConfig(
            optimizer=cfg.optimizer, lr=cfg.lr, beta=cfg.beta, eps=cfg.eps, rmsprop_mode=cfg.rmsprop_mode,
            epochs=cfg.epochs, batch_size=cfg.batch_size, patience=cfg.patience, clip_norm=cfg.clip_norm,
            seed=cfg.seed, shuffle=cfg.shuffle, stateful=cfg.stateful, restore_best=cfg.restore_best,
        ),
    )
    y_true = frame[target][test.target_rows]
    y_pred = scaler.invert(target, model.predict(test.X))
    report = regression_metrics(y_true, y_pred, mape=not np.any(y_true == 0))
    lag = detect_forecast_lag(y_true, y_pred, cfg.max_lag)

    _write(out, "predictions.csv", _predictions_csv(test.timestamps, y_true, y_pred))
    _write(out, "metrics.csv", report.to_csv())
    _write(out, "lag.csv", lag.to_csv())
    _write(out, "history.csv", history.to_csv())
    _write(out, "model.json", json.dumps(checkpoint.to_dict(model, meta={"target": target, "inputs": list(inputs)}), indent=1) + "\n")
    _write(
        out, "report.txt",
        f"epochs: {history.epochs}\nstop_reason: {history.stop_reason}\nbest_epoch: {history.best_epoch}\n"
        + report.to_text() + lag.to_text(),
    )
    _write(out, "prediction.svg", svg.line_chart({"actual": y_true, "predicted": y_pred}, f"{target}: test split"))
    _write(out, "loss.svg", svg.line_chart({"train MSE": history.train_mse, "validation MSE": history.val_mse}, "training history"))
    print(f"test_mse={report.mse!r} best_lag={lag.best_lag}")
    return EXIT_OK


def _arma_series(cfg: RunConfig, frame):
    stamps, x = (frame.timestamps, frame[cfg.column]) if cfg.target == "price" else (frame.timestamps[1:], ts.returns(frame[cfg.column]))
    if cfg.difference:
        x = ts.difference(x, cfg.difference)
        stamps = stamps[cfg.difference :]
    return stamps, x


def cmd_arma(cfg: RunConfig, out: Path) -> int:
    stamps, x = _arma_series(cfg, _load(cfg))
    n_train = int(math.floor(cfg.split * x.size))
    train = x[:n_train]
    if cfg.auto:
        _, _, model = arma.auto_order(train, cfg.p_max, cfg.q_max, cfg.criterion)
    else:
        model = arma.fit_arma(train, cfg.p, cfg.q)
    if cfg.h:
        y_pred = arma.forecast(model, train, cfg.h)
        y_true = np.full(cfg.h, np.nan)
        avail = x[n_train : n_train + cfg.h]
        y_true[: avail.size] = avail
        horizon = [str(s) for s in stamps[n_train : n_train + cfg.h]]
        horizon += [f"+{k}" for k in range(len(horizon) + 1, cfg.h + 1)]
    else:
        if n_train >= x.size:
            raise DataError("one-step evaluation needs a non-empty test split")
        y_pred = arma.one_step_predictions(model, x, n_train)
        y_true = x[n_train:]
        horizon = stamps[n_train:]
    _write(out, "arma_forecast.csv", _predictions_csv(horizon, y_true, y_pred))
    text = model.to_text()
    ok = np.isfinite(y_true)
    if ok.sum() > 0:
        m = regression_metrics(y_true[ok], y_pred[ok], mape=not np.any(y_true[ok] == 0))
        _write(out, "arma_metrics.csv", m.to_csv())
        text += m.to_text()
        print(f"order=({model.p},{model.q}) test_mse={m.mse!r}")
    else:
        print(f"order=({model.p},{model.q})")
    _write(out, "arma_report.txt", text)
    _write(out, "arma.svg", svg.line_chart({"actual": y_true, "forecast": y_pred}, f"ARMA({model.p},{model.q})"))
    return EXIT_OK


def cmd_gradcheck(cfg: RunConfig, out: Path, fault: bool = False) -> int:
    report = gradcheck.run_all(seed=cfg.seed, fault=fault)
    text = report.to_text()
    _write(out, "gradcheck.txt", text)
    print(text, end="")
    return EXIT_OK if report.passed else EXIT_CHECK


def _series_column(frame, preferred: str):
    if preferred in frame.names:
        return frame[preferred]
    if len(frame.names) == 1:
        return frame[frame.names[0]]
    raise ConfigError(f"column {preferred!r} not found and file has several columns: {frame.names}")


def cmd_lagcheck(cfg: RunConfig, out: Path, truth: str, pred: str, truth_col: str, pred_col: str) -> int:
    a = ts.load_csv(truth, allow_missing=True)
    b = ts.load_csv(pred, allow_missing=True)
    common, ia, ib = np.intersect1d(a.timestamps, b.timestamps, return_indices=True)
    if common.size == 0:
        raise DataError("the two files share no dates")
    y = _series_column(a, truth_col)[ia]
    y_hat = _series_column(b, pred_col)[ib]
    ok = np.isfinite(y) & np.isfinite(y_hat)
    report = detect_forecast_lag(y[ok], y_hat[ok], cfg.max_lag)
    _write(out, "lag.csv", report.to_csv())
    _write(out, "lag.txt", report.to_text())
    print(f"best_lag={report.best_lag}")
    return EXIT_OK


COMMANDS = ("featurize", "stationarity", "train", "arma", "gradcheck", "lagcheck")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="seqcast", description="Sequence forecasting experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="INI run configuration")
        p.add_argument("--seed", type=int, help="overrides [run] seed")
        p.add_argument("--out", help="overrides [run] out")
        if name == "gradcheck":
            p.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)
        if name == "lagcheck":
            p.add_argument("truth", help="CSV with the observed series")
            p.add_argument("pred", help="CSV with the predictions")
            p.add_argument("--truth-col", default="y_true")
            p.add_argument("--pred-col", default="y_pred")
    return parser


def run(args) -> int:
    if args.config:
        cfg = load_config(args.config)
    elif args.command in ("gradcheck", "lagcheck"):
        cfg = RunConfig()
    else:
        raise ConfigError(f"{args.command} requires --config")
    cfg = cfg.with_overrides(seed=args.seed)
    out = Path(args.out) if args.out else cfg.out_path()
    if args.command == "gradcheck":
        return cmd_gradcheck(cfg, out, args.inject_fault)
    if args.command == "lagcheck":
        return cmd_lagcheck(cfg, out, args.truth, args.pred, args.truth_col, args.pred_col)
    return {"featurize": cmd_featurize, "stationarity": cmd_stationarity, "train": cmd_train, "arma": cmd_arma}[args.command](cfg, out)


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return run(args)
    except (ConfigError, ParameterError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, DimensionError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ConvergenceError as exc:
        print(f"fit failed: {exc}", file=sys.stderr)
        return EXIT_CHECK


if __name__ == "__main__":
    sys.exit(main())
