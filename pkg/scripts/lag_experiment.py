"""Train the price and return models on the random-walk fixture and compare their lag profiles.

    python scripts/lag_experiment.py [--out DIR]
"""

import argparse
import csv
from pathlib import Path

from seqcast.cli import main

ROOT = Path(__file__).resolve().parent.parent


def lag_table(path: Path) -> list:
    with open(path) as fh:
        return [(int(r["lag"]), float(r["correlation"])) for r in csv.DictReader(fh)]


def run() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=str(ROOT / "out" / "lag_experiment"))
    args = ap.parse_args()
    tables = {}
    for target in ("price", "return"):
        out = Path(args.out) / target
        code = main(["train", "--config", str(ROOT / "configs" / f"rw_{target}.ini"), "--out", str(out)])
        if code:
            raise SystemExit(code)
        tables[target] = lag_table(out / "lag.csv")
    print(f"{'lag':>4} {'price corr':>12} {'return corr':>12}")
    for (k, a), (_, b) in zip(tables["price"], tables["return"]):
        print(f"{k:>4} {a:>12.4f} {b:>12.4f}")


if __name__ == "__main__":
    run()
