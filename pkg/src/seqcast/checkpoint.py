"""Versioned JSON checkpoints for every parameter container in the package.

Layout::

    {
      "format": "seqcast-checkpoint",
      "version": 1,
      "kind": "layered" | "rnn" | "lstm" | "forecaster",
      "cell": {...},                 # activation / cell tags needed to rebuild
      "groups": {name: {"shape": [...], "data": [row-major floats]}, ...},
      "meta": {...}                  # free-form, caller supplied
    }

Floats are written with ``repr`` precision so a load reproduces every value bit for bit.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import DataError
from .forecaster import ForecasterConfig, StackedForecaster
from .lstm import LstmParams
from .nn_core import DenseLayer, LayeredNetwork
from .rnn import PredictParams, RnnParams

FORMAT = "seqcast-checkpoint"
VERSION = 1

__all__ = ["to_dict", "from_dict", "save", "load"]


def _groups(params: dict) -> dict:
    return {k: {"shape": list(np.shape(v)), "data": np.asarray(v, dtype=np.float64).ravel().tolist()} for k, v in params.items()}


def _arrays(groups: dict) -> dict:
    out = {}
    for k, g in groups.items():
        data = np.asarray(g["data"], dtype=np.float64)
        shape = tuple(g["shape"])
        if data.size != int(np.prod(shape, dtype=np.int64)):
            raise DataError(f"group {k!r}: {data.size} values do not fill shape {shape}")
        out[k] = data.reshape(shape)
    return out


def to_dict(obj, pred: PredictParams | None = None, meta: dict | None = None) -> dict:
    """Serialize a network, an RNN/LSTM cell (optionally with its prediction head) or a forecaster."""
    if isinstance(obj, LayeredNetwork):
        kind, cell, params = "layered", {"activations": [l.act.kind for l in obj.layers]}, obj.params()
    elif isinstance(obj, RnnParams):
        kind, cell, params = "rnn", {"activation": obj.act.kind}, obj.params()
    elif isinstance(obj, LstmParams):
        kind, cell, params = "lstm", {"candidate": obj.cand.kind}, obj.params()
    elif isinstance(obj, StackedForecaster):
        c = obj.config
        kind = "forecaster"
        cell = {
            "n_features": c.n_features, "widths": list(c.widths), "time_step": c.time_step, "cell": c.cell,
            "dense_width": c.dense_width, "dense_act": c.dense_act, "out_act": c.out_act,
            "rnn_act": c.rnn_act, "seed": c.seed,
        }
        params = obj.params
    else:
        raise TypeError(f"cannot checkpoint {type(obj).__name__}")
    groups = _groups(params)
    if pred is not None:
        groups |= _groups({f"pred.{k}": v for k, v in pred.params().items()})
    return {"format": FORMAT, "version": VERSION, "kind": kind, "cell": cell, "groups": groups, "meta": meta or {}}


def from_dict(doc: dict):
    """Inverse of ``to_dict``; returns ``(obj, pred_or_None, meta)``."""
    if doc.get("format") != FORMAT:
        raise DataError("not a seqcast checkpoint")
    if doc.get("version") != VERSION:
        raise DataError(f"unsupported checkpoint version {doc.get('version')!r}")
    arrays = _arrays(doc["groups"])
    pred = None
    if "pred.V" in arrays:
        pred = PredictParams(arrays.pop("pred.V"), arrays.pop("pred.c"))
    kind, cell = doc["kind"], doc["cell"]
    if kind == "layered":
        acts = cell["activations"]
        obj = LayeredNetwork(tuple(DenseLayer(arrays[f"W{i}"], arrays[f"b{i}"], a) for i, a in enumerate(acts)))
    elif kind == "rnn":
        obj = RnnParams(arrays["W"], arrays["U"], arrays["b"], cell["activation"])
    elif kind == "lstm":
        obj = LstmParams(**arrays, cand=cell["candidate"])
    elif kind == "forecaster":
        obj = StackedForecaster(ForecasterConfig(**(cell | {"widths": tuple(cell["widths"])})), arrays)
    else:
        raise DataError(f"unknown checkpoint kind {kind!r}")
    return obj, pred, doc.get("meta", {})


def save(path, obj, pred=None, meta=None) -> Path:
    path = Path(path)
    path.write_text(json.dumps(to_dict(obj, pred, meta), indent=1) + "\n")
    return path


def load(path):
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read checkpoint {path}: {exc}") from exc
    return from_dict(doc)
