"""Versioned JSON serialization of trained models for reproducible re-evaluation."""

from __future__ import annotations

import json
from enum import Enum
from pathlib import Path

import numpy as np

from .gbdt import GbdtModel, GbdtParams, Tree
from .scaling import Standardizer
from .svm import BinarySvm, SvmModel, SvmParams

MODEL_FORMAT = "phonation-model"
MODEL_VERSION = 1


def _plain(value):
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, np.ndarray):
        return value.tolist()
    return value


def _std_dict(std: Standardizer) -> dict:
    return {"means": std.means.tolist(), "stds": std.stds.tolist()}


def _std_from(d: dict) -> Standardizer:
    return Standardizer(means=np.array(d["means"]), stds=np.array(d["stds"]))


def model_to_dict(model: SvmModel | GbdtModel) -> dict:
    doc = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "classes": [_plain(c) for c in model.classes],
        "standardizer": _std_dict(model.standardizer),
        "params": {k: _plain(v) for k, v in vars(model.params).items()},
    }
    if isinstance(model, SvmModel):
        doc["type"] = "svm"
        doc["machines"] = [
            {"neg": a, "pos": b, "support": m.support.tolist(),
             "coef": m.coef.tolist(), "bias": m.bias}
            for a, b, m in model.machines
        ]
    else:
        doc["type"] = "gbdt"
        doc["base_scores"] = model.base_scores.tolist()
        doc["forests"] = [
            [{"feature": t.feature.tolist(), "threshold": t.threshold.tolist(),
              "left": t.left.tolist(), "right": t.right.tolist(), "value": t.value.tolist()}
             for t in round_trees]
            for round_trees in model.forests
        ]
    return doc


def model_from_dict(doc: dict) -> SvmModel | GbdtModel:
    if doc.get("format") != MODEL_FORMAT:
        raise ValueError("not a serialized model document")
    if doc.get("version") != MODEL_VERSION:
        raise ValueError(f"unsupported model version {doc.get('version')}")
    std = _std_from(doc["standardizer"])
    classes = list(doc["classes"])
    if doc["type"] == "svm":
        params = SvmParams(**doc["params"])
        machines = [
            (m["neg"], m["pos"], BinarySvm(
                params=params, support=np.array(m["support"], dtype=np.float64).reshape(-1, len(std.means)),
                coef=np.array(m["coef"], dtype=np.float64), bias=float(m["bias"])))
            for m in doc["machines"]
        ]
        return SvmModel(classes=classes, standardizer=std, machines=machines, params=params)
    if doc["type"] == "gbdt":
        params = GbdtParams(**doc["params"])
        forests = [
            [Tree(np.array(t["feature"], dtype=np.int64), np.array(t["threshold"], dtype=np.float64),
                  np.array(t["left"], dtype=np.int64), np.array(t["right"], dtype=np.int64),
                  np.array(t["value"], dtype=np.float64))
             for t in round_trees]
            for round_trees in doc["forests"]
        ]
        return GbdtModel(classes=classes, standardizer=std,
                         base_scores=np.array(doc["base_scores"], dtype=np.float64),
                         forests=forests, params=params)
    raise ValueError(f"unknown model type {doc['type']!r}")


def save_model(model: SvmModel | GbdtModel, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(model_to_dict(model), fh, sort_keys=True)
        fh.write("\n")


def load_model(path: str | Path) -> SvmModel | GbdtModel:
    with open(path, encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
