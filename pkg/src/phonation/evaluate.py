"""Stratified k-fold evaluation: fold construction, cross-validation, layer sweeps.

One FoldSplit is built per run and reused across every feature, layer and
classifier so all comparisons are paired. Hyperparameters are chosen by a
nested grid search inside each training partition; outer test folds never
leak into model selection. Reported std is the population standard deviation
over the k fold accuracies.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Protocol

import numpy as np

from .corpus import MODE_ORDER, PhonationMode
from .dsp import FeatureVector
from .embed import StoreReader, mean_pool, open_store
from .folds import fold_indices


@dataclass(frozen=True)
class FoldSplit:
    k: int
    seed: int
    assignments: Mapping[str, int]  # clip_id -> fold index

    def fold_ids(self, fold: int) -> list[str]:
        return sorted(cid for cid, f in self.assignments.items() if f == fold)


def canonical_classes(labels) -> list:
    present = set(labels)
    if present and all(isinstance(lab, PhonationMode) for lab in present):
        return [m for m in MODE_ORDER if m in present]
    return sorted(present)


def stratified_folds(labels: Mapping[str, object], k: int = 5, seed: int = 42) -> FoldSplit:
    """Stratified fold assignment over clip ids; deterministic in (labels, k, seed).

    Ids are sorted before the per-class seeded shuffle, so the split does not
    depend on the mapping's insertion order.
    """
    ids = sorted(labels)
    if not ids:
        raise ValueError("no labels given")
    assign = fold_indices([labels[cid] for cid in ids], k, seed)
    return FoldSplit(k=k, seed=seed, assignments={cid: int(f) for cid, f in zip(ids, assign)})


class ConfusionMatrix:
    """Integer count matrix, rows = true class, columns = predicted class."""

    def __init__(self, classes):
        self.classes = list(classes)
        self.counts = np.zeros((len(self.classes), len(self.classes)), dtype=np.int64)

    def add(self, true_label, pred_label) -> None:
        self.counts[self.classes.index(true_label), self.classes.index(pred_label)] += 1

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def accuracy(self) -> float:
        return float(np.trace(self.counts) / self.counts.sum())

    def row_normalized(self) -> np.ndarray:
        sums = self.counts.sum(axis=1, keepdims=True)
        return np.divide(self.counts, sums, out=np.zeros(self.counts.shape), where=sums > 0)

    def to_dict(self) -> dict:
        return {"classes": [_label_str(c) for c in self.classes], "counts": self.counts.tolist()}


def _label_str(label) -> str:
    return label.value if isinstance(label, PhonationMode) else str(label)


class Learner(Protocol):
    name: str

    def fit(self, X, y, seed: int): ...  # returns an object with predict(X) and chosen_params


@dataclass
class EvalReport:
    feature_kind: str
    model_id: str | None
    layer: int | None
    classifier: str
    fold_accuracies: list[float]
    fold_sizes: list[int]
    fold_correct: list[int]
    params_per_fold: list[dict]
    confusion: ConfusionMatrix
    mean: float = field(init=False)
    std: float = field(init=False)

    def __post_init__(self):
        acc = np.asarray(self.fold_accuracies)
        self.mean = float(acc.mean())
        self.std = float(acc.std())  # population std over the k folds

    @property
    def feature_label(self) -> str:
        if self.feature_kind == "embedding":
            return f"{self.model_id}:layer{self.layer}"
        return self.feature_kind

    def to_dict(self) -> dict:
        return {
            "feature": {"kind": self.feature_kind, "model_id": self.model_id, "layer": self.layer},
            "classifier": self.classifier,
            "fold_accuracies": self.fold_accuracies,
            "fold_sizes": self.fold_sizes,
            "fold_correct": self.fold_correct,
            "mean": self.mean,
            "std": self.std,
            "params_per_fold": self.params_per_fold,
            "confusion": self.confusion.to_dict(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def csv_row(self) -> list[str]:
        layer = "" if self.layer is None else str(self.layer)
        return ([self.feature_label, layer, self.classifier, f"{self.mean:.6f}", f"{self.std:.6f}"]
                + [f"{a:.6f}" for a in self.fold_accuracies])


def cross_validate(features: Mapping[str, FeatureVector], labels: Mapping[str, object],
                   split: FoldSplit, learner: Learner) -> EvalReport:
    """Outer k-fold evaluation with per-fold nested model selection."""
    ids = sorted(labels)
    missing = [cid for cid in ids if cid not in features]
    if missing:
        raise ValueError(f"missing features for clips: {missing}")
    unassigned = [cid for cid in ids if cid not in split.assignments]
    if unassigned:
        raise ValueError(f"clips without fold assignment: {unassigned}")

    first = features[ids[0]]
    X = np.stack([features[cid].values for cid in ids])
    y = [labels[cid] for cid in ids]
    folds = np.array([split.assignments[cid] for cid in ids])

    confusion = ConfusionMatrix(canonical_classes(y))
    accs, sizes, corrects, params = [], [], [], []
    for f in range(split.k):
        test = folds == f
        if not test.any():
            raise ValueError(f"empty test fold {f}")
        train = ~test
        y_train = [lab for lab, t in zip(y, train) if t]
        y_test = [lab for lab, t in zip(y, test) if t]
        fitted = learner.fit(X[train], y_train, seed=split.seed * 1000 + f)
        pred = fitted.predict(X[test])
        correct = sum(p == t for p, t in zip(pred, y_test))
        for t, p in zip(y_test, pred):
            confusion.add(t, p)
        accs.append(correct / len(y_test))
        sizes.append(len(y_test))
        corrects.append(int(correct))
        params.append(dict(getattr(fitted, "chosen_params", None) or {}))
    return EvalReport(
        feature_kind=first.kind.value, model_id=first.model_id, layer=first.layer,
        classifier=learner.name, fold_accuracies=accs, fold_sizes=sizes,
        fold_correct=corrects, params_per_fold=params, confusion=confusion)


@dataclass
class LayerSweepResult:
    model_id: str
    classifier: str
    reports: list[EvalReport]

    @property
    def best_layer(self) -> int:
        means = [r.mean for r in self.reports]
        return int(np.argmax(means))  # first layer wins exact ties

    def csv_rows(self) -> list[list[str]]:
        return [[str(r.layer), f"{r.mean:.6f}", f"{r.std:.6f}"] for r in self.reports]


def layer_sweep(store: StoreReader | str | Path, labels: Mapping[str, object],
                split: FoldSplit, learner: Learner) -> LayerSweepResult:
    """Run cross_validate once per layer on mean-pooled features (paired splits)."""
    reader = store if isinstance(store, StoreReader) else open_store(store)
    ids = sorted(labels)
    missing = [cid for cid in ids if cid not in reader]
    if missing:
        raise ValueError(f"store {reader.path} lacks clips: {missing}")
    reports = []
    for layer in range(reader.model.n_vectors):
        feats = {cid: mean_pool(reader.read(cid), layer) for cid in ids}
        reports.append(cross_validate(feats, labels, split, learner))
    return LayerSweepResult(model_id=reader.model.model_id, classifier=learner.name, reports=reports)


def write_reports_csv(reports: list[EvalReport], path: str | Path) -> None:
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        k = max(len(r.fold_accuracies) for r in reports)
        writer.writerow(["feature", "layer", "classifier", "mean", "std"]
                        + [f"fold{j}" for j in range(k)])
        for r in reports:
            writer.writerow(r.csv_row())
