"""Hyperparameter grid search by stratified k-fold cross-validation.

Selection is value-based, never order-based: the candidate with the highest
mean accuracy wins, and exact ties resolve to (smaller C, then smaller gamma)
for SVM and (fewer rounds, smaller depth, larger min_samples_leaf) for GBDT,
so shuffling the grid cannot change the result.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import asdict, dataclass
from enum import Enum

import numpy as np

from ..folds import fold_indices
from .gbdt import GbdtParams, fit_gbdt, predict_gbdt
from .svm import Kernel, SvmParams, fit_svm, predict_svm

Params = SvmParams | GbdtParams


def fit_params(X, y, params: Params):
    if isinstance(params, SvmParams):
        return fit_svm(X, y, params)
    return fit_gbdt(X, y, params)


def predict_model(model, X) -> list:
    from .gbdt import GbdtModel

    if isinstance(model, GbdtModel):
        return predict_gbdt(model, X)
    return predict_svm(model, X)


def tie_key(params: Params) -> tuple:
    if isinstance(params, SvmParams):
        return (params.C, params.gamma if params.gamma is not None else 0.0)
    return (params.n_rounds, params.max_depth, -params.min_samples_leaf)


def params_dict(params: Params) -> dict:
    return {k: (v.value if isinstance(v, Enum) else v) for k, v in asdict(params).items()}


@dataclass(frozen=True)
class GridPoint:
    params: Params
    fold_accuracies: tuple[float, ...]
    mean_accuracy: float


@dataclass(frozen=True)
class GridResult:
    best: Params
    table: tuple[GridPoint, ...]  # sorted by tie_key


def _majority(y) -> object:
    counts = Counter(y)
    top = max(counts.values())
    return sorted(c for c, n in counts.items() if n == top)[0]


def grid_search(X: np.ndarray, y, candidates, k: int = 5, seed: int = 0) -> GridResult:
    """Score every candidate with stratified k-fold CV and pick the best."""
    candidates = list(candidates)
    if not candidates:
        raise ValueError("empty grid")
    if k < 2:
        raise ValueError("need at least 2 folds")
    X = np.asarray(X, dtype=np.float64)
    y = list(y)
    folds = fold_indices(y, k, seed)
    points = []
    for params in candidates:
        accs = []
        for f in range(k):
            test = folds == f
            if not test.any():
                continue  # fewer rows than folds
            train = ~test
            y_train = [lab for lab, t in zip(y, train) if t]
            y_test = [lab for lab, t in zip(y, test) if t]
            if len(set(y_train)) < 2:
                pred = [_majority(y_train)] * len(y_test)
            else:
                model = fit_params(X[train], y_train, params)
                pred = predict_model(model, X[test])
            accs.append(float(np.mean([p == t for p, t in zip(pred, y_test)])))
        points.append(GridPoint(params, tuple(accs), float(np.mean(accs))))
    best = min(points, key=lambda pt: (-pt.mean_accuracy, tie_key(pt.params))).params
    return GridResult(best=best, table=tuple(sorted(points, key=lambda pt: tie_key(pt.params))))


def default_svm_grid(dim: int, kernel: Kernel = Kernel.RBF) -> list[SvmParams]:
    Cs = [0.01, 0.1, 1.0, 10.0, 100.0]
    if kernel is Kernel.LINEAR:
        return [SvmParams(kernel=Kernel.LINEAR, C=C) for C in Cs]
    gammas = sorted({1.0 / dim, 1e-3, 1e-2, 1e-1})
    return [SvmParams(kernel=Kernel.RBF, C=C, gamma=g) for C in Cs for g in gammas]


def default_gbdt_grid(seed: int = 0) -> list[GbdtParams]:
    return [
        GbdtParams(n_rounds=r, learning_rate=lr, max_depth=d, seed=seed)
        for r in (100, 300)
        for lr in (0.1, 0.3)
        for d in (3, 6)
    ]


@dataclass
class FittedClassifier:
    model: object
    chosen_params: dict

    def predict(self, X) -> list:
        return predict_model(self.model, X)


@dataclass
class GridSearchLearner:
    """Learner facade for the CV protocol: nested grid search, then a final fit."""

    name: str
    candidates: list[Params]
    inner_k: int = 5

    def fit(self, X, y, seed: int) -> FittedClassifier:
        if len(self.candidates) == 1:
            chosen = self.candidates[0]
        else:
            chosen = grid_search(X, y, self.candidates, k=self.inner_k, seed=seed).best
        model = fit_params(X, y, chosen)
        return FittedClassifier(model=model, chosen_params=params_dict(chosen))
