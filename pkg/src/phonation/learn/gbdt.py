"""Gradient-boosted regression trees with a multiclass softmax objective.

Per boosting round and per class, one tree is fitted to the softmax gradient
g_i = p_i - 1{y_i = c} with hessian h_i = p_i (1 - p_i). Splits use exact
greedy gain maximization over sorted feature values,

    gain = 1/2 * (GL^2/(HL+lambda) + GR^2/(HR+lambda) - G^2/(H+lambda)),

leaf weights are the Newton step -G/(H+lambda) scaled by the learning rate.
Ties between equally good splits resolve to the lowest feature index, then
the smallest threshold. Base scores are the log class priors, so an empty
forest predicts the majority class.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .scaling import Standardizer

_DENOM_FLOOR = 1e-12


@dataclass(frozen=True)
class GbdtParams:
    n_rounds: int = 100
    learning_rate: float = 0.1
    max_depth: int = 3
    min_samples_leaf: int = 1
    l2_leaf_reg: float = 1.0
    subsample: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n_rounds < 1:
            raise ValueError("n_rounds must be >= 1")
        if not 0 < self.learning_rate <= 1:
            raise ValueError("learning_rate must be in (0, 1]")
        if not 0 < self.subsample <= 1:
            raise ValueError("subsample must be in (0, 1]")
        if self.max_depth < 1 or self.min_samples_leaf < 1 or self.l2_leaf_reg < 0:
            raise ValueError("bad tree constraints")


@dataclass
class Tree:
    """Flat node arrays; feature == -1 marks a leaf. Predicate x[f] < threshold goes left."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray  # leaf weight, already scaled by the learning rate

    def predict(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(len(X), dtype=np.int64)
        active = self.feature[node] >= 0
        while active.any():
            idx = node[active]
            go_left = X[np.flatnonzero(active), self.feature[idx]] < self.threshold[idx]
            node[np.flatnonzero(active)] = np.where(go_left, self.left[idx], self.right[idx])
            active = self.feature[node] >= 0
        return self.value[node]

    @property
    def n_internal(self) -> int:
        return int(np.sum(self.feature >= 0))


def _best_split(F: np.ndarray, g: np.ndarray, h: np.ndarray, lam: float,
                min_leaf: int) -> tuple[float, int, float] | None:
    """Best (gain, feature, threshold) over all exact-greedy candidates, or None."""
    m = len(g)
    if m < 2 * min_leaf or m < 2:
        return None
    order = np.argsort(F, axis=0, kind="stable")
    V = np.take_along_axis(F, order, axis=0)
    GL = np.cumsum(g[order], axis=0)[:-1]
    HL = np.cumsum(h[order], axis=0)[:-1]
    G, H = g.sum(), h.sum()
    GR, HR = G - GL, H - HL
    pos = np.arange(1, m)[:, None]  # left block size at each candidate
    valid = (V[1:] > V[:-1]) & (pos >= min_leaf) & (m - pos >= min_leaf)
    parent = G * G / max(H + lam, _DENOM_FLOOR)
    gain = 0.5 * (GL * GL / np.maximum(HL + lam, _DENOM_FLOOR)
                  + GR * GR / np.maximum(HR + lam, _DENOM_FLOOR) - parent)
    gain = np.where(valid, gain, -np.inf)
    # column-major flatten: ties resolve to the lowest feature, then smallest threshold
    flat = np.argmax(gain.ravel(order="F"))
    n_pos = m - 1
    f, p = int(flat // n_pos), int(flat % n_pos)
    best = gain[p, f]
    if not np.isfinite(best) or best <= 0:
        return None
    return float(best), f, float((V[p, f] + V[p + 1, f]) / 2.0)


def _leaf_weight(g_sum: float, h_sum: float, lam: float, lr: float) -> float:
    return -g_sum / max(h_sum + lam, _DENOM_FLOOR) * lr


def build_tree(X: np.ndarray, g: np.ndarray, h: np.ndarray, rows: np.ndarray,
               params: GbdtParams) -> Tree:
    """Grow one regression tree on the given row subset."""
    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    value: list[float] = []

    def new_node() -> int:
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(0.0)
        return len(feature) - 1

    def grow(node: int, idx: np.ndarray, depth: int) -> None:
        gs, hs = g[idx], h[idx]
        value[node] = _leaf_weight(gs.sum(), hs.sum(), params.l2_leaf_reg, params.learning_rate)
        if depth >= params.max_depth:
            return
        split = _best_split(X[idx], gs, hs, params.l2_leaf_reg, params.min_samples_leaf)
        if split is None:
            return
        _, f, thr = split
        mask = X[idx, f] < thr
        if not mask.any() or mask.all():
            return  # midpoint collapsed onto a data value; keep the leaf
        feature[node], threshold[node] = f, thr
        left[node], right[node] = new_node(), new_node()
        grow(left[node], idx[mask], depth + 1)
        grow(right[node], idx[~mask], depth + 1)

    root = new_node()
    grow(root, np.asarray(rows, dtype=np.int64), 0)
    return Tree(np.array(feature, dtype=np.int64), np.array(threshold),
                np.array(left, dtype=np.int64), np.array(right, dtype=np.int64),
                np.array(value))


def softmax(F: np.ndarray) -> np.ndarray:
    Z = F - F.max(axis=1, keepdims=True)
    E = np.exp(Z)
    return E / E.sum(axis=1, keepdims=True)


def softmax_loss(F: np.ndarray, y_idx: np.ndarray) -> float:
    Z = F - F.max(axis=1, keepdims=True)
    logp = Z - np.log(np.exp(Z).sum(axis=1, keepdims=True))
    return float(-np.mean(logp[np.arange(len(y_idx)), y_idx]))


@dataclass
class GbdtModel:
    classes: list
    standardizer: Standardizer
    base_scores: np.ndarray
    forests: list[list[Tree]]  # [round][class]
    params: GbdtParams
    losses: list[float] = field(repr=False, default_factory=list)  # index 0 = base-only loss
    round_made_split: list[bool] = field(repr=False, default_factory=list)

    def scores(self, X: np.ndarray) -> np.ndarray:
        Xs = self.standardizer.transform(np.asarray(X, dtype=np.float64))
        F = np.tile(self.base_scores, (len(Xs), 1))
        for round_trees in self.forests:
            for k, tree in enumerate(round_trees):
                F[:, k] += tree.predict(Xs)
        return F


def fit_gbdt(X: np.ndarray, y, params: GbdtParams = GbdtParams()) -> GbdtModel:
    """Boost softmax-gradient trees; deterministic for a fixed params.seed."""
    from .svm import _check_training_input  # shared validation

    X, classes = _check_training_input(X, y)
    std = Standardizer.fit(X)
    Xs = std.transform(X)
    y_idx = np.array([classes.index(lab) for lab in y], dtype=np.int64)
    n, n_classes = len(y_idx), len(classes)
    counts = np.bincount(y_idx, minlength=n_classes)
    base = np.log(counts / n)
    F = np.tile(base, (n, 1))
    rng = np.random.default_rng(params.seed)

    forests: list[list[Tree]] = []
    losses = [softmax_loss(F, y_idx)]
    round_made_split: list[bool] = []
    for _ in range(params.n_rounds):
        P = softmax(F)
        if params.subsample < 1.0:
            m = max(1, int(round(params.subsample * n)))
            rows = np.sort(rng.permutation(n)[:m])
        else:
            rows = np.arange(n)
        round_trees = []
        made_split = False
        for k in range(n_classes):
            g = P[:, k] - (y_idx == k)
            h = P[:, k] * (1.0 - P[:, k])
            tree = build_tree(Xs, g, h, rows, params)
            made_split = made_split or tree.n_internal > 0
            F[:, k] += tree.predict(Xs)
            round_trees.append(tree)
        forests.append(round_trees)
        losses.append(softmax_loss(F, y_idx))
        round_made_split.append(made_split)
    return GbdtModel(classes=classes, standardizer=std, base_scores=base, forests=forests,
                     params=params, losses=losses, round_made_split=round_made_split)


def predict_gbdt(model: GbdtModel, X: np.ndarray) -> list:
    scores = model.scores(X)
    return [model.classes[i] for i in np.argmax(scores, axis=1)]
