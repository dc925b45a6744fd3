"""Stratified fold assignment shared by grid search and the evaluation protocol."""

from __future__ import annotations

import numpy as np


def fold_indices(labels, k: int, seed: int) -> np.ndarray:
    """Assign each position a fold in 0..k-1, stratified by label.

    Within each class, members are shuffled by the seed and dealt round-robin;
    the dealing pointer runs on across classes, so both per-class and overall
    fold sizes are balanced within +-1. Classes smaller than k contribute one
    member to as many folds as they have members; nothing is dropped.
    """
    if k < 2:
        raise ValueError("need at least 2 folds")
    labels = list(labels)
    rng = np.random.default_rng(seed)
    assign = np.empty(len(labels), dtype=np.int64)
    pointer = 0
    for cls in sorted(set(labels)):
        members = np.flatnonzero(np.array([lab == cls for lab in labels]))
        shuffled = members[rng.permutation(len(members))]
        for j, pos in enumerate(shuffled):
            assign[pos] = (pointer + j) % k
        pointer += len(members)
    return assign
