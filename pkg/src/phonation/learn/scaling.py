"""Per-dimension z-score standardization, fitted on training rows only."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

STD_FLOOR = 1e-8


@dataclass(frozen=True)
class Standardizer:
    means: np.ndarray
    stds: np.ndarray  # floored at STD_FLOOR

    @classmethod
    def fit(cls, X: np.ndarray) -> "Standardizer":
        X = np.asarray(X, dtype=np.float64)
        return cls(means=X.mean(axis=0), stds=np.maximum(X.std(axis=0), STD_FLOOR))

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.shape[1] != self.means.shape[0]:
            raise ValueError(f"dimension mismatch: got {X.shape[1]}, fitted on {self.means.shape[0]}")
        return (X - self.means) / self.stds
