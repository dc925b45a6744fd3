"""Support vector machine trained by sequential minimal optimization (SMO).

The binary solver works on the dual problem

    max  sum(alpha) - 1/2 alpha' Q alpha,   Q_ij = y_i y_j K(x_i, x_j)
    s.t. 0 <= alpha_i <= C,  sum(alpha_i y_i) = 0

using the maximal-violating-pair working-set rule: pick i maximizing -y_i g_i
over the "up" set and j minimizing it over the "down" set (g is the gradient
of the minimization form), take the analytically optimal step along the
feasible direction, clip at the box. The step strictly increases the dual
objective whenever the KKT violation exceeds zero, which the solver records
step by step. Multiclass is one-vs-one with majority voting; vote ties fall
back to summed signed decision values, then to class order.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations

import numpy as np

from .scaling import Standardizer

log = logging.getLogger(__name__)


class Kernel(str, Enum):
    LINEAR = "linear"
    RBF = "rbf"


@dataclass(frozen=True)
class SvmParams:
    kernel: Kernel = Kernel.RBF
    C: float = 1.0
    gamma: float | None = None  # required for RBF
    tol: float = 1e-3
    max_iters: int = 1_000_000

    def __post_init__(self):
        object.__setattr__(self, "kernel", Kernel(self.kernel))
        if self.C <= 0:
            raise ValueError("C must be positive")
        if self.kernel is Kernel.RBF and (self.gamma is None or self.gamma <= 0):
            raise ValueError("RBF kernel needs gamma > 0")


def kernel_matrix(params: SvmParams, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    if params.kernel is Kernel.LINEAR:
        return A @ B.T
    sq = np.sum(A * A, axis=1)[:, None] + np.sum(B * B, axis=1)[None, :] - 2.0 * (A @ B.T)
    return np.exp(-params.gamma * np.maximum(sq, 0.0))


@dataclass
class SmoResult:
    alphas: np.ndarray
    bias: float
    iterations: int
    converged: bool
    kkt_violation: float
    objective_trace: list[float] = field(repr=False, default_factory=list)


def smo_solve(K: np.ndarray, y: np.ndarray, C: float, tol: float, max_iters: int) -> SmoResult:
    """Solve the binary dual for labels y in {-1, +1} given a full kernel matrix."""
    n = len(y)
    Q = K * np.outer(y, y)
    alpha = np.zeros(n)
    g = -np.ones(n)  # gradient of 1/2 a'Qa - sum(a)
    trace: list[float] = []
    iters = 0
    converged = False
    violation = np.inf
    while iters < max_iters:
        minus_yg = -(y * g)
        up = np.where(y > 0, alpha < C, alpha > 0)
        down = np.where(y > 0, alpha > 0, alpha < C)
        if not up.any() or not down.any():
            converged, violation = True, 0.0
            break
        i = int(np.argmax(np.where(up, minus_yg, -np.inf)))
        j = int(np.argmin(np.where(down, minus_yg, np.inf)))
        violation = minus_yg[i] - minus_yg[j]
        if violation <= tol:
            converged = True
            break
        # feasible direction: alpha_i += y_i t, alpha_j -= y_j t
        eta = K[i, i] + K[j, j] - 2.0 * K[i, j]
        t_star = violation / max(eta, 1e-12)
        cap_i = C - alpha[i] if y[i] > 0 else alpha[i]
        cap_j = alpha[j] if y[j] > 0 else C - alpha[j]
        t = min(t_star, cap_i, cap_j)
        if t <= 0:
            break  # numerically stalled; report non-converged below
        old_i, old_j = alpha[i], alpha[j]
        alpha[i] = (C if y[i] > 0 else 0.0) if t == cap_i else alpha[i] + y[i] * t
        alpha[j] = (0.0 if y[j] > 0 else C) if t == cap_j else alpha[j] - y[j] * t
        alpha[i] = min(max(alpha[i], 0.0), C)
        alpha[j] = min(max(alpha[j], 0.0), C)
        g += Q[:, i] * (alpha[i] - old_i) + Q[:, j] * (alpha[j] - old_j)
        trace.append(0.5 * (alpha.sum() - alpha @ g))
        iters += 1

    minus_yg = -(y * g)
    up = np.where(y > 0, alpha < C, alpha > 0)
    down = np.where(y > 0, alpha > 0, alpha < C)
    if not converged:
        if up.any() and down.any():
            violation = np.max(minus_yg[up]) - np.min(minus_yg[down])
        else:
            converged, violation = True, 0.0
    free = (alpha > 0) & (alpha < C)
    if free.any():
        bias = float(np.mean(minus_yg[free]))
    else:
        hi = np.max(minus_yg[up]) if up.any() else 0.0
        lo = np.min(minus_yg[down]) if down.any() else 0.0
        bias = float((hi + lo) / 2.0)
    return SmoResult(alpha, bias, iters, converged, float(violation), trace)


@dataclass
class BinarySvm:
    """One trained machine for a class pair; decision > 0 votes the positive class."""

    params: SvmParams
    support: np.ndarray      # support vectors, standardized space
    coef: np.ndarray         # alpha_i * y_i at support vectors
    bias: float
    alphas: np.ndarray = field(default_factory=lambda: np.empty(0))  # all training multipliers
    converged: bool = True
    iterations: int = 0
    kkt_violation: float = 0.0
    objective_trace: list[float] = field(repr=False, default_factory=list)

    def decision(self, X: np.ndarray) -> np.ndarray:
        if len(self.support) == 0:
            return np.full(len(X), self.bias)
        return kernel_matrix(self.params, X, self.support) @ self.coef + self.bias

    def linear_weights(self) -> np.ndarray:
        """Explicit w for the linear kernel: w = sum(alpha_i y_i x_i)."""
        if self.params.kernel is not Kernel.LINEAR:
            raise ValueError("explicit weights exist only for the linear kernel")
        return self.coef @ self.support


@dataclass
class SvmModel:
    classes: list
    standardizer: Standardizer
    machines: list[tuple[int, int, BinarySvm]]  # (neg class index, pos class index, machine)
    params: SvmParams

    @property
    def converged(self) -> bool:
        return all(m.converged for _, _, m in self.machines)


def _check_training_input(X: np.ndarray, y) -> tuple[np.ndarray, list]:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("X must be 2-D")
    if not np.all(np.isfinite(X)):
        raise ValueError("non-finite feature values")
    classes = sorted(set(y))
    if len(classes) < 2:
        raise ValueError("need at least 2 classes to train")
    return X, classes


def fit_svm(X: np.ndarray, y, params: SvmParams = SvmParams(gamma=1.0)) -> SvmModel:
    """Train a one-vs-one SVM; inputs are standardized internally."""
    X, classes = _check_training_input(X, y)
    # integer-encode labels: numpy's elementwise == mangles str-subclass enums
    index = {lab: i for i, lab in enumerate(classes)}
    y_idx = np.array([index[lab] for lab in y], dtype=np.int64)
    std = Standardizer.fit(X)
    Xs = std.transform(X)
    machines = []
    for a, b in combinations(range(len(classes)), 2):
        mask = (y_idx == a) | (y_idx == b)
        Xp = Xs[mask]
        yp = np.where(y_idx[mask] == b, 1.0, -1.0)
        K = kernel_matrix(params, Xp, Xp)
        res = smo_solve(K, yp, params.C, params.tol, params.max_iters)
        if not res.converged:
            log.warning("SMO budget exhausted for pair (%s, %s): violation %.3g after %d steps",
                        classes[a], classes[b], res.kkt_violation, res.iterations)
        sv = res.alphas > 0
        machines.append((a, b, BinarySvm(
            params=params, support=Xp[sv], coef=res.alphas[sv] * yp[sv], bias=res.bias,
            alphas=res.alphas, converged=res.converged, iterations=res.iterations,
            kkt_violation=res.kkt_violation, objective_trace=res.objective_trace)))
    return SvmModel(classes=classes, standardizer=std, machines=machines, params=params)


def predict_svm(model: SvmModel, X: np.ndarray) -> list:
    """One-vs-one majority vote; ties by summed signed decisions, then class order."""
    Xs = model.standardizer.transform(np.asarray(X, dtype=np.float64))
    n, n_classes = len(Xs), len(model.classes)
    votes = np.zeros((n, n_classes), dtype=np.int64)
    signed = np.zeros((n, n_classes))
    for a, b, machine in model.machines:
        d = machine.decision(Xs)
        votes[:, b] += d > 0
        votes[:, a] += d < 0
        signed[:, b] += d
        signed[:, a] -= d
    out = []
    for r in range(n):
        cand = np.flatnonzero(votes[r] == votes[r].max())
        if len(cand) > 1:
            s = signed[r, cand]
            cand = cand[s == s.max()]
        out.append(model.classes[cand[0]])
    return out
