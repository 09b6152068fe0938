"""Soft-margin SVM on a precomputed kernel, trained with SMO.

The solver follows Platt's outer loop: a full sweep over every sample
followed by sweeps over the non-bound samples until they stop changing.
For a KKT-violating sample i the partner j maximizes |E_i - E_j|; when that
pair cannot make progress the remaining candidates are tried in a fixed
rotation starting at i, which keeps training deterministic.

Decision function: f(x) = sum_j alpha_j y_j k(x, x_j) + b.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Sequence

import numpy as np

from ..core.errors import DimensionMismatchError, InputValidationError, SingleClassError
from ..core.logging import logger
from .quantum_kernel import KernelMatrix

SUPPORT_THRESHOLD = 1e-8
STEP_EPS = 1e-12

DEFAULT_C = 1.0
DEFAULT_TOL = 1e-3
DEFAULT_MAX_PASSES = 100


@dataclass
class SvmModel:
    alphas: np.ndarray
    bias: float
    labels: np.ndarray
    C: float
    tol: float = DEFAULT_TOL
    converged: bool = True
    passes: int = 0
    kkt_violations: int = 0

    @property
    def support_indices(self) -> np.ndarray:
        return np.flatnonzero(self.alphas > SUPPORT_THRESHOLD)

    @property
    def dual_coef(self) -> np.ndarray:
        return self.alphas * self.labels

    def dual_objective(self, K) -> float:
        """W(alpha) = sum(alpha) - 1/2 * (alpha*y)^T K (alpha*y)."""
        v = self.dual_coef
        return float(self.alphas.sum() - 0.5 * v @ _entries(K) @ v)


@dataclass
class MultiClassModel:
    classes: List[str]
    models: List[SvmModel] = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return all(m.converged for m in self.models)


def _entries(K) -> np.ndarray:
    arr = K.entries if isinstance(K, KernelMatrix) else np.asarray(K, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DimensionMismatchError(f"Kernel must be a square matrix, got shape {arr.shape}")
    return arr


class _Smo:
    def __init__(self, K: np.ndarray, y: np.ndarray, C: float, tol: float) -> None:
        self.K = K
        self.y = y
        self.C = C
        self.tol = tol
        self.n = len(y)
        self.alpha = np.zeros(self.n)
        self.b = 0.0
        self.E = -y.copy()

    def _violates_kkt(self, i: int) -> bool:
        r = self.E[i] * self.y[i]
        a = self.alpha[i]
        return (r < -self.tol and a < self.C) or (r > self.tol and a > 0.0)

    def _non_bound(self) -> np.ndarray:
        return np.flatnonzero((self.alpha > 0.0) & (self.alpha < self.C))

    def _clip(self, a: float) -> float:
        if a < STEP_EPS * self.C:
            return 0.0
        if a > self.C * (1.0 - STEP_EPS):
            return self.C
        return a

    def take_step(self, i1: int, i2: int) -> bool:
        if i1 == i2:
            return False
        K, C = self.K, self.C
        a1, a2 = self.alpha[i1], self.alpha[i2]
        y1, y2 = self.y[i1], self.y[i2]
        E1, E2 = self.E[i1], self.E[i2]
        s = y1 * y2
        if y1 != y2:
            L, H = max(0.0, a2 - a1), min(C, C + a2 - a1)
        else:
            L, H = max(0.0, a1 + a2 - C), min(C, a1 + a2)
        if H - L < STEP_EPS:
            return False

        k11, k12, k22 = K[i1, i1], K[i1, i2], K[i2, i2]
        eta = k11 + k22 - 2.0 * k12
        slope = y2 * (E1 - E2)
        if eta > 0:
            a2_new = min(H, max(L, a2 + slope / eta))
        else:
            # objective along the constraint line: slope*t - eta/2*t^2
            gain_L = slope * (L - a2) - 0.5 * eta * (L - a2) ** 2
            gain_H = slope * (H - a2) - 0.5 * eta * (H - a2) ** 2
            if gain_L > gain_H + STEP_EPS:
                a2_new = L
            elif gain_H > gain_L + STEP_EPS:
                a2_new = H
            else:
                a2_new = a2
        a2_new = self._clip(a2_new)
        if abs(a2_new - a2) < STEP_EPS * (a2_new + a2 + STEP_EPS):
            return False

        a1_new = a1 + s * (a2 - a2_new)
        if a1_new < 0.0:
            a2_new += s * a1_new
            a1_new = 0.0
        elif a1_new > C:
            a2_new += s * (a1_new - C)
            a1_new = C
        a1_new = self._clip(a1_new)
        a2_new = self._clip(a2_new)

        d1, d2 = y1 * (a1_new - a1), y2 * (a2_new - a2)
        b1 = self.b - E1 - d1 * k11 - d2 * k12
        b2 = self.b - E2 - d1 * k12 - d2 * k22
        if 0.0 < a1_new < C:
            b_new = b1
        elif 0.0 < a2_new < C:
            b_new = b2
        else:
            b_new = 0.5 * (b1 + b2)

        self.E += d1 * K[i1] + d2 * K[i2] + (b_new - self.b)
        self.alpha[i1], self.alpha[i2] = a1_new, a2_new
        self.b = b_new
        return True

    def _rotated(self, candidates: np.ndarray, start: int) -> np.ndarray:
        if len(candidates) == 0:
            return candidates
        offset = int(np.searchsorted(candidates, start))
        return np.roll(candidates, -offset)

    def examine(self, i2: int) -> int:
        if not self._violates_kkt(i2):
            return 0
        non_bound = self._non_bound()
        if len(non_bound) > 1:
            i1 = int(non_bound[np.argmax(np.abs(self.E[i2] - self.E[non_bound]))])
            if self.take_step(i1, i2):
                return 1
        for i1 in self._rotated(non_bound, i2):
            if self.take_step(int(i1), i2):
                return 1
        for i1 in self._rotated(np.arange(self.n), i2):
            if self.take_step(int(i1), i2):
                return 1
        return 0

    def run(self, max_passes: int) -> tuple[bool, int]:
        for passes in range(1, max_passes + 1):
            if sum(self.examine(i) for i in range(self.n)) == 0:
                return True, passes
            for _ in range(max(self.n, 100)):
                if sum(self.examine(int(i)) for i in self._non_bound()) == 0:
                    break
        return False, max_passes


def final_bias(K: np.ndarray, y: np.ndarray, alphas: np.ndarray, C: float) -> float:
    """Mean of y_i - g_i over free SVs; else the midpoint of the bound-derived interval."""
    g = K @ (alphas * y)
    at_zero = alphas <= SUPPORT_THRESHOLD
    at_c = alphas >= C - SUPPORT_THRESHOLD
    free = ~at_zero & ~at_c
    if free.any():
        return float(np.mean(y[free] - g[free]))
    pos, neg = y > 0, y < 0
    lower = np.concatenate([1.0 - g[at_zero & pos], -1.0 - g[at_c & neg]])
    upper = np.concatenate([-1.0 - g[at_zero & neg], 1.0 - g[at_c & pos]])
    if len(lower) and len(upper):
        return float(0.5 * (lower.max() + upper.min()))
    if len(lower):
        return float(lower.max())
    if len(upper):
        return float(upper.min())
    return 0.0


def count_kkt_violations(K: np.ndarray, y: np.ndarray, alphas: np.ndarray, bias: float, C: float, tol: float) -> int:
    margin = y * (K @ (alphas * y) + bias)
    at_zero = alphas <= SUPPORT_THRESHOLD
    at_c = alphas >= C - SUPPORT_THRESHOLD
    free = ~at_zero & ~at_c
    bad = (at_zero & (margin < 1.0 - tol)) | (at_c & (margin > 1.0 + tol)) | (free & (np.abs(margin - 1.0) > tol))
    return int(bad.sum())


def _validate_labels(y, n: int) -> np.ndarray:
    labels = np.asarray(y)
    if labels.shape != (n,):
        raise DimensionMismatchError(f"Expected {n} labels, got shape {labels.shape}")
    if not np.isin(labels, (-1, 1)).all():
        raise InputValidationError("Binary SVM labels must be -1 or +1")
    if not ((labels == 1).any() and (labels == -1).any()):
        raise SingleClassError("SVM training needs at least one sample of each sign")
    return labels.astype(np.float64)


def train_svm(
    K,
    y,
    C: float = DEFAULT_C,
    tol: float = DEFAULT_TOL,
    max_passes: int = DEFAULT_MAX_PASSES,
) -> SvmModel:
    """Train a binary soft-margin SVM on a precomputed Gram matrix."""
    entries = _entries(K)
    labels = _validate_labels(y, entries.shape[0])
    if not C > 0 or not tol > 0 or int(max_passes) < 1:
        raise InputValidationError(f"Invalid SVM hyperparameters C={C}, tol={tol}, max_passes={max_passes}")

    smo = _Smo(entries, labels, float(C), float(tol))
    converged, passes = smo.run(int(max_passes))
    bias = final_bias(entries, labels, smo.alpha, float(C))
    violations = count_kkt_violations(entries, labels, smo.alpha, bias, float(C), float(tol))
    model = SvmModel(
        alphas=smo.alpha,
        bias=bias,
        labels=labels,
        C=float(C),
        tol=float(tol),
        converged=converged,
        passes=passes,
        kkt_violations=violations,
    )
    if converged:
        logger.debug(
            f"SMO converged after {passes} pass(es): {len(model.support_indices)} support vectors, "
            f"{violations} KKT violation(s) at tol={tol}"
        )
    else:
        logger.warning(
            f"SMO did not converge within {max_passes} passes ({violations} KKT violation(s) remain)"
        )
    return model


def decision_values(model: SvmModel, k_rows) -> np.ndarray:
    rows = np.asarray(k_rows, dtype=np.float64)
    single = rows.ndim == 1
    rows = np.atleast_2d(rows)
    if rows.shape[1] != len(model.alphas):
        raise DimensionMismatchError(
            f"Kernel rows have width {rows.shape[1]} but the model has {len(model.alphas)} training samples"
        )
    values = rows @ model.dual_coef + model.bias
    return values[0:1] if single else values


def predict_binary(model: SvmModel, k_rows) -> np.ndarray:
    """Sign of the decision value; f = 0 resolves to +1."""
    return np.where(decision_values(model, k_rows) >= 0.0, 1, -1)


def train_one_vs_rest(
    K,
    class_labels: Sequence[str],
    C: float = DEFAULT_C,
    tol: float = DEFAULT_TOL,
    max_passes: int = DEFAULT_MAX_PASSES,
    workers: int = 1,
) -> MultiClassModel:
    """One binary SVM per class (sorted lexicographically), all on the same Gram matrix."""
    entries = _entries(K)
    labels = np.asarray([str(c) for c in class_labels])
    if labels.shape != (entries.shape[0],):
        raise DimensionMismatchError(f"Expected {entries.shape[0]} class labels, got {labels.shape}")
    classes = sorted(set(labels.tolist()))
    if len(classes) < 2:
        raise SingleClassError(f"One-vs-rest needs at least two classes, got {classes}")

    def _fit(cls: str) -> SvmModel:
        logger.debug(f"Training one-vs-rest model for class {cls}")
        return train_svm(entries, np.where(labels == cls, 1, -1), C=C, tol=tol, max_passes=max_passes)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            models = list(pool.map(_fit, classes))
    else:
        models = [_fit(c) for c in classes]
    return MultiClassModel(classes=classes, models=models)


def multi_decision_values(model: MultiClassModel, k_rows) -> np.ndarray:
    """(m, n_classes) matrix of per-class decision values."""
    return np.column_stack([decision_values(m, k_rows) for m in model.models])


def predict_multi(model: MultiClassModel, k_rows) -> np.ndarray:
    """Argmax over per-class decision values; ties go to the smallest class name."""
    scores = multi_decision_values(model, k_rows)
    # np.argmax returns the first maximum and classes are sorted
    return np.asarray(model.classes)[np.argmax(scores, axis=1)]
