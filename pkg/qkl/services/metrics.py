"""Confusion matrices and classification metrics.

Binary metrics treat giants (+1) as the positive class. Percent matrices are
normalized per true class (row-wise). Ratios with a zero denominator are
NaN and listed under `undefined`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np
import pandas as pd

from ..core.errors import InputValidationError, UnknownLabelError
from ..schemas.report import BinaryMetrics, MultiClassMetrics


@dataclass(frozen=True)
class ConfusionMatrix:
    """counts[i][j] = samples of true class i predicted as class j."""
    classes: Tuple[Any, ...]
    counts: np.ndarray

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def index(self, label: Any) -> int:
        try:
            return self.classes.index(label)
        except ValueError:
            raise UnknownLabelError(f"Label {label!r} is not in class list {list(self.classes)}") from None

    def to_frame(self, values: np.ndarray | None = None) -> pd.DataFrame:
        names = [str(c) for c in self.classes]
        frame = pd.DataFrame(self.counts if values is None else values, index=names, columns=names)
        frame.index.name = "true\\pred"
        return frame


def confusion(y_true: Sequence[Any], y_pred: Sequence[Any], classes: Sequence[Any]) -> ConfusionMatrix:
    classes = tuple(classes)
    if len(set(classes)) != len(classes):
        raise InputValidationError(f"Duplicate labels in class list {list(classes)}")
    y_true, y_pred = list(y_true), list(y_pred)
    if len(y_true) != len(y_pred):
        raise InputValidationError(f"{len(y_true)} true labels but {len(y_pred)} predictions")
    position = {c: i for i, c in enumerate(classes)}
    counts = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for t, p in zip(y_true, y_pred):
        for label in (t, p):
            if label not in position:
                raise UnknownLabelError(f"Label {label!r} is not in class list {list(classes)}")
        counts[position[t], position[p]] += 1
    return ConfusionMatrix(classes, counts)


def to_percent(cm: ConfusionMatrix) -> Tuple[np.ndarray, List[Any]]:
    """Row-normalize to percentages; returns (matrix, classes whose row was empty)."""
    rows = cm.counts.sum(axis=1)
    out = np.zeros(cm.counts.shape, dtype=np.float64)
    nonempty = rows > 0
    out[nonempty] = cm.counts[nonempty] / rows[nonempty, None] * 100.0
    empty = [cm.classes[i] for i in np.flatnonzero(~nonempty)]
    return out, empty


def accuracy(cm: ConfusionMatrix) -> float:
    total = cm.total
    return float(np.trace(cm.counts) / total) if total else math.nan


def _ratio(num: float, den: float) -> float:
    return num / den if den else math.nan


def binary_metrics(cm: ConfusionMatrix, positive: Any = 1) -> BinaryMetrics:
    if len(cm.classes) != 2:
        raise InputValidationError(f"Binary metrics need exactly two classes, got {list(cm.classes)}")
    p = cm.index(positive)
    n = 1 - p
    tp, fn = cm.counts[p, p], cm.counts[p, n]
    tn, fp = cm.counts[n, n], cm.counts[n, p]
    values = {
        "accuracy": accuracy(cm),
        "f1": _ratio(2 * tp, 2 * tp + fp + fn),
        "specificity": _ratio(tn, tn + fp),
        "sensitivity": _ratio(tp, tp + fn),
    }
    undefined = [k for k, v in values.items() if math.isnan(v)]
    return BinaryMetrics(**{k: float(v) for k, v in values.items()}, undefined=undefined)


def per_class_f1(cm: ConfusionMatrix) -> Dict[Any, float]:
    """One-vs-rest F1 per class; NaN when the class is neither present nor predicted."""
    diag = np.diag(cm.counts)
    fp = cm.counts.sum(axis=0) - diag
    fn = cm.counts.sum(axis=1) - diag
    return {c: _ratio(2 * diag[i], 2 * diag[i] + fp[i] + fn[i]) for i, c in enumerate(cm.classes)}


def macro_f1(cm: ConfusionMatrix) -> Tuple[float, List[Any]]:
    """Unweighted mean of defined per-class F1; returns (value, undefined classes)."""
    scores = per_class_f1(cm)
    defined = [v for v in scores.values() if not math.isnan(v)]
    undefined = [c for c, v in scores.items() if math.isnan(v)]
    return (float(np.mean(defined)) if defined else math.nan), undefined


def multiclass_metrics(cm: ConfusionMatrix) -> MultiClassMetrics:
    scores = per_class_f1(cm)
    macro, undefined = macro_f1(cm)
    return MultiClassMetrics(
        accuracy=accuracy(cm),
        macro_f1=macro,
        per_class_f1={str(c): (None if math.isnan(v) else float(v)) for c, v in scores.items()},
        undefined=[f"f1[{c}]" for c in undefined],
    )
