"""Classical comparison models: k-nearest neighbours and logistic regression.

Both models are deterministic given data and hyperparameters. Multi-class
logistic regression is one-vs-rest, mirroring the SVM scheme.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Dict, List, Sequence

import numpy as np

from ..core.errors import DimensionMismatchError, InputValidationError, SingleClassError
from ..core.logging import logger

DEFAULT_K = 5
DEFAULT_L2 = 1e-4
DEFAULT_LR = 0.1
DEFAULT_MAX_ITER = 5000
DEFAULT_GRAD_TOL = 1e-6


@dataclass
class KnnModel:
    features: np.ndarray
    labels: np.ndarray
    k: int = DEFAULT_K

    def __post_init__(self) -> None:
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels)
        if self.features.ndim != 2 or len(self.features) == 0:
            raise InputValidationError("KNN model needs a non-empty 2-D training matrix")
        if len(self.labels) != len(self.features):
            raise DimensionMismatchError(f"{len(self.features)} training rows but {len(self.labels)} labels")
        if not 1 <= self.k <= len(self.features):
            raise InputValidationError(f"k must be within [1, {len(self.features)}], got {self.k}")


def knn_fit(X, y, k: int = DEFAULT_K) -> KnnModel:
    return KnnModel(features=X, labels=y, k=k)


def _vote(labels: Sequence[Any]) -> Any:
    counts = Counter(labels)
    best = max(counts.values())
    return min(label for label, c in counts.items() if c == best)


def knn_predict(model: KnnModel, x) -> Any:
    """Majority label of the k nearest training points (Euclidean).

    Distance ties go to the lower training index; vote ties to the smallest label.
    """
    point = np.asarray(x, dtype=np.float64)
    if point.shape != (model.features.shape[1],):
        raise DimensionMismatchError(
            f"Expected a vector of length {model.features.shape[1]}, got shape {point.shape}"
        )
    dist = np.sum((model.features - point) ** 2, axis=1)
    nearest = np.argsort(dist, kind="stable")[: model.k]
    return _vote(model.labels[nearest].tolist())


def knn_predict_many(model: KnnModel, X) -> np.ndarray:
    return np.asarray([knn_predict(model, x) for x in np.asarray(X, dtype=np.float64)])


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def logistic_loss(w: np.ndarray, b: float, X: np.ndarray, y01: np.ndarray, l2: float) -> float:
    """Mean logistic loss + (l2/2)*||w||^2; the intercept is not penalized."""
    z = X @ w + b
    # log(1 + e^z) - y*z, computed stably
    return float(np.mean(np.logaddexp(0.0, z) - y01 * z) + 0.5 * l2 * (w @ w))


def logistic_gradient(w: np.ndarray, b: float, X: np.ndarray, y01: np.ndarray, l2: float) -> tuple[np.ndarray, float]:
    residual = _sigmoid(X @ w + b) - y01
    return X.T @ residual / len(y01) + l2 * w, float(residual.mean())


@dataclass
class LogisticModel:
    weights: np.ndarray
    bias: float
    l2: float
    positive_label: Any = 1
    negative_label: Any = -1
    iterations: int = 0
    grad_norm: float = 0.0
    converged: bool = True
    loss_history: List[float] = field(default_factory=list, repr=False)

    def score(self, X) -> np.ndarray:
        return np.atleast_2d(np.asarray(X, dtype=np.float64)) @ self.weights + self.bias


@dataclass
class MultiLogisticModel:
    classes: List[Any]
    models: List[LogisticModel]

    def scores(self, X) -> np.ndarray:
        return np.column_stack([m.score(X) for m in self.models])


def logistic_train(
    X,
    y,
    l2: float = DEFAULT_L2,
    lr: float = DEFAULT_LR,
    max_iter: int = DEFAULT_MAX_ITER,
    grad_tol: float = DEFAULT_GRAD_TOL,
    positive_label: Any = 1,
    track_loss: bool = False,
) -> LogisticModel:
    """Full-batch gradient descent on the L2-regularized logistic loss.

    Stops when the gradient infinity-norm drops to `grad_tol` or after `max_iter` steps.
    """
    A = np.asarray(X, dtype=np.float64)
    labels = np.asarray(y)
    if A.ndim != 2 or len(A) != len(labels):
        raise DimensionMismatchError(f"Feature matrix {A.shape} does not match {len(labels)} labels")
    y01 = (labels == positive_label).astype(np.float64)
    if y01.min() == y01.max():
        raise SingleClassError("Logistic regression needs at least one sample of each class")
    others = [v for v in dict.fromkeys(labels.tolist()) if v != positive_label]
    negative_label = others[0] if len(others) == 1 else -1

    w = np.zeros(A.shape[1])
    b = 0.0
    history: List[float] = []
    grad_norm = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        gw, gb = logistic_gradient(w, b, A, y01, l2)
        grad_norm = max(float(np.max(np.abs(gw))), abs(gb))
        if grad_norm <= grad_tol:
            it -= 1
            break
        w = w - lr * gw
        b = b - lr * gb
        if track_loss:
            history.append(logistic_loss(w, b, A, y01, l2))
    converged = grad_norm <= grad_tol
    if not converged:
        logger.debug(f"Logistic regression stopped at max_iter={max_iter} with grad norm {grad_norm:.2e}")
    return LogisticModel(
        weights=w,
        bias=b,
        l2=l2,
        positive_label=positive_label,
        negative_label=negative_label,
        iterations=it,
        grad_norm=grad_norm,
        converged=converged,
        loss_history=history,
    )


def logistic_train_one_vs_rest(
    X,
    labels,
    l2: float = DEFAULT_L2,
    lr: float = DEFAULT_LR,
    max_iter: int = DEFAULT_MAX_ITER,
    grad_tol: float = DEFAULT_GRAD_TOL,
) -> MultiLogisticModel:
    values = np.asarray(labels)
    classes = sorted(set(values.tolist()))
    if len(classes) < 2:
        raise SingleClassError(f"One-vs-rest needs at least two classes, got {classes}")
    models = [
        logistic_train(X, values == c, l2=l2, lr=lr, max_iter=max_iter, grad_tol=grad_tol, positive_label=True)
        for c in classes
    ]
    return MultiLogisticModel(classes=classes, models=models)


def logistic_predict(model: LogisticModel | MultiLogisticModel, x) -> Any:
    """Binary: sigmoid >= 0.5 -> positive label. Multi-class: argmax of linear scores."""
    return logistic_predict_many(model, np.atleast_2d(np.asarray(x, dtype=np.float64)))[0]


def logistic_predict_many(model: LogisticModel | MultiLogisticModel, X) -> np.ndarray:
    if isinstance(model, MultiLogisticModel):
        # argmax keeps the first (smallest) class on ties
        return np.asarray(model.classes)[np.argmax(model.scores(X), axis=1)]
    # sigmoid(z) >= 0.5 exactly when z >= 0
    positive = model.score(X) >= 0.0
    return np.where(positive, model.positive_label, model.negative_label)


def describe(model: Any) -> Dict[str, Any]:
    """Short JSON-friendly summary for reports."""
    if isinstance(model, KnnModel):
        return {"model": "knn", "k": model.k, "train_size": int(len(model.labels))}
    if isinstance(model, MultiLogisticModel):
        return {
            "model": "logistic-ovr",
            "classes": [str(c) for c in model.classes],
            "converged": all(m.converged for m in model.models),
        }
    return {"model": "logistic", "iterations": model.iterations, "converged": model.converged}
