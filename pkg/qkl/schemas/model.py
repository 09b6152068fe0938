"""Pydantic models for persisted model documents.

`ModelDocument` is what `train` writes and `eval` reads: the fitted scaler,
the scaled training vectors and labels (the SVM works on a precomputed
kernel, so test rows need them), the per-class SVM coefficients, the kernel
settings and a SHA-256 fingerprint of the training set.
"""
from typing import Any, Dict, List, Literal

from pydantic import BaseModel, Field


class ScalerParams(BaseModel):
    """Standardization fitted on the training split plus the [0, pi] range map."""
    feature_names: List[str]
    mean: List[float]
    std: List[float]
    z_min: List[float]
    z_max: List[float]


class SvmCoefficients(BaseModel):
    """One binary SVM: alpha_i >= 0 per training sample, bias and diagnostics."""
    alphas: List[float]
    bias: float
    labels: List[int]
    C: float
    tol: float
    converged: bool = True
    passes: int = 0
    kkt_violations: int = 0


class ModelDocument(BaseModel):
    format_version: int = 1
    task: Literal["binary", "multiclass"]
    kernel: Dict[str, Any]
    features: List[str]
    # every label the task can score; a one-vs-rest model may cover fewer
    classes: List[str]
    trained_classes: List[str] = Field(default_factory=list)
    scaler: ScalerParams
    train_vectors: List[List[float]]
    train_labels: List[str]
    fingerprint: str
    models: List[SvmCoefficients]
    config: Dict[str, Any] = Field(default_factory=dict)
