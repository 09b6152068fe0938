"""Pydantic models for emitted reports: cleaning, metrics, curve and timing rows.

Undefined ratios are stored as NaN in memory and serialize to JSON `null`;
the metric name is also listed under `undefined`.
"""
from typing import Dict, List, Optional

from pydantic import BaseModel, Field


class AmagCheck(BaseModel):
    """Recomputed absolute magnitude vs the file's Amag column (reported only)."""
    parallax_unit: str
    rows: int
    max_abs_deviation: float
    mean_abs_deviation: float


class CleaningReport(BaseModel):
    input_rows: int = 0
    duplicates: int = 0
    missing: int = 0
    non_positive_parallax: int = 0
    kept: int = 0
    missing_by_field: Dict[str, int] = Field(default_factory=dict)
    spectral_counts: Dict[str, int] = Field(default_factory=dict)
    excluded_from_multiclass: int = 0
    amag_check: Optional[AmagCheck] = None


class BinaryMetrics(BaseModel):
    accuracy: float
    f1: float
    specificity: float
    sensitivity: float
    undefined: List[str] = Field(default_factory=list)


class MultiClassMetrics(BaseModel):
    accuracy: float
    macro_f1: float
    per_class_f1: Dict[str, Optional[float]] = Field(default_factory=dict)
    undefined: List[str] = Field(default_factory=list)


class CurveRow(BaseModel):
    kernel: str
    train_size: int
    status: str = "ok"
    accuracy: Optional[float] = None
    f1: Optional[float] = None
    specificity: Optional[float] = None
    sensitivity: Optional[float] = None
    macro_f1: Optional[float] = None


class TimingRow(BaseModel):
    workers: int
    wall_seconds: float
    speedup: float
    identical: bool
