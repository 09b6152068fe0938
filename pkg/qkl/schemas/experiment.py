"""Pydantic models for the experiment configuration document.

`ExperimentConfig` is loaded from a single JSON file (`--config`) and fully
describes an experiment: dataset, feature selection, task, kernel, feature
map, SVM and baseline hyperparameters, train/test sizes, seed, worker count
and output directory. Every default is declared here so the emitted
`effective_config.json` records the complete provenance of a run.
"""
from __future__ import annotations

import math
from typing import List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

FEATURE_NAMES = ("Amag", "B-V", "Vmag", "Plx", "e_Plx", "Amag_SQ", "B-V_SQ", "B-V+Amag", "B-V-Amag")
DEFAULT_FEATURES = ["Amag", "B-V", "B-V+Amag", "B-V-Amag"]
SPECTRAL_CLASSES = ("O", "B", "A", "F", "G", "K", "M")


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class FeatureMapSettings(_Strict):
    """Repetitions and entanglement of the ZZ feature map.

    `entanglement` is "full", "linear", "circular" or an explicit list of pairs.
    """
    repetitions: int = Field(default=2, ge=1)
    entanglement: Union[Literal["full", "linear", "circular"], List[List[int]]] = "full"


class KernelSettings(_Strict):
    kind: Literal["quantum", "rbf"] = "quantum"
    sigma: float = Field(default=1.0, gt=0)
    # Gram cost is quadratic; larger quantum training sets are skipped by `curve`
    max_kernel_size: int = Field(default=5000, ge=1)


class SvmSettings(_Strict):
    C: float = Field(default=1.0, gt=0)
    tol: float = Field(default=1e-3, gt=0)
    max_passes: int = Field(default=100, ge=1)


class BaselineSettings(_Strict):
    k: int = Field(default=5, ge=1)
    l2: float = Field(default=1e-4, ge=0)
    lr: float = Field(default=0.1, gt=0)
    max_iter: int = Field(default=5000, ge=1)
    grad_tol: float = Field(default=1e-6, gt=0)


class BenchSettings(_Strict):
    size: int = Field(default=500, ge=1)
    workers: List[int] = Field(default_factory=lambda: [1, 2, 4, 8])
    repeats: int = Field(default=3, ge=1)
    source: Literal["synthetic", "dataset"] = "synthetic"

    @field_validator("workers")
    @classmethod
    def _positive_workers(cls, v: List[int]) -> List[int]:
        if not v or any(w < 1 for w in v):
            raise ValueError("bench.workers must be a non-empty list of positive integers")
        return v


class ExperimentConfig(_Strict):
    """Complete, validated description of one experiment."""
    dataset_path: str = "data/Star39552_balanced.csv"
    features: List[str] = Field(default_factory=lambda: list(DEFAULT_FEATURES))
    task: Literal["binary", "multiclass"] = "binary"
    spectral_classes: Optional[List[str]] = None
    min_class_count: int = Field(default=50, ge=1)
    parallax_unit: Literal["arcsec", "mas"] = "mas"

    kernel: KernelSettings = Field(default_factory=KernelSettings)
    feature_map: FeatureMapSettings = Field(default_factory=FeatureMapSettings)
    svm: SvmSettings = Field(default_factory=SvmSettings)
    baselines: BaselineSettings = Field(default_factory=BaselineSettings)
    bench: BenchSettings = Field(default_factory=BenchSettings)

    test_fraction: float = 0.2
    test_size: Optional[int] = Field(default=None, ge=1)
    train_size: int = Field(default=2000, ge=2)
    train_sizes: List[int] = Field(default_factory=lambda: [1000, 2000, 5000, 10000, 15000, 20000])
    seed: int = 42
    workers: int = Field(default=1, ge=1)
    output_dir: str = "outputs"
    strict_convergence: bool = False

    @field_validator("features")
    @classmethod
    def _known_features(cls, v: List[str]) -> List[str]:
        unknown = [f for f in v if f not in FEATURE_NAMES]
        if unknown:
            raise ValueError(f"unknown features {unknown}; choose from {list(FEATURE_NAMES)}")
        if len(set(v)) != len(v):
            raise ValueError(f"duplicate features in {v}")
        if not v:
            raise ValueError("at least one feature is required")
        return v

    @field_validator("spectral_classes")
    @classmethod
    def _known_classes(cls, v: Optional[List[str]]) -> Optional[List[str]]:
        if v is None:
            return v
        v = [c.upper() for c in v]
        bad = [c for c in v if c not in SPECTRAL_CLASSES]
        if bad:
            raise ValueError(f"unknown spectral classes {bad}; choose from {list(SPECTRAL_CLASSES)}")
        if len(set(v)) < 2:
            raise ValueError("multi-class experiments need at least two spectral classes")
        return sorted(set(v))

    @field_validator("train_sizes")
    @classmethod
    def _positive_sizes(cls, v: List[int]) -> List[int]:
        if not v or any(s < 2 for s in v):
            raise ValueError("train_sizes must be a non-empty list of integers >= 2")
        return v

    @model_validator(mode="after")
    def _consistent(self) -> "ExperimentConfig":
        if not 0.0 < self.test_fraction < 1.0 or math.isnan(self.test_fraction):
            raise ValueError(f"test_fraction must lie in (0, 1), got {self.test_fraction}")
        ent = self.feature_map.entanglement
        if isinstance(ent, list):
            n = len(self.features)
            for pair in ent:
                if len(pair) != 2 or pair[0] == pair[1] or not all(0 <= q < n for q in pair):
                    raise ValueError(f"entanglement pair {pair} is invalid for {n} features")
        return self

    @property
    def n_features(self) -> int:
        return len(self.features)
