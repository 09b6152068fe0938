"""ZZ feature map: classical feature vectors -> encoded statevectors.

Each repetition applies H on every qubit, P(2*x_i) on qubit i, then for every
entanglement pair (i, j) the ZZ phase with angle 2*(pi - x_i)*(pi - x_j).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from ..core.errors import DimensionMismatchError, EncodingDomainError, InputValidationError
from .statevector import (
    StateVector,
    hadamard_amplitudes,
    phase_amplitudes,
    zero_amplitudes,
    zz_phase_amplitudes,
)

Pair = tuple[int, int]
ENTANGLEMENT_PATTERNS = ("full", "linear", "circular")


def entanglement_pairs(n_features: int, pattern: str | Iterable[Sequence[int]] = "full") -> tuple[Pair, ...]:
    """Resolve a named pattern (or explicit pairs) to an ordered pair tuple with i < j."""
    if isinstance(pattern, str):
        if pattern == "full":
            raw = [(i, j) for i in range(n_features) for j in range(i + 1, n_features)]
        elif pattern == "linear":
            raw = [(i, i + 1) for i in range(n_features - 1)]
        elif pattern == "circular":
            raw = [(i, i + 1) for i in range(n_features - 1)]
            if n_features > 2:
                raw.append((n_features - 1, 0))
        else:
            raise InputValidationError(
                f"Unknown entanglement pattern '{pattern}', expected one of {ENTANGLEMENT_PATTERNS}"
            )
    else:
        raw = [tuple(int(q) for q in p) for p in pattern]

    pairs: list[Pair] = []
    for p in raw:
        if len(p) != 2:
            raise InputValidationError(f"Entanglement pair must have two indices, got {p}")
        i, j = sorted(p)
        if i == j or i < 0 or j >= n_features:
            raise InputValidationError(f"Invalid entanglement pair {p} for {n_features} features")
        if (i, j) not in pairs:
            pairs.append((i, j))
    return tuple(pairs)


@dataclass(frozen=True)
class FeatureMapConfig:
    n_features: int
    repetitions: int = 2
    entanglement: tuple[Pair, ...] | None = None
    scaling_interval: tuple[float, float] = (0.0, math.pi)
    pattern: str = field(default="full", compare=False)

    def __post_init__(self) -> None:
        if self.n_features < 1:
            raise InputValidationError(f"n_features must be positive, got {self.n_features}")
        if self.repetitions < 1:
            raise InputValidationError(f"repetitions must be positive, got {self.repetitions}")
        lo, hi = (float(v) for v in self.scaling_interval)
        if not lo < hi:
            raise InputValidationError(f"Scaling interval must satisfy lo < hi, got {self.scaling_interval}")
        object.__setattr__(self, "scaling_interval", (lo, hi))

        source = self.pattern if self.entanglement is None else self.entanglement
        pairs = entanglement_pairs(self.n_features, source)
        if self.entanglement is not None and len(pairs) != len(self.entanglement):
            raise InputValidationError(f"Duplicate entanglement pairs in {self.entanglement}")
        object.__setattr__(self, "entanglement", pairs)
        if self.entanglement is not None and not isinstance(source, str):
            object.__setattr__(self, "pattern", "explicit")

    @property
    def n_qubits(self) -> int:
        return self.n_features

    def describe(self) -> dict:
        """JSON-friendly provenance record."""
        return {
            "n_features": self.n_features,
            "repetitions": self.repetitions,
            "entanglement": [list(p) for p in self.entanglement],
            "scaling_interval": list(self.scaling_interval),
        }


def validate_features(X, config: FeatureMapConfig) -> np.ndarray:
    """Return X as a float (m, n_features) array, checking dimensions and interval."""
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != config.n_features:
        raise DimensionMismatchError(
            f"Expected feature vectors of length {config.n_features}, got shape {np.shape(X)}"
        )
    lo, hi = config.scaling_interval
    bad = ~np.isfinite(arr) | (arr < lo) | (arr > hi)
    if bad.any():
        row, col = (int(v) for v in np.argwhere(bad)[0])
        raise EncodingDomainError(
            f"Feature {col} of sample {row} = {arr[row, col]!r} lies outside [{lo}, {hi}]"
        )
    return arr


def encode_batch(X, config: FeatureMapConfig) -> np.ndarray:
    """Encode every row of X; returns an (m, 2^n) complex array of amplitudes."""
    arr = validate_features(X, config)
    n = config.n_qubits
    amps = zero_amplitudes(n, batch=arr.shape[0])
    shifted = math.pi - arr
    for _ in range(config.repetitions):
        for q in range(n):
            amps = hadamard_amplitudes(amps, n, q)
        for q in range(n):
            amps = phase_amplitudes(amps, n, q, 2.0 * arr[:, q])
        for i, j in config.entanglement:
            amps = zz_phase_amplitudes(amps, n, i, j, 2.0 * shifted[:, i] * shifted[:, j])
    return amps


def encode_feature_map(x, config: FeatureMapConfig) -> StateVector:
    """Return U_phi(x)|0...0> for a single feature vector."""
    if np.ndim(x) != 1:
        raise DimensionMismatchError(f"Expected a single feature vector, got shape {np.shape(x)}")
    amps = encode_batch(x, config)[0]
    amps.setflags(write=False)
    return StateVector(config.n_qubits, amps)
