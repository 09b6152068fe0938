"""Dense statevector simulator restricted to the ZZ feature-map gate set.

Responsibilities:
- Represent an n-qubit state as a complex amplitude array of length 2^n.
  Qubit 0 is the least-significant bit of the basis-state index.
- Apply Hadamard, single-qubit phase P(angle) and the two-qubit ZZ phase
  (the CNOT-P-CNOT block) without building dense unitaries.
- Compute inner products between states.

Gate helpers named `*_amplitudes` accept arrays with leading batch axes so a
whole dataset can be pushed through the circuit in one vectorized pass;
`StateVector` operations are the single-state, pure-function surface.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..core.config import get_settings
from ..core.errors import (
    CapacityError,
    DimensionMismatchError,
    InputValidationError,
    QubitIndexError,
)

NORM_TOLERANCE = 1e-12
_INV_SQRT2 = 1.0 / math.sqrt(2.0)


@dataclass(frozen=True, eq=False)
class StateVector:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        if self.amplitudes.shape != (1 << self.n_qubits,):
            raise DimensionMismatchError(
                f"Expected {1 << self.n_qubits} amplitudes for {self.n_qubits} qubits, "
                f"got shape {self.amplitudes.shape}"
            )

    @classmethod
    def from_amplitudes(cls, amplitudes, validate_norm: bool = True) -> "StateVector":
        """Build a state from raw amplitudes, checking length and normalization."""
        amps = np.array(amplitudes, dtype=np.complex128)
        size = amps.shape[0] if amps.ndim == 1 else 0
        if amps.ndim != 1 or size < 2 or size & (size - 1):
            raise DimensionMismatchError(f"Amplitude count must be a power of two >= 2, got {amps.shape}")
        state = cls(n_qubits=size.bit_length() - 1, amplitudes=_freeze(amps))
        if validate_norm and abs(state.norm_squared() - 1.0) > NORM_TOLERANCE:
            raise InputValidationError(f"State is not normalized (norm^2={state.norm_squared():.15f})")
        return state

    def norm_squared(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def __len__(self) -> int:
        return self.amplitudes.shape[0]


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


def _check_qubit(n_qubits: int, qubit: int) -> None:
    if not 0 <= int(qubit) < n_qubits:
        raise QubitIndexError(f"Qubit index {qubit} out of range for {n_qubits} qubits")


def _check_angle(angle) -> np.ndarray:
    arr = np.asarray(angle, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise InputValidationError(f"Phase angle must be finite, got {angle!r}")
    return arr


@lru_cache(maxsize=None)
def _one_indices(n_qubits: int, qubit: int) -> np.ndarray:
    """Basis indices whose bit `qubit` is 1."""
    basis = np.arange(1 << n_qubits)
    return _freeze(np.flatnonzero((basis >> qubit) & 1))


@lru_cache(maxsize=None)
def _both_one_indices(n_qubits: int, q1: int, q2: int) -> np.ndarray:
    """Basis indices whose bits `q1` and `q2` are both 1."""
    basis = np.arange(1 << n_qubits)
    return _freeze(np.flatnonzero(((basis >> q1) & 1) & ((basis >> q2) & 1)))


def zero_amplitudes(n_qubits: int, batch: int | None = None) -> np.ndarray:
    """|0...0> amplitudes, optionally stacked `batch` times along axis 0."""
    limit = get_settings().MAX_QUBITS
    if not 1 <= n_qubits <= limit:
        raise CapacityError(f"Qubit count must be within [1, {limit}], got {n_qubits}")
    shape = (1 << n_qubits,) if batch is None else (batch, 1 << n_qubits)
    amps = np.zeros(shape, dtype=np.complex128)
    amps[..., 0] = 1.0
    return amps


def hadamard_amplitudes(amps: np.ndarray, n_qubits: int, qubit: int) -> np.ndarray:
    """Return new amplitudes with H applied to `qubit` (batch axes allowed)."""
    _check_qubit(n_qubits, qubit)
    split = amps.shape[:-1] + (1 << (n_qubits - qubit - 1), 2, 1 << qubit)
    src = np.ascontiguousarray(amps).reshape(split)
    out = np.empty(split, dtype=np.complex128)
    np.add(src[..., 0, :], src[..., 1, :], out=out[..., 0, :])
    np.subtract(src[..., 0, :], src[..., 1, :], out=out[..., 1, :])
    # real scaling on the float view keeps the operation exact per component
    out.view(np.float64)[...] *= _INV_SQRT2
    return out.reshape(amps.shape)


def phase_amplitudes(amps: np.ndarray, n_qubits: int, qubit: int, angle) -> np.ndarray:
    """Return new amplitudes with P(angle) on `qubit`.

    `angle` is a scalar or an array matching the leading batch axes.
    """
    _check_qubit(n_qubits, qubit)
    factor = np.exp(1j * _check_angle(angle))[..., None]
    idx = _one_indices(n_qubits, int(qubit))
    out = np.array(amps, dtype=np.complex128)
    out[..., idx] *= factor
    return out


def zz_phase_amplitudes(amps: np.ndarray, n_qubits: int, q1: int, q2: int, angle) -> np.ndarray:
    """Return new amplitudes with the ZZ phase block on (`q1`, `q2`)."""
    _check_qubit(n_qubits, q1)
    _check_qubit(n_qubits, q2)
    if q1 == q2:
        raise QubitIndexError(f"ZZ phase needs two distinct qubits, got {q1} twice")
    lo, hi = sorted((int(q1), int(q2)))
    factor = np.exp(1j * _check_angle(angle))[..., None]
    idx = _both_one_indices(n_qubits, lo, hi)
    out = np.array(amps, dtype=np.complex128)
    out[..., idx] *= factor
    return out


def new_zero_state(n_qubits: int) -> StateVector:
    return StateVector(n_qubits=n_qubits, amplitudes=_freeze(zero_amplitudes(n_qubits)))


def apply_hadamard(state: StateVector, qubit: int) -> StateVector:
    amps = hadamard_amplitudes(state.amplitudes, state.n_qubits, qubit)
    return StateVector(state.n_qubits, _freeze(amps))


def apply_phase(state: StateVector, qubit: int, angle: float) -> StateVector:
    amps = phase_amplitudes(state.amplitudes, state.n_qubits, qubit, float(angle))
    return StateVector(state.n_qubits, _freeze(amps))


def apply_zz_phase(state: StateVector, q1: int, q2: int, angle: float) -> StateVector:
    amps = zz_phase_amplitudes(state.amplitudes, state.n_qubits, q1, q2, float(angle))
    return StateVector(state.n_qubits, _freeze(amps))


def inner_product(a: StateVector, b: StateVector) -> complex:
    """Return <a|b> = sum_k conj(a_k) * b_k."""
    if a.n_qubits != b.n_qubits:
        raise DimensionMismatchError(f"Cannot take <a|b> of {a.n_qubits}- and {b.n_qubits}-qubit states")
    return complex(np.vdot(a.amplitudes, b.amplitudes))
