"""Fidelity quantum kernel, Gaussian (RBF) kernel and parallel Gram builders.

Responsibilities:
- Pairwise values: `fidelity_kernel` (|<phi(x)|phi(y)>|^2) and `rbf_kernel`.
- Gram matrices: `kernel_matrix` computes only the upper triangle, split into
  contiguous row blocks executed by a thread pool, then mirrors it.
- Test-time rows: `cross_kernel_matrix` (test x train), blocked the same way.
- Encoding cache: `precompute_encodings` encodes each sample once.

Every Gram entry is accumulated with real float64 arithmetic in a fixed
per-amplitude order, so its bits depend only on the two inputs involved and
never on the worker count or the block boundaries.
"""
from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, List, Sequence, Union

import numpy as np

from ..core.errors import DimensionMismatchError, InputValidationError
from ..core.logging import logger
from .feature_map import FeatureMapConfig, encode_batch, encode_feature_map
from .statevector import StateVector, inner_product

BLOCKS_PER_WORKER = 4


class KernelKind(str, Enum):
    QUANTUM_FIDELITY = "quantum-fidelity"
    RBF = "rbf"


@dataclass(frozen=True)
class QuantumKernelSpec:
    config: FeatureMapConfig

    kind = KernelKind.QUANTUM_FIDELITY

    def provenance(self) -> dict:
        return {"feature_map": self.config.describe()}


@dataclass(frozen=True)
class RbfKernelSpec:
    sigma: float = 1.0

    kind = KernelKind.RBF

    def __post_init__(self) -> None:
        if not self.sigma > 0:
            raise InputValidationError(f"RBF sigma must be positive, got {self.sigma}")

    def provenance(self) -> dict:
        return {"sigma": self.sigma}


KernelSpec = Union[QuantumKernelSpec, RbfKernelSpec]


@dataclass
class KernelMatrix:
    entries: np.ndarray
    kind: KernelKind
    provenance: dict = field(default_factory=dict)

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.entries)[0])


def fidelity_kernel(x, y, config: FeatureMapConfig) -> float:
    overlap = inner_product(encode_feature_map(x, config), encode_feature_map(y, config))
    return min(1.0, abs(overlap) ** 2)


def rbf_kernel(x, y, sigma: float) -> float:
    """exp(-||x - y||^2 / (2 sigma^2))."""
    if not sigma > 0:
        raise InputValidationError(f"RBF sigma must be positive, got {sigma}")
    a = np.asarray(x, dtype=np.float64)
    b = np.asarray(y, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise DimensionMismatchError(f"RBF inputs must be equal-length vectors, got {a.shape} and {b.shape}")
    return float(np.exp(-np.sum((a - b) ** 2) / (2.0 * sigma * sigma)))


def precompute_encodings(X, config: FeatureMapConfig) -> List[StateVector]:
    """Encode every sample once; element i equals encode_feature_map(X[i], config)."""
    if len(X) == 0:
        return []
    amps = encode_batch(X, config)
    amps.setflags(write=False)
    return [StateVector(config.n_qubits, row) for row in amps]


def _as_matrix(X, name: str) -> np.ndarray:
    if len(X) == 0:
        raise InputValidationError(f"{name} is empty")
    lengths = {len(row) for row in X}
    if len(lengths) != 1:
        raise DimensionMismatchError(f"{name} mixes feature vectors of lengths {sorted(lengths)}")
    return np.asarray(X, dtype=np.float64)


class _Operands:
    """Per-kernel column-major operands shared read-only by all workers."""

    def __init__(self, X: np.ndarray, kernel: KernelSpec) -> None:
        self.kernel = kernel
        if isinstance(kernel, QuantumKernelSpec):
            amps = encode_batch(X, kernel.config)
            self.re = np.ascontiguousarray(amps.real.T)
            self.im = np.ascontiguousarray(amps.imag.T)
        else:
            self.cols = np.ascontiguousarray(X.T)

    def block(self, rows: "_Operands", r0: int, r1: int, c0: int, c1: int) -> np.ndarray:
        if isinstance(self.kernel, QuantumKernelSpec):
            return _fidelity_block(rows.re[:, r0:r1], rows.im[:, r0:r1], self.re[:, c0:c1], self.im[:, c0:c1])
        return _rbf_block(rows.cols[:, r0:r1], self.cols[:, c0:c1], self.kernel.sigma)


def _fidelity_block(re_a, im_a, re_b, im_b) -> np.ndarray:
    shape = (re_a.shape[1], re_b.shape[1])
    acc_re = np.zeros(shape)
    acc_im = np.zeros(shape)
    tmp = np.empty(shape)
    for k in range(re_a.shape[0]):
        ar, ai = re_a[k][:, None], im_a[k][:, None]
        br, bi = re_b[k][None, :], im_b[k][None, :]
        # conj(a) * b = (ar*br + ai*bi) + i(ar*bi - ai*br)
        np.multiply(ar, br, out=tmp)
        acc_re += tmp
        np.multiply(ai, bi, out=tmp)
        acc_re += tmp
        np.multiply(ar, bi, out=tmp)
        acc_im += tmp
        np.multiply(ai, br, out=tmp)
        acc_im -= tmp
    acc_re *= acc_re
    acc_im *= acc_im
    acc_re += acc_im
    return np.minimum(acc_re, 1.0, out=acc_re)


def _rbf_block(a, b, sigma: float) -> np.ndarray:
    shape = (a.shape[1], b.shape[1])
    acc = np.zeros(shape)
    tmp = np.empty(shape)
    for k in range(a.shape[0]):
        np.subtract(a[k][:, None], b[k][None, :], out=tmp)
        tmp *= tmp
        acc += tmp
    acc *= -1.0 / (2.0 * sigma * sigma)
    return np.exp(acc, out=acc)


def row_blocks(n_rows: int, n_blocks: int, n_cols: int | None = None) -> List[tuple[int, int]]:
    """Split rows into contiguous blocks of roughly equal work.

    With `n_cols=None` row i owns the n_rows - i upper-triangle entries
    (diagonal included); otherwise every row costs the same.
    """
    n_blocks = max(1, min(n_blocks, n_rows))
    if n_cols is not None:
        cost = np.ones(n_rows)
    else:
        cost = np.arange(n_rows, 0, -1, dtype=np.float64)
    cumulative = np.cumsum(cost)
    targets = cumulative[-1] * np.arange(1, n_blocks) / n_blocks
    cuts = np.searchsorted(cumulative, targets, side="left") + 1
    bounds = [0] + sorted(set(int(c) for c in cuts if 0 < c < n_rows)) + [n_rows]
    return [(bounds[i], bounds[i + 1]) for i in range(len(bounds) - 1)]


def _run_blocks(fn: Callable[[tuple[int, int]], None], blocks: Sequence[tuple[int, int]], workers: int) -> None:
    if workers == 1:
        for b in blocks:
            fn(b)
        return
    with ThreadPoolExecutor(max_workers=workers) as pool:
        # list() surfaces worker exceptions
        list(pool.map(fn, blocks))


def _check_workers(workers: int) -> int:
    if int(workers) < 1:
        raise InputValidationError(f"workers must be >= 1, got {workers}")
    return int(workers)


def kernel_matrix(X, kernel: KernelSpec, workers: int = 1) -> KernelMatrix:
    """Symmetric Gram matrix K[i][j] = kernel(X[i], X[j])."""
    workers = _check_workers(workers)
    arr = _as_matrix(X, "Kernel input")
    start = time.perf_counter()
    ops = _Operands(arr, kernel)
    n = arr.shape[0]
    out = np.empty((n, n))

    def _fill(bounds: tuple[int, int]) -> None:
        r0, r1 = bounds
        out[r0:r1, r0:] = ops.block(ops, r0, r1, r0, n)

    blocks = row_blocks(n, workers * BLOCKS_PER_WORKER)
    _run_blocks(_fill, blocks, workers)

    upper = np.triu_indices(n, 1)
    out[upper[1], upper[0]] = out[upper]
    np.fill_diagonal(out, 1.0)
    logger.debug(
        f"{kernel.kind.value} Gram {n}x{n} built with {workers} worker(s), "
        f"{len(blocks)} blocks in {time.perf_counter() - start:.3f}s"
    )
    return KernelMatrix(entries=out, kind=kernel.kind, provenance=kernel.provenance())


def cross_kernel_matrix(X_train, X_test, kernel: KernelSpec, workers: int = 1) -> np.ndarray:
    """Rectangular matrix with entry [i][j] = kernel(X_test[i], X_train[j])."""
    workers = _check_workers(workers)
    train = _as_matrix(X_train, "Training input")
    test = _as_matrix(X_test, "Test input")
    if train.shape[1] != test.shape[1]:
        raise DimensionMismatchError(
            f"Train vectors have {train.shape[1]} features but test vectors have {test.shape[1]}"
        )
    cols = _Operands(train, kernel)
    rows = _Operands(test, kernel)
    n_test, n_train = test.shape[0], train.shape[0]
    out = np.empty((n_test, n_train))

    def _fill(bounds: tuple[int, int]) -> None:
        r0, r1 = bounds
        out[r0:r1] = cols.block(rows, r0, r1, 0, n_train)

    _run_blocks(_fill, row_blocks(n_test, workers * BLOCKS_PER_WORKER, n_cols=n_train), workers)
    return out
