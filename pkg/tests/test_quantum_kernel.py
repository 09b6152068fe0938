import math

import numpy as np
import pytest

import oracles
from qkl.core.errors import DimensionMismatchError, InputValidationError
from qkl.services.feature_map import FeatureMapConfig, encode_feature_map
from qkl.services.quantum_kernel import (
    KernelKind,
    QuantumKernelSpec,
    RbfKernelSpec,
    cross_kernel_matrix,
    fidelity_kernel,
    kernel_matrix,
    precompute_encodings,
    rbf_kernel,
    row_blocks,
)
from qkl.services.statevector import inner_product


def test_self_fidelity_is_one(rng):
    cfg = FeatureMapConfig(3)
    x = rng.uniform(0, math.pi, size=3)
    assert fidelity_kernel(x, x, cfg) == pytest.approx(1.0, abs=1e-10)


def test_single_feature_closed_form(rng):
    cfg = FeatureMapConfig(1, repetitions=1)
    assert fidelity_kernel([0.0], [math.pi / 2], cfg) == pytest.approx(0.0, abs=1e-10)
    for x, y in rng.uniform(0, math.pi, size=(50, 2)):
        assert fidelity_kernel([x], [y], cfg) == pytest.approx(math.cos(x - y) ** 2, abs=1e-10)


@pytest.mark.parametrize("d", [1, 2, 3, 4])
def test_fidelity_matches_dense_oracle(rng, d):
    cfg = FeatureMapConfig(d)
    X = rng.uniform(0, math.pi, size=(50, d))
    pairs = oracles.all_pairs(d)
    for x, y in zip(X[:-1], X[1:]):
        assert abs(fidelity_kernel(x, y, cfg) - oracles.fidelity(x, y, 2, pairs)) <= 1e-10


def test_two_feature_example_matches_oracle():
    cfg = FeatureMapConfig(2)
    expected = oracles.fidelity(np.array([0.3, 1.1]), np.array([0.9, 0.2]), 2, [(0, 1)])
    assert fidelity_kernel((0.3, 1.1), (0.9, 0.2), cfg) == pytest.approx(expected, abs=1e-10)


def test_rbf_examples():
    assert rbf_kernel([1.0, 2.0], [1.0, 2.0], 0.3) == 1.0
    assert rbf_kernel([0.0, 0.0], [3.0, 4.0], 5.0) == pytest.approx(math.exp(-0.5), rel=1e-12)
    sigma = 0.8
    y = [math.sqrt(2.0) * sigma, 0.0]
    assert rbf_kernel([0.0, 0.0], y, sigma) == pytest.approx(math.exp(-1.0), rel=1e-12)


def test_rbf_errors():
    with pytest.raises(InputValidationError):
        rbf_kernel([0.0], [1.0], 0.0)
    with pytest.raises(DimensionMismatchError):
        rbf_kernel([0.0], [1.0, 2.0], 1.0)
    with pytest.raises(InputValidationError):
        RbfKernelSpec(sigma=-1.0)


def test_rbf_decreases_with_distance():
    values = [rbf_kernel([0.0], [d], 1.3) for d in np.linspace(0, 4, 20)]
    assert all(a > b for a, b in zip(values, values[1:]))


def test_precompute_encodings():
    cfg = FeatureMapConfig(2)
    assert precompute_encodings([], cfg) == []
    [single] = precompute_encodings([[0.4, 1.2]], cfg)
    assert np.array_equal(single.amplitudes, encode_feature_map([0.4, 1.2], cfg).amplitudes)


def test_cached_kernel_matches_per_pair_encoding(rng):
    cfg = FeatureMapConfig(3)
    X = rng.uniform(0, math.pi, size=(20, 3))
    states = precompute_encodings(X, cfg)
    K = kernel_matrix(X, QuantumKernelSpec(cfg)).entries
    for i in range(20):
        for j in range(i + 1, 20):
            assert abs(K[i, j] - abs(inner_product(states[i], states[j])) ** 2) <= 1e-12
            assert abs(K[i, j] - fidelity_kernel(X[i], X[j], cfg)) <= 1e-12


def test_trivial_matrices():
    spec = QuantumKernelSpec(FeatureMapConfig(2))
    assert np.array_equal(kernel_matrix([[0.3, 0.4]], spec).entries, [[1.0]])
    K = kernel_matrix([[0.3, 0.4]] * 3, spec)
    assert np.allclose(K.entries, np.ones((3, 3)), atol=1e-12)
    assert K.kind is KernelKind.QUANTUM_FIDELITY


def test_gram_properties_and_worker_determinism(rng):
    spec = QuantumKernelSpec(FeatureMapConfig(4))
    X = rng.uniform(0, math.pi, size=(200, 4))
    K1 = kernel_matrix(X, spec, workers=1)
    E = K1.entries
    assert np.array_equal(E, E.T)
    assert np.all(np.diag(E) == 1.0)
    assert E.min() >= 0.0 and E.max() <= 1.0
    assert K1.min_eigenvalue() >= -1e-8
    for workers in (2, 8):
        assert kernel_matrix(X, spec, workers=workers).entries.tobytes() == E.tobytes()


def test_small_gram_matches_serial_loop(rng):
    cfg = FeatureMapConfig(2)
    X = rng.uniform(0, math.pi, size=(10, 2))
    K = kernel_matrix(X, QuantumKernelSpec(cfg), workers=3)
    serial = np.array([[fidelity_kernel(a, b, cfg) for b in X] for a in X])
    assert np.allclose(K.entries, serial, atol=1e-12)
    assert K.min_eigenvalue() >= -1e-8


def test_rbf_gram(rng):
    X = rng.normal(size=(15, 3))
    K = kernel_matrix(X, RbfKernelSpec(sigma=1.5), workers=2)
    assert K.kind is KernelKind.RBF
    assert np.all(K.entries > 0.0) and np.all(K.entries <= 1.0)
    assert K.entries[2, 7] == pytest.approx(rbf_kernel(X[2], X[7], 1.5), rel=1e-12)
    assert K.provenance == {"sigma": 1.5}


def test_cross_kernel(rng):
    cfg = FeatureMapConfig(3)
    spec = QuantumKernelSpec(cfg)
    train = rng.uniform(0, math.pi, size=(6, 3))
    test = rng.uniform(0, math.pi, size=(4, 3))
    C = cross_kernel_matrix(train, test, spec, workers=2)
    assert C.shape == (4, 6)
    serial = np.array([[fidelity_kernel(t, x, cfg) for x in train] for t in test])
    assert np.allclose(C, serial, atol=1e-12)
    assert cross_kernel_matrix(train, test, spec, workers=1).tobytes() == C.tobytes()

    same = cross_kernel_matrix(train, train, spec)
    K = kernel_matrix(train, spec).entries
    off = ~np.eye(6, dtype=bool)
    assert np.allclose(same[off], K[off], atol=1e-15)
    row = cross_kernel_matrix(train, train[3:4], spec)[0]
    assert row[3] == pytest.approx(1.0, abs=1e-12)


def test_kernel_matrix_errors():
    spec = QuantumKernelSpec(FeatureMapConfig(2))
    with pytest.raises(InputValidationError):
        kernel_matrix([], spec)
    with pytest.raises(DimensionMismatchError):
        kernel_matrix([[0.1, 0.2], [0.3]], spec)
    with pytest.raises(InputValidationError):
        kernel_matrix([[0.1, 0.2]], spec, workers=0)
    with pytest.raises(DimensionMismatchError):
        cross_kernel_matrix([[0.1, 0.2]], [[0.1, 0.2, 0.3]], RbfKernelSpec())


def test_row_blocks_cover_rows_once():
    for n, blocks in [(1, 4), (7, 3), (100, 32), (500, 16)]:
        parts = row_blocks(n, blocks)
        assert parts[0][0] == 0 and parts[-1][1] == n
        assert all(a[1] == b[0] for a, b in zip(parts, parts[1:]))
        assert all(r0 < r1 for r0, r1 in parts)
