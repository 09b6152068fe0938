import numpy as np
import pytest

import oracles
from qkl.core.errors import DimensionMismatchError, InputValidationError, SingleClassError
from qkl.services.svm_solver import (
    MultiClassModel,
    SvmModel,
    count_kkt_violations,
    decision_values,
    multi_decision_values,
    predict_binary,
    predict_multi,
    train_one_vs_rest,
    train_svm,
)


def random_labels(rng, n):
    y = rng.choice([-1, 1], size=n)
    y[0], y[1] = 1, -1
    return y


@pytest.mark.parametrize("C", [1.0, 10.0])
def test_two_point_problem(C):
    K = np.array([[1.0, 0.0], [0.0, 1.0]])
    model = train_svm(K, [1, -1], C=C, tol=1e-9)
    assert model.converged
    assert np.allclose(model.alphas, [1.0, 1.0], atol=1e-9)
    assert model.bias == pytest.approx(0.0, abs=1e-9)
    assert list(predict_binary(model, K)) == [1, -1]


def test_small_c_caps_alphas(rng):
    K = oracles.random_psd_kernel(rng, 12)
    y = random_labels(rng, 12)
    model = train_svm(K, y, C=0.01, tol=1e-9, max_passes=1000)
    assert np.all(model.alphas <= 0.01 + 1e-15)
    assert np.all(model.alphas >= 0.0)
    assert abs(model.alphas @ y) <= 1e-10


@pytest.mark.parametrize("seed", range(30))
def test_matches_dual_oracle(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(6, 31))
    C = [0.1, 1.0, 10.0][seed % 3]
    K = oracles.random_psd_kernel(rng, n)
    y = random_labels(rng, n)

    model = train_svm(K, y, C=C, tol=1e-9, max_passes=10000)
    ref = oracles.solve_dual(K, y, C)

    assert model.converged
    assert model.dual_objective(K) == pytest.approx(oracles.dual_objective(K, y, ref), abs=1e-6)
    f_ref = K @ (ref * y) + oracles.bias_from_alphas(K, y, ref, C)
    # both solutions are accurate only to the KKT tolerance, so a point this
    # close to the boundary has no well-defined sign to compare
    confident = np.abs(f_ref) > 1e-3
    assert np.array_equal(predict_binary(model, K)[confident], np.where(f_ref >= 0, 1, -1)[confident])


def test_support_vectors_and_diagnostics(rng):
    K = oracles.random_psd_kernel(rng, 20)
    y = random_labels(rng, 20)
    model = train_svm(K, y, C=1.0, tol=1e-6, max_passes=1000)
    assert model.converged and model.passes >= 1
    # final bias can shift margins by up to tol
    assert count_kkt_violations(K, y, model.alphas, model.bias, 1.0, 1e-5) == 0
    assert set(model.support_indices) == set(np.flatnonzero(model.alphas > 1e-8))


def test_training_is_deterministic(rng):
    K = oracles.random_psd_kernel(rng, 25)
    y = random_labels(rng, 25)
    a = train_svm(K, y, C=1.0)
    b = train_svm(K.copy(), y.copy(), C=1.0)
    assert a.alphas.tobytes() == b.alphas.tobytes() and a.bias == b.bias


def test_non_convergence_is_flagged(rng):
    K = oracles.random_psd_kernel(rng, 30)
    y = random_labels(rng, 30)
    # the first full sweep always moves alphas away from zero, so one pass cannot confirm optimality
    model = train_svm(K, y, C=10.0, tol=1e-12, max_passes=1)
    assert not model.converged
    assert model.passes == 1


def test_input_errors():
    K = np.eye(3)
    with pytest.raises(SingleClassError):
        train_svm(K, [1, 1, 1])
    with pytest.raises(InputValidationError):
        train_svm(K, [1, 0, -1])
    with pytest.raises(DimensionMismatchError):
        train_svm(np.ones((2, 3)), [1, -1])
    with pytest.raises(DimensionMismatchError):
        train_svm(K, [1, -1])
    with pytest.raises(InputValidationError):
        train_svm(K, [1, -1, 1], C=0.0)


def test_decision_rows_width_checked():
    model = train_svm(np.eye(2), [1, -1])
    with pytest.raises(DimensionMismatchError):
        decision_values(model, np.ones((1, 3)))


def test_zero_decision_goes_to_positive():
    model = train_svm(np.eye(2), [1, -1], C=1.0, tol=1e-9)
    # a row orthogonal to both training points gives f = b = 0
    assert predict_binary(model, [[0.0, 0.0]])[0] == 1


def test_one_vs_rest(rng):
    centers = {"A": (0.0, 0.0), "B": (4.0, 0.0), "K": (0.0, 4.0)}
    X, labels = [], []
    for name, c in centers.items():
        X.append(rng.normal(loc=c, scale=0.3, size=(8, 2)))
        labels += [name] * 8
    X = np.vstack(X)
    d2 = ((X[:, None, :] - X[None, :, :]) ** 2).sum(-1)
    K = np.exp(-d2 / 2.0)

    model = train_one_vs_rest(K, labels, C=10.0, tol=1e-6, max_passes=1000)
    assert model.classes == ["A", "B", "K"]
    assert len(model.models) == 3 and model.converged
    assert list(predict_multi(model, K)) == labels
    assert multi_decision_values(model, K).shape == (24, 3)

    parallel = train_one_vs_rest(K, labels, C=10.0, tol=1e-6, max_passes=1000, workers=3)
    for a, b in zip(model.models, parallel.models):
        assert a.alphas.tobytes() == b.alphas.tobytes()


def test_one_vs_rest_needs_two_classes():
    with pytest.raises(SingleClassError):
        train_one_vs_rest(np.eye(3), ["A", "A", "A"])


def test_zero_kernel_row_gives_bias():
    # three orthonormal points: alpha = (2/3, 2/3, 4/3), all free, b = 1/3
    model = train_svm(np.eye(3), [1, 1, -1], C=10.0, tol=1e-9, max_passes=1000)
    assert model.bias == pytest.approx(1.0 / 3.0, abs=1e-6)
    assert decision_values(model, [[0.0, 0.0, 0.0]])[0] == model.bias


def test_one_vs_rest_with_single_sample_class():
    K = np.eye(5) + 0.1
    labels = ["A", "A", "F", "F", "K"]
    model = train_one_vs_rest(K, labels, C=1.0)
    assert model.classes == ["A", "F", "K"]
    assert model.models[2].labels.tolist() == [-1, -1, -1, -1, 1]
    assert predict_multi(model, K).shape == (5,)


def test_predict_multi_tie_goes_to_first_class():
    flat = SvmModel(alphas=np.zeros(2), bias=0.5, labels=np.array([1.0, -1.0]), C=1.0)
    model = MultiClassModel(classes=["A", "F"], models=[flat, flat])
    assert list(predict_multi(model, [[0.3, 0.7], [1.0, 0.0]])) == ["A", "A"]
