import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hrvsepsis.dataset import Dataset
from hrvsepsis.ensemble import (REFER, CompoundStatus, SvmConfig, build_meta_features,
                                disagreement_rate, evaluate_manual, manual_ensemble, rbf_kernel,
                                train_logistic_meta, train_svm_meta)


class _Const:
    def __init__(self, col):
        self.col = col

    def predict_proba(self, X):
        return 1 / (1 + np.exp(-np.asarray(X)[:, self.col]))


def _meta_fixture(n=20, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 2))
    y = (X[:, 0] + 0.5 * X[:, 1] + rng.normal(0, 1.0, n) > 0).astype(int)
    return X, y


def _irls(X, y, C):
    """Newton-Raphson as iteratively reweighted least squares with the same penalty."""
    A = np.column_stack([X, np.ones(len(y))])
    R = np.diag([1 / C] * X.shape[1] + [0.0])
    theta = np.zeros(A.shape[1])
    for _ in range(100):
        p = 1 / (1 + np.exp(-A @ theta))
        W = p * (1 - p)
        z = A @ theta + (y - p) / W
        theta = np.linalg.solve(A.T @ (A * W[:, None]) + R, A.T @ (W * z))
    return theta


@pytest.mark.parametrize("seed", range(3))
def test_logistic_matches_irls_oracle(seed):
    X, y = _meta_fixture(20, seed)
    m = train_logistic_meta(X, y)
    theta = _irls(X, y.astype(float), 1.0)
    np.testing.assert_allclose(m.weights, theta[:2], atol=1e-6)
    assert m.bias == pytest.approx(theta[2], abs=1e-6)
    assert m.converged


def test_logistic_nll_monotone_and_separable_accuracy():
    x = np.linspace(-2, 2, 30)[:, None]
    y = (x[:, 0] > 0).astype(int)
    m = train_logistic_meta(x, y)
    assert np.all(np.diff(m.objective_trace) <= 0)
    assert np.array_equal(m.predict(x), y)
    assert np.all(np.isfinite(m.weights)) and math.isfinite(m.bias)


def test_logistic_needs_both_classes():
    with pytest.raises(ValueError):
        train_logistic_meta(np.zeros((3, 2)), [1, 1, 1])


def _kkt_audit(m, X, tol):
    """Independent KKT check from the decision function."""
    f = m.decision_function(X)
    yf = m.y_signed * f
    a, up = m.alpha, m.upper
    bad = 0
    for ai, ui, v in zip(a, up, yf):
        if ai <= 0:
            bad += v < 1 - tol
        elif ai >= ui:
            bad += v > 1 + tol
        else:
            bad += abs(v - 1) > tol
    return bad


@pytest.mark.parametrize("seed", range(4))
def test_svm_kkt_and_box(seed):
    X, y = _meta_fixture(60, seed)
    m = train_svm_meta(X, y, SvmConfig(tolerance=1e-3))
    assert np.all(m.alpha >= 0) and np.all(m.alpha <= m.upper)
    n, npos = len(y), y.sum()
    expect_up = np.where(y == 1, n / (2 * npos), n / (2 * (n - npos)))
    np.testing.assert_allclose(m.upper, expect_up)
    assert m.kkt_violations == 0
    assert _kkt_audit(m, X, 1e-3) == 0
    # equality constraint of the dual
    assert abs(np.sum(m.alpha * m.y_signed)) < 1e-9


def test_svm_xor():
    X = np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]])
    y = np.array([0, 0, 1, 1])
    m = train_svm_meta(X, y, SvmConfig(C=10.0))
    assert np.array_equal(m.predict(X), y)


def test_svm_gamma_scale():
    X, y = _meta_fixture(40, 1)
    m = train_svm_meta(X, y)
    assert m.gamma == pytest.approx(1 / (2 * X.var()))


def test_svm_removing_zero_coefficient_point_keeps_decision():
    X, y = _meta_fixture(50, 2)
    cfg = SvmConfig(gamma_mode="0.5", class_weights=None, tolerance=1e-12)
    m = train_svm_meta(X, y, cfg)
    zero = np.flatnonzero(m.alpha == 0)
    assert zero.size > 0
    keep = np.setdiff1d(np.arange(len(y)), zero[:1])
    m2 = train_svm_meta(X[keep], y[keep], cfg)
    grid = np.random.default_rng(0).normal(size=(100, 2))
    np.testing.assert_allclose(m2.decision_function(grid), m.decision_function(grid), atol=1e-9)


def test_rbf_kernel_values():
    A = np.array([[0.0, 0.0], [1.0, 2.0]])
    K = rbf_kernel(A, A, 0.5)
    assert K[0, 1] == pytest.approx(math.exp(-0.5 * 5))
    np.testing.assert_allclose(np.diag(K), 1.0)


def test_manual_truth_table():
    assert manual_ensemble(1, 1) == (1, CompoundStatus.AGREE_POSITIVE)
    assert manual_ensemble(0, 0) == (0, CompoundStatus.AGREE_NEGATIVE)
    assert manual_ensemble(1, 0) == (REFER, CompoundStatus.DISAGREE)
    assert manual_ensemble(0, 1) == (REFER, CompoundStatus.DISAGREE)
    with pytest.raises(ValueError):
        manual_ensemble(2, 0)


def test_disagreement_rate():
    agree = [CompoundStatus.AGREE_POSITIVE] * 4
    assert disagreement_rate(agree) == 0
    assert disagreement_rate(agree + [CompoundStatus.DISAGREE] * 4) == 0.5
    with pytest.raises(ValueError):
        disagreement_rate([])


@given(st.lists(st.tuples(st.integers(0, 1), st.integers(0, 1), st.integers(0, 1)), min_size=1,
                max_size=40))
def test_evaluate_manual_views(rows):
    y, a, b = (np.array(c) for c in zip(*rows))
    out = evaluate_manual(y, a, b)
    assert out["n_referred"] == int(np.sum(a != b))
    assert out["disagreement_rate"] == pytest.approx(np.mean(a != b))
    agreed = a == b
    v = out["agreed"]
    assert v["tp"] == int(np.sum(agreed & (a == 1) & (y == 1)))
    assert v["fp"] == int(np.sum(agreed & (a == 1) & (y == 0)))
    assert v["tn"] + v["fp"] + v["fn"] + v["tp"] == int(agreed.sum())
    # all-rows view uses the HPM label as fallback, i.e. exactly the HPM labels
    assert out["all_rows"] == evaluate_manual(y, a, a)["all_rows"]
    assert out["n_rows"] == len(rows)


def test_meta_features_identical_models_and_empty():
    X = np.random.default_rng(0).normal(size=(30, 2))
    d = Dataset(X, (X[:, 0] > 0).astype(int), np.arange(30), ("a", "b"))
    mf = build_meta_features(_Const(0), _Const(0), d)
    np.testing.assert_array_equal(mf.z[:, 0], mf.z[:, 1])
    np.testing.assert_allclose(mf.z.mean(axis=0), 0, atol=1e-12)
    empty = build_meta_features(_Const(0), _Const(1), d.subset([]))
    assert len(empty) == 0 and empty.z.shape == (0, 2)
    test = build_meta_features(_Const(0), _Const(1), d.subset(np.arange(5)), mf.params)
    assert test.params is mf.params
