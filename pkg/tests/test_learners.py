import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hrvsepsis.dataset import ClassWeights, Dataset, synth_dataset
from hrvsepsis.learners import (BACKEND, GbmConfig, RfConfig, feature_importance, fit_tree,
                                predict_proba, train_gbm, train_random_forest)
from hrvsepsis.learners import _tree_py
from hrvsepsis.learners.common import sigmoid
from hrvsepsis.learners.forest import ForestModel, bootstrap_counts, fit_forest
from hrvsepsis.learners.gbm import fit_gbm

# ---------------------------------------------------------------- brute-force oracle
# Impurities are computed in exact rational arithmetic, so float rounding cannot
# break ties that are exact. At every node of the fitted tree the oracle
# enumerates all (feature, midpoint) splits and checks the chosen one is optimal.


def _gini_mass(w, y):
    """Exact weighted Gini impurity mass W * (1 - p^2 - q^2) as a Fraction."""
    W = sum(Fraction(int(v)) for v in w)
    if W == 0:
        return Fraction(0)
    P = sum(Fraction(int(a)) for a, b in zip(w, y) if b == 1)
    return W - (P * P + (W - P) * (W - P)) / W


def _candidate_splits(X, rows):
    for j in range(X.shape[1]):
        vals = np.unique(X[rows, j])
        for a, b in zip(vals[:-1], vals[1:]):
            yield j, (a + b) / 2


def _split_decreases(X, y, w, rows):
    parent = _gini_mass(w[rows], y[rows])
    out = {}
    for j, t in _candidate_splits(X, rows):
        L, R = rows[X[rows, j] <= t], rows[X[rows, j] > t]
        out[(j, t)] = parent - _gini_mass(w[L], y[L]) - _gini_mass(w[R], y[R])
    return out


def _check_node(tree, node, X, y, w, rows, depth, max_depth):
    """Return the exact loss of the subtree after checking every split is optimal."""
    rows = rows[w[rows] > 0]
    here = _gini_mass(w[rows], y[rows])
    dec = _split_decreases(X, y, w, rows) if depth < max_depth else {}
    best = max(dec.values(), default=Fraction(0))
    if tree.feature[node] < 0:
        assert best <= 0, f"leaf at depth {depth} but a split decreases impurity by {best}"
        return here
    key = (int(tree.feature[node]), float(tree.threshold[node]))
    assert key in dec, f"split {key} is not a midpoint candidate"
    assert dec[key] == best and best > 0, f"split {key} decrease {dec[key]} < best {best}"
    go = X[rows, key[0]] <= key[1]
    return (_check_node(tree, int(tree.left[node]), X, y, w, rows[go], depth + 1, max_depth)
            + _check_node(tree, int(tree.right[node]), X, y, w, rows[~go], depth + 1, max_depth))


def _best_stump_loss(X, y, w):
    dec = _split_decreases(X, y, w, np.arange(X.shape[0])).values()
    return _gini_mass(w, y) - max(dec, default=Fraction(0))


FIXTURES = [
    np.array([[0], [1], [2], [3], [4], [5], [6], [7], [8], [9]], dtype=float),
    np.array([[0, 1], [1, 1], [1, 0], [2, 3], [2, 2], [3, 0], [4, 4], [4, 1], [5, 2], [5, 5]], dtype=float),
    np.array([[0, 0, 1], [0, 1, 0], [1, 0, 0], [1, 1, 1], [2, 0, 1], [2, 2, 0], [0, 0, 1],
              [3, 1, 2], [3, 2, 2], [1, 2, 0]], dtype=float),
]


def test_tree_matches_exhaustive_oracle_on_all_labelings():
    checked = 0
    for X in FIXTURES:
        for n in (3, 5, 8, 10):
            Xn = X[:n]
            w = np.ones(n)
            for bits in itertools.product((0.0, 1.0), repeat=n):
                y = np.array(bits)
                for depth in (1, 2, 10):
                    tree = fit_tree(Xn, y, w, max_depth=depth)
                    loss = _check_node(tree, 0, Xn, y, w, np.arange(n), 0, depth)
                    if depth == 1:
                        # a depth-1 greedy tree is the global optimum over all stumps
                        assert loss == min(_best_stump_loss(Xn, y, w), _gini_mass(w, y))
                    checked += 1
    assert checked > 6000


def test_tree_oracle_with_weights(rng):
    for _ in range(300):
        n = int(rng.integers(2, 11))
        p = int(rng.integers(1, 4))
        X = rng.integers(0, 4, size=(n, p)).astype(float)
        y = rng.integers(0, 2, n).astype(float)
        w = rng.integers(0, 4, n).astype(float)
        if w.sum() == 0:
            continue
        tree = fit_tree(X, y, w, max_depth=3)
        _check_node(tree, 0, X, y, w, np.arange(n), 0, 3)


def test_greedy_is_not_globally_optimal_beyond_depth_one():
    # XOR: every first split has zero decrease, so a greedy depth-2 tree stays a
    # leaf although a depth-2 tree can classify perfectly
    X = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
    y = np.array([0.0, 1.0, 1.0, 0.0])
    assert fit_tree(X, y, max_depth=2).n_nodes == 1


def test_exact_ties_go_to_lowest_feature_then_threshold():
    # feature 1 duplicates feature 0; labels symmetric so splits at 0.5 and 2.5 tie
    X = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [3.0, 3.0]])
    y = np.array([1.0, 0.0, 0.0, 1.0])
    tree = fit_tree(X, y, max_depth=1)
    assert (tree.feature[0], tree.threshold[0]) == (0, 0.5)


def test_pure_labels_single_leaf():
    tree = fit_tree(np.arange(6.0)[:, None], np.ones(6))
    assert tree.n_nodes == 1 and tree.value[0] == 1.0


def test_one_dimensional_threshold_data():
    x = np.array([-3.0, -2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0])[:, None]
    y = (x[:, 0] >= 0).astype(float)
    tree = fit_tree(x, y, max_depth=5)
    assert tree.depth() == 1
    assert np.array_equal(tree.predict(x), y)


def test_newton_leaf_and_gain_by_hand():
    X = np.array([[0.0], [1.0], [2.0], [3.0]])
    g = np.array([0.5, 0.5, -0.5, -0.5])
    h = np.full(4, 0.25)
    tree = fit_tree(X, g, np.ones(4), max_depth=1, split_rule="newton", hess=h, reg_lambda=0.0)
    assert tree.threshold[0] == 1.5
    assert tree.value[tree.left[0]] == pytest.approx(-2.0)
    assert tree.value[tree.right[0]] == pytest.approx(2.0)
    # gain = 0.5 * (1/0.5 + 1/0.5 - 0/1)
    assert tree.gain[0] == pytest.approx(2.0)
    pruned = fit_tree(X, g, np.ones(4), max_depth=1, split_rule="newton", hess=h, gamma=2.0)
    assert pruned.n_nodes == 1


def test_gbm_single_round_newton_step():
    X = np.array([[0.0], [1.0], [2.0], [3.0]])
    y = np.array([0, 0, 1, 1])
    cfg = GbmConfig(n_estimators=1, learning_rate=1.0, max_depth=1, gamma=0.0, reg_lambda=0.0,
                    min_child_weight=0.0, class_weights=None)
    m = fit_gbm(X, y, cfg)
    assert m.base_score == 0.0
    # g = p - y with p = 0.5, h = 0.25: leaves -G/H = -(1.0)/0.5 and +1.0/0.5
    np.testing.assert_allclose(m.raw_score(X), [-2.0, -2.0, 2.0, 2.0])


def test_gbm_huge_gamma_is_constant():
    d = synth_dataset(200, 2, 2, seed=0)
    m = train_gbm(d, GbmConfig(n_estimators=20, gamma=1e9))
    assert all(t.n_nodes == 1 for t in m.trees)
    p = m.predict_proba(d.features)
    np.testing.assert_allclose(p, sigmoid(np.array(m.base_score)) + 0 * p, atol=0)
    assert np.all(feature_importance(m) == 0)


def test_gbm_base_score_is_weighted_log_odds():
    d = synth_dataset(300, 1, 1, class_balance=0.2, seed=1)
    m = fit_gbm(d.features, d.labels, GbmConfig(n_estimators=1, class_weights=None))
    assert m.base_score == pytest.approx(math.log(d.n_positive / d.n_negative))
    mb = fit_gbm(d.features, d.labels, GbmConfig(n_estimators=1))
    assert mb.base_score == pytest.approx(0.0, abs=1e-12)


def test_gbm_loss_non_increasing():
    d = synth_dataset(400, 3, 5, seed=2)
    m = train_gbm(d, GbmConfig(n_estimators=50, learning_rate=0.1))
    assert np.all(np.diff(m.loss_trace) <= 1e-12)


def test_gbm_probability_is_logistic_of_tree_sum(rng):
    d = synth_dataset(200, 2, 3, seed=3)
    m = train_gbm(d, GbmConfig(n_estimators=30, learning_rate=0.2))
    rows = d.features[:5]
    for x in rows:
        raw = m.base_score
        for t in m.trees:
            i = 0
            while t.feature[i] >= 0:
                i = t.left[i] if x[t.feature[i]] <= t.threshold[i] else t.right[i]
            raw += m.config.learning_rate * t.value[i]
        assert m.predict_proba(x[None, :])[0] == pytest.approx(1 / (1 + math.exp(-raw)), rel=1e-12)


def test_gbm_raw_scores_finite_long_run():
    d = synth_dataset(150, 2, 2, seed=4, shift=5.0)
    m = train_gbm(d, GbmConfig(n_estimators=2000, learning_rate=0.01))
    assert np.all(np.isfinite(m.raw_score(d.features)))


def test_forest_single_tree_equals_fit_tree_on_bootstrap():
    d = synth_dataset(120, 2, 3, seed=5)
    cfg = RfConfig(n_trees=1, max_depth=6, seed=9)
    f = train_random_forest(d, cfg)
    cw = f.class_weights
    w = cw.per_row(d.labels) * bootstrap_counts(len(d), 9, 0)
    from hrvsepsis.learners.common import node_seed
    t = fit_tree(d.features, d.labels, w, max_depth=6, max_features=cfg.n_split_features(5),
                 seed=node_seed(9, 0))
    np.testing.assert_array_equal(f.predict_proba(d.features), t.predict(d.features))


def test_forest_determinism_and_bounds():
    d = synth_dataset(150, 2, 4, seed=6)
    a = train_random_forest(d, RfConfig(n_trees=15, seed=1))
    b = train_random_forest(d, RfConfig(n_trees=15, seed=1))
    X = synth_dataset(40, 2, 4, seed=99).features
    assert np.array_equal(a.predict_proba(X), b.predict_proba(X))
    p = predict_proba(a, X)
    assert p.min() >= 0 and p.max() <= 1
    assert predict_proba(a, np.zeros((0, 6))).shape == (0,)
    with pytest.raises(ValueError):
        a.predict_proba(np.zeros((3, 5)))


def test_forest_informative_importance_dominates():
    for seed in range(10):
        d = synth_dataset(300, 3, 20, seed=seed)
        f = train_random_forest(d, RfConfig(n_trees=30, seed=seed))
        imp = feature_importance(f)
        assert imp[:3].sum() > imp[3:].sum()
        assert imp.sum() == pytest.approx(1.0)


def test_forest_importance_is_mean_of_tree_importances():
    d = synth_dataset(100, 2, 3, seed=7)
    f = train_random_forest(d, RfConfig(n_trees=8, seed=2))
    per = np.mean([t.importances(5) for t in f.trees], axis=0)
    np.testing.assert_allclose(f.importances, per / per.sum(), rtol=1e-12)


def test_constant_leaf_forest_and_zero_split_importance():
    from hrvsepsis.learners.tree import Tree
    leaf = Tree.from_arrays({"feature": np.array([-1]), "threshold": np.array([0.0]),
                             "left": np.array([-1]), "right": np.array([-1]),
                             "value": np.array([0.3]), "gain": np.array([0.0]),
                             "weight": np.array([1.0]), "n_samples": np.array([1])})
    f = ForestModel([leaf, leaf], RfConfig(n_trees=2), 3, ClassWeights.uniform())
    np.testing.assert_array_equal(f.predict_proba(np.zeros((4, 3))), 0.3)
    assert np.all(f.importances == 0)


def test_single_split_importance_is_one():
    x = np.array([[5.0, 0.0], [5.0, 1.0], [5.0, 2.0], [5.0, 3.0]])
    t = fit_tree(x, np.array([0.0, 0.0, 1.0, 1.0]), max_depth=1)
    np.testing.assert_array_equal(t.importances(2), [0.0, 1.0])


def test_unused_feature_perturbation_leaves_prediction(rng):
    d = synth_dataset(200, 2, 4, seed=8)
    m = train_gbm(d, GbmConfig(n_estimators=5, max_depth=2, learning_rate=0.3))
    unused = [j for j in range(6) if j not in m.used_features()]
    X = d.features[:20].copy()
    base = m.predict_proba(X)
    for j in unused:
        X2 = X.copy()
        X2[:, j] += rng.normal(size=20) * 100
        assert np.array_equal(m.predict_proba(X2), base)


# ---------------------------------------------------------------- compiled vs fallback


@pytest.mark.skipif(BACKEND != "cython", reason="compiled kernel not built")
@given(n=st.integers(1, 40), p=st.integers(1, 5), depth=st.integers(1, 6),
       mode=st.sampled_from([0, 1]), k=st.integers(0, 5), seed=st.integers(0, 2**63),
       data_seed=st.integers(0, 1000))
def test_compiled_kernel_matches_python(n, p, depth, mode, k, seed, data_seed):
    from hrvsepsis.learners import _tree_core
    rng = np.random.default_rng(data_seed)
    X = np.round(rng.normal(size=(n, p)), 1)
    w = rng.integers(0, 3, n).astype(float)
    if mode == 0:
        target, hess = rng.integers(0, 2, n).astype(float), np.zeros(n)
    else:
        target, hess = rng.normal(size=n), rng.random(n)
    order = _tree_py.presort(X)
    assert np.array_equal(order, _tree_core.presort(X))
    args = (X, order, w, target, hess, mode, depth, 1, min(k, p), 1.0, 0.1, 0.5, seed)
    a = _tree_core.build_tree(*args)
    b = _tree_py.build_tree(*args)
    for key in b:
        assert np.array_equal(a[key], b[key]), key
    Xq = rng.normal(size=(10, p))
    arrs = (a["feature"], a["threshold"], a["left"], a["right"])
    assert np.array_equal(_tree_core.apply_tree(*arrs, Xq), _tree_py.apply_tree(*arrs, Xq))


def test_feature_sampling_splitmix_reference():
    # splitmix64 first outputs for seed 0 (published reference values)
    s = _tree_py.SplitMix64(0)
    assert s.next() == 0xE220A8397B1DCDAF
    assert s.next() == 0x6E789E6AA1B965F4
