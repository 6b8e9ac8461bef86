import numpy as np
import pytest
from hypothesis import given, strategies as st

from hrvsepsis.metrics import (ConfusionMatrix, confusion, evaluate, fbeta, optimize_threshold,
                               prf, threshold_sweep)


def test_table_one_counts():
    r = prf(ConfusionMatrix(tn=926, fp=18, fn=32, tp=103))
    assert r.precision == pytest.approx(103 / 121) and round(r.precision, 3) == 0.851
    assert r.recall == pytest.approx(103 / 135) and round(r.recall, 3) == 0.763
    assert round(r.f1, 3) == 0.805
    assert not r.degenerate


def test_confusion_examples():
    y = np.array([1, 1, 1, 0, 0, 0, 0, 0, 0, 0])
    assert confusion(y, np.ones(10, dtype=int)) == ConfusionMatrix(0, 7, 0, 3)
    cm = confusion(y, y)
    assert cm.fp == 0 and cm.fn == 0
    with pytest.raises(ValueError):
        confusion([0, 1], [1])


def test_degenerate_precision():
    r = prf(ConfusionMatrix(5, 0, 2, 0))
    assert r.precision == 0.0 and r.degenerate


def test_fbeta_examples():
    assert fbeta(0.5, 0.5, 1.0) == 0.5
    assert fbeta(0.8, 0.5, 2.0) == pytest.approx(2.0 / 3.7)
    assert fbeta(0.9, 0.3, 0.5) > fbeta(0.3, 0.9, 0.5)
    assert fbeta(0.0, 0.0, 2.0) == 0.0
    with pytest.raises(ValueError):
        fbeta(0.5, 0.5, 0.0)


@given(st.floats(0, 1), st.floats(0, 1))
def test_fbeta_one_is_f1(p, r):
    f1 = 2 * p * r / (p + r) if p + r > 0 else 0.0
    assert fbeta(p, r, 1.0) == pytest.approx(f1, rel=1e-12, abs=1e-300)


@given(st.lists(st.tuples(st.integers(0, 1), st.integers(0, 1)), min_size=1, max_size=60),
       st.randoms(use_true_random=False))
def test_confusion_permutation_invariant_and_streaming(pairs, rnd):
    y = np.array([a for a, _ in pairs])
    p = np.array([b for _, b in pairs])
    cm = confusion(y, p)
    perm = list(range(len(pairs)))
    rnd.shuffle(perm)
    assert confusion(y[perm], p[perm]) == cm
    tp = sum(1 for a, b in pairs if a == 1 and b == 1)
    fp = sum(1 for a, b in pairs if a == 0 and b == 1)
    fn = sum(1 for a, b in pairs if a == 1 and b == 0)
    assert (cm.tp, cm.fp, cm.fn) == (tp, fp, fn)
    streamed = prf(ConfusionMatrix(len(pairs) - tp - fp - fn, fp, fn, tp))
    assert streamed == prf(cm)


def test_separated_probabilities_reach_one():
    probs = np.array([0.05, 0.1, 0.2, 0.29, 0.6, 0.7, 0.9])
    labels = np.array([0, 0, 0, 0, 1, 1, 1])
    for beta in (0.5, 1.0, 2.0):
        tc = optimize_threshold(probs, labels, beta)
        assert 0.29 < tc.threshold <= 0.6
        r = prf(confusion(labels, tc.labels_from(probs)))
        assert fbeta(r.precision, r.recall, beta) == 1.0


def test_single_class_rejected():
    with pytest.raises(ValueError):
        optimize_threshold([0.1, 0.2], [1, 1], 1.0)


def _brute_force(probs, labels, beta):
    best_t, best_s = None, -1.0
    for t in sorted(set(probs.tolist()) | {0.0, 1.0}):
        r = prf(confusion(labels, (probs >= t).astype(int)))
        s = fbeta(r.precision, r.recall, beta)
        if s > best_s + 1e-12:
            best_t, best_s = t, s
    return best_t, best_s


probs_and_labels = st.integers(2, 60).flatmap(lambda n: st.tuples(
    st.lists(st.sampled_from([i / 20 for i in range(21)]) | st.floats(0, 1), min_size=n, max_size=n),
    st.lists(st.integers(0, 1), min_size=n, max_size=n)))


@given(probs_and_labels, st.sampled_from([0.5, 1.0, 2.0, 0.3, 3.0]))
def test_threshold_is_true_argmax(data, beta):
    probs, labels = np.array(data[0]), np.array(data[1])
    if labels.min() == labels.max():
        return
    tc = optimize_threshold(probs, labels, beta)
    r = prf(confusion(labels, tc.labels_from(probs)))
    got = fbeta(r.precision, r.recall, beta)
    t_ref, s_ref = _brute_force(probs, labels, beta)
    assert got == pytest.approx(s_ref, abs=1e-12)
    assert tc.threshold == t_ref
    cand, score, _, _ = threshold_sweep(probs, labels, beta)
    assert np.all(score <= got + 1e-12)


@given(probs_and_labels)
def test_recall_beta_threshold_not_above_precision_beta_threshold(data):
    probs, labels = np.array(data[0]), np.array(data[1])
    if labels.min() == labels.max():
        return
    t2 = optimize_threshold(probs, labels, 2.0).threshold
    t05 = optimize_threshold(probs, labels, 0.5).threshold
    assert t2 <= t05


def test_evaluate_keys():
    out = evaluate([0, 1, 1], [0, 1, 0])
    assert out["tp"] == 1 and out["fn"] == 1 and out["accuracy"] == pytest.approx(2 / 3)
