import math

import numpy as np
import pytest

from hrvsepsis.dataset import ClassWeights, Dataset, synth_dataset
from hrvsepsis.learners.common import sigmoid
from hrvsepsis.metrics import confusion, prf
from hrvsepsis.nnet import (INFERENCE, TRAIN, Adam, MlpConfig, _forward, forward, gradient_check,
                            init_mlp, loss_and_grads, train_mlp)


def _toy_model(seed=0, n_features=3, units=4, layers=2, randomize=True):
    cfg = MlpConfig(hidden_layers=layers, units=units, dropout_rate=0.0, seed=seed)
    m = init_mlp(cfg, n_features)
    if randomize:
        rng = np.random.default_rng(seed + 100)
        for arrs in (m.biases, m.bn_shift):
            for a in arrs:
                a += rng.normal(0, 0.5, a.shape)
        for a in m.bn_scale:
            a += rng.normal(0, 0.3, a.shape)
        for i in range(layers):
            m.running_mean[i] = rng.normal(0, 0.5, units)
            m.running_var[i] = rng.uniform(0.5, 2.0, units)
    return m


def _toy_batch(seed=0, n=8, p=3):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, p))
    y = np.array([0, 1] * (n // 2), dtype=float)
    w = rng.uniform(0.5, 2.0, n)
    return X, y, w


@pytest.mark.parametrize("mode", [TRAIN, INFERENCE])
@pytest.mark.parametrize("seed", range(3))
def test_gradient_check_every_layer(mode, seed):
    m = _toy_model(seed)
    X, y, w = _toy_batch(seed)
    assert gradient_check(m, X, y, w, mode=mode) < 1e-4


@pytest.mark.parametrize("mode", [TRAIN, INFERENCE])
def test_gradient_check_step_sizes_consistent(mode):
    # errors below 1e-6 are round-off; compare decades above that resolution
    for seed in range(5):
        m = _toy_model(seed)
        X, y, w = _toy_batch(seed)
        errs = np.array([gradient_check(m, X, y, w, epsilon=e, mode=mode) for e in (1e-4, 1e-5, 1e-6)])
        assert errs.max() < 1e-4
        clipped = np.maximum(errs, 1e-6)
        assert clipped.max() / clipped.min() <= 10.0


def test_zero_head_bias_gradient_matches_difference():
    m = _toy_model(2)
    m.weights[-1][:] = 0.0
    X, y, w = _toy_batch(2)
    _, grads = loss_and_grads(m, X, y, w, TRAIN, dropout=False)
    eps = 1e-5
    b = m.biases[-1]
    b[0] += eps
    lp, _ = loss_and_grads(m, X, y, w, TRAIN, dropout=False)
    b[0] -= 2 * eps
    lm, _ = loss_and_grads(m, X, y, w, TRAIN, dropout=False)
    b[0] += eps
    assert grads[-1][0] == pytest.approx((lp - lm) / (2 * eps), abs=1e-8)


def test_glorot_normal_std():
    m = init_mlp(MlpConfig(), 57)
    W = m.weights[0]
    assert W.shape == (57, 64)
    target = math.sqrt(2 / 121)
    assert abs(W.std() - target) / target < 0.1
    assert all(np.all(b == 0) for b in m.biases)
    assert all(np.all(s == 1) for s in m.bn_scale) and all(np.all(v == 1) for v in m.running_var)


def test_init_is_seeded():
    a = init_mlp(MlpConfig(seed=5), 7)
    b = init_mlp(MlpConfig(seed=5), 7)
    for p, q in zip(a.params(), b.params()):
        assert np.array_equal(p, q)


def test_width_one_forward():
    m = init_mlp(MlpConfig(units=1), 3)
    p = m.predict_proba(np.random.default_rng(0).normal(size=(5, 3)))
    assert p.shape == (5,) and np.all((p > 0) & (p < 1))


def test_hand_computed_forward_2x3():
    # 2 inputs, one hidden block of 3 units, inference mode
    cfg = MlpConfig(hidden_layers=1, units=3, dropout_rate=0.4)
    m = init_mlp(cfg, 2)
    m.weights[0] = np.array([[0.5, -1.0, 0.25], [2.0, 0.1, -0.3]])
    m.biases[0] = np.array([0.1, 0.0, -0.2])
    m.bn_scale[0] = np.array([1.5, 0.5, 2.0])
    m.bn_shift[0] = np.array([0.0, 0.2, -0.1])
    m.running_mean[0] = np.array([0.3, -0.1, 0.0])
    m.running_var[0] = np.array([4.0, 1.0, 0.25])
    m.weights[1] = np.array([[1.0], [-2.0], [0.5]])
    m.biases[1] = np.array([0.05])
    x = [1.0, -0.5]
    expected = []
    for xi in ([1.0, -0.5], [0.0, 2.0]):
        logit = 0.05
        for u in range(3):
            z = xi[0] * m.weights[0][0, u] + xi[1] * m.weights[0][1, u] + m.biases[0][u]
            zhat = (z - m.running_mean[0][u]) / math.sqrt(m.running_var[0][u] + 1e-5)
            a = max(m.bn_scale[0][u] * zhat + m.bn_shift[0][u], 0.0)
            logit += a * m.weights[1][u, 0]
        expected.append(1 / (1 + math.exp(-logit)))
    got = forward(m, np.array([x, [0.0, 2.0]]), INFERENCE)
    np.testing.assert_allclose(got, expected, rtol=0, atol=1e-12)


def test_batchnorm_identity_on_normalized_batch():
    cfg = MlpConfig(hidden_layers=1, units=2, dropout_rate=0.0)
    m = init_mlp(cfg, 2)
    m.weights[0] = np.eye(2)
    X = np.array([[1.0, -1.0], [-1.0, 1.0], [1.0, 1.0], [-1.0, -1.0]])
    _, _, cache = _forward(m, X, TRAIN)
    h, zhat, inv_std, y, mask = cache[0]
    np.testing.assert_allclose(y, X, atol=1e-5)
    np.testing.assert_allclose(zhat, X * (1 / math.sqrt(1 + 1e-5)), atol=1e-12)


def test_train_mode_rejects_single_row():
    m = init_mlp(MlpConfig(), 3)
    with pytest.raises(ValueError):
        forward(m, np.zeros((1, 3)), TRAIN)


def test_inference_deterministic_and_bounded():
    m = _toy_model(3)
    X = np.random.default_rng(3).normal(size=(20, 3)) * 50
    a, b = m.predict_proba(X), m.predict_proba(X)
    assert np.array_equal(a, b)
    assert np.all((a > 0) & (a < 1))


def test_inverted_dropout_preserves_expected_logit():
    # one hidden block: the logit is linear in the dropped activations
    cfg = MlpConfig(hidden_layers=1, units=16, dropout_rate=0.4)
    m = init_mlp(cfg, 3)
    X = np.random.default_rng(4).normal(size=(6, 3))
    rng = np.random.default_rng(5)
    n = 20000
    total = np.zeros(6)
    sq = np.zeros(6)
    for _ in range(n):
        lg = _forward(m, X, TRAIN, rng)[1]
        total += lg
        sq += lg * lg
    mean = total / n
    se = np.sqrt((sq / n - mean ** 2) / n)
    ref = _forward(m, X, TRAIN, dropout=False)[1]
    assert np.all(np.abs(mean - ref) < 5 * se + 1e-12)


def test_adam_matches_reference_update():
    p = [np.array([1.0, -2.0])]
    opt = Adam(p, lr=0.1)
    g = np.array([0.5, -0.25])
    opt.step(p, [g])
    # first step: m_hat = g, v_hat = g^2, update = lr * g / (|g| + eps)
    np.testing.assert_allclose(p[0], [1.0 - 0.1 * 0.5 / (0.5 + 1e-8), -2.0 + 0.1 * 0.25 / (0.25 + 1e-8)])


def test_adam_scale_invariance_under_uniform_class_weights():
    d = synth_dataset(120, 2, 1, seed=6)
    base = dict(hidden_layers=2, units=8, epochs=3, batch_size=16, seed=1)
    m1, _ = train_mlp(d, None, MlpConfig(class_weights=ClassWeights(1, 1), **base))
    m2, _ = train_mlp(d, None, MlpConfig(class_weights=ClassWeights(2, 2), **base))
    np.testing.assert_allclose(m1.predict_proba(d.features), m2.predict_proba(d.features), atol=1e-6)


def test_separable_data_high_val_f1():
    rng = np.random.default_rng(7)
    X = rng.normal(size=(400, 2))
    y = (X[:, 0] + X[:, 1] > 0).astype(int)
    d = Dataset(X, y, np.arange(400), ("a", "b"))
    train, val = d.subset(np.arange(300)), d.subset(np.arange(300, 400))
    m, curve = train_mlp(train, val, MlpConfig(hidden_layers=2, units=16, epochs=200, seed=0))
    assert len(curve) == 200
    f1 = prf(confusion(val.labels, (m.predict_proba(val.features) >= 0.5).astype(int))).f1
    assert f1 >= 0.95
    assert curve.val_f1[-1] == pytest.approx(f1)


def test_training_reproducible_and_running_var_nonnegative():
    d = synth_dataset(80, 2, 2, seed=8)
    cfg = MlpConfig(hidden_layers=2, units=8, epochs=2, batch_size=16, seed=3)
    a, ca = train_mlp(d, None, cfg)
    b, cb = train_mlp(d, None, cfg)
    for p, q in zip(a.params(), b.params()):
        assert np.array_equal(p, q)
    assert ca.rows() == cb.rows() or all(
        all((x == y) or (math.isnan(x) and math.isnan(y)) for x, y in zip(r, s))
        for r, s in zip(ca.rows(), cb.rows()))
    assert all(np.all(v >= 0) for v in a.running_var)


def test_nonfinite_loss_aborts():
    d = synth_dataset(40, 1, 1, seed=9)
    cfg = MlpConfig(hidden_layers=1, units=4, epochs=1, batch_size=8, learning_rate=1e300)
    with np.errstate(all="ignore"), pytest.raises(FloatingPointError, match="epoch 1"):
        train_mlp(d, None, cfg)


def test_config_validation():
    with pytest.raises(ValueError):
        MlpConfig(dropout_rate=1.0)
    with pytest.raises(ValueError):
        MlpConfig(units=0)
    with pytest.raises(ValueError):
        MlpConfig(learning_rate=0)
