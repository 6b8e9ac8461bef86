"""Multilayer perceptron with batch normalization and dropout, trained with Adam.

Each hidden block is dense -> batchnorm -> ReLU -> dropout; the head is a
single dense unit followed by the logistic function. The loss is the mean
over the batch of class-weighted binary cross-entropy.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field, asdict
from typing import Union

import numpy as np

from .dataset import ClassWeights, Dataset, balanced_class_weights
from .learners.common import resolve_class_weights, sigmoid
from .metrics import confusion, prf

TRAIN = "train"
INFERENCE = "inference"


@dataclass
class MlpConfig:
    hidden_layers: int = 4
    units: int = 64
    dropout_rate: float = 0.4
    learning_rate: float = 0.005
    batch_size: int = 64
    epochs: int = 500
    class_weights: Union[str, ClassWeights, tuple, None] = "balanced"
    seed: int = 0
    batchnorm_momentum: float = 0.99
    batchnorm_epsilon: float = 1e-5
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    threshold: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must lie in [0, 1)")
        if self.units < 1 or self.hidden_layers < 0:
            raise ValueError("units must be >= 1 and hidden_layers >= 0")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")

    def to_dict(self) -> dict:
        d = asdict(self)
        cw = self.class_weights
        d["class_weights"] = [cw.weight_negative, cw.weight_positive] if isinstance(cw, ClassWeights) else cw
        return d


@dataclass(eq=False)
class MlpModel:
    weights: list          # hidden dense kernels then the head kernel (units x 1)
    biases: list
    bn_scale: list
    bn_shift: list
    running_mean: list
    running_var: list
    config: MlpConfig
    mode: str = INFERENCE

    @property
    def n_features(self) -> int:
        return self.weights[0].shape[0]

    @property
    def n_hidden(self) -> int:
        return len(self.weights) - 1

    def params(self) -> list:
        """Trainable arrays in a fixed order (updated in place by the optimizer)."""
        out = []
        for i in range(self.n_hidden):
            out += [self.weights[i], self.biases[i], self.bn_scale[i], self.bn_shift[i]]
        return out + [self.weights[-1], self.biases[-1]]

    def predict_proba(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X.reshape(1, -1) if X.size else X.reshape(0, self.n_features)
        if X.shape[1] != self.n_features:
            raise ValueError(f"model expects {self.n_features} feature columns, got {X.shape[1]}")
        if X.shape[0] == 0:
            return np.zeros(0)
        return forward(self, X, INFERENCE)

    def copy(self) -> "MlpModel":
        return copy.deepcopy(self)


def init_mlp(cfg: MlpConfig, n_features: int) -> MlpModel:
    """Glorot-normal kernels, zero biases, identity batchnorm."""
    if n_features < 1:
        raise ValueError("n_features must be >= 1")
    rng = np.random.default_rng(np.random.SeedSequence([int(cfg.seed), 1]))
    dims = [n_features] + [cfg.units] * cfg.hidden_layers + [1]
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        std = math.sqrt(2.0 / (fan_in + fan_out))
        weights.append(rng.normal(0.0, std, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    h = cfg.hidden_layers
    return MlpModel(weights, biases,
                    [np.ones(cfg.units) for _ in range(h)], [np.zeros(cfg.units) for _ in range(h)],
                    [np.zeros(cfg.units) for _ in range(h)], [np.ones(cfg.units) for _ in range(h)],
                    cfg)


def _forward(model: MlpModel, X, mode, rng=None, update_stats=False, dropout=True):
    """Returns (probabilities, logits, cache)."""
    cfg = model.config
    eps = cfg.batchnorm_epsilon
    keep = 1.0 - cfg.dropout_rate
    if mode == TRAIN and X.shape[0] < 2:
        raise ValueError("train-mode forward needs a batch of at least 2 rows")
    h = X
    cache = []
    for i in range(model.n_hidden):
        z = h @ model.weights[i] + model.biases[i]
        if mode == TRAIN:
            mu = z.mean(axis=0)
            var = z.var(axis=0)
            if update_stats:
                m = cfg.batchnorm_momentum
                model.running_mean[i] = m * model.running_mean[i] + (1 - m) * mu
                model.running_var[i] = m * model.running_var[i] + (1 - m) * var
        else:
            mu = model.running_mean[i]
            var = model.running_var[i]
        inv_std = 1.0 / np.sqrt(var + eps)
        zhat = (z - mu) * inv_std
        y = model.bn_scale[i] * zhat + model.bn_shift[i]
        a = np.maximum(y, 0.0)
        mask = None
        if mode == TRAIN and dropout and cfg.dropout_rate > 0:
            mask = (rng.random(a.shape) < keep) / keep
            a = a * mask
        cache.append((h, zhat, inv_std, y, mask))
        h = a
    logits = (h @ model.weights[-1] + model.biases[-1])[:, 0]
    cache.append((h,))
    return sigmoid(logits), logits, cache


def forward(model: MlpModel, batch, mode=INFERENCE, rng=None, dropout=True) -> np.ndarray:
    """Probabilities for ``batch``; train mode uses batch statistics and inverted dropout."""
    batch = np.asarray(batch, dtype=np.float64)
    if mode == TRAIN and rng is None:
        rng = np.random.default_rng(0)
    return _forward(model, batch, mode, rng, dropout=dropout)[0]


def weighted_bce(y, probs, w) -> float:
    p = np.clip(probs, 1e-15, 1 - 1e-15)
    return float(np.mean(-w * (y * np.log(p) + (1 - y) * np.log1p(-p))))


def _loss_from_logits(y, logits, w) -> float:
    # log(1 + e^-s) for y=1, log(1 + e^s) for y=0, stable for large |s|
    s = np.where(y == 1, -logits, logits)
    return float(np.mean(w * np.logaddexp(0.0, s)))


def _backward(model: MlpModel, probs, cache, y, w, mode):
    B = y.shape[0]
    ds = (w * (probs - y) / B)[:, None]
    (h_last,) = cache[-1]
    grads_out = [h_last.T @ ds, ds.sum(axis=0)]
    dh = ds @ model.weights[-1].T
    hidden = []
    for i in reversed(range(model.n_hidden)):
        h_prev, zhat, inv_std, y_bn, mask = cache[i]
        da = dh * mask if mask is not None else dh
        dy = da * (y_bn > 0)
        dscale = (dy * zhat).sum(axis=0)
        dshift = dy.sum(axis=0)
        dzhat = dy * model.bn_scale[i]
        if mode == TRAIN:
            dz = inv_std / B * (B * dzhat - dzhat.sum(axis=0) - zhat * (dzhat * zhat).sum(axis=0))
        else:
            dz = dzhat * inv_std
        hidden.append((h_prev.T @ dz, dz.sum(axis=0), dscale, dshift))
        dh = dz @ model.weights[i].T
    grads = []
    for gw, gb, gs, gt in reversed(hidden):
        grads += [gw, gb, gs, gt]
    return grads + grads_out


def loss_and_grads(model: MlpModel, X, y, w, mode=TRAIN, rng=None, dropout=True,
                   update_stats=False):
    """Batch loss and gradients aligned with ``model.params()``."""
    probs, logits, cache = _forward(model, X, mode, rng, update_stats=update_stats, dropout=dropout)
    return _loss_from_logits(y, logits, w), _backward(model, probs, cache, y, w, mode)


class Adam:
    def __init__(self, params, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        c1 = 1 - b1 ** self.t
        c2 = 1 - b2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


@dataclass
class LearningCurve:
    epoch: list = field(default_factory=list)
    train_loss: list = field(default_factory=list)
    val_loss: list = field(default_factory=list)
    train_f1: list = field(default_factory=list)
    val_f1: list = field(default_factory=list)

    def append(self, epoch, train_loss, val_loss, train_f1, val_f1):
        self.epoch.append(epoch)
        self.train_loss.append(train_loss)
        self.val_loss.append(val_loss)
        self.train_f1.append(train_f1)
        self.val_f1.append(val_f1)

    def __len__(self):
        return len(self.epoch)

    def rows(self):
        return list(zip(self.epoch, self.train_loss, self.val_loss, self.train_f1, self.val_f1))


def _batches(n, batch_size, rng):
    idx = rng.permutation(n)
    starts = list(range(0, n, batch_size))
    chunks = [idx[s:s + batch_size] for s in starts]
    # batchnorm needs two rows; fold a trailing singleton into the previous batch
    if len(chunks) > 1 and chunks[-1].size < 2:
        chunks[-2] = np.concatenate([chunks[-2], chunks[-1]])
        chunks.pop()
    return chunks


def _curve_point(model, X, y, w, threshold):
    if X.shape[0] == 0:
        return math.nan, math.nan
    probs = model.predict_proba(X)
    loss = weighted_bce(y, probs, w)
    f1 = prf(confusion(y, (probs >= threshold).astype(int))).f1
    return loss, f1


def train_mlp(train: Dataset, val: Dataset | None, cfg: MlpConfig | None = None,
              model: MlpModel | None = None, on_epoch=None) -> tuple[MlpModel, LearningCurve]:
    """Minibatch Adam on standardized features; one curve point per epoch."""
    cfg = cfg or MlpConfig()
    train.require_both_classes("MLP training")
    X = train.features
    y = train.labels.astype(np.float64)
    cw = resolve_class_weights(cfg.class_weights, train.labels)
    w = cw.per_row(train.labels)
    model = model or init_mlp(cfg, X.shape[1])
    model.mode = TRAIN
    params = model.params()
    opt = Adam(params, cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_epsilon)
    rng = np.random.default_rng(np.random.SeedSequence([int(cfg.seed), 2]))
    if val is not None:
        Xv, yv, wv = val.features, val.labels.astype(np.float64), cw.per_row(val.labels)
    else:
        Xv, yv, wv = np.zeros((0, X.shape[1])), np.zeros(0), np.zeros(0)
    curve = LearningCurve()
    for epoch in range(1, cfg.epochs + 1):
        for b, rows in enumerate(_batches(X.shape[0], cfg.batch_size, rng)):
            if rows.size < 2:
                continue
            loss, grads = loss_and_grads(model, X[rows], y[rows], w[rows], TRAIN, rng,
                                         update_stats=True)
            if not math.isfinite(loss) or not all(np.all(np.isfinite(g)) for g in grads):
                raise FloatingPointError(
                    f"non-finite loss or gradient at epoch {epoch}, batch {b} (loss={loss})")
            opt.step(params, grads)
        model.mode = INFERENCE
        tl, tf = _curve_point(model, X, y, w, cfg.threshold)
        vl, vf = _curve_point(model, Xv, yv, wv, cfg.threshold)
        curve.append(epoch, tl, vl, tf, vf)
        if on_epoch is not None:
            on_epoch(epoch, model, curve)
        model.mode = TRAIN
    model.mode = INFERENCE
    return model, curve


def gradient_check(model: MlpModel, X, y, w=None, epsilon: float = 1e-5, mode=TRAIN,
                   max_params_per_array: int | None = None, seed: int = 0) -> float:
    """Largest relative gap between analytic and central-difference gradients.

    Dropout is off and running statistics are left untouched. The relative
    error is ``|a - n| / max(|a|, |n|, floor)`` with
    ``floor = max(1e-6, 1e-10 * max(1, |loss|) / epsilon)``. A central
    difference cannot resolve gradients below about ``ulp(loss) / epsilon``,
    so the floor keeps parameters whose true gradient is zero (dense biases
    feeding batchnorm in train mode) from dividing rounding noise by zero.
    ``max_params_per_array`` samples that many entries of each parameter
    array instead of checking all.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    w = np.ones_like(y) if w is None else np.asarray(w, dtype=np.float64)
    loss, grads = loss_and_grads(model, X, y, w, mode, dropout=False)
    floor = max(1e-6, 1e-10 * max(1.0, abs(loss)) / epsilon)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for p, g in zip(model.params(), grads):
        flat = p.reshape(-1)
        gflat = g.reshape(-1)
        idx = np.arange(flat.size)
        if max_params_per_array is not None and flat.size > max_params_per_array:
            idx = rng.choice(flat.size, max_params_per_array, replace=False)
        for j in idx:
            old = flat[j]
            flat[j] = old + epsilon
            lp, _ = loss_and_grads(model, X, y, w, mode, dropout=False)
            flat[j] = old - epsilon
            lm, _ = loss_and_grads(model, X, y, w, mode, dropout=False)
            flat[j] = old
            num = (lp - lm) / (2 * epsilon)
            ana = gflat[j]
            err = abs(ana - num) / max(abs(ana), abs(num), floor)
            worst = max(worst, err)
    return worst
