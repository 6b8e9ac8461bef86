"""Second-order gradient boosting of regression trees for class-weighted logistic loss."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict
from typing import Union

import numpy as np

from . import _kernel
from .common import as_features, node_seed, resolve_class_weights, sigmoid
from .tree import Tree, fit_tree, NEWTON
from ..dataset import ClassWeights, Dataset


@dataclass
class GbmConfig:
    n_estimators: int = 1000
    learning_rate: float = 0.01
    max_depth: int = 4
    # minimum loss reduction for a split
    gamma: float = 0.9
    reg_lambda: float = 1.0
    min_child_weight: float = 1.0
    class_weights: Union[str, ClassWeights, tuple, None] = "balanced"
    seed: int = 0

    def __post_init__(self):
        if self.n_estimators < 0 or self.max_depth < 1 or not self.learning_rate > 0:
            raise ValueError("invalid boosting configuration")

    def to_dict(self) -> dict:
        d = asdict(self)
        cw = self.class_weights
        d["class_weights"] = [cw.weight_negative, cw.weight_positive] if isinstance(cw, ClassWeights) else cw
        return d


@dataclass(eq=False)
class GbmModel:
    base_score: float
    trees: list
    config: GbmConfig
    n_features: int
    class_weights: ClassWeights
    loss_trace: np.ndarray = field(default_factory=lambda: np.zeros(0))
    importances: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.importances is None:
            raw = np.zeros(self.n_features)
            for t in self.trees:
                raw += t.raw_importances(self.n_features)
            total = raw.sum()
            self.importances = raw / total if total > 0 else raw

    def raw_score(self, X) -> np.ndarray:
        X = as_features(X, self.n_features)
        out = np.full(X.shape[0], self.base_score)
        lr = self.config.learning_rate
        for t in self.trees:
            out += lr * t.predict(X)
        return out

    def predict_proba(self, X) -> np.ndarray:
        return sigmoid(self.raw_score(X))

    def used_features(self) -> set:
        return {int(f) for t in self.trees for f in t.feature[t.feature >= 0]}


def weighted_bce(y, p, w) -> float:
    p = np.clip(p, 1e-15, 1 - 1e-15)
    return float(np.sum(-w * (y * np.log(p) + (1 - y) * np.log1p(-p))) / np.sum(w))


def fit_gbm(X, y, cfg: GbmConfig) -> GbmModel:
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, p = X.shape
    cw = resolve_class_weights(cfg.class_weights, y)
    w = cw.per_row(y)
    mass_pos = float(np.sum(w[y == 1]))
    mass_neg = float(np.sum(w[y == 0]))
    base = math.log(mass_pos / mass_neg)
    order = _kernel.presort(X)
    F = np.full(n, base)
    trees = []
    losses = []
    for m in range(cfg.n_estimators):
        prob = sigmoid(F)
        loss = weighted_bce(y, prob, w)
        losses.append(loss)
        if loss == 0.0:
            break
        grad = w * (prob - y)
        hess = w * prob * (1.0 - prob)
        tree = fit_tree(X, grad, np.ones(n), max_depth=cfg.max_depth, split_rule=NEWTON,
                        hess=hess, reg_lambda=cfg.reg_lambda, gamma=cfg.gamma,
                        min_child_weight=cfg.min_child_weight, seed=node_seed(cfg.seed, m),
                        order=order)
        trees.append(tree)
        F += cfg.learning_rate * tree.predict(X)
    losses.append(weighted_bce(y, sigmoid(F), w))
    return GbmModel(base, trees, cfg, p, cw, np.asarray(losses))


def train_gbm(train: Dataset, cfg: GbmConfig | None = None) -> GbmModel:
    cfg = cfg or GbmConfig()
    train.require_both_classes("gradient boosting")
    return fit_gbm(train.features, train.labels, cfg)
