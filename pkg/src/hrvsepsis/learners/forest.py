"""Class-weighted random forest on bootstrap samples with per-split feature subsampling."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict
from typing import Union

import numpy as np

from . import _kernel
from .common import as_features, node_seed, resolve_class_weights
from .tree import Tree, fit_tree, GINI
from ..dataset import ClassWeights, Dataset


@dataclass
class RfConfig:
    n_trees: int = 1000
    max_depth: int = 10
    class_weights: Union[str, ClassWeights, tuple, None] = "balanced"
    min_samples_leaf: int = 1
    # "sqrt", "all", or an explicit count
    features_per_split: Union[str, int] = "sqrt"
    bootstrap: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1 or self.max_depth < 1:
            raise ValueError("n_trees and max_depth must be at least 1")

    def n_split_features(self, n_features: int) -> int:
        if self.features_per_split == "sqrt":
            return max(1, int(math.floor(math.sqrt(n_features))))
        if self.features_per_split in ("all", None):
            return n_features
        return max(1, min(int(self.features_per_split), n_features))

    def to_dict(self) -> dict:
        d = asdict(self)
        cw = self.class_weights
        d["class_weights"] = [cw.weight_negative, cw.weight_positive] if isinstance(cw, ClassWeights) else cw
        return d


@dataclass(eq=False)
class ForestModel:
    trees: list
    config: RfConfig
    n_features: int
    class_weights: ClassWeights
    importances: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.importances is None:
            self.importances = self._importances()

    def _importances(self) -> np.ndarray:
        per_tree = np.array([t.importances(self.n_features) for t in self.trees])
        imp = per_tree.mean(axis=0)
        total = imp.sum()
        return imp / total if total > 0 else imp

    def predict_proba(self, X) -> np.ndarray:
        X = as_features(X, self.n_features)
        if X.shape[0] == 0:
            return np.zeros(0)
        acc = np.zeros(X.shape[0])
        for t in self.trees:
            acc += t.predict(X)
        return np.clip(acc / len(self.trees), 0.0, 1.0)

    def used_features(self) -> set:
        return {int(f) for t in self.trees for f in t.feature[t.feature >= 0]}


def bootstrap_counts(n: int, seed: int, tree_index: int) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), int(tree_index), 0xB007]))
    return np.bincount(rng.integers(0, n, n), minlength=n).astype(np.float64)


def fit_forest(X, y, cfg: RfConfig, order=None) -> ForestModel:
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y)
    n, p = X.shape
    cw = resolve_class_weights(cfg.class_weights, y)
    row_w = cw.per_row(y)
    order = _kernel.presort(X) if order is None else order
    k = cfg.n_split_features(p)
    trees = []
    for t in range(cfg.n_trees):
        w = row_w * bootstrap_counts(n, cfg.seed, t) if cfg.bootstrap else row_w
        trees.append(fit_tree(X, y, w, max_depth=cfg.max_depth, split_rule=GINI,
                              min_samples_leaf=cfg.min_samples_leaf, max_features=k,
                              seed=node_seed(cfg.seed, t), order=order))
    return ForestModel(trees, cfg, p, cw)


def train_random_forest(train: Dataset, cfg: RfConfig | None = None) -> ForestModel:
    cfg = cfg or RfConfig()
    train.require_both_classes("random forest training")
    return fit_forest(train.features, train.labels, cfg)
