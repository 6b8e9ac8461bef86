"""Array-backed binary decision tree shared by the forest and the booster."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernel

GINI = 0
NEWTON = 1
_RULES = {"gini": GINI, "newton": NEWTON, GINI: GINI, NEWTON: NEWTON}

_ARRAYS = ("feature", "threshold", "left", "right", "value", "gain", "weight", "n_samples")


@dataclass(frozen=True)
class TreeNode:
    """Nested view of one node. ``feature_index`` is None for leaves."""

    value: float
    feature_index: Optional[int] = None
    threshold: Optional[float] = None
    left: Optional["TreeNode"] = None
    right: Optional["TreeNode"] = None

    @property
    def is_leaf(self) -> bool:
        return self.feature_index is None


@dataclass(frozen=True, eq=False)
class Tree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    gain: np.ndarray
    weight: np.ndarray
    n_samples: np.ndarray

    @classmethod
    def from_arrays(cls, arrays: dict) -> "Tree":
        return cls(**{k: np.asarray(arrays[k]) for k in _ARRAYS})

    def arrays(self) -> dict:
        return {k: getattr(self, k) for k in _ARRAYS}

    @property
    def n_nodes(self) -> int:
        return int(self.feature.shape[0])

    @property
    def n_splits(self) -> int:
        return int(np.count_nonzero(self.feature >= 0))

    def apply(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        return _kernel.apply_tree(self.feature, self.threshold, self.left, self.right, X)

    def predict(self, X) -> np.ndarray:
        return self.value[self.apply(X)]

    def depth(self) -> int:
        best = 0
        stack = [(0, 0)]
        while stack:
            node, d = stack.pop()
            best = max(best, d)
            if self.feature[node] >= 0:
                stack.append((int(self.left[node]), d + 1))
                stack.append((int(self.right[node]), d + 1))
        return best

    def raw_importances(self, n_features: int) -> np.ndarray:
        inner = self.feature >= 0
        return np.bincount(self.feature[inner], weights=self.gain[inner], minlength=n_features)

    def importances(self, n_features: int) -> np.ndarray:
        """Split gains summed per feature, normalized to 1 (zeros if no split)."""
        raw = self.raw_importances(n_features)
        total = raw.sum()
        return raw / total if total > 0 else raw

    def to_node(self, i: int = 0) -> TreeNode:
        if self.feature[i] < 0:
            return TreeNode(float(self.value[i]))
        return TreeNode(float(self.value[i]), int(self.feature[i]), float(self.threshold[i]),
                        self.to_node(int(self.left[i])), self.to_node(int(self.right[i])))


def fit_tree(X, targets, weights=None, max_depth: int = 10, split_rule="gini", hess=None,
             min_samples_leaf: int = 1, max_features: int | None = None,
             reg_lambda: float = 0.0, gamma: float = 0.0, min_child_weight: float = 0.0,
             seed: int = 0, order=None) -> Tree:
    """Grow a greedy tree.

    ``split_rule="gini"`` expects 0/1 ``targets`` and maximizes the weighted
    Gini decrease; leaves hold the weighted positive fraction.
    ``split_rule="newton"`` expects per-row gradients in ``targets`` and
    hessians in ``hess`` (both already weighted) and maximizes the
    second-order gain; a split needs gain > ``gamma`` and leaves hold
    ``-G / (H + reg_lambda)``.

    Candidate thresholds are midpoints between consecutive distinct values.
    Ties go to the lowest feature index, then the lowest threshold. Rows
    with zero weight are ignored, which is how bootstrap samples are passed.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    n, p = X.shape
    targets = np.asarray(targets, dtype=np.float64)
    weights = np.ones(n) if weights is None else np.asarray(weights, dtype=np.float64)
    hess = np.zeros(n) if hess is None else np.asarray(hess, dtype=np.float64)
    if targets.shape[0] != n or weights.shape[0] != n or hess.shape[0] != n:
        raise ValueError("targets, weights and hess must have one entry per row")
    if n < 1:
        raise ValueError("need at least one row")
    rule = _RULES[split_rule]
    if order is None:
        order = _kernel.presort(X)
    k = 0 if max_features is None else int(max_features)
    arrays = _kernel.build_tree(X, order, weights, targets, hess, rule, int(max_depth),
                                int(min_samples_leaf), k, float(reg_lambda), float(gamma),
                                float(min_child_weight), int(seed) & ((1 << 64) - 1))
    return Tree.from_arrays(arrays)
