"""Confusion matrices, precision/recall/F-beta and F-beta threshold tuning."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, NamedTuple

import numpy as np


@dataclass(frozen=True)
class ConfusionMatrix:
    tn: int
    fp: int
    fn: int
    tp: int

    @property
    def total(self) -> int:
        return self.tn + self.fp + self.fn + self.tp

    @property
    def accuracy(self) -> float:
        return (self.tp + self.tn) / self.total if self.total else 0.0


class PRF(NamedTuple):
    precision: float
    recall: float
    f1: float
    degenerate: bool


def confusion(labels, predictions) -> ConfusionMatrix:
    y = np.asarray(labels).astype(np.int64).ravel()
    p = np.asarray(predictions).astype(np.int64).ravel()
    if y.shape != p.shape:
        raise ValueError(f"length mismatch: {y.size} labels, {p.size} predictions")
    for arr in (y, p):
        if arr.size and not np.all((arr == 0) | (arr == 1)):
            raise ValueError("labels and predictions must be 0 or 1")
    tp = int(np.count_nonzero((y == 1) & (p == 1)))
    fp = int(np.count_nonzero((y == 0) & (p == 1)))
    fn = int(np.count_nonzero((y == 1) & (p == 0)))
    return ConfusionMatrix(y.size - tp - fp - fn, fp, fn, tp)


def prf(cm: ConfusionMatrix) -> PRF:
    """Precision, recall, F1. Any 0/0 ratio becomes 0 and sets ``degenerate``."""
    degenerate = False
    if cm.tp + cm.fp:
        precision = cm.tp / (cm.tp + cm.fp)
    else:
        precision, degenerate = 0.0, True
    if cm.tp + cm.fn:
        recall = cm.tp / (cm.tp + cm.fn)
    else:
        recall, degenerate = 0.0, True
    return PRF(precision, recall, fbeta(precision, recall, 1.0), degenerate)


def fbeta(precision: float, recall: float, beta: float) -> float:
    if not beta > 0:
        raise ValueError("beta must be positive")
    b2 = beta * beta
    den = b2 * precision + recall
    return (1.0 + b2) * precision * recall / den if den > 0 else 0.0


@dataclass(frozen=True)
class ThresholdedClassifier:
    """A probability model plus the cut-off that turns it into labels."""

    model: Any
    threshold: float
    beta_used: float

    def predict_proba(self, X) -> np.ndarray:
        return self.model.predict_proba(X)

    def predict(self, X) -> np.ndarray:
        return self.labels_from(self.predict_proba(X))

    def labels_from(self, probs) -> np.ndarray:
        return (np.asarray(probs) >= self.threshold).astype(np.int64)


def threshold_sweep(probs, labels, beta: float):
    """Every candidate threshold with its F-beta, precision and recall.

    Candidates are the distinct probabilities plus 0 and 1, ascending; a row
    is predicted positive iff its probability is >= the threshold.
    """
    probs = np.asarray(probs, dtype=np.float64)
    y = np.asarray(labels).astype(np.int64)
    cand = np.unique(np.concatenate([probs, [0.0, 1.0]]))
    order = np.sort(probs)
    pos_sorted = np.sort(probs[y == 1])
    # rows with prob >= t
    pp = probs.size - np.searchsorted(order, cand, side="left")
    tp = pos_sorted.size - np.searchsorted(pos_sorted, cand, side="left")
    n_pos = pos_sorted.size
    with np.errstate(divide="ignore", invalid="ignore"):
        precision = np.where(pp > 0, tp / np.maximum(pp, 1), 0.0)
        recall = tp / n_pos if n_pos else np.zeros_like(cand)
    # F-beta = (1 + b^2) tp / (pp + b^2 n_pos); one rounding per term keeps equal ratios equal
    b2 = beta * beta
    den = pp + b2 * n_pos
    score = np.where(den > 0, (1 + b2) * tp / np.where(den > 0, den, 1.0), 0.0)
    return cand, score, precision, recall


def optimize_threshold(probs, labels, beta: float, model=None) -> ThresholdedClassifier:
    """Threshold maximizing F-beta on (probs, labels); ties go to the lowest threshold."""
    y = np.asarray(labels).astype(np.int64)
    if not (np.any(y == 1) and np.any(y == 0)):
        raise ValueError("threshold tuning needs both classes in labels")
    cand, score, _, _ = threshold_sweep(probs, y, beta)
    return ThresholdedClassifier(model, float(cand[int(np.argmax(score))]), float(beta))


def evaluate(labels, predictions) -> dict:
    cm = confusion(labels, predictions)
    r = prf(cm)
    return {"f1": r.f1, "precision": r.precision, "recall": r.recall,
            "accuracy": cm.accuracy, "tn": cm.tn, "fp": cm.fp, "fn": cm.fn, "tp": cm.tp}
