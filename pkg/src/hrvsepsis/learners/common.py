"""Helpers shared by the tree ensembles."""

import math

import numpy as np

from ..dataset import ClassWeights, balanced_class_weights


def as_features(X, n_features: int) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(1, -1) if X.size else X.reshape(0, n_features)
    if X.shape[1] != n_features:
        raise ValueError(f"model expects {n_features} feature columns, got {X.shape[1]}")
    return X


def resolve_class_weights(spec, labels) -> ClassWeights:
    """``"balanced"``, ``None`` (uniform), a ClassWeights, or a (neg, pos) pair."""
    if spec is None:
        return ClassWeights.uniform()
    if isinstance(spec, ClassWeights):
        return spec
    if spec == "balanced":
        return balanced_class_weights(labels)
    neg, pos = spec
    return ClassWeights(float(neg), float(pos))


def node_seed(seed: int, *stream: int) -> int:
    """64-bit seed for substream ``stream`` of ``seed``."""
    words = np.random.SeedSequence([int(seed), *map(int, stream)]).generate_state(2, np.uint32)
    return (int(words[0]) << 32) | int(words[1])


def sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def logit(p: float) -> float:
    return math.log(p / (1.0 - p))


def predict_proba(model, features) -> np.ndarray:
    """Positive-class probability from any fitted model in this package."""
    return model.predict_proba(features)


def feature_importance(model) -> np.ndarray:
    return np.asarray(model.importances, dtype=np.float64)
