"""Model wrappers and the on-disk model format.

A saved model is one ``.npz`` archive. The array ``__header__`` holds UTF-8
JSON with ``format``, ``version``, ``kind`` and the model's config; the
remaining arrays carry the fitted numbers. Wrapper models nest: their inner
model's arrays live under a ``<prefix>inner.`` key prefix and its header under
``"inner"``. Loading never unpickles objects.

Tree ensembles store each tree's node arrays concatenated, with
``tree_offsets[t]:tree_offsets[t + 1]`` delimiting tree ``t`` (child indices
are local to their tree).
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from .dataset import ClassWeights, StandardizationParams
from .ensemble import LogisticModel, SvmModel
from .learners.forest import ForestModel, RfConfig
from .learners.gbm import GbmConfig, GbmModel
from .learners.tree import Tree
from .metrics import ThresholdedClassifier
from .nnet import MlpConfig, MlpModel

FORMAT = "hrvsepsis-model"
VERSION = 1

_TREE_FIELDS = ("feature", "threshold", "left", "right", "value", "gain", "weight", "n_samples")


@dataclass(frozen=True, eq=False)
class FeatureSubsetModel:
    """Feeds a model the listed columns of a wider feature matrix."""

    model: Any
    columns: tuple
    feature_names: tuple = ()

    def predict_proba(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X.reshape(1, -1)
        return self.model.predict_proba(X[:, list(self.columns)])


@dataclass(frozen=True, eq=False)
class StandardizedModel:
    """Z-scores raw features with fixed training statistics before the model sees them."""

    model: Any
    params: StandardizationParams

    def predict_proba(self, X) -> np.ndarray:
        return self.model.predict_proba(self.params.apply(X))


class ModelFormatError(ValueError):
    pass


def _cw(cw: ClassWeights):
    return [cw.weight_negative, cw.weight_positive]


def _config_from(cls, d):
    d = dict(d)
    if isinstance(d.get("class_weights"), list):
        d["class_weights"] = tuple(d["class_weights"])
    return cls(**d)


def _pack_trees(trees, prefix, arrays):
    offsets = np.zeros(len(trees) + 1, dtype=np.int64)
    for i, t in enumerate(trees):
        offsets[i + 1] = offsets[i] + t.n_nodes
    arrays[prefix + "tree_offsets"] = offsets
    for f in _TREE_FIELDS:
        parts = [getattr(t, f) for t in trees]
        arrays[prefix + "tree_" + f] = np.concatenate(parts) if parts else np.zeros(0)


def _unpack_trees(arrays, prefix):
    off = arrays[prefix + "tree_offsets"]
    cols = {f: arrays[prefix + "tree_" + f] for f in _TREE_FIELDS}
    return [Tree.from_arrays({f: np.ascontiguousarray(c[off[i]:off[i + 1]]) for f, c in cols.items()})
            for i in range(off.size - 1)]


def _encode(model, prefix: str, arrays: dict) -> dict:
    if isinstance(model, ForestModel):
        _pack_trees(model.trees, prefix, arrays)
        arrays[prefix + "importances"] = model.importances
        return {"kind": "forest", "config": model.config.to_dict(), "n_features": model.n_features,
                "class_weights": _cw(model.class_weights)}
    if isinstance(model, GbmModel):
        _pack_trees(model.trees, prefix, arrays)
        arrays[prefix + "importances"] = model.importances
        arrays[prefix + "loss_trace"] = np.asarray(model.loss_trace, dtype=np.float64)
        return {"kind": "gbm", "config": model.config.to_dict(), "n_features": model.n_features,
                "class_weights": _cw(model.class_weights), "base_score": model.base_score}
    if isinstance(model, MlpModel):
        groups = ("weights", "biases", "bn_scale", "bn_shift", "running_mean", "running_var")
        for g in groups:
            for i, a in enumerate(getattr(model, g)):
                arrays[f"{prefix}{g}.{i}"] = a
        return {"kind": "mlp", "config": model.config.to_dict(),
                "layer_dims": [model.n_features] + [w.shape[1] for w in model.weights]}
    if isinstance(model, LogisticModel):
        arrays[prefix + "weights"] = model.weights
        return {"kind": "logistic", "config": {"C": model.C}, "bias": model.bias,
                "converged": model.converged, "grad_norm": model.grad_norm}
    if isinstance(model, SvmModel):
        for f in ("support_vectors", "dual_coef", "alpha", "upper", "y_signed", "train_X"):
            arrays[prefix + f] = getattr(model, f)
        return {"kind": "svm", "config": {"gamma": model.gamma}, "bias": model.bias,
                "converged": model.converged, "n_iter": model.n_iter,
                "kkt_violations": model.kkt_violations}
    if isinstance(model, ThresholdedClassifier):
        return {"kind": "thresholded", "config": {"threshold": model.threshold, "beta": model.beta_used},
                "inner": _encode(model.model, prefix + "inner.", arrays)}
    if isinstance(model, FeatureSubsetModel):
        return {"kind": "subset", "config": {"columns": list(model.columns),
                                             "feature_names": list(model.feature_names)},
                "inner": _encode(model.model, prefix + "inner.", arrays)}
    if isinstance(model, StandardizedModel):
        arrays[prefix + "mean"] = model.params.mean
        arrays[prefix + "std"] = model.params.std
        return {"kind": "standardized", "config": {},
                "inner": _encode(model.model, prefix + "inner.", arrays)}
    raise TypeError(f"cannot serialize {type(model).__name__}")


def _decode(h: dict, arrays, prefix: str):
    kind = h["kind"]
    cfg = h["config"]
    if kind == "forest":
        return ForestModel(_unpack_trees(arrays, prefix), _config_from(RfConfig, cfg), h["n_features"],
                           ClassWeights(*h["class_weights"]), arrays[prefix + "importances"])
    if kind == "gbm":
        return GbmModel(h["base_score"], _unpack_trees(arrays, prefix), _config_from(GbmConfig, cfg),
                        h["n_features"], ClassWeights(*h["class_weights"]),
                        arrays[prefix + "loss_trace"], arrays[prefix + "importances"])
    if kind == "mlp":
        n = len(h["layer_dims"]) - 1
        groups = {}
        for g in ("weights", "biases"):
            groups[g] = [arrays[f"{prefix}{g}.{i}"] for i in range(n)]
        for g in ("bn_scale", "bn_shift", "running_mean", "running_var"):
            groups[g] = [arrays[f"{prefix}{g}.{i}"] for i in range(n - 1)]
        return MlpModel(config=_config_from(MlpConfig, cfg), **groups)
    if kind == "logistic":
        return LogisticModel(arrays[prefix + "weights"], h["bias"], cfg["C"], h["converged"],
                             h["grad_norm"])
    if kind == "svm":
        g = {f: arrays[prefix + f] for f in
             ("support_vectors", "dual_coef", "alpha", "upper", "y_signed", "train_X")}
        return SvmModel(bias=h["bias"], gamma=cfg["gamma"], converged=h["converged"],
                        n_iter=h["n_iter"], kkt_violations=h["kkt_violations"], **g)
    inner = _decode(h["inner"], arrays, prefix + "inner.") if "inner" in h else None
    if kind == "thresholded":
        return ThresholdedClassifier(inner, cfg["threshold"], cfg["beta"])
    if kind == "subset":
        return FeatureSubsetModel(inner, tuple(cfg["columns"]), tuple(cfg["feature_names"]))
    if kind == "standardized":
        return StandardizedModel(inner, StandardizationParams(arrays[prefix + "mean"],
                                                              arrays[prefix + "std"]))
    raise ModelFormatError(f"unknown model kind {kind!r}")


def model_to_bytes(model) -> bytes:
    arrays = {}
    header = {"format": FORMAT, "version": VERSION, **_encode(model, "", arrays)}
    arrays["__header__"] = np.frombuffer(json.dumps(header, sort_keys=True).encode(), dtype=np.uint8)
    buf = io.BytesIO()
    np.savez(buf, **arrays)
    return buf.getvalue()


def model_from_bytes(data: bytes):
    with np.load(io.BytesIO(data), allow_pickle=False) as z:
        if "__header__" not in z.files:
            raise ModelFormatError("missing model header")
        header = json.loads(bytes(z["__header__"]).decode())
        if header.get("format") != FORMAT:
            raise ModelFormatError(f"not a {FORMAT} file")
        if header.get("version") != VERSION:
            raise ModelFormatError(f"unsupported model format version {header.get('version')}")
        arrays = {k: z[k] for k in z.files}
    return _decode(header, arrays, "")


def save_model(model, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(model_to_bytes(model))
    return path


def load_model(path):
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise ModelFormatError(f"cannot read model {path}: {exc}") from exc
    return model_from_bytes(data)


def read_header(path) -> dict:
    with np.load(path, allow_pickle=False) as z:
        return json.loads(bytes(z["__header__"]).decode())
