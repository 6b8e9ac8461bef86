"""Run configuration: a YAML document merged over built-in defaults.

Every key has a default, so an empty file is a valid config apart from
``data.path``. Unknown keys are rejected so typos fail loudly. ``dump_default``
prints the full schema with its defaults.
"""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import yaml

from .ensemble import SvmConfig
from .explain import LimeConfig
from .learners.forest import RfConfig
from .learners.gbm import GbmConfig
from .nnet import MlpConfig

FEATURE_SETS = ("xgboost", "randomforest", "boruta", "bootstrap", "boruta_bootstrap")

DEFAULTS = {
    "seed": 0,
    "output_dir": "runs/default",
    "data": {
        "path": None,
        "label_column": "sepsis",
        "impute": False,            # median-impute missing cells instead of rejecting them
    },
    "split": {
        "test_fraction": 0.25,
        "tune_fraction": 0.2,       # train rows held out for thresholds and meta-learners
        "val_fraction": 0.1,        # train rows held out for the network's learning curve
    },
    "stats": {
        "n_boot": 2000,
        "alpha": 0.05,
        "histogram_features": [],   # empty: the top ``n_histograms`` ranked features
        "n_histograms": 4,
        "n_bins": 30,
        "top_bars": 15,
    },
    "select": {
        "rule": "mean",
        "stability_seeds": 0,
        "forest": {"n_trees": 1000, "max_depth": 10},
        "gbm": {"n_estimators": 1000, "learning_rate": 0.01, "max_depth": 4},
        "boruta": {"n_trials": 100, "n_trees": 200, "max_depth": 20, "alpha": 0.01},
        "bootstrap": {"alpha": 0.05, "n_boot": 2000},
    },
    "learners": {
        "feature_sets": list(FEATURE_SETS),
        "forest": {"n_trees": 1000, "max_depth": 10, "class_weights": "balanced",
                   "min_samples_leaf": 1, "features_per_split": "sqrt", "bootstrap": True},
        "gbm": {"n_estimators": 1000, "learning_rate": 0.01, "max_depth": 4, "gamma": 0.9,
                "reg_lambda": 1.0, "min_child_weight": 1.0, "class_weights": "balanced"},
        # untuned reference model on all features, cut at 0.5
        "baseline": {"n_estimators": 100, "learning_rate": 0.3, "max_depth": 6, "gamma": 0.0,
                     "reg_lambda": 1.0, "min_child_weight": 1.0, "class_weights": None,
                     "threshold": 0.5},
    },
    "nnet": {
        "feature_set": "boruta_bootstrap",
        "hidden_layers": 4, "units": 64, "dropout_rate": 0.4, "learning_rate": 0.005,
        "batch_size": 64, "epochs": 500, "class_weights": "balanced",
        "batchnorm_momentum": 0.99, "batchnorm_epsilon": 1e-5,
        "adam_beta1": 0.9, "adam_beta2": 0.999, "adam_epsilon": 1e-8, "threshold": 0.5,
    },
    "metrics": {
        "betas": [0.5, 1.0, 2.0],
        "hpm_beta": 0.5,
        "hrm_beta": 2.0,
    },
    "ensemble": {
        "logistic": {"C": 1.0, "tol": 1e-8, "max_iter": 100},
        "svm": {"C": 1.0, "gamma_mode": "scale", "degree": 4, "class_weights": "balanced",
                "tolerance": 1e-3, "max_passes": 100000},
    },
    "explain": {
        "fraction": 0.2,
        "gbm_feature_set": None,    # None: the beta=1 boosted model with the best tuning-fold F1
        "n_perturbations": 5000, "kernel_width": None, "n_bins": 4, "top_k": 15,
        "ridge_alpha": 1.0,
    },
    "synth": {
        "n_rows": 600, "n_informative": 6, "class_balance": 0.125, "shift": 1.5,
    },
}


class ConfigError(ValueError):
    pass


def _merge(base: dict, override: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for k, v in override.items():
        key = f"{path}{k}"
        if k not in base:
            raise ConfigError(f"unknown config key '{key}'")
        if isinstance(base[k], dict):
            if not isinstance(v, dict):
                raise ConfigError(f"config key '{key}' must be a mapping")
            out[k] = _merge(base[k], v, key + ".")
        else:
            out[k] = v
    return out


def _cw(v):
    return tuple(v) if isinstance(v, list) else v


@dataclass(frozen=True)
class RunConfig:
    values: dict
    source: str = ""

    def __getitem__(self, key):
        return self.values[key]

    @property
    def seed(self) -> int:
        return int(self.values["seed"])

    @property
    def output_dir(self) -> Path:
        return Path(self.values["output_dir"])

    @property
    def data_path(self) -> Path:
        p = self.values["data"]["path"]
        if not p:
            raise ConfigError("data.path is not set")
        return Path(p)

    def hash(self) -> str:
        blob = json.dumps(self.values, sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()

    def forest_config(self) -> RfConfig:
        d = dict(self.values["learners"]["forest"])
        d["class_weights"] = _cw(d["class_weights"])
        return RfConfig(seed=self.seed, **d)

    def gbm_config(self) -> GbmConfig:
        d = dict(self.values["learners"]["gbm"])
        d["class_weights"] = _cw(d["class_weights"])
        return GbmConfig(seed=self.seed, **d)

    def baseline_config(self) -> tuple[GbmConfig, float]:
        d = dict(self.values["learners"]["baseline"])
        thr = float(d.pop("threshold"))
        d["class_weights"] = _cw(d["class_weights"])
        return GbmConfig(seed=self.seed, **d), thr

    def selection_forest(self) -> RfConfig:
        return RfConfig(seed=self.seed, **self.values["select"]["forest"])

    def selection_gbm(self) -> GbmConfig:
        return GbmConfig(seed=self.seed, **self.values["select"]["gbm"])

    def mlp_config(self) -> MlpConfig:
        d = {k: v for k, v in self.values["nnet"].items() if k != "feature_set"}
        d["class_weights"] = _cw(d["class_weights"])
        return MlpConfig(seed=self.seed, **d)

    def svm_config(self) -> SvmConfig:
        d = dict(self.values["ensemble"]["svm"])
        d["class_weights"] = _cw(d["class_weights"])
        return SvmConfig(**d)

    def lime_config(self) -> LimeConfig:
        e = self.values["explain"]
        return LimeConfig(n_perturbations=e["n_perturbations"], kernel_width=e["kernel_width"],
                          n_bins=e["n_bins"], top_k=e["top_k"], ridge_alpha=e["ridge_alpha"],
                          seed=self.seed)

    def with_overrides(self, seed=None, output_dir=None) -> "RunConfig":
        v = copy.deepcopy(self.values)
        if seed is not None:
            v["seed"] = int(seed)
        if output_dir is not None:
            v["output_dir"] = str(output_dir)
        return validate(RunConfig(v, self.source))


def validate(cfg: RunConfig) -> RunConfig:
    v = cfg.values
    try:
        betas = [float(b) for b in v["metrics"]["betas"]]
    except (TypeError, ValueError):
        raise ConfigError("metrics.betas must be a list of numbers") from None
    if not betas or any(not b > 0 for b in betas):
        raise ConfigError("metrics.betas must be positive")
    for key in ("hpm_beta", "hrm_beta"):
        if float(v["metrics"][key]) not in betas:
            raise ConfigError(f"metrics.{key} must be one of metrics.betas")
    for key in ("test_fraction", "tune_fraction", "val_fraction"):
        if not 0.0 < float(v["split"][key]) < 1.0:
            raise ConfigError(f"split.{key} must lie in (0, 1)")
    for fs in v["learners"]["feature_sets"]:
        if fs not in FEATURE_SETS:
            raise ConfigError(f"unknown feature set '{fs}' in learners.feature_sets")
    if v["nnet"]["feature_set"] not in FEATURE_SETS + ("all",):
        raise ConfigError("nnet.feature_set must name a selection method or 'all'")
    # build every typed config once so bad values surface before any work starts
    try:
        cfg.forest_config(), cfg.gbm_config(), cfg.baseline_config(), cfg.mlp_config()
        cfg.svm_config(), cfg.lime_config(), cfg.selection_forest(), cfg.selection_gbm()
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    return cfg


def load_config(path=None, overrides: dict | None = None) -> RunConfig:
    doc = {}
    source = ""
    if path is not None:
        source = str(path)
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        try:
            doc = yaml.safe_load(text) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"invalid YAML in {path}: {exc}") from None
        if not isinstance(doc, dict):
            raise ConfigError(f"config {path} must be a mapping")
    values = _merge(DEFAULTS, doc)
    if overrides:
        values = _merge(values, overrides)
    cfg = RunConfig(values, source)
    if path is not None and values["data"]["path"]:
        # relative data paths resolve against the config file's directory
        p = Path(values["data"]["path"])
        if not p.is_absolute():
            values["data"]["path"] = str(Path(path).parent / p)
    return validate(cfg)


def dump_default() -> str:
    return yaml.safe_dump(DEFAULTS, sort_keys=False)
