"""Feature selection: model importances, Boruta, bootstrap significance and their hybrid."""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np
from scipy import stats as sps

from .dataset import Dataset
from .learners.common import node_seed
from .learners.forest import RfConfig, fit_forest
from .learners.gbm import GbmConfig, fit_gbm
from .stats import DEFAULT_N_BOOT, feature_tests

ACCEPTED = "Accepted"
REJECTED = "Rejected"
TENTATIVE = "Tentative"

METHODS = ("xgboost", "randomforest", "boruta", "bootstrap", "boruta_bootstrap")
# column labels of the Y/N grid
METHOD_CODES = {"xgboost": "XGB", "randomforest": "RF", "boruta": "B",
                "bootstrap": "Bo", "boruta_bootstrap": "B_Bo"}


@dataclass(frozen=True)
class BorutaVerdict:
    feature_name: str
    status: str
    hit_count: int
    n_trials: int


@dataclass
class SelectionResult:
    method: str
    selected: list
    evidence: dict = field(default_factory=dict)   # feature -> {importance, p_value, boruta}
    flags: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(set(self.selected)) != len(self.selected):
            raise ValueError("duplicate names in selection")


def selection_forest_config(seed: int = 0) -> RfConfig:
    return RfConfig(n_trees=1000, max_depth=10, seed=seed)


def selection_gbm_config(seed: int = 0) -> GbmConfig:
    return GbmConfig(n_estimators=1000, learning_rate=0.01, max_depth=4, seed=seed)


def _fit_importances(X, y, learner):
    if isinstance(learner, RfConfig):
        return fit_forest(X, y, learner).importances
    if isinstance(learner, GbmConfig):
        return fit_gbm(X, y, learner).importances
    raise TypeError("learner must be an RfConfig or a GbmConfig")


def _with_seed(learner, seed):
    cfg = type(learner)(**{**learner.__dict__, "seed": seed})
    return cfg


def _apply_rule(importances, rule):
    if rule == "mean":
        cut = importances.mean()
    elif rule == "median":
        cut = np.median(importances)
    else:
        cut = float(rule)
    return np.flatnonzero(importances > cut)


def jaccard(a, b) -> float:
    a, b = set(a), set(b)
    return len(a & b) / len(a | b) if a | b else 1.0


def model_based_select(train: Dataset, learner: Union[RfConfig, GbmConfig],
                       rule="mean", stability_seeds: int = 0) -> SelectionResult:
    """Features whose importance exceeds the rule's cut, by descending importance.

    ``rule`` is "mean", "median" or a number. With ``stability_seeds > 0`` the
    learner is refit under that many extra seeds and the mean pairwise
    Jaccard index of the selected sets is recorded; below 0.5 the selection
    is flagged unstable.
    """
    train.require_both_classes("model-based selection")
    method = "randomforest" if isinstance(learner, RfConfig) else "xgboost"
    imp = _fit_importances(train.features, train.labels, learner)
    keep = _apply_rule(imp, rule)
    keep = sorted(keep, key=lambda j: (-imp[j], j))
    names = train.feature_names
    res = SelectionResult(method, [names[j] for j in keep],
                          {n: {"importance": float(imp[j])} for j, n in enumerate(names)})
    if stability_seeds > 0:
        sets = [set(res.selected)]
        for s in range(1, stability_seeds + 1):
            imp_s = _fit_importances(train.features, train.labels, _with_seed(learner, learner.seed + s))
            sets.append({names[j] for j in _apply_rule(imp_s, rule)})
        score = float(np.mean([jaccard(a, b) for a, b in itertools.combinations(sets, 2)]))
        res.flags["stability_jaccard"] = score
        res.flags["unstable"] = score < 0.5
    return res


def binomial_verdict(hits: int, n_trials: int, alpha: float) -> str:
    """Accepted if P[X >= hits] < alpha, Rejected if P[X <= hits] < alpha, X ~ Bin(n, 1/2)."""
    if sps.binom.sf(hits - 1, n_trials, 0.5) < alpha:
        return ACCEPTED
    if sps.binom.cdf(hits, n_trials, 0.5) < alpha:
        return REJECTED
    return TENTATIVE


def boruta_hits(X, y, n_trials: int = 100, forest: RfConfig | None = None,
                seed: int = 0) -> np.ndarray:
    """Per-feature count of trials whose importance beat the best shadow column."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    n, p = X.shape
    forest = forest or RfConfig(n_trees=200, max_depth=20)
    hits = np.zeros(p, dtype=np.int64)
    for t in range(n_trials):
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), t, 0xB0]))
        shadow = np.empty_like(X)
        for j in range(p):
            shadow[:, j] = X[rng.permutation(n), j]
        # Split ties go to the lowest column index, so real and shadow columns
        # are interleaved in a random order to keep them exchangeable.
        order = rng.permutation(2 * p)
        cfg = _with_seed(forest, node_seed(seed, t))
        imp = np.empty(2 * p)
        imp[order] = fit_forest(np.hstack([X, shadow])[:, order], y, cfg).importances
        hits += imp[:p] > imp[p:].max()
    return hits


def boruta(train: Dataset, n_trials: int = 100, forest_depth: int = 20,
           alpha_binomial: float = 0.01, seed: int = 0, n_trees: int = 200,
           forest: RfConfig | None = None) -> list[BorutaVerdict]:
    """Shadow-feature test repeated ``n_trials`` times, decided by a binomial rule.

    Each trial appends a row-shuffled copy of every column, fits a balanced
    forest, and scores a hit for every real feature whose importance exceeds
    the largest shadow importance.
    """
    if n_trials < 10:
        raise ValueError("n_trials must be at least 10")
    train.require_both_classes("Boruta")
    forest = forest or RfConfig(n_trees=n_trees, max_depth=forest_depth)
    hits = boruta_hits(train.features, train.labels, n_trials, forest, seed)
    return [BorutaVerdict(name, binomial_verdict(int(h), n_trials, alpha_binomial), int(h), n_trials)
            for name, h in zip(train.feature_names, hits)]


def boruta_select(train: Dataset, verdicts: list[BorutaVerdict] | None = None,
                  **kwargs) -> SelectionResult:
    verdicts = verdicts if verdicts is not None else boruta(train, **kwargs)
    accepted = [v for v in verdicts if v.status == ACCEPTED]
    accepted.sort(key=lambda v: (-v.hit_count, train.feature_names.index(v.feature_name)))
    return SelectionResult("boruta", [v.feature_name for v in accepted],
                           {v.feature_name: {"boruta": v} for v in verdicts})


def bootstrap_select(train: Dataset, alpha: float = 0.05, n_boot: int = DEFAULT_N_BOOT,
                     seed: int = 0, results=None) -> SelectionResult:
    """Features with bootstrap p < alpha, by ascending p (ties by column order)."""
    if results is None:
        _, results = feature_tests(train, n_boot, seed)
    order = sorted(range(len(results)), key=lambda j: (results[j].p_value, j))
    sel = [results[j].feature_name for j in order if results[j].p_value < alpha]
    return SelectionResult("bootstrap", sel,
                           {r.feature_name: {"p_value": r.p_value} for r in results})


def hybrid_boruta_bootstrap(train: Dataset, boruta_result: SelectionResult | None = None,
                            alpha: float = 0.05, n_boot: int = DEFAULT_N_BOOT, seed: int = 0,
                            bootstrap_result: SelectionResult | None = None,
                            **boruta_kwargs) -> SelectionResult:
    """Boruta-accepted features that also pass the bootstrap filter, by ascending p."""
    if boruta_result is None:
        boruta_result = boruta_select(train, seed=seed, **boruta_kwargs)
    if bootstrap_result is None:
        bootstrap_result = bootstrap_select(train, alpha, n_boot, seed)
    pvals = {n: e["p_value"] for n, e in bootstrap_result.evidence.items()}
    passed = set(n for n in bootstrap_result.selected if pvals[n] < alpha)
    keep = [n for n in boruta_result.selected if n in passed]
    keep.sort(key=lambda n: (pvals[n], train.feature_names.index(n)))
    evidence = {n: {**boruta_result.evidence.get(n, {}), "p_value": pvals.get(n)}
                for n in train.feature_names}
    return SelectionResult("boruta_bootstrap", keep, evidence)


GRID_COLUMNS = ["feature", "method", "selected", "importance", "p_value", "boruta_status", "hit_count"]


def write_selection_csv(results: dict, feature_names, path):
    """Long format: one row per (feature, method)."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(GRID_COLUMNS)
        for name in feature_names:
            for method in METHODS:
                if method not in results:
                    continue
                r = results[method]
                ev = r.evidence.get(name, {})
                bv = ev.get("boruta")
                w.writerow([name, method, "Y" if name in r.selected else "N",
                            _opt(ev.get("importance")), _opt(ev.get("p_value")),
                            bv.status if bv else "", bv.hit_count if bv else ""])


def write_grid_csv(results: dict, feature_names, path):
    """Wide Y/N grid, one column per method code."""
    methods = [m for m in METHODS if m in results]
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["feature"] + [METHOD_CODES[m] for m in methods])
        for name in feature_names:
            w.writerow([name] + ["Y" if name in results[m].selected else "N" for m in methods])


def read_selection_csv(path) -> dict:
    """Selected names per method from a long-format selection CSV."""
    out = {}
    with Path(path).open(newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            out.setdefault(row["method"], [])
            if row["selected"] == "Y":
                out[row["method"]].append(row["feature"])
    return out


def _opt(v):
    return "" if v is None else repr(float(v))
