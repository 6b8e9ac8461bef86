"""Tabular LIME: quantile-binned perturbations and a weighted ridge surrogate."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataset import Dataset


@dataclass
class LimeConfig:
    n_perturbations: int = 5000
    kernel_width: float | None = None   # None -> 0.75 * sqrt(n_features)
    n_bins: int = 4
    top_k: int = 15
    ridge_alpha: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n_perturbations < 100:
            raise ValueError("n_perturbations must be at least 100")
        if self.n_bins < 2:
            raise ValueError("n_bins must be at least 2")
        if self.kernel_width is not None and not self.kernel_width > 0:
            raise ValueError("kernel_width must be positive")

    def width(self, n_features: int) -> float:
        return self.kernel_width if self.kernel_width is not None else 0.75 * math.sqrt(n_features)


@dataclass(frozen=True)
class FeatureBins:
    """Interior edges of one feature; bin b is (edges[b-1], edges[b]]."""

    name: str
    edges: np.ndarray
    sorted_values: np.ndarray
    starts: np.ndarray      # bin b holds sorted_values[starts[b]:starts[b + 1]]
    constant: bool

    @property
    def n_bins(self) -> int:
        return self.edges.size + 1

    def bin_of(self, x) -> np.ndarray:
        return np.searchsorted(self.edges, x, side="left")

    def bounds(self, b: int) -> tuple[float, float]:
        lo = -math.inf if b == 0 else float(self.edges[b - 1])
        hi = math.inf if b == self.edges.size else float(self.edges[b])
        return lo, hi

    def condition(self, b: int) -> str:
        lo, hi = self.bounds(b)
        if self.constant:
            return f"{self.name} = {self.sorted_values[0]:.2f}"
        if b == 0:
            return f"{self.name} <= {hi:.2f}"
        if b == self.edges.size:
            return f"{self.name} > {lo:.2f}"
        return f"{lo:.2f} < {self.name} <= {hi:.2f}"


def _drop_empty_bins(values_sorted, edges):
    while edges.size:
        starts = np.concatenate([[0], np.searchsorted(values_sorted, edges, side="right"),
                                 [values_sorted.size]])
        counts = np.diff(starts)
        empty = np.flatnonzero(counts == 0)
        if not empty.size:
            break
        b = int(empty[0])
        edges = np.delete(edges, min(b, edges.size - 1))
    return edges


def quantile_discretizer(train_features, n_bins: int = 4, names=None) -> list[FeatureBins]:
    """Per-feature bins at the empirical quantiles; outer bins are unbounded.

    Duplicate edges are merged and edges that would leave a bin without any
    training value are dropped, so a constant column gets a single bin.
    """
    X = np.asarray(train_features, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    names = names or [f"x{j}" for j in range(X.shape[1])]
    qs = np.arange(1, n_bins) / n_bins
    out = []
    for j in range(X.shape[1]):
        v = np.sort(X[:, j])
        constant = bool(v[0] == v[-1])
        edges = np.array([]) if constant else np.unique(np.quantile(v, qs))
        edges = _drop_empty_bins(v, edges)
        starts = np.concatenate([[0], np.searchsorted(v, edges, side="right"), [v.size]])
        out.append(FeatureBins(names[j], edges, v, starts, constant))
    return out


@dataclass(frozen=True)
class ExplanationEntry:
    feature_name: str
    bin_index: int
    bin_low: float
    bin_high: float
    bin_condition: str
    weight: float


@dataclass(frozen=True, eq=False)
class Explanation:
    instance_id: object
    entries: list
    local_intercept: float
    surrogate_r2: float
    prediction: float
    bins: np.ndarray           # instance bin per feature
    coefficients: np.ndarray   # surrogate weight per feature (all features)

    def to_json(self) -> dict:
        return {
            "instance_id": _jsonable(self.instance_id),
            "prediction": self.prediction,
            "local_intercept": self.local_intercept,
            "surrogate_r2": self.surrogate_r2,
            "entries": [{"feature": e.feature_name, "bin": e.bin_index,
                         "bin_low": _jsonable(e.bin_low), "bin_high": _jsonable(e.bin_high),
                         "condition": e.bin_condition, "weight": e.weight} for e in self.entries],
        }


def _jsonable(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return v if isinstance(v, (int, str)) or v is None else str(v)


def weighted_ridge(Z, y, w, alpha):
    """Ridge with an unpenalized intercept. Returns (coef, intercept, weighted R^2)."""
    sw = w.sum()
    zm = (w @ Z) / sw
    ym = float(w @ y) / sw
    Zc = Z - zm
    yc = y - ym
    A = (Zc * w[:, None]).T @ Zc + alpha * np.eye(Z.shape[1])
    coef = np.linalg.solve(A, (Zc * w[:, None]).T @ yc)
    resid = yc - Zc @ coef
    sst = float(w @ (yc * yc))
    sse = float(w @ (resid * resid))
    # a target flat up to rounding is fully explained by the intercept
    if sst <= 1e-20 * sw * max(1.0, ym * ym):
        r2 = 1.0
    else:
        r2 = min(1.0, max(0.0, 1.0 - sse / sst))
    return coef, ym - float(zm @ coef), r2


def _predict(model, X):
    return np.asarray(model(X) if callable(model) and not hasattr(model, "predict_proba")
                      else model.predict_proba(X), dtype=np.float64)


def lime_explain(model, instance, background, cfg: LimeConfig | None = None,
                 instance_id=None, bins: list | None = None, seed=None) -> Explanation:
    """Explain ``model``'s positive-class probability at ``instance``.

    ``background`` is the training Dataset (or matrix) that defines the bins
    and the per-bin value pools. Sample 0 is the instance itself; the rest
    draw a bin uniformly per feature and a training value from that bin.
    """
    cfg = cfg or LimeConfig()
    if isinstance(background, Dataset):
        names = list(background.feature_names)
        B = background.features
    else:
        B = np.asarray(background, dtype=np.float64)
        names = [f"x{j}" for j in range(B.shape[1])]
    x = np.asarray(instance, dtype=np.float64).ravel()
    if x.size != B.shape[1]:
        raise ValueError(f"instance has {x.size} features, background has {B.shape[1]}")
    if not np.all(np.isfinite(x)):
        raise ValueError("instance contains non-finite values")
    bins = bins or quantile_discretizer(B, cfg.n_bins, names)
    rng = np.random.default_rng(cfg.seed if seed is None else seed)
    n, p = cfg.n_perturbations, x.size

    inst_bins = np.array([int(fb.bin_of(x[j])) for j, fb in enumerate(bins)])
    samples = np.empty((n, p))
    same = np.empty((n, p))
    for j, fb in enumerate(bins):
        b = rng.integers(0, fb.n_bins, size=n)
        lo = fb.starts[b]
        hi = fb.starts[b + 1]
        pick = lo + np.floor(rng.random(n) * (hi - lo)).astype(np.int64)
        samples[:, j] = fb.sorted_values[np.minimum(pick, fb.sorted_values.size - 1)]
        same[:, j] = (b == inst_bins[j])
    samples[0] = x
    same[0] = 1.0

    try:
        y = _predict(model, samples)
    except Exception as exc:
        raise RuntimeError(f"model query failed on perturbation batch: {exc}") from exc
    if y.shape[0] != n or not np.all(np.isfinite(y)):
        bad = np.flatnonzero(~np.isfinite(y))
        raise RuntimeError(f"model returned a bad value for perturbation {bad[:1].tolist()}")

    dist2 = (1.0 - same).sum(axis=1)
    width = cfg.width(p)
    kw = np.exp(-dist2 / (width * width))
    coef, intercept, r2 = weighted_ridge(same, y, kw, cfg.ridge_alpha)

    order = sorted(range(p), key=lambda j: (-abs(coef[j]), j))[: cfg.top_k]
    entries = []
    for j in order:
        b = int(inst_bins[j])
        lo, hi = bins[j].bounds(b)
        entries.append(ExplanationEntry(names[j], b, lo, hi, bins[j].condition(b), float(coef[j])))
    return Explanation(instance_id, entries, float(intercept), float(r2), float(y[0]),
                       inst_bins, coef)


@dataclass
class AggregateImportance:
    """Sum and count of surrogate weights per (feature, bin)."""

    feature_names: list
    bins: list
    weight_sum: dict = field(default_factory=dict)
    support: dict = field(default_factory=dict)
    n_instances: int = 0

    def add(self, exp: Explanation):
        for j, name in enumerate(self.feature_names):
            key = (name, int(exp.bins[j]))
            self.weight_sum[key] = self.weight_sum.get(key, 0.0) + float(exp.coefficients[j])
            self.support[key] = self.support.get(key, 0) + 1
        self.n_instances += 1

    def merge(self, other: "AggregateImportance") -> "AggregateImportance":
        out = AggregateImportance(self.feature_names, self.bins, dict(self.weight_sum),
                                  dict(self.support), self.n_instances + other.n_instances)
        for k, v in other.weight_sum.items():
            out.weight_sum[k] = out.weight_sum.get(k, 0.0) + v
            out.support[k] = out.support.get(k, 0) + other.support[k]
        return out

    def mean_weight(self, key) -> float:
        return self.weight_sum[key] / self.support[key]

    def rows(self) -> list[dict]:
        """All (feature, bin) cells, by descending |mean weight| then name and bin."""
        idx = {n: j for j, n in enumerate(self.feature_names)}
        out = []
        for key in self.support:
            name, b = key
            lo, hi = self.bins[idx[name]].bounds(b)
            out.append({"feature": name, "bin": b, "bin_low": lo, "bin_high": hi,
                        "condition": self.bins[idx[name]].condition(b),
                        "mean_weight": self.mean_weight(key), "support": self.support[key]})
        out.sort(key=lambda r: (-abs(r["mean_weight"]), r["feature"], r["bin"]))
        return out

    def top(self, k: int = 15) -> list[dict]:
        return self.rows()[:k]


def stratified_subsample(labels, fraction: float, seed) -> np.ndarray:
    """Row indices: floor(n_c * fraction + 0.5) per class (at least one), sorted."""
    if not 0.0 < fraction <= 1.0:
        raise ValueError("fraction must lie in (0, 1]")
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    picked = []
    for cls in (0, 1):
        idx = np.flatnonzero(labels == cls)
        if not idx.size:
            continue
        k = max(1, min(idx.size, int(math.floor(idx.size * fraction + 0.5))))
        picked.append(rng.permutation(idx)[:k])
    return np.sort(np.concatenate(picked)) if picked else np.zeros(0, dtype=np.int64)


def aggregate_explanations(model, test: Dataset, background: Dataset, fraction: float = 0.2,
                           cfg: LimeConfig | None = None, seed: int = 0):
    """Explain a stratified ``fraction`` of ``test`` and average weights per (feature, bin).

    Returns (AggregateImportance, list of Explanation).
    """
    cfg = cfg or LimeConfig()
    rows = stratified_subsample(test.labels, fraction, seed)
    bins = quantile_discretizer(background.features, cfg.n_bins, list(background.feature_names))
    agg = AggregateImportance(list(background.feature_names), bins)
    exps = []
    for r in rows:
        e = lime_explain(model, test.features[r], background, cfg, instance_id=test.row_ids[r],
                         bins=bins, seed=[int(cfg.seed), int(seed), int(r)])
        agg.add(e)
        exps.append(e)
    return agg, exps


AGGREGATE_COLUMNS = ["feature", "bin", "bin_low", "bin_high", "condition", "mean_weight", "support"]


def write_aggregate_csv(agg: AggregateImportance, path):
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(AGGREGATE_COLUMNS)
        for r in agg.rows():
            w.writerow([r["feature"], r["bin"], repr(r["bin_low"]), repr(r["bin_high"]),
                        r["condition"], repr(r["mean_weight"]), r["support"]])


def write_explanations_jsonl(exps, path):
    with Path(path).open("w", encoding="utf-8") as fh:
        for e in exps:
            fh.write(json.dumps(e.to_json(), sort_keys=True) + "\n")
