"""Per-feature screening: Welch t-tests and bootstrap difference of means."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import stats as sps

from .dataset import Dataset, fit_standardizer

DEFAULT_N_BOOT = 2000
DEFAULT_ALPHA = 0.05


@dataclass(frozen=True)
class TestResult:
    feature_name: str
    t_statistic: float
    p_value: float
    mean_diff: float

    __test__ = False


@dataclass(frozen=True)
class BootstrapResult:
    feature_name: str
    observed_diff: float
    p_value: float
    n_boot: int
    ci_low: float
    ci_high: float


@dataclass(frozen=True)
class FeatureRank:
    """One row of the ranked significance table."""

    feature_name: str
    welch: TestResult
    bootstrap: BootstrapResult
    significant: bool

    @property
    def log10_abs_diff(self) -> float:
        d = abs(self.bootstrap.observed_diff)
        return math.log10(d) if d > 0 else -math.inf


def welch_t_test(a, b, feature_name: str = "") -> TestResult:
    """Two-sided Welch test of mean(a) - mean(b) with Welch-Satterthwaite df."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.size < 2 or b.size < 2:
        raise ValueError("each sample needs at least two values")
    diff = a.mean() - b.mean()
    va = a.var(ddof=1) / a.size
    vb = b.var(ddof=1) / b.size
    se2 = va + vb
    if se2 == 0.0:
        if diff == 0.0:
            return TestResult(feature_name, 0.0, 1.0, 0.0)
        return TestResult(feature_name, math.copysign(math.inf, diff), 0.0, float(diff))
    t = diff / math.sqrt(se2)
    df = se2 ** 2 / (va ** 2 / (a.size - 1) + vb ** 2 / (b.size - 1))
    p = float(min(1.0, 2.0 * sps.t.sf(abs(t), df)))
    return TestResult(feature_name, float(t), p, float(diff))


def _group_means(x, n_boot, rng):
    idx = rng.integers(0, x.size, size=(n_boot, x.size))
    return x[idx].mean(axis=1)


def bootstrap_diff_of_means(a, b, n_boot: int = DEFAULT_N_BOOT, seed=0,
                            feature_name: str = "") -> BootstrapResult:
    """Bootstrap test of equal means and percentile CI for mean(a) - mean(b).

    Each group is resampled with replacement after being shifted to the
    pooled mean, so the replicate differences follow the null. The p-value is
    ``(1 + #{|diff*| >= |observed|}) / (n_boot + 1)``. The 95% interval comes
    from the same draws without the shift. ``seed`` may be an int or a
    sequence (used to give each feature its own stream).
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.size == 0 or b.size == 0:
        raise ValueError("empty sample")
    if n_boot < 100:
        raise ValueError("n_boot must be at least 100")
    rng = np.random.default_rng(seed)
    observed = float(a.mean() - b.mean())
    # resampling a - mean(a) + pooled gives mean(a*) - mean(a) + pooled; pooled cancels in the difference
    boot = _group_means(a, n_boot, rng) - _group_means(b, n_boot, rng)
    null = boot - observed
    hits = int(np.count_nonzero(np.abs(null) >= abs(observed) - 1e-12 * max(1.0, abs(observed))))
    p = (1 + hits) / (n_boot + 1)
    lo, hi = np.percentile(boot, [2.5, 97.5])
    return BootstrapResult(feature_name, observed, float(p), int(n_boot), float(lo), float(hi))


def feature_tests(d: Dataset, n_boot: int = DEFAULT_N_BOOT, seed: int = 0,
                  standardize: bool = False) -> tuple[list, list]:
    """Welch and bootstrap results for every column (sepsis minus healthy).

    Feature ``j`` draws from the RNG stream ``(seed, j)`` so results do not
    depend on evaluation order.
    """
    d.require_both_classes("feature testing")
    X = d.features
    if standardize:
        X = fit_standardizer(X).apply(X)
    pos = d.labels == 1
    welch, boot = [], []
    for j, name in enumerate(d.feature_names):
        a, b = X[pos, j], X[~pos, j]
        welch.append(welch_t_test(a, b, name))
        boot.append(bootstrap_diff_of_means(a, b, n_boot, seed=[int(seed), j], feature_name=name))
    return welch, boot


def rank_features(d: Dataset, n_boot: int = DEFAULT_N_BOOT, seed: int = 0,
                  alpha: float = DEFAULT_ALPHA) -> list[FeatureRank]:
    """All features, significant ones first by descending |standardized mean diff|.

    Non-significant features follow in ascending p-value order. Welch results
    are on raw features; bootstrap results on z-scored features.
    """
    pos = d.labels == 1
    welch = [welch_t_test(d.features[pos, j], d.features[~pos, j], name)
             for j, name in enumerate(d.feature_names)]
    _, boot = feature_tests(d, n_boot, seed, standardize=True)
    rows = [FeatureRank(w.feature_name, w, b, b.p_value < alpha) for w, b in zip(welch, boot)]
    sig = sorted((r for r in rows if r.significant),
                 key=lambda r: (-abs(r.bootstrap.observed_diff), r.feature_name))
    rest = sorted((r for r in rows if not r.significant),
                  key=lambda r: (r.bootstrap.p_value, r.feature_name))
    return sig + rest


RANK_COLUMNS = ["rank", "feature", "t", "t_p_value", "p", "mean_diff", "ci_low", "ci_high",
                "log10_abs_diff", "significant"]


def write_ranked_csv(ranked: list[FeatureRank], path):
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RANK_COLUMNS)
        for i, r in enumerate(ranked, 1):
            b = r.bootstrap
            w.writerow([i, r.feature_name, _fmt(r.welch.t_statistic), _fmt(r.welch.p_value),
                        _fmt(b.p_value), _fmt(b.observed_diff), _fmt(b.ci_low), _fmt(b.ci_high),
                        _fmt(r.log10_abs_diff), int(r.significant)])


def read_ranked_csv(path) -> list[dict]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def relative_histogram(d: Dataset, feature: str, n_bins: int = 30):
    """Shared bin edges and per-class counts / relative frequencies for one feature."""
    j = d.feature_names.index(feature)
    x = d.features[:, j]
    edges = np.histogram_bin_edges(x, bins=n_bins)
    out = {"edges": edges}
    for cls in (0, 1):
        counts, _ = np.histogram(x[d.labels == cls], bins=edges)
        out[f"count_{cls}"] = counts
        total = counts.sum()
        out[f"rel_{cls}"] = counts / total if total else counts.astype(float)
    return out


def _fmt(v) -> str:
    return repr(float(v))
