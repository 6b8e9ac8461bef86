"""End-to-end stages. Each one reads its inputs from the run directory and writes CSV/SVG outputs.

Run directory layout (relative to ``output_dir``)::

    split.csv                        row_id -> fit / tune / test
    stats/ranked_features.csv        Welch + bootstrap table, every feature
    stats/top_features.svg           top significant standardized mean differences
    stats/hist_<feature>.csv/.svg    per-class relative histograms
    select/selection.csv             long form (feature, method, evidence)
    select/grid.csv                  Y/N grid, one column per method
    models/*.npz                     fitted models (see hrvsepsis.persist)
    train/thresholds.csv             tuned threshold per (model, feature set, beta)
    train/tuning_beta_<b>.csv        tuning-fold metrics, appendix layout
    train/learning_curve.csv/.svg    network curves
    ensemble/designation.csv         which runs act as HPM and HRM
    ensemble/meta_scatter_tune.csv   meta-training rows (p_hpm, p_hrm, label)
    explain/lime_<model>_*.csv/.jsonl/.svg
    report/appendix_beta_<b>.csv     test metrics per (model, feature set)
    report/summary.csv               five-row model comparison
    report/confusion_matrix.csv, report/manual_ensemble.csv, report/meta_scatter_test.*
    manifest.json                    written last

The test split is read only by ``report`` (final evaluation) and ``explain``;
the manifest records each access.
"""

from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .config import FEATURE_SETS, RunConfig
from .dataset import Dataset, fit_standardizer, load_dataset, stratified_split, synth_dataset, write_dataset
from .catalog import HRV_FEATURES
from .ensemble import build_meta_features, evaluate_manual, train_logistic_meta, train_svm_meta
from .explain import aggregate_explanations, write_aggregate_csv, write_explanations_jsonl
from .learners import BACKEND
from .learners.forest import fit_forest
from .learners.gbm import fit_gbm
from .metrics import confusion, evaluate, optimize_threshold, prf, fbeta
from .nnet import train_mlp
from .persist import FeatureSubsetModel, StandardizedModel, load_model, save_model
from .plots import bar_svg, histogram_svg, line_svg, scatter_svg
from .select import (boruta, boruta_select, bootstrap_select, hybrid_boruta_bootstrap,
                     model_based_select, read_selection_csv, write_grid_csv, write_selection_csv)
from .stats import rank_features, relative_histogram, write_ranked_csv

STAGES = ("stats", "select", "train", "ensemble", "explain", "report")
FAMILIES = ("gbm", "forest")
FAMILY_LABELS = {"gbm": "XGBoost", "forest": "Random Forest"}
TABLE_COLUMNS = ["model", "feature_set", "n_features", "threshold", "f1", "precision", "recall"]


class PrerequisiteError(RuntimeError):
    pass


def _r(v) -> str:
    return "" if v is None or (isinstance(v, float) and math.isnan(v)) else repr(float(v))


def _beta_tag(b: float) -> str:
    return f"{float(b):g}"


def _write_csv(path: Path, header, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return path


def _read_csv(path: Path) -> list[dict]:
    with path.open(newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


@dataclass(frozen=True)
class Splits:
    train: Dataset      # everything but test
    fit: Dataset        # train minus the tuning fold; base models learn here
    tune: Dataset       # thresholds and meta-learners
    nn_train: Dataset   # train minus the network's validation fold
    nn_val: Dataset


@dataclass
class Run:
    cfg: RunConfig
    stages: dict = field(default_factory=dict)
    _data: Dataset | None = None
    _splits: Splits | None = None
    _test: Dataset | None = None

    def __post_init__(self):
        self.out = self.cfg.output_dir
        old = self.out / "manifest.json"
        if old.exists():
            try:
                prev = json.loads(old.read_text(encoding="utf-8"))
            except ValueError:
                prev = {}
            if prev.get("config_hash") == self.cfg.hash():
                self.stages = prev.get("stages", {})

    # ------------------------------------------------------------ data access

    def dataset(self) -> Dataset:
        if self._data is None:
            c = self.cfg["data"]
            self._data = load_dataset(self.cfg.data_path, label_column=c["label_column"],
                                      impute=bool(c["impute"]))
        return self._data

    def splits(self) -> Splits:
        if self._splits is None:
            s, seed = self.cfg["split"], self.cfg.seed
            train, test = stratified_split(self.dataset(), float(s["test_fraction"]), seed)
            fit, tune = stratified_split(train, float(s["tune_fraction"]), [seed, 11])
            nn_train, nn_val = stratified_split(train, float(s["val_fraction"]), [seed, 12])
            self._test = test
            self._splits = Splits(train, fit, tune, nn_train, nn_val)
            self._write_split(fit, tune, test)
        return self._splits

    def test_split(self, stage: str) -> Dataset:
        """The held-out rows; every call is logged against ``stage``."""
        self.splits()
        self.stages.setdefault(stage, {})["reads_test"] = True
        return self._test

    def _write_split(self, fit, tune, test):
        rows = [(int(r), "fit") for r in fit.row_ids] + [(int(r), "tune") for r in tune.row_ids] \
            + [(int(r), "test") for r in test.row_ids]
        rows.sort()
        self.out.mkdir(parents=True, exist_ok=True)
        _write_csv(self.out / "split.csv", ["row_id", "partition"], rows)

    def columns(self, names) -> list[int]:
        all_names = self.dataset().feature_names
        return [all_names.index(n) for n in names]

    # ------------------------------------------------------------ bookkeeping

    def path(self, rel: str) -> Path:
        p = self.out / rel
        p.parent.mkdir(parents=True, exist_ok=True)
        return p

    def require(self, rel: str, command: str):
        if not (self.out / rel).exists():
            raise PrerequisiteError(f"{rel} not found in {self.out}; run 'hrvsepsis {command}' first")

    def record(self, stage: str, seconds: float, artifacts: list[Path]):
        entry = self.stages.setdefault(stage, {})
        entry["seconds"] = round(seconds, 3)
        entry["artifacts"] = sorted(str(p.relative_to(self.out)) for p in artifacts)
        entry.setdefault("reads_test", False)

    def write_manifest(self) -> Path:
        artifacts = sorted({a for s in self.stages.values() for a in s.get("artifacts", [])})
        missing = [a for a in artifacts if not (self.out / a).exists()]
        if missing:
            raise FileNotFoundError(f"manifest lists missing artifacts: {', '.join(missing)}")
        manifest = {
            "library_version": __version__,
            "kernel_backend": BACKEND,
            "config_hash": self.cfg.hash(),
            "config_source": self.cfg.source,
            "seed": self.cfg.seed,
            "stages": {k: self.stages[k] for k in sorted(self.stages)},
            "artifacts": artifacts,
            "test_access": sorted(k for k, s in self.stages.items() if s.get("reads_test")),
        }
        p = self.path("manifest.json")
        p.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return p


# ---------------------------------------------------------------- stages

def cmd_stats(run: Run) -> list[Path]:
    cfg = run.cfg["stats"]
    train = run.splits().train
    ranked = rank_features(train, int(cfg["n_boot"]), run.cfg.seed, float(cfg["alpha"]))
    out = [run.path("stats/ranked_features.csv")]
    write_ranked_csv(ranked, out[0])
    sig = [r for r in ranked if r.significant][: int(cfg["top_bars"])]
    out.append(bar_svg([r.feature_name for r in sig], [r.bootstrap.observed_diff for r in sig],
                       f"Top {len(sig)} significant features", "standardized mean difference (sepsis - no sepsis)",
                       run.path("stats/top_features.svg")))
    names = list(cfg["histogram_features"]) or [r.feature_name for r in ranked[: int(cfg["n_histograms"])]]
    for name in names:
        if name not in train.feature_names:
            raise ValueError(f"stats.histogram_features: unknown feature '{name}'")
        h = relative_histogram(train, name, int(cfg["n_bins"]))
        e = h["edges"]
        rows = [(_r(e[k]), _r(e[k + 1]), int(h["count_0"][k]), int(h["count_1"][k]),
                 _r(h["rel_0"][k]), _r(h["rel_1"][k])) for k in range(e.size - 1)]
        safe = name.replace("/", "_")
        out.append(_write_csv(run.path(f"stats/hist_{safe}.csv"),
                              ["bin_low", "bin_high", "count_0", "count_1", "rel_0", "rel_1"], rows))
        out.append(histogram_svg(e, {"no sepsis": h["rel_0"], "sepsis": h["rel_1"]}, name, name,
                                 run.path(f"stats/hist_{safe}.svg")))
    return out


def cmd_select(run: Run) -> list[Path]:
    cfg = run.cfg["select"]
    seed = run.cfg.seed
    train = run.splits().train
    results = {}
    stability = int(cfg["stability_seeds"])
    results["xgboost"] = model_based_select(train, run.cfg.selection_gbm(), cfg["rule"], stability)
    results["randomforest"] = model_based_select(train, run.cfg.selection_forest(), cfg["rule"], stability)
    b = cfg["boruta"]
    verdicts = boruta(train, int(b["n_trials"]), int(b["max_depth"]), float(b["alpha"]), seed,
                      int(b["n_trees"]))
    results["boruta"] = boruta_select(train, verdicts)
    bs = cfg["bootstrap"]
    results["bootstrap"] = bootstrap_select(train, float(bs["alpha"]), int(bs["n_boot"]), seed)
    results["boruta_bootstrap"] = hybrid_boruta_bootstrap(
        train, results["boruta"], float(bs["alpha"]), int(bs["n_boot"]), seed, results["bootstrap"])
    names = train.feature_names
    p1, p2 = run.path("select/selection.csv"), run.path("select/grid.csv")
    write_selection_csv(results, names, p1)
    write_grid_csv(results, names, p2)
    flags = [(m, k, _r(v) if isinstance(v, float) else str(v))
             for m, r in results.items() for k, v in sorted(r.flags.items())]
    p3 = _write_csv(run.path("select/flags.csv"), ["method", "flag", "value"], flags)
    return [p1, p2, p3]


def _feature_sets(run: Run) -> dict:
    run.require("select/selection.csv", "select")
    sel = read_selection_csv(run.out / "select/selection.csv")
    # selection.csv lists features in catalog order; keep that order for model inputs
    return {fs: list(sel.get(fs, [])) for fs in FEATURE_SETS}


def _tune_rows(probs, labels, betas, family, fs, n_feat):
    rows = []
    for beta in betas:
        tc = optimize_threshold(probs, labels, beta)
        pred = tc.labels_from(probs)
        r = prf(confusion(labels, pred))
        rows.append({"model": family, "feature_set": fs, "n_features": n_feat, "beta": beta,
                     "threshold": tc.threshold, "f1": r.f1, "precision": r.precision,
                     "recall": r.recall, "score": fbeta(r.precision, r.recall, beta)})
    return rows


THRESHOLD_COLUMNS = ["model", "feature_set", "n_features", "beta", "threshold", "f1", "precision",
                     "recall", "score"]


def cmd_train(run: Run) -> list[Path]:
    sets = _feature_sets(run)
    sp = run.splits()
    betas = [float(b) for b in run.cfg["metrics"]["betas"]]
    out, rows = [], []
    for family in FAMILIES:
        for fs in run.cfg["learners"]["feature_sets"]:
            names = sets[fs]
            if not names:
                rows += [{"model": family, "feature_set": fs, "n_features": 0, "beta": b,
                          "threshold": None, "f1": None, "precision": None, "recall": None,
                          "score": None} for b in betas]
                continue
            cols = run.columns(names)
            X = sp.fit.features[:, cols]
            if family == "gbm":
                model = fit_gbm(X, sp.fit.labels, run.cfg.gbm_config())
            else:
                model = fit_forest(X, sp.fit.labels, run.cfg.forest_config())
            wrapped = FeatureSubsetModel(model, tuple(cols), tuple(names))
            out.append(save_model(wrapped, run.path(f"models/{family}_{fs}.npz")))
            probs = wrapped.predict_proba(sp.tune.features)
            rows += _tune_rows(probs, sp.tune.labels, betas, family, fs, len(names))
    out.append(_write_csv(run.path("train/thresholds.csv"), THRESHOLD_COLUMNS,
                          [[r[c] if c in ("model", "feature_set", "n_features") else _r(r[c])
                            for c in THRESHOLD_COLUMNS] for r in rows]))
    for beta in betas:
        table = [[FAMILY_LABELS[r["model"]], r["feature_set"], r["n_features"], _r(r["threshold"]),
                  _r(r["f1"]), _r(r["precision"]), _r(r["recall"])] for r in rows if r["beta"] == beta]
        out.append(_write_csv(run.path(f"train/tuning_beta_{_beta_tag(beta)}.csv"), TABLE_COLUMNS, table))

    base_cfg, _ = run.cfg.baseline_config()
    baseline = fit_gbm(sp.fit.features, sp.fit.labels, base_cfg)
    out.append(save_model(baseline, run.path("models/baseline.npz")))

    out += _train_network(run, sets)
    return out


def _nn_columns(run: Run, sets: dict) -> list[str]:
    fs = run.cfg["nnet"]["feature_set"]
    names = list(run.dataset().feature_names) if fs == "all" else sets[fs]
    if not names:
        raise ValueError(f"nnet.feature_set '{fs}' selected no features")
    return names


def _train_network(run: Run, sets: dict) -> list[Path]:
    sp = run.splits()
    names = _nn_columns(run, sets)
    cols = run.columns(names)
    tr = sp.nn_train.select_features(names)
    va = sp.nn_val.select_features(names)
    params = fit_standardizer(tr.features)
    model, curve = train_mlp(tr.with_features(params.apply(tr.features)),
                             va.with_features(params.apply(va.features)), run.cfg.mlp_config())
    wrapped = FeatureSubsetModel(StandardizedModel(model, params), tuple(cols), tuple(names))
    out = [save_model(wrapped, run.path("models/nnet.npz"))]
    out.append(_write_csv(run.path("train/learning_curve.csv"),
                          ["epoch", "train_loss", "val_loss", "train_f1", "val_f1"],
                          [[e, _r(a), _r(b), _r(c), _r(d)] for e, a, b, c, d in curve.rows()]))
    out.append(line_svg(curve.epoch, {"train loss": curve.train_loss, "validation loss": curve.val_loss},
                        "Network loss", "epoch", "weighted cross-entropy",
                        run.path("train/learning_curve_loss.svg")))
    out.append(line_svg(curve.epoch, {"train F1": curve.train_f1, "validation F1": curve.val_f1},
                        "Network F1", "epoch", "F1", run.path("train/learning_curve_f1.svg")))
    return out


def _thresholds(run: Run) -> list[dict]:
    run.require("train/thresholds.csv", "train")
    rows = _read_csv(run.out / "train/thresholds.csv")
    for r in rows:
        for k in ("beta", "threshold", "f1", "precision", "recall", "score"):
            r[k] = float(r[k]) if r[k] != "" else None
        r["n_features"] = int(r["n_features"])
    return rows


def designate(rows: list[dict], hpm_beta: float, hrm_beta: float) -> tuple[dict, dict]:
    """Best tuning-fold F-beta run at each beta; earlier table rows win ties."""
    def best(beta):
        cands = [r for r in rows if r["beta"] == beta and r["score"] is not None]
        if not cands:
            raise ValueError(f"no trained model at beta {beta:g}")
        return max(cands, key=lambda r: r["score"])   # max keeps the first maximum
    return best(hpm_beta), best(hrm_beta)


def _load_role(run: Run, row: dict):
    path = run.out / f"models/{row['model']}_{row['feature_set']}.npz"
    if not path.exists():
        raise PrerequisiteError(f"{path} not found; run 'hrvsepsis train' first")
    return load_model(path)


def cmd_ensemble(run: Run) -> list[Path]:
    m = run.cfg["metrics"]
    hpm_row, hrm_row = designate(_thresholds(run), float(m["hpm_beta"]), float(m["hrm_beta"]))
    sp = run.splits()
    if set(sp.fit.row_ids.tolist()) & set(sp.tune.row_ids.tolist()):
        raise AssertionError("meta-training rows overlap base-model training rows")
    hpm, hrm = _load_role(run, hpm_row), _load_role(run, hrm_row)
    meta = build_meta_features(hpm, hrm, sp.tune)
    lc = run.cfg["ensemble"]["logistic"]
    logistic = train_logistic_meta(meta, sp.tune.labels, float(lc["C"]), float(lc["tol"]), int(lc["max_iter"]))
    svm = train_svm_meta(meta, sp.tune.labels, run.cfg.svm_config())
    out = [save_model(StandardizedModel(logistic, meta.params), run.path("models/meta_logistic.npz")),
           save_model(StandardizedModel(svm, meta.params), run.path("models/meta_svm.npz"))]
    out.append(_write_csv(run.path("ensemble/designation.csv"),
                          ["role", "model", "feature_set", "beta", "threshold", "tune_score"],
                          [[role, r["model"], r["feature_set"], _r(r["beta"]), _r(r["threshold"]), _r(r["score"])]
                           for role, r in (("HPM", hpm_row), ("HRM", hrm_row))]))
    out += _scatter(run, meta.raw, sp.tune, "ensemble/meta_scatter_tune", "tuning fold")
    return out


def _scatter(run, raw, rows: Dataset, stem, what) -> list[Path]:
    data = [[int(i), _r(a), _r(b), int(y)] for i, (a, b), y in zip(rows.row_ids, raw, rows.labels)]
    return [_write_csv(run.path(stem + ".csv"), ["row_id", "p_hpm", "p_hrm", "label"], data),
            scatter_svg(raw[:, 0], raw[:, 1], rows.labels, f"HPM vs HRM probabilities ({what})",
                        "HPM probability", "HRM probability", run.path(stem + ".svg"),
                        ("no sepsis", "sepsis"))]


def _explain_gbm_row(run: Run, rows: list[dict]) -> dict:
    fs = run.cfg["explain"]["gbm_feature_set"]
    cands = [r for r in rows if r["model"] == "gbm" and r["beta"] == 1.0 and r["score"] is not None]
    if fs is not None:
        cands = [r for r in cands if r["feature_set"] == fs]
    if not cands:
        cands = [r for r in rows if r["model"] == "gbm" and r["score"] is not None
                 and (fs is None or r["feature_set"] == fs)]
    if not cands:
        raise ValueError("no trained boosted model to explain")
    return max(cands, key=lambda r: r["f1"])


def cmd_explain(run: Run) -> list[Path]:
    rows = _thresholds(run)
    run.require("models/nnet.npz", "train")
    sp = run.splits()
    test = run.test_split("explain")
    e = run.cfg["explain"]
    lime = run.cfg.lime_config()
    out = []
    targets = []
    g = _explain_gbm_row(run, rows)
    gm = _load_role(run, g)
    targets.append(("gbm", gm.model, list(gm.feature_names)))
    nn = load_model(run.out / "models/nnet.npz")
    targets.append(("nnet", nn.model, list(nn.feature_names)))
    for tag, model, names in targets:
        agg, exps = aggregate_explanations(model, test.select_features(names),
                                           sp.fit.select_features(names) if tag == "gbm"
                                           else sp.nn_train.select_features(names),
                                           float(e["fraction"]), lime, run.cfg.seed)
        p = run.path(f"explain/lime_{tag}_aggregate.csv")
        write_aggregate_csv(agg, p)
        q = run.path(f"explain/lime_{tag}_explanations.jsonl")
        write_explanations_jsonl(exps, q)
        top = agg.top(lime.top_k)
        out += [p, q, bar_svg([r["condition"] for r in top], [r["mean_weight"] for r in top],
                              f"LIME mean weights ({tag})", "mean local weight",
                              run.path(f"explain/lime_{tag}_top.svg"))]
    out.append(_write_csv(run.path("explain/explained_models.csv"), ["tag", "model", "feature_set"],
                          [["gbm", g["model"], g["feature_set"]],
                           ["nnet", "mlp", run.cfg["nnet"]["feature_set"]]]))
    return out


def cmd_report(run: Run) -> list[Path]:
    rows = _thresholds(run)
    for rel in ("models/meta_logistic.npz", "models/meta_svm.npz", "ensemble/designation.csv"):
        run.require(rel, "ensemble")
    run.require("models/nnet.npz", "train")
    run.require("models/baseline.npz", "train")
    test = run.test_split("report")
    X, y = test.features, test.labels
    betas = [float(b) for b in run.cfg["metrics"]["betas"]]
    out = []

    probs_cache = {}

    def probs_of(r):
        key = (r["model"], r["feature_set"])
        if key not in probs_cache:
            probs_cache[key] = _load_role(run, r).predict_proba(X)
        return probs_cache[key]

    test_rows = {}
    for beta in betas:
        table = []
        for r in (r for r in rows if r["beta"] == beta):
            if r["threshold"] is None:
                table.append([FAMILY_LABELS[r["model"]], r["feature_set"], 0, "", "", "", ""])
                continue
            pred = (probs_of(r) >= r["threshold"]).astype(np.int64)
            m = evaluate(y, pred)
            test_rows[(r["model"], r["feature_set"], beta)] = (m, pred)
            table.append([FAMILY_LABELS[r["model"]], r["feature_set"], r["n_features"], _r(r["threshold"]),
                          _r(m["f1"]), _r(m["precision"]), _r(m["recall"])])
        out.append(_write_csv(run.path(f"report/appendix_beta_{_beta_tag(beta)}.csv"), TABLE_COLUMNS, table))

    summary = []
    _, base_thr = run.cfg.baseline_config()
    base_pred = (load_model(run.out / "models/baseline.npz").predict_proba(X) >= base_thr).astype(np.int64)
    summary.append(("Baseline XGBoost", "all", evaluate(y, base_pred)))

    des = {r["role"]: r for r in _read_csv(run.out / "ensemble/designation.csv")}
    hpm_row = next(r for r in rows if r["model"] == des["HPM"]["model"]
                   and r["feature_set"] == des["HPM"]["feature_set"] and r["beta"] == float(des["HPM"]["beta"]))
    hrm_row = next(r for r in rows if r["model"] == des["HRM"]["model"]
                   and r["feature_set"] == des["HRM"]["feature_set"] and r["beta"] == float(des["HRM"]["beta"]))
    raw = np.column_stack([probs_of(hpm_row), probs_of(hrm_row)])
    pair = f"{hpm_row['model']}_{hpm_row['feature_set']}+{hrm_row['model']}_{hrm_row['feature_set']}"
    for label, rel in (("Ensemble: Logistic Regression", "models/meta_logistic.npz"),
                       ("Ensemble: SVM", "models/meta_svm.npz")):
        meta = load_model(run.out / rel)
        pred = meta.model.predict(meta.params.apply(raw))
        summary.append((label, pair, evaluate(y, pred)))

    one = [k for k in test_rows if k[2] == 1.0] or list(test_rows)
    best = max(one, key=lambda k: test_rows[k][0]["f1"])
    summary.append((f"Best ML Model ({FAMILY_LABELS[best[0]]})", best[1], test_rows[best][0]))

    nn = load_model(run.out / "models/nnet.npz")
    nn_thr = float(run.cfg["nnet"]["threshold"])
    nn_pred = (nn.predict_proba(X) >= nn_thr).astype(np.int64)
    summary.append(("Neural Network", run.cfg["nnet"]["feature_set"], evaluate(y, nn_pred)))

    out.append(_write_csv(run.path("report/summary.csv"),
                          ["model", "feature_set", "f1", "precision", "recall", "accuracy"],
                          [[name, fs, _r(m["f1"]), _r(m["precision"]), _r(m["recall"]), _r(m["accuracy"])]
                           for name, fs, m in summary]))
    out.append(_write_csv(run.path("report/confusion_matrix.csv"), ["model", "tn", "fp", "fn", "tp"],
                          [[name, m["tn"], m["fp"], m["fn"], m["tp"]] for name, _, m in summary]))

    hpm_lab = (raw[:, 0] >= hpm_row["threshold"]).astype(np.int64)
    hrm_lab = (raw[:, 1] >= hrm_row["threshold"]).astype(np.int64)
    man = evaluate_manual(y, hpm_lab, hrm_lab)
    mrows = []
    for view in ("all_rows", "agreed"):
        m = man[view]
        mrows.append([view, m["tn"] + m["fp"] + m["fn"] + m["tp"], _r(man["disagreement_rate"]), _r(m["f1"]),
                      _r(m["precision"]), _r(m["recall"]), _r(m["accuracy"])])
    out.append(_write_csv(run.path("report/manual_ensemble.csv"),
                          ["view", "n_rows", "disagreement_rate", "f1", "precision", "recall", "accuracy"],
                          mrows))
    out += _scatter(run, raw, test, "report/meta_scatter_test", "test split")
    return out


COMMANDS = {"stats": cmd_stats, "select": cmd_select, "train": cmd_train,
            "ensemble": cmd_ensemble, "explain": cmd_explain, "report": cmd_report}
PREREQS = {"stats": (), "select": (), "train": ("select",), "ensemble": ("train",),
           "explain": ("train",), "report": ("ensemble",)}
# a stage counts as done once its first listed artifact exists
MARKERS = {"stats": "stats/ranked_features.csv", "select": "select/selection.csv",
           "train": "models/nnet.npz", "ensemble": "ensemble/designation.csv",
           "explain": "explain/explained_models.csv", "report": "report/summary.csv"}


def run_stage(run: Run, name: str, with_prereqs: bool = False) -> list[Path]:
    if with_prereqs:
        for dep in PREREQS[name]:
            if not (run.out / MARKERS[dep]).exists():
                run_stage(run, dep, True)
    t0 = time.perf_counter()
    run.stages.pop(name, None)
    arts = COMMANDS[name](run)
    run.record(name, time.perf_counter() - t0, [Path(a) for a in arts] + [run.out / "split.csv"])
    return arts


def run_all(run: Run) -> None:
    for name in STAGES:
        run_stage(run, name)


def synth_hrv_dataset(n_rows: int, n_informative: int, class_balance: float, shift: float,
                      seed: int) -> Dataset:
    """Synthetic fixture with the 57 HRV column names; informative columns are spread out."""
    names = [n for n, _ in HRV_FEATURES]
    return synth_dataset(n_rows, n_informative, len(names) - n_informative, class_balance, seed,
                         shift, names)


def cmd_synth(cfg: RunConfig, path: Path) -> Path:
    s = cfg["synth"]
    d = synth_hrv_dataset(int(s["n_rows"]), int(s["n_informative"]), float(s["class_balance"]),
                          float(s["shift"]), cfg.seed)
    path.parent.mkdir(parents=True, exist_ok=True)
    write_dataset(d, path, cfg["data"]["label_column"])
    return path
