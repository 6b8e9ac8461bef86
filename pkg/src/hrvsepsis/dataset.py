"""Loading, validation, splitting, class weighting and standardization of HRV tables."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .catalog import HRV_FEATURES

DEFAULT_LABEL_COLUMN = "sepsis"
ID_COLUMN = "row_id"
_STD_EPS = 1e-12

_TRUE_LABELS = {"1", "1.0", "true", "yes", "sepsis"}
_FALSE_LABELS = {"0", "0.0", "false", "no", "non-sepsis"}


class DatasetError(ValueError):
    """Raised for malformed or degenerate datasets."""


@dataclass(frozen=True)
class FeatureCatalog:
    """Ordered (name, description) pairs defining the feature columns."""

    entries: tuple[tuple[str, str], ...]

    def __post_init__(self):
        names = [name for name, _ in self.entries]
        if len(set(names)) != len(names):
            raise DatasetError("feature catalog names must be unique")

    @classmethod
    def hrv(cls) -> "FeatureCatalog":
        return cls(tuple(HRV_FEATURES))

    @classmethod
    def from_names(cls, names: Sequence[str]) -> "FeatureCatalog":
        return cls(tuple((str(n), "") for n in names))

    @property
    def names(self) -> list[str]:
        return [name for name, _ in self.entries]

    def __len__(self):
        return len(self.entries)

    def index(self, name: str) -> int:
        return self.names.index(name)


@dataclass(frozen=True, eq=False)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    row_ids: np.ndarray
    feature_names: tuple[str, ...]
    informative: tuple[str, ...] = ()

    def __post_init__(self):
        X = np.ascontiguousarray(self.features, dtype=np.float64)
        y = np.asarray(self.labels).astype(np.int64)
        ids = np.asarray(self.row_ids)
        if X.ndim != 2:
            raise DatasetError("features must be a 2-D matrix")
        if not (X.shape[0] == y.shape[0] == ids.shape[0]):
            raise DatasetError(
                f"row count mismatch: features {X.shape[0]}, labels {y.shape[0]}, ids {ids.shape[0]}")
        if X.shape[1] != len(self.feature_names):
            raise DatasetError(
                f"{X.shape[1]} feature columns but {len(self.feature_names)} names")
        if not np.all(np.isfinite(X)):
            bad = int(np.argwhere(~np.isfinite(X))[0, 0])
            raise DatasetError(f"non-finite feature value in row {bad}")
        if y.size and not np.all((y == 0) | (y == 1)):
            raise DatasetError("labels must be 0 or 1")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "row_ids", ids)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))

    def __len__(self):
        return self.labels.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def n_positive(self) -> int:
        return int(self.labels.sum())

    @property
    def n_negative(self) -> int:
        return len(self) - self.n_positive

    def subset(self, rows) -> "Dataset":
        rows = np.asarray(rows)
        if rows.dtype != bool:
            rows = rows.astype(np.intp)
        return Dataset(self.features[rows], self.labels[rows], self.row_ids[rows],
                       self.feature_names, self.informative)

    def select_features(self, names: Sequence[str]) -> "Dataset":
        cols = [self.feature_names.index(n) for n in names]
        return Dataset(self.features[:, cols], self.labels, self.row_ids, tuple(names),
                       tuple(n for n in self.informative if n in names))

    def with_features(self, features: np.ndarray) -> "Dataset":
        return Dataset(features, self.labels, self.row_ids, self.feature_names, self.informative)

    def require_both_classes(self, what: str = "this operation"):
        if self.n_positive == 0 or self.n_negative == 0:
            raise DatasetError(f"{what} needs both classes present")


def _parse_label(raw: str, line: int) -> int:
    value = raw.strip().lower()
    if value in _TRUE_LABELS:
        return 1
    if value in _FALSE_LABELS:
        return 0
    raise DatasetError(f"unknown label value {raw!r} on line {line}")


def load_dataset(path, catalog: FeatureCatalog | None = None,
                 label_column: str = DEFAULT_LABEL_COLUMN, impute: bool = False) -> Dataset:
    """Read a CSV with a header row into a :class:`Dataset`.

    Columns are reordered to catalog order and extra columns are ignored. With
    ``impute=False`` any missing or non-numeric feature cell is an error naming
    the row; with ``impute=True`` such cells get the column median.
    """
    catalog = catalog or FeatureCatalog.hrv()
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DatasetError(f"{path}: missing header row") from None
        rows = list(reader)
    rows = [r for r in rows if any(cell.strip() for cell in r)]
    if not rows:
        raise DatasetError("empty dataset")

    missing = [n for n in catalog.names + [label_column] if n not in header]
    if missing:
        raise DatasetError(f"missing required column(s): {', '.join(missing)}")
    cols = [header.index(n) for n in catalog.names]
    label_idx = header.index(label_column)
    id_idx = header.index(ID_COLUMN) if ID_COLUMN in header else None

    X = np.empty((len(rows), len(cols)))
    labels = np.empty(len(rows), dtype=np.int64)
    holes = []
    for i, row in enumerate(rows):
        if len(row) != len(header):
            raise DatasetError(f"row {i} has {len(row)} cells, header has {len(header)}")
        labels[i] = _parse_label(row[label_idx], i + 2)
        for j, c in enumerate(cols):
            try:
                v = float(row[c])
            except ValueError:
                v = math.nan
            if not math.isfinite(v):
                if not impute:
                    raise DatasetError(
                        f"non-numeric or missing value {row[c]!r} in row {i}, column {catalog.names[j]}")
                holes.append((i, j))
            X[i, j] = v
    if holes:
        X[~np.isfinite(X)] = np.nan
        med = np.nanmedian(X, axis=0)
        for i, j in holes:
            if not math.isfinite(med[j]):
                raise DatasetError(f"column {catalog.names[j]} has no numeric values to impute from")
            X[i, j] = med[j]

    if id_idx is not None:
        raw_ids = [row[id_idx].strip() for row in rows]
        try:
            ids = np.array([int(r) for r in raw_ids], dtype=np.int64)
        except ValueError:
            ids = np.array(raw_ids, dtype=object)
    else:
        ids = np.arange(len(rows))

    informative = ()
    sidecar = informative_sidecar(path)
    if sidecar.exists():
        informative = tuple(json.loads(sidecar.read_text())["informative"])
    return Dataset(X, labels, ids, tuple(catalog.names), informative)


def informative_sidecar(path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".informative.json")


def write_dataset(d: Dataset, path, label_column: str = DEFAULT_LABEL_COLUMN):
    """Write ``d`` as CSV. Floats use ``repr`` so a reload is bit-exact."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([ID_COLUMN, *d.feature_names, label_column])
        for rid, x, y in zip(d.row_ids, d.features, d.labels):
            w.writerow([rid, *(repr(float(v)) for v in x), int(y)])
    if d.informative:
        informative_sidecar(path).write_text(
            json.dumps({"informative": list(d.informative)}, indent=2) + "\n")


def stratified_split(d: Dataset, test_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Per-class shuffled split; each class sends floor(n_c * fraction + 0.5) rows to test."""
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    test_rows = []
    for cls in (0, 1):
        idx = np.flatnonzero(d.labels == cls)
        n_test = int(math.floor(idx.size * test_fraction + 0.5))
        if idx.size < 2 or n_test < 1 or n_test >= idx.size:
            raise DatasetError(
                f"class {cls} has {idx.size} rows, too few to populate both partitions")
        test_rows.append(rng.permutation(idx)[:n_test])
    test_mask = np.zeros(len(d), dtype=bool)
    test_mask[np.concatenate(test_rows)] = True
    return d.subset(np.flatnonzero(~test_mask)), d.subset(np.flatnonzero(test_mask))


@dataclass(frozen=True)
class ClassWeights:
    weight_negative: float
    weight_positive: float

    def __post_init__(self):
        for w in (self.weight_negative, self.weight_positive):
            if not (math.isfinite(w) and w > 0):
                raise ValueError("class weights must be positive and finite")

    @classmethod
    def uniform(cls) -> "ClassWeights":
        return cls(1.0, 1.0)

    def per_row(self, labels) -> np.ndarray:
        labels = np.asarray(labels)
        return np.where(labels == 1, self.weight_positive, self.weight_negative).astype(np.float64)


def balanced_class_weights(labels) -> ClassWeights:
    labels = np.asarray(labels)
    n = labels.size
    n_pos = int(np.count_nonzero(labels == 1))
    n_neg = n - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DatasetError("balanced class weights need both classes present")
    return ClassWeights(n / (2.0 * n_neg), n / (2.0 * n_pos))


@dataclass(frozen=True, eq=False)
class StandardizationParams:
    mean: np.ndarray
    std: np.ndarray

    @property
    def divisor(self) -> np.ndarray:
        return np.where(self.std < _STD_EPS, 1.0, self.std)

    def apply(self, features) -> np.ndarray:
        return (np.asarray(features, dtype=np.float64) - self.mean) / self.divisor

    def invert(self, z) -> np.ndarray:
        return np.asarray(z, dtype=np.float64) * self.divisor + self.mean

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, d) -> "StandardizationParams":
        return cls(np.asarray(d["mean"], dtype=np.float64), np.asarray(d["std"], dtype=np.float64))


def fit_standardizer(train_features) -> StandardizationParams:
    X = np.asarray(train_features, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    return StandardizationParams(X.mean(axis=0), X.std(axis=0))


def apply_standardizer(params: StandardizationParams, features) -> np.ndarray:
    return params.apply(features)


def synth_dataset(n_rows: int, n_informative: int, n_noise: int, class_balance: float = 0.5,
                  seed: int = 0, shift: float = 2.0,
                  feature_names: Sequence[str] | None = None) -> Dataset:
    """Gaussian fixture: informative columns shift by ``shift`` for positives.

    Positives are drawn independently with probability ``class_balance``. When
    ``feature_names`` is given its length must equal ``n_informative + n_noise``
    and informative columns are spread evenly over it; otherwise columns are
    named ``inf_k`` / ``noise_k`` with informative ones first.
    """
    p = n_informative + n_noise
    if p < 1:
        raise ValueError("need at least one column")
    rng = np.random.default_rng(seed)
    y = (rng.random(n_rows) < class_balance).astype(np.int64)
    X = rng.standard_normal((n_rows, p))
    if feature_names is None:
        names = [f"inf_{k}" for k in range(n_informative)] + [f"noise_{k}" for k in range(n_noise)]
        inf_cols = list(range(n_informative))
    else:
        names = list(feature_names)
        if len(names) != p:
            raise ValueError(f"{len(names)} names for {p} columns")
        inf_cols = sorted({int(k * p / n_informative) for k in range(n_informative)}) if n_informative else []
    X[:, inf_cols] += shift * y[:, None]
    return Dataset(X, y, np.arange(n_rows), tuple(names), tuple(names[c] for c in inf_cols))
