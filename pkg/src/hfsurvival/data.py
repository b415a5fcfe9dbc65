"""Heart-failure clinical-records table: loading, validation, standardization,
summary statistics, and stratified splitting.

The expected CSV layout is the UCI distribution: 12 feature columns plus the
binary DEATH_EVENT target, comma separated, header row included.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyInputError, ParseError, SchemaError, StratificationError

CONTINUOUS = "continuous"
BOOLEAN = "boolean"

TARGET_COLUMN = "DEATH_EVENT"


@dataclass(frozen=True)
class FeatureSpec:
    name: str
    kind: str  # CONTINUOUS or BOOLEAN
    valid_range: tuple[float, float]  # inclusive
    unit: str


# Ranges are the observed extrema of the UCI file as distributed, so the
# pristine dataset validates clean. Note serum_sodium: the file contains one
# record at 113 mEq/L.
TABLE_SCHEMA: tuple[FeatureSpec, ...] = (
    FeatureSpec("age", CONTINUOUS, (40.0, 95.0), "years"),
    FeatureSpec("anaemia", BOOLEAN, (0.0, 1.0), "boolean"),
    FeatureSpec("creatinine_phosphokinase", CONTINUOUS, (23.0, 7861.0), "mcg/L"),
    FeatureSpec("diabetes", BOOLEAN, (0.0, 1.0), "boolean"),
    FeatureSpec("ejection_fraction", CONTINUOUS, (14.0, 80.0), "percent"),
    FeatureSpec("high_blood_pressure", BOOLEAN, (0.0, 1.0), "boolean"),
    FeatureSpec("platelets", CONTINUOUS, (25100.0, 850000.0), "kiloplatelets/mL"),
    FeatureSpec("serum_creatinine", CONTINUOUS, (0.5, 9.4), "mg/dL"),
    FeatureSpec("serum_sodium", CONTINUOUS, (113.0, 148.0), "mEq/L"),
    FeatureSpec("sex", BOOLEAN, (0.0, 1.0), "boolean"),
    FeatureSpec("smoking", BOOLEAN, (0.0, 1.0), "boolean"),
    FeatureSpec("time", CONTINUOUS, (4.0, 285.0), "days"),
    FeatureSpec(TARGET_COLUMN, BOOLEAN, (0.0, 1.0), "boolean"),
)

FEATURE_COLUMNS: tuple[str, ...] = tuple(s.name for s in TABLE_SCHEMA[:-1])
EXPECTED_HEADER: tuple[str, ...] = tuple(s.name for s in TABLE_SCHEMA)


@dataclass
class Dataset:
    """Column-oriented table with float64 features and a binary target."""

    schema: tuple[FeatureSpec, ...]
    columns: dict[str, np.ndarray]
    target: np.ndarray

    @property
    def n_rows(self) -> int:
        return int(self.target.shape[0])

    @property
    def feature_names(self) -> list[str]:
        return list(self.columns.keys())

    def matrix(self, features: list[str] | None = None) -> np.ndarray:
        """Stack the requested feature columns (all by default) into an
        (n_rows, n_features) array."""
        names = self.feature_names if features is None else list(features)
        for name in names:
            if name not in self.columns:
                raise SchemaError(f"unknown feature: {name!r}")
        if not names:
            return np.empty((self.n_rows, 0))
        return np.column_stack([self.columns[name] for name in names])

    def subset(self, row_indices) -> "Dataset":
        idx = np.asarray(row_indices, dtype=int)
        cols = {name: col[idx] for name, col in self.columns.items()}
        return Dataset(schema=self.schema, columns=cols, target=self.target[idx])

    def restrict(self, features: list[str]) -> "Dataset":
        """Keep only the named feature columns (target always kept)."""
        for name in features:
            if name not in self.columns:
                raise SchemaError(f"unknown feature: {name!r}")
        keep = set(features) | {TARGET_COLUMN}
        schema = tuple(s for s in self.schema if s.name in keep)
        cols = {name: self.columns[name] for name in features}
        return Dataset(schema=schema, columns=cols, target=self.target)


@dataclass(frozen=True)
class ScalerParams:
    """Per-feature (mean, population std) pairs."""

    stats: dict[str, tuple[float, float]]

    def to_dict(self) -> dict:
        return {name: {"mean": m, "std": s} for name, (m, s) in self.stats.items()}

    @classmethod
    def from_dict(cls, d: dict) -> "ScalerParams":
        return cls({name: (float(v["mean"]), float(v["std"])) for name, v in d.items()})


@dataclass(frozen=True)
class Violation:
    row: int  # zero-based data row
    feature: str
    value: float
    message: str


@dataclass
class EdaSummary:
    class_proportions: dict[int, float]
    histograms: dict[str, tuple[list[float], list[int]]]  # name -> (bin edges, counts)
    correlation_columns: list[str]
    correlation: np.ndarray

    def to_dict(self) -> dict:
        return {
            "class_proportions": {str(k): v for k, v in self.class_proportions.items()},
            "histograms": {
                name: {"bin_edges": edges, "counts": counts}
                for name, (edges, counts) in self.histograms.items()
            },
            "correlation": {
                "columns": self.correlation_columns,
                "matrix": self.correlation.tolist(),
            },
        }


@dataclass
class SplitResult:
    train: Dataset
    test: Dataset
    seed: int
    test_fraction: float
    train_indices: np.ndarray
    test_indices: np.ndarray


def load_dataset(path) -> Dataset:
    """Read the UCI-format CSV into a Dataset.

    The header must match the distribution column names and order exactly.
    Raises SchemaError for column mismatches, ParseError for bad cells, and
    EmptyInputError when there are no data rows.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyInputError(f"{path}: file is empty") from None
        header = tuple(h.strip() for h in header)
        _check_header(header)
        raw_rows = [row for row in reader if row]

    if not raw_rows:
        raise EmptyInputError(f"{path}: no data rows")

    n_cols = len(EXPECTED_HEADER)
    values = np.empty((len(raw_rows), n_cols))
    for i, row in enumerate(raw_rows):
        if len(row) != n_cols:
            raise ParseError(
                f"row {i + 1}: expected {n_cols} cells, found {len(row)}", row=i + 1
            )
        for j, cell in enumerate(row):
            cell = cell.strip()
            if cell == "":
                raise ParseError(
                    f"row {i + 1}, column {EXPECTED_HEADER[j]!r}: missing value",
                    row=i + 1,
                    column=EXPECTED_HEADER[j],
                )
            try:
                values[i, j] = float(cell)
            except ValueError:
                raise ParseError(
                    f"row {i + 1}, column {EXPECTED_HEADER[j]!r}: "
                    f"cannot parse {cell!r} as a number",
                    row=i + 1,
                    column=EXPECTED_HEADER[j],
                ) from None

    target_raw = values[:, -1]
    bad = np.nonzero((target_raw != 0.0) & (target_raw != 1.0))[0]
    if bad.size:
        i = int(bad[0])
        raise ParseError(
            f"row {i + 1}, column {TARGET_COLUMN!r}: "
            f"target must be 0 or 1, found {target_raw[i]!r}",
            row=i + 1,
            column=TARGET_COLUMN,
        )

    columns = {name: values[:, j].copy() for j, name in enumerate(FEATURE_COLUMNS)}
    return Dataset(
        schema=TABLE_SCHEMA, columns=columns, target=target_raw.astype(int)
    )


def _check_header(header: tuple[str, ...]) -> None:
    expected = set(EXPECTED_HEADER)
    found = set(header)
    missing = [c for c in EXPECTED_HEADER if c not in found]
    extra = [c for c in header if c not in expected]
    if missing or extra:
        parts = []
        if missing:
            parts.append(f"missing columns: {', '.join(missing)}")
        if extra:
            parts.append(f"unexpected columns: {', '.join(extra)}")
        raise SchemaError("; ".join(parts))
    if header != EXPECTED_HEADER:
        for got, want in zip(header, EXPECTED_HEADER):
            if got != want:
                raise SchemaError(
                    f"column order mismatch: found {got!r} where {want!r} expected"
                )


def validate_dataset(dataset: Dataset) -> list[Violation]:
    """Check every value against its schema range.

    Returns one Violation per offending (row, feature); an empty list means
    the dataset is valid. Out-of-range values are data, not faults.
    """
    violations: list[Violation] = []
    spec_by_name = {s.name: s for s in dataset.schema}
    series = dict(dataset.columns)
    if TARGET_COLUMN in spec_by_name:
        series[TARGET_COLUMN] = dataset.target.astype(float)
    for name, col in series.items():
        spec = spec_by_name.get(name)
        if spec is None:
            continue
        if spec.kind == BOOLEAN:
            bad = np.nonzero((col != 0.0) & (col != 1.0))[0]
            msg = f"{name} must be 0 or 1"
        else:
            lo, hi = spec.valid_range
            bad = np.nonzero((col < lo) | (col > hi))[0]
            msg = f"{name} outside [{lo:g}, {hi:g}]"
        for i in bad:
            violations.append(
                Violation(row=int(i), feature=name, value=float(col[i]), message=msg)
            )
    violations.sort(key=lambda v: (v.row, v.feature))
    return violations


def fit_scaler(dataset: Dataset, features: list[str]) -> ScalerParams:
    """Per-feature mean and population standard deviation (divide by n)."""
    if dataset.n_rows == 0:
        raise EmptyInputError("cannot fit scaler on an empty dataset")
    stats: dict[str, tuple[float, float]] = {}
    for name in features:
        if name not in dataset.columns:
            raise SchemaError(f"unknown feature: {name!r}")
        col = dataset.columns[name]
        mean = float(col.mean())
        std = float(col.std())  # ddof=0: population denominator
        stats[name] = (mean, std)
    return ScalerParams(stats)


def apply_scaler(dataset: Dataset, params: ScalerParams) -> Dataset:
    """Replace each covered feature by (x - mean) / std.

    Features with std = 0 transform to all zeros; uncovered features and the
    target pass through unchanged.
    """
    columns: dict[str, np.ndarray] = {}
    for name, col in dataset.columns.items():
        if name in params.stats:
            mean, std = params.stats[name]
            if std == 0.0:
                columns[name] = np.zeros_like(col)
            else:
                columns[name] = (col - mean) / std
        else:
            columns[name] = col.copy()
    return Dataset(schema=dataset.schema, columns=columns, target=dataset.target.copy())


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def stratified_split(dataset: Dataset, test_fraction: float, seed: int = 0) -> SplitResult:
    """Class-stratified train/test partition.

    Each class is shuffled with a PRNG seeded by `seed`; round-half-up of
    test_fraction times the class count goes to the test side. Deterministic
    for a fixed (dataset, test_fraction, seed).
    """
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    rng = np.random.default_rng(seed)
    test_parts = []
    train_parts = []
    for label in (0, 1):
        idx = np.nonzero(dataset.target == label)[0]
        if idx.size == 0:
            raise StratificationError(f"class {label} has no rows; cannot stratify")
        perm = rng.permutation(idx)
        k = _round_half_up(test_fraction * idx.size)
        test_parts.append(perm[:k])
        train_parts.append(perm[k:])
    test_idx = np.sort(np.concatenate(test_parts)).astype(int)
    train_idx = np.sort(np.concatenate(train_parts)).astype(int)
    return SplitResult(
        train=dataset.subset(train_idx),
        test=dataset.subset(test_idx),
        seed=seed,
        test_fraction=test_fraction,
        train_indices=train_idx,
        test_indices=test_idx,
    )


def eda_summary(dataset: Dataset, bins: int = 10) -> EdaSummary:
    """Class proportions, per-continuous-feature equal-width histograms over
    [min, max], and the Pearson correlation matrix over features plus target."""
    if bins < 1:
        raise ValueError(f"bins must be >= 1, got {bins}")
    n = dataset.n_rows
    proportions = {
        0: float(np.count_nonzero(dataset.target == 0)) / n,
        1: float(np.count_nonzero(dataset.target == 1)) / n,
    }
    histograms: dict[str, tuple[list[float], list[int]]] = {}
    spec_by_name = {s.name: s for s in dataset.schema}
    for name, col in dataset.columns.items():
        spec = spec_by_name.get(name)
        if spec is not None and spec.kind != CONTINUOUS:
            continue
        lo, hi = float(col.min()), float(col.max())
        counts, edges = np.histogram(col, bins=bins, range=(lo, hi))
        histograms[name] = (edges.tolist(), counts.tolist())
    names = dataset.feature_names + [TARGET_COLUMN]
    stacked = np.column_stack(
        [dataset.columns[n] for n in dataset.feature_names]
        + [dataset.target.astype(float)]
    )
    corr = np.corrcoef(stacked, rowvar=False)
    return EdaSummary(
        class_proportions=proportions,
        histograms=histograms,
        correlation_columns=names,
        correlation=corr,
    )
