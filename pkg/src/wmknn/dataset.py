"""Loading, encoding, imputation, normalization and fold assignment.

Raw CSV rows are decoded against an explicit column schema into a dense
float matrix.  Categorical columns are one-hot encoded, identifier columns
are dropped, and absent cells are kept as NaN until a :class:`Normalizer`
fitted on a training split fills them in.
"""

from __future__ import annotations

import csv
import math
import os
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

MISSING_TOKENS = frozenset({"", "?"})

NUMERIC = "numeric"
CATEGORICAL = "categorical"
IDENTIFIER = "identifier"
LABEL = "label"
_KINDS = (NUMERIC, CATEGORICAL, IDENTIFIER, LABEL)


class LoadError(ValueError):
    """Raised when a CSV file cannot be decoded against its schema."""


class SchemaMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class FeatureSchema:
    """One raw column of the input file."""

    name: str
    kind: str = NUMERIC
    categories: tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown feature kind {self.kind!r} for column {self.name!r}")
        if self.kind == CATEGORICAL and not self.categories:
            raise ValueError(f"categorical column {self.name!r} needs a category list")
        object.__setattr__(self, "categories", tuple(self.categories))

    @property
    def width(self) -> int:
        """Number of encoded columns this raw column expands to."""
        if self.kind == NUMERIC:
            return 1
        if self.kind == CATEGORICAL:
            return len(self.categories)
        return 0


def validate_schema(schema: Sequence[FeatureSchema]) -> tuple[FeatureSchema, ...]:
    schema = tuple(schema)
    labels = [f for f in schema if f.kind == LABEL]
    if len(labels) != 1:
        raise ValueError(f"schema must have exactly one label column, found {len(labels)}")
    names = [f.name for f in schema]
    if len(set(names)) != len(names):
        raise ValueError("schema column names must be unique")
    return schema


def parse_schema_spec(spec: str) -> tuple[FeatureSchema, ...]:
    """Parse ``name:kind[=cat1|cat2],...`` into a schema.

    >>> [f.kind for f in parse_schema_spec("x:numeric,g:categorical=a|b,y:label")]
    ['numeric', 'categorical', 'label']
    """
    out = []
    for item in spec.split(","):
        item = item.strip()
        if not item:
            continue
        name, _, kind = item.partition(":")
        kind = kind or NUMERIC
        cats: tuple[str, ...] = ()
        if "=" in kind:
            kind, _, raw = kind.partition("=")
            cats = tuple(c for c in raw.split("|") if c)
        out.append(FeatureSchema(name.strip(), kind.strip(), cats))
    return validate_schema(out)


@dataclass(frozen=True)
class Instance:
    id: int
    features: np.ndarray
    label: str | None = None


def _natural_key(label: str):
    try:
        return (0, float(label), label)
    except ValueError:
        return (1, 0.0, label)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Labeled instances in encoded feature space.

    ``X`` holds one row per instance (NaN marks an absent cell), ``y`` holds
    integer codes into ``class_set`` and ``ids`` are stable row indices from
    the source file; subsets keep the ids of the rows they were taken from.
    """

    schema: tuple[FeatureSchema, ...]
    X: np.ndarray
    y: np.ndarray
    ids: np.ndarray
    class_set: tuple[str, ...]
    name: str = "dataset"
    raw_rows: tuple[tuple[str, ...], ...] | None = field(default=None, repr=False)
    header: tuple[str, ...] | None = None

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        if X.ndim != 2:
            raise ValueError("feature matrix must be 2-D")
        y = np.asarray(self.y, dtype=np.int64)
        ids = np.asarray(self.ids, dtype=np.int64)
        if not (len(X) == len(y) == len(ids)):
            raise ValueError("X, y and ids must have the same length")
        if X.shape[1] != encoded_width(self.schema):
            raise SchemaMismatchError(
                f"feature matrix has {X.shape[1]} columns, schema encodes {encoded_width(self.schema)}"
            )
        if len(y) and (y.min() < 0 or y.max() >= len(self.class_set)):
            raise ValueError("label code outside class_set")
        for name, arr in (("X", X), ("y", y), ("ids", ids)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def __len__(self) -> int:
        return len(self.ids)

    def __getitem__(self, pos: int) -> Instance:
        return Instance(int(self.ids[pos]), self.X[pos], self.class_set[self.y[pos]])

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    @property
    def instances(self) -> list[Instance]:
        return list(self)

    @property
    def labels(self) -> list[str]:
        return [self.class_set[c] for c in self.y]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    @property
    def feature_names(self) -> list[str]:
        return encoded_names(self.schema)

    def position_of(self, instance_id: int) -> int:
        hits = np.flatnonzero(self.ids == instance_id)
        if len(hits) == 0:
            raise KeyError(f"instance id {instance_id} not in dataset")
        return int(hits[0])

    def take(self, positions) -> Dataset:
        """Subset by row position, keeping ids, class_set and raw rows."""
        positions = np.asarray(positions, dtype=np.int64)
        raw = None
        if self.raw_rows is not None:
            raw = tuple(self.raw_rows[p] for p in positions)
        return Dataset(
            self.schema, self.X[positions], self.y[positions], self.ids[positions],
            self.class_set, self.name, raw, self.header,
        )

    def without_ids(self, ids: Iterable[int]) -> Dataset:
        drop = np.isin(self.ids, np.fromiter(ids, dtype=np.int64))
        return self.take(np.flatnonzero(~drop))

    def with_features(self, X: np.ndarray) -> Dataset:
        return Dataset(self.schema, X, self.y, self.ids, self.class_set,
                       self.name, self.raw_rows, self.header)

    def class_counts(self) -> dict[str, int]:
        counts = np.bincount(self.y, minlength=len(self.class_set))
        return {c: int(n) for c, n in zip(self.class_set, counts)}

    def missing_cells(self) -> int:
        """Absent raw cells; a missing categorical value counts once."""
        total = 0
        col = 0
        for f in feature_columns(self.schema):
            block = self.X[:, col:col + f.width]
            total += int(np.isnan(block).any(axis=1).sum())
            col += f.width
        return total


def feature_columns(schema: Sequence[FeatureSchema]) -> list[FeatureSchema]:
    return [f for f in schema if f.kind in (NUMERIC, CATEGORICAL)]


def encoded_width(schema: Sequence[FeatureSchema]) -> int:
    return sum(f.width for f in schema)


def encoded_names(schema: Sequence[FeatureSchema]) -> list[str]:
    names = []
    for f in feature_columns(schema):
        if f.kind == NUMERIC:
            names.append(f.name)
        else:
            names.extend(f"{f.name}={c}" for c in f.categories)
    return names


def numeric_mask(schema: Sequence[FeatureSchema]) -> np.ndarray:
    mask = []
    for f in feature_columns(schema):
        mask.extend([f.kind == NUMERIC] * f.width)
    return np.array(mask, dtype=bool)


def encode_row(schema: Sequence[FeatureSchema], cells: Sequence[str], row_no: int = 0) -> np.ndarray:
    """Encode the feature cells of one raw row (label and identifier cells ignored)."""
    out = []
    for f, cell in zip(schema, cells):
        cell = cell.strip()
        if f.kind == NUMERIC:
            if cell in MISSING_TOKENS:
                out.append(math.nan)
                continue
            try:
                value = float(cell)
            except ValueError:
                raise LoadError(f"row {row_no}, column {f.name!r}: cannot parse {cell!r} as a number")
            if not math.isfinite(value):
                raise LoadError(f"row {row_no}, column {f.name!r}: non-finite value {cell!r}")
            out.append(value)
        elif f.kind == CATEGORICAL:
            if cell in MISSING_TOKENS:
                out.extend([math.nan] * f.width)
                continue
            if cell not in f.categories:
                raise LoadError(
                    f"row {row_no}, column {f.name!r}: unknown category {cell!r} "
                    f"(expected one of {', '.join(f.categories)})"
                )
            out.extend(1.0 if c == cell else 0.0 for c in f.categories)
    return np.array(out, dtype=np.float64)


def load_csv(path, schema: Sequence[FeatureSchema], header: bool = False,
             name: str | None = None, class_set: Sequence[str] | None = None) -> Dataset:
    """Read a CSV file into a :class:`Dataset`.

    ``class_set`` fixes the label order; by default it is the distinct labels
    present, sorted numerically when they all parse as numbers.
    """
    schema = validate_schema(schema)
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such data file: {path}")
    with open(path, newline="", encoding="utf-8-sig") as fh:
        rows = [r for r in csv.reader(fh) if any(c.strip() for c in r)]
    head = None
    if header and rows:
        head = tuple(c.strip() for c in rows[0])
        rows = rows[1:]
    if not rows:
        raise LoadError(f"{path}: no data rows")

    label_col = next(i for i, f in enumerate(schema) if f.kind == LABEL)
    feats, labels = [], []
    first_row = 2 if header else 1
    for offset, row in enumerate(rows):
        row_no = first_row + offset
        if len(row) != len(schema):
            raise LoadError(f"row {row_no}: expected {len(schema)} columns, found {len(row)}")
        label = row[label_col].strip()
        if label in MISSING_TOKENS:
            raise LoadError(f"row {row_no}, column {schema[label_col].name!r}: empty label")
        labels.append(label)
        feats.append(encode_row(schema, row, row_no))

    if class_set is None:
        class_set = sorted(set(labels), key=_natural_key)
    class_set = tuple(class_set)
    index = {c: i for i, c in enumerate(class_set)}
    try:
        y = np.array([index[lab] for lab in labels], dtype=np.int64)
    except KeyError as err:
        raise LoadError(f"label {err.args[0]!r} not in declared class set") from None
    X = np.vstack(feats) if feats[0].size else np.empty((len(rows), 0))
    return Dataset(
        schema, X, y, np.arange(len(rows)), class_set,
        name or path.stem, tuple(tuple(r) for r in rows), head,
    )


@dataclass(frozen=True, eq=False)
class Normalizer:
    """Min-max scaling and imputation statistics learned from one split."""

    schema: tuple[FeatureSchema, ...]
    minimum: np.ndarray
    maximum: np.ndarray
    fill: np.ndarray
    numeric: np.ndarray

    @property
    def degenerate(self) -> np.ndarray:
        return self.numeric & ~(self.maximum > self.minimum)

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.array(X, dtype=np.float64, copy=True, ndmin=2)
        if X.shape[1] != len(self.minimum):
            raise SchemaMismatchError(
                f"expected {len(self.minimum)} encoded features, got {X.shape[1]}"
            )
        absent = np.isnan(X)
        X = np.where(absent, self.fill, X)
        span = self.maximum - self.minimum
        live = self.numeric & (span > 0)
        X[:, live] = np.clip((X[:, live] - self.minimum[live]) / span[live], 0.0, 1.0)
        X[:, self.degenerate] = 0.0
        return X


def fit_normalizer(train: Dataset) -> Normalizer:
    if len(train) == 0:
        raise ValueError("cannot fit a normalizer on an empty split")
    X = train.X
    numeric = numeric_mask(train.schema)
    present = ~np.isnan(X)
    with np.errstate(invalid="ignore"):
        lo = np.where(present, X, np.inf).min(axis=0)
        hi = np.where(present, X, -np.inf).max(axis=0)
    empty = ~present.any(axis=0)
    lo[empty] = 0.0
    hi[empty] = 0.0

    fill = np.zeros(X.shape[1])
    col = 0
    for f in feature_columns(train.schema):
        block = X[:, col:col + f.width]
        if f.kind == NUMERIC:
            vals = block[~np.isnan(block[:, 0]), 0]
            fill[col] = vals.mean() if len(vals) else 0.0
        else:
            seen = block[~np.isnan(block).any(axis=1)]
            if len(seen):
                # mode category; first declared category wins a tie
                counts = seen.sum(axis=0)
                fill[col + int(np.argmax(counts))] = 1.0
        col += f.width
    return Normalizer(train.schema, lo, hi, fill, numeric)


def apply_normalizer(norm: Normalizer, ds: Dataset) -> Dataset:
    if norm.schema != ds.schema:
        raise SchemaMismatchError("dataset schema differs from the normalizer's training schema")
    return ds.with_features(norm.transform(ds.X))


@dataclass(frozen=True, eq=False)
class FoldAssignment:
    n_folds: int
    seed: int
    ids: np.ndarray
    fold_of: np.ndarray

    def positions(self, fold: int) -> tuple[np.ndarray, np.ndarray]:
        """(train positions, test positions) for one fold."""
        test = self.fold_of == fold
        return np.flatnonzero(~test), np.flatnonzero(test)


def stratified_folds(ds: Dataset, n_folds: int, seed: int) -> FoldAssignment:
    """Shuffle each class and deal it round-robin across folds.

    The dealing position carries over from one class to the next so overall
    fold sizes differ by at most one as well.
    """
    if n_folds < 2:
        raise ValueError("n_folds must be at least 2")
    if n_folds > len(ds):
        raise ValueError(f"n_folds={n_folds} exceeds the {len(ds)} instances available")
    rng = np.random.default_rng(seed)
    fold_of = np.empty(len(ds), dtype=np.int64)
    start = 0
    for code in range(len(ds.class_set)):
        members = np.flatnonzero(ds.y == code)
        members = members[rng.permutation(len(members))]
        fold_of[members] = (start + np.arange(len(members))) % n_folds
        start = (start + len(members)) % n_folds
    return FoldAssignment(n_folds, seed, ds.ids.copy(), fold_of)


# -- built-in UCI profiles -------------------------------------------------

@dataclass(frozen=True)
class Profile:
    name: str
    schema: tuple[FeatureSchema, ...]
    filenames: tuple[str, ...]
    header: bool = False
    declared_classes: int | None = None
    note: str = ""


def _numeric(*names: str) -> list[FeatureSchema]:
    return [FeatureSchema(n, NUMERIC) for n in names]


PROFILES: dict[str, Profile] = {
    "glass": Profile(
        "glass",
        (FeatureSchema("Id", IDENTIFIER),
         *_numeric("RI", "Na", "Mg", "Al", "Si", "K", "Ca", "Ba", "Fe"),
         FeatureSchema("Type", LABEL)),
        ("glass.data", "glass.csv"),
        declared_classes=7,
        note="7 glass types are declared but type 4 has no rows; class_set holds the 6 present",
    ),
    "wine": Profile(
        "wine",
        (FeatureSchema("Class", LABEL),
         *_numeric("Alcohol", "Malic acid", "Ash", "Alcalinity of ash", "Magnesium",
                   "Total phenols", "Flavanoids", "Nonflavanoid phenols",
                   "Proanthocyanins", "Color intensity", "Hue",
                   "OD280/OD315 of diluted wines", "Proline")),
        ("wine.data", "wine.csv"),
        declared_classes=3,
    ),
    "ilpd": Profile(
        "ilpd",
        (FeatureSchema("Age", NUMERIC),
         FeatureSchema("Gender", CATEGORICAL, ("Female", "Male")),
         *_numeric("TB", "DB", "Alkphos", "Sgpt", "Sgot", "TP", "ALB", "A/G Ratio"),
         FeatureSchema("Selector", LABEL)),
        ("Indian Liver Patient Dataset (ILPD).csv", "ilpd.csv", "ILPD.csv"),
        declared_classes=2,
    ),
}


def default_data_dir() -> Path:
    return Path(os.environ.get("WMKNN_DATA_DIR", "data"))


def resolve_profile_path(profile: Profile, data_dir=None) -> Path:
    base = Path(data_dir) if data_dir is not None else default_data_dir()
    for fname in profile.filenames:
        candidate = base / fname
        if candidate.is_file():
            return candidate
    raise FileNotFoundError(
        f"no {profile.name} data file in {base} (looked for {', '.join(profile.filenames)}); "
        "run scripts/fetch_uci.py or pass a file path"
    )


def load_profile(name: str, path=None, data_dir=None) -> Dataset:
    try:
        profile = PROFILES[name]
    except KeyError:
        raise KeyError(f"unknown dataset profile {name!r}; choose from {', '.join(PROFILES)}") from None
    path = Path(path) if path is not None else resolve_profile_path(profile, data_dir)
    return load_csv(path, profile.schema, header=profile.header, name=name)


def describe(ds: Dataset) -> dict:
    kinds = Counter(f.kind for f in ds.schema)
    return {
        "name": ds.name,
        "instances": len(ds),
        "numeric": kinds[NUMERIC],
        "categorical": kinds[CATEGORICAL],
        "dropped": kinds[IDENTIFIER],
        "encoded_features": ds.n_features,
        "classes": len(ds.class_set),
        "class_counts": ds.class_counts(),
        "missing_cells": ds.missing_cells(),
    }
