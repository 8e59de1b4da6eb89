"""The six nearest-neighbor classifiers.

``KNN`` and ``WKNN`` vote over the raw training set.  The starred variants
and the mutual variants first drop every training instance that has no
mutual k-neighbor.  ``MKNN``/``WMKNN`` then vote only among a query's mutual
neighbors and reject the query when there are none.  The ``W`` variants
weight each vote by inverse distance.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dataset import Dataset, Instance, Normalizer
from .geometry import (NeighborIndex, QueryMutuality, distance_matrix, mutual_table,
                       neighbor_table, pairwise_distances, rank)

EPSILON = 1e-12


class DegenerateFilterError(ValueError):
    """Noise filtering cannot produce a usable training set."""


class Variant(str, enum.Enum):
    KNN = "KNN"
    WKNN = "WKNN"
    KNN_STAR = "KNN_STAR"
    WKNN_STAR = "WKNN_STAR"
    MKNN = "MKNN"
    WMKNN = "WMKNN"

    @property
    def filtered(self) -> bool:
        return self not in (Variant.KNN, Variant.WKNN)

    @property
    def weighted(self) -> bool:
        return self in (Variant.WKNN, Variant.WKNN_STAR, Variant.WMKNN)

    @property
    def mutual(self) -> bool:
        return self in (Variant.MKNN, Variant.WMKNN)

    @property
    def display(self) -> str:
        return _DISPLAY[self]

    @classmethod
    def parse(cls, text: str) -> Variant:
        key = text.strip()
        for v in cls:
            if key.upper() in (v.value, v.display.upper()) or key.upper() == v.value.replace("_STAR", "*"):
                return v
        raise ValueError(f"unknown variant {text!r}; choose from {', '.join(v.display for v in cls)}")


_DISPLAY = {
    Variant.KNN: "kNN",
    Variant.WKNN: "WkNN",
    Variant.KNN_STAR: "kNN*",
    Variant.WKNN_STAR: "WkNN*",
    Variant.MKNN: "MkNN",
    Variant.WMKNN: "WMkNN",
}

# row order of every results table
TABLE_ORDER = tuple(Variant)


@dataclass(frozen=True)
class VoteTally:
    counts: dict[str, int]
    weights: dict[str, float]

    @property
    def voters(self) -> int:
        return sum(self.counts.values())


def weight(d: float) -> float:
    """Inverse-distance vote weight, capped at 1/EPSILON for coincident points."""
    if d < 0:
        raise ValueError("distance must be non-negative")
    return 1.0 / max(d, EPSILON)


def tally(neighbors: Sequence[tuple[str, float]]) -> VoteTally:
    counts: dict[str, int] = {}
    weights: dict[str, float] = {}
    for label, d in neighbors:
        counts[label] = counts.get(label, 0) + 1
        weights[label] = weights.get(label, 0.0) + weight(d)
    return VoteTally(counts, weights)


def _argmax(scores: dict, class_order: Sequence[str] | None):
    if class_order is None:
        ordered = list(scores)
    else:
        rank_of = {c: i for i, c in enumerate(class_order)}
        ordered = sorted(scores, key=lambda c: rank_of.get(c, len(rank_of)))
    best = ordered[0]
    for c in ordered[1:]:
        if scores[c] > scores[best]:
            best = c
    return best


def vote_majority(neighbors, class_order: Sequence[str] | None = None) -> tuple[str, VoteTally]:
    """Most frequent label; ties go to the class listed first in ``class_order``.

    Without ``class_order`` ties go to the label seen first.
    """
    if not neighbors:
        raise ValueError("cannot vote without neighbors")
    t = tally(neighbors)
    return _argmax(t.counts, class_order), t


def vote_weighted(neighbors, class_order: Sequence[str] | None = None) -> tuple[str, VoteTally]:
    if not neighbors:
        raise ValueError("cannot vote without neighbors")
    t = tally(neighbors)
    return _argmax(t.weights, class_order), t


def certainty_unweighted(t: VoteTally, winner: str) -> float:
    if t.counts.get(winner, 0) < 1:
        raise ValueError(f"winner {winner!r} received no votes")
    return t.counts[winner] / sum(t.counts.values())


def certainty_weighted(t: VoteTally, winner: str) -> float:
    if t.weights.get(winner, 0.0) <= 0:
        raise ValueError(f"winner {winner!r} has no vote weight")
    return t.weights[winner] / sum(t.weights.values())


@dataclass(frozen=True)
class FilterResult:
    filtered: Dataset
    removed: frozenset[int]
    knn: dict[int, tuple[int, ...]] = field(repr=False)

    def __iter__(self):
        # allows ``filtered, removed = filter_noise(...)``
        return iter((self.filtered, self.removed))


def filter_noise(train: Dataset, k: int, D: np.ndarray | None = None) -> FilterResult:
    """Drop training instances without any mutual k-neighbor, in one pass.

    All mutual sets are computed against the original ``train``.  ``D`` may
    supply its precomputed distance matrix.  ``knn`` in the result records
    each removed instance's neighbor ids as evidence that none reciprocated.
    """
    n = len(train)
    if k < 1:
        raise ValueError("k must be at least 1")
    if n < 2 or k >= n:
        raise DegenerateFilterError(f"noise filter needs k <= n-1, got k={k} with n={n}")
    if D is None:
        D = distance_matrix(train)
    mutual = mutual_table(D, train.ids, k)
    empty = np.array([len(m) == 0 for m in mutual])
    if empty.all():
        raise DegenerateFilterError(f"degenerate filter: k={k} leaves no training instance")
    removed = frozenset(train.ids[empty].tolist())
    evidence = {}
    if removed:
        table = neighbor_table(D, train.ids, k)
        evidence = {int(train.ids[p]): tuple(train.ids[table[p]].tolist()) for p in np.flatnonzero(empty)}
    return FilterResult(train.take(np.flatnonzero(~empty)), removed, evidence)


@dataclass(frozen=True, eq=False)
class Prediction:
    label: str | None
    certainty: float | None
    tally: VoteTally
    neighbor_ids: tuple[int, ...]

    @property
    def rejected(self) -> bool:
        return self.label is None

    def __str__(self) -> str:
        if self.rejected:
            return "REJECTED (outlier)"
        return f"{self.label} (certainty {self.certainty:.4f})"


@dataclass(frozen=True, eq=False)
class ClassifierModel:
    """A fitted classifier; immutable and safe to share between threads."""

    variant: Variant
    k: int
    train: Dataset
    removed: frozenset[int]
    normalizer: Normalizer | None = None
    algorithm: str = "auto"
    _index: NeighborIndex = field(init=False, repr=False)
    _mutuality: QueryMutuality | None = field(init=False, repr=False)
    _pos: dict[int, int] = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "_index", NeighborIndex.from_dataset(self.train, self.algorithm))
        object.__setattr__(self, "_pos", {int(t): p for p, t in enumerate(self.train.ids)})
        mut = QueryMutuality(self.train, self.k, self.algorithm) if self.variant.mutual else None
        object.__setattr__(self, "_mutuality", mut)


def fit(variant: Variant, train: Dataset, k: int, normalizer: Normalizer | None = None,
        algorithm: str = "auto", D: np.ndarray | None = None) -> ClassifierModel:
    """Fit ``variant`` on an already-normalized ``train``.

    ``normalizer`` is stored so callers can map raw queries into the model's
    feature space; ``D`` optionally supplies the training distance matrix.
    """
    variant = Variant(variant)
    if len(train) == 0:
        raise ValueError("empty training set")
    if k < 1:
        raise ValueError("k must be at least 1")
    removed: frozenset[int] = frozenset()
    if variant.filtered:
        train, removed = filter_noise(train, k, D)
    return ClassifierModel(variant, k, train, removed, normalizer, algorithm)


def _decide(model: ClassifierModel, ids: np.ndarray, d: np.ndarray) -> Prediction:
    if len(ids) == 0:
        return Prediction(None, None, VoteTally({}, {}), ())
    train = model.train
    neighbors = [(train.class_set[train.y[model._pos[t]]], dist)
                 for t, dist in zip(ids.tolist(), d.tolist())]
    if model.variant.weighted:
        label, t = vote_weighted(neighbors, train.class_set)
        cert = certainty_weighted(t, label)
    else:
        label, t = vote_majority(neighbors, train.class_set)
        cert = certainty_unweighted(t, label)
    return Prediction(label, cert, t, tuple(ids.tolist()))


def predict(model: ClassifierModel, x_t) -> Prediction:
    """Classify one query already in the model's feature space."""
    q = x_t.features if isinstance(x_t, Instance) else np.asarray(x_t, dtype=np.float64)
    ids, d = model._index.query(q, model.k)
    if model.variant.mutual:
        m = model._mutuality.mutual_from_knn(ids, d)
        ids, d = m.ids, m.distances
    return _decide(model, ids, d)


def predict_many(model: ClassifierModel, queries) -> list[Prediction]:
    """Classify every row of ``queries`` (a Dataset or 2-D array)."""
    Q = queries.X if isinstance(queries, Dataset) else np.atleast_2d(np.asarray(queries, dtype=np.float64))
    if len(Q) == 0:
        return []
    train_ids = model.train.ids
    D = pairwise_distances(Q, model.train.X)
    out = []
    for row in D:
        top = rank(row, train_ids, model.k)
        ids, d = train_ids[top], row[top]
        if model.variant.mutual:
            m = model._mutuality.mutual_from_knn(ids, d)
            ids, d = m.ids, m.distances
        out.append(_decide(model, ids, d))
    return out
