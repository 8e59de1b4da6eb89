"""Euclidean distances, exact k-nearest-neighbor search and mutual neighbor sets.

Every distance in the package goes through :func:`pairwise_distances`, which
accumulates squared differences one feature column at a time.  Because the
accumulation order never depends on how many rows are processed together,
the brute-force path, the KD-tree path and a per-pair scalar loop all produce
bit-identical values, which is what makes exact tie-breaking reproducible.

Neighbors are ordered by ascending distance, ties broken by ascending
instance id.  A test query ranks after every training instance at equal
distance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .dataset import Dataset, Instance

# Switch to the KD-tree once a reference set is this large.
KDTREE_MIN_SIZE = 2048


def pairwise_distances(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    B = np.atleast_2d(np.asarray(B, dtype=np.float64))
    if A.shape[1] != B.shape[1]:
        raise ValueError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    acc = np.zeros((A.shape[0], B.shape[0]))
    for j in range(A.shape[1]):
        diff = A[:, j, None] - B[None, :, j]
        acc += diff * diff
    return np.sqrt(acc)


def _features(x) -> np.ndarray:
    if isinstance(x, Instance):
        return np.asarray(x.features, dtype=np.float64)
    return np.asarray(x, dtype=np.float64)


def distance(a, b) -> float:
    a, b = _features(a), _features(b)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(pairwise_distances(a[None, :], b[None, :])[0, 0])


def distance_matrix(ds) -> np.ndarray:
    X = ds.X if isinstance(ds, Dataset) else np.atleast_2d(np.asarray(ds, dtype=np.float64))
    if len(X) == 0:
        raise ValueError("distance matrix of an empty dataset")
    return pairwise_distances(X, X)


@dataclass(frozen=True, eq=False)
class NeighborList:
    """The k nearest reference instances of one query, nearest first."""

    query_id: int | None
    ids: np.ndarray
    distances: np.ndarray
    k: int

    def __len__(self) -> int:
        return len(self.ids)

    def __iter__(self):
        return zip(self.ids.tolist(), self.distances.tolist())

    @property
    def truncated(self) -> bool:
        """Fewer than k candidates were available."""
        return len(self.ids) < self.k

    def id_set(self) -> frozenset[int]:
        return frozenset(self.ids.tolist())


@dataclass(frozen=True, eq=False)
class MutualSet:
    """Members of a neighbor list that also count the query among their own k nearest."""

    query_id: int | None
    ids: np.ndarray
    distances: np.ndarray

    def __len__(self) -> int:
        return len(self.ids)

    def __bool__(self) -> bool:
        return len(self.ids) > 0

    def __iter__(self):
        return zip(self.ids.tolist(), self.distances.tolist())

    def id_set(self) -> frozenset[int]:
        return frozenset(self.ids.tolist())


def rank(dists: np.ndarray, ids: np.ndarray, k: int) -> np.ndarray:
    """Positions of the k smallest distances, ties by ascending id."""
    if k >= len(dists):
        return np.lexsort((ids, dists))
    # keep everything up to and including the k-th distance, then settle ties exactly
    kth = np.partition(dists, k - 1)[k - 1]
    cand = np.flatnonzero(dists <= kth)
    order = np.lexsort((ids[cand], dists[cand]))
    return cand[order[:k]]


class NeighborIndex:
    """Exact k-NN queries against a fixed reference set.

    ``algorithm`` is ``"brute"``, ``"kdtree"`` or ``"auto"``.  Both search
    paths return identical (id, distance) lists.
    """

    def __init__(self, X: np.ndarray, ids: np.ndarray, algorithm: str = "auto"):
        if algorithm not in ("auto", "brute", "kdtree"):
            raise ValueError(f"unknown search algorithm {algorithm!r}")
        self.X = np.asarray(X, dtype=np.float64)
        self.ids = np.asarray(ids, dtype=np.int64)
        if algorithm == "auto":
            algorithm = "kdtree" if len(self.X) >= KDTREE_MIN_SIZE else "brute"
        self.algorithm = algorithm
        self._tree = cKDTree(self.X) if algorithm == "kdtree" and len(self.X) else None

    @classmethod
    def from_dataset(cls, ds: Dataset, algorithm: str = "auto") -> NeighborIndex:
        return cls(ds.X, ds.ids, algorithm)

    def __len__(self) -> int:
        return len(self.ids)

    def query(self, q: np.ndarray, k: int, exclude_id: int | None = None) -> tuple[np.ndarray, np.ndarray]:
        """(ids, distances) of the k nearest, optionally skipping one id."""
        q = np.asarray(q, dtype=np.float64)
        if q.shape != (self.X.shape[1],):
            raise ValueError(f"query has shape {q.shape}, expected ({self.X.shape[1]},)")
        if self._tree is not None:
            pos = self._tree_candidates(q, k, exclude_id)
        else:
            pos = np.arange(len(self.ids))
        if exclude_id is not None:
            pos = pos[self.ids[pos] != exclude_id]
        if len(pos) == 0:
            raise ValueError("no candidate neighbors")
        d = pairwise_distances(q[None, :], self.X[pos])[0]
        top = rank(d, self.ids[pos], k)
        return self.ids[pos[top]], d[top]

    def _tree_candidates(self, q, k, exclude_id):
        want = min(len(self.ids), k + (exclude_id is not None))
        tree_d, _ = self._tree.query(q, k=want)
        radius = float(np.max(np.atleast_1d(tree_d)))
        # pad the radius so every tie at the k-th distance is collected even if the
        # tree rounds differently from pairwise_distances
        radius = radius * (1.0 + 1e-9) + 1e-12
        return np.asarray(self._tree.query_ball_point(q, radius), dtype=np.int64)


def knn_of(query, refset: Dataset, k: int, exclude_self: bool = False,
           algorithm: str = "brute") -> NeighborList:
    """k nearest members of ``refset``.

    With ``exclude_self`` the instance sharing the query's id is skipped.
    If fewer than k candidates exist all of them are returned and the list
    reports :attr:`NeighborList.truncated`.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    qid = query.id if isinstance(query, Instance) else None
    if exclude_self and qid is None:
        raise ValueError("exclude_self needs a query with an id")
    index = NeighborIndex.from_dataset(refset, algorithm)
    ids, d = index.query(_features(query), k, qid if exclude_self else None)
    return NeighborList(qid, ids, d, k)


def neighbor_table(D: np.ndarray, ids: np.ndarray, k: int) -> np.ndarray:
    """Row i holds the positions of the k nearest others of instance i.

    ``D`` is the full within-set distance matrix.  Requires ``k <= n - 1``.
    """
    n = len(ids)
    if not 1 <= k <= n - 1:
        raise ValueError(f"k={k} needs 1 <= k <= n-1 with n={n}")
    D = np.array(D, dtype=np.float64, copy=True)
    np.fill_diagonal(D, np.inf)
    order = np.lexsort((np.broadcast_to(ids, D.shape), D), axis=-1)
    return order[:, :k]


def mutual_table(D: np.ndarray, ids: np.ndarray, k: int) -> list[np.ndarray]:
    """Mutual neighbor positions of every instance, each in neighbor order."""
    table = neighbor_table(D, ids, k)
    n = len(ids)
    member = np.zeros((n, n), dtype=bool)
    member[np.repeat(np.arange(n), k), table.ravel()] = True
    return [row[member[row, i]] for i, row in enumerate(table)]


def mutual_neighbors(i: int, ds: Dataset, k: int) -> MutualSet:
    """Mutual k-neighbors of the instance with id ``i`` inside ``ds``.

    When ``k >= n`` every other instance is everyone's neighbor, so the set
    is simply all other instances.
    """
    pos = ds.position_of(i)
    n = len(ds)
    if n == 1:
        return MutualSet(i, np.empty(0, dtype=np.int64), np.empty(0))
    kk = min(k, n - 1)
    D = distance_matrix(ds)
    mutual = mutual_table(D, ds.ids, kk)[pos]
    return MutualSet(i, ds.ids[mutual], D[pos, mutual])


def kth_radius(D: np.ndarray, ids: np.ndarray, k: int) -> np.ndarray:
    """Distance from each instance to its k-th nearest other instance.

    ``inf`` where fewer than k others exist.
    """
    n = len(ids)
    if n - 1 < k:
        return np.full(n, np.inf)
    table = neighbor_table(D, ids, k)
    return D[np.arange(n), table[:, -1]]


class QueryMutuality:
    """Mutual neighbor sets of outside queries against a fixed training set.

    A training instance x_i accepts the query when the query would enter
    x_i's k nearest if it were added to the candidates, i.e. when it is
    strictly closer than x_i's current k-th nearest training neighbor
    (the query loses ties).
    """

    def __init__(self, train: Dataset, k: int, algorithm: str = "auto"):
        if len(train) == 0:
            raise ValueError("empty training set")
        self.k = k
        self.index = NeighborIndex.from_dataset(train, algorithm)
        self.radius = kth_radius(distance_matrix(train), train.ids, k)
        self._pos = {int(t): p for p, t in enumerate(train.ids)}

    def knn(self, x) -> tuple[np.ndarray, np.ndarray]:
        return self.index.query(_features(x), self.k)

    def mutual(self, x) -> MutualSet:
        ids, d = self.knn(x)
        return self.mutual_from_knn(ids, d, x.id if isinstance(x, Instance) else None)

    def mutual_from_knn(self, ids, d, query_id=None) -> MutualSet:
        keep = d < self.radius[[self._pos[int(t)] for t in ids]]
        return MutualSet(query_id, ids[keep], d[keep])


def mutual_neighbors_of_query(x_t, train: Dataset, k: int, algorithm: str = "brute") -> MutualSet:
    return QueryMutuality(train, k, algorithm).mutual(x_t)
