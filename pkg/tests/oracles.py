"""Pure-Python reference implementations used as test oracles.

Nothing here touches numpy or the package's search code.  Distances sum
squared differences left to right, which is the same IEEE operation order
the package uses, so results can be compared exactly.
"""

import math

QUERY_ID = math.inf  # an outside query ranks after every training id


def dist(a, b):
    s = 0.0
    for x, y in zip(a, b):
        d = x - y
        s += d * d
    return math.sqrt(s)


def knn(points, ids, q, k, exclude=None):
    """[(id, distance)] of the k nearest, ties by ascending id."""
    cand = [(dist(q, p), i) for p, i in zip(points, ids) if i != exclude]
    cand.sort()
    return [(i, d) for d, i in cand[:k]]


def knn_ids(points, ids, pos, k):
    return {i for i, _ in knn(points, ids, points[pos], k, exclude=ids[pos])}


def mutual(points, ids, pos, k):
    """Mutual k-neighbors of points[pos] within the set, as [(id, distance)]."""
    me = ids[pos]
    out = []
    for j, d in knn(points, ids, points[pos], k, exclude=me):
        if me in knn_ids(points, ids, ids.index(j), k):
            out.append((j, d))
    return out


def mutual_query(points, ids, q, k):
    """Mutual set of an outside query, inserting it when testing the reverse direction."""
    out = []
    for j, d in knn(points, ids, q, k):
        pj = points[ids.index(j)]
        others = [(dist(pj, p), i) for p, i in zip(points, ids) if i != j]
        others.append((dist(pj, q), QUERY_ID))
        others.sort()
        if QUERY_ID in [i for _, i in others[:k]]:
            out.append((j, d))
    return out


def noise_removed(points, ids, k):
    return {ids[p] for p in range(len(ids)) if not mutual(points, ids, p, k)}
