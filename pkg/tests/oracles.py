"""Reference implementations used only by tests.

They deliberately take different routes from the library: dense
Floyd-Warshall instead of BFS, repeated squaring of the reachability matrix
instead of traversal, and an O(n^2) distance scan instead of vectorized
feasibility.
"""
import math

import numpy as np


def dense_adjacency(nodes, edges):
    index = {n: k for k, n in enumerate(nodes)}
    a = np.zeros((len(nodes), len(nodes)), dtype=bool)
    for i, j in edges:
        a[index[i], index[j]] = a[index[j], index[i]] = True
    return a, index


def reachability(nodes, edges):
    a, _ = dense_adjacency(nodes, edges)
    r = a | np.eye(len(nodes), dtype=bool)
    while True:
        nxt = (r.astype(np.int64) @ r.astype(np.int64)) > 0
        if (nxt == r).all():
            return r
        r = nxt


def lcc_fraction_oracle(nodes, edges):
    r = reachability(nodes, edges)
    return r.sum(axis=1).max() / len(nodes)


def apl_oracle(nodes, edges):
    """Mean shortest-path length over ordered pairs within the largest component."""
    n = len(nodes)
    a, _ = dense_adjacency(nodes, edges)
    d = np.where(a, 1.0, np.inf)
    np.fill_diagonal(d, 0.0)
    for k in range(n):
        d = np.minimum(d, d[:, [k]] + d[[k], :])
    sizes = np.isfinite(d).sum(axis=1)
    # first row achieving the max picks one largest component
    row = int(np.argmax(sizes))
    members = np.flatnonzero(np.isfinite(d[row]))
    sub = d[np.ix_(members, members)]
    k = len(members)
    return sub.sum() / (k * (k - 1))


def feasible_pairs_oracle(nodes):
    """nodes: list of (id, kind, (x, y), range). Returns the set of feasible unordered id pairs."""
    out = set()
    for a in range(len(nodes)):
        for b in range(a + 1, len(nodes)):
            ia, ka, pa, ra = nodes[a]
            ib, kb, pb, rb = nodes[b]
            dist = math.sqrt((pa[0] - pb[0]) ** 2 + (pa[1] - pb[1]) ** 2)
            if ka == "RSU" or kb == "RSU":
                limit = max(r for k, r in ((ka, ra), (kb, rb)) if k == "RSU")
            else:
                limit = min(ra, rb)
            if dist <= limit:
                out.add((min(ia, ib), max(ia, ib)))
    return out
