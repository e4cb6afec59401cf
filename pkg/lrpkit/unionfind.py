import numpy as np
from numba import njit


class WeightedQuickUnion:
    """Union-find over vertices 0..n-1.

    Notes:
        Weighted by size with path halving; kernels are jitted with numba.
    """

    def __init__(self, n):
        self.id = np.arange(n, dtype=np.int64)
        self.sz = np.ones((n,), dtype=np.int64)

    def find(self, p):
        return find_jit(self.id, p)

    def union(self, p, q):
        union_jit(self.id, self.sz, p, q)

    def union_edges(self, a, b):
        """Merge every pair (a[i], b[i])"""
        union_edges_jit(self.id, self.sz, np.asarray(a, dtype=np.int64), np.asarray(b, dtype=np.int64))

    def roots(self):
        return roots_jit(self.id)

    def labels(self):
        """Cluster labels 0..k-1 numbered by first appearance (stable under relabeling)"""
        _, first_seen, inverse = np.unique(self.roots(), return_index=True, return_inverse=True)
        rank = np.empty(len(first_seen), dtype=np.int64)
        rank[np.argsort(first_seen)] = np.arange(len(first_seen))
        return rank[inverse.ravel()]

    def sizes(self):
        """Size of the cluster of every vertex"""
        roots = self.roots()
        return np.bincount(roots, minlength=len(roots))[roots]


@njit(cache=True)
def find_jit(ids, p):
    j = p
    while j != ids[j]:
        # path halving
        ids[j] = ids[ids[j]]
        j = ids[j]
    return j


@njit(cache=True)
def union_jit(ids, sz, p, q):
    idp = find_jit(ids, p)
    idq = find_jit(ids, q)
    if idp != idq:
        if sz[idp] < sz[idq]:
            ids[idp] = idq
            sz[idq] += sz[idp]
        else:
            ids[idq] = idp
            sz[idp] += sz[idq]


@njit(cache=True)
def union_edges_jit(ids, sz, a, b):
    for i in range(len(a)):
        union_jit(ids, sz, a[i], b[i])


@njit(cache=True)
def roots_jit(ids):
    count = len(ids)
    roots = np.zeros(count, dtype=np.int64)
    for k in range(count):
        roots[k] = find_jit(ids, k)
    return roots
