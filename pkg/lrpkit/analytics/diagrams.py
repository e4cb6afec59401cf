"""
Tree diagrams with labelled leaves and unlabelled cubic internal vertices.

Trees are grown by leaf insertion. A planted tree carries one extra unlabelled
root leaf next to the labelled leaves 0..n; planted trees with n+1 labelled
leaves number (2n-1)!!, and their diagram constants are the size-biased
moments. Unplanted trees (leaves 0..n only) number (2n-3)!!.
"""

import itertools
import logging
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..errors import KernelError

logger = logging.getLogger(__name__)

MAX_LEAVES = 7
ROOT = "root"


def double_factorial(n):
    return math.prod(range(n, 0, -2)) if n > 0 else 1


@dataclass(frozen=True)
class DiagramTree:
    """
    Leaves are 0..n; vertex n+1 is the planted root leaf when `planted`;
    internal vertices follow.
    """
    n: int
    edges: tuple
    planted: bool = True

    @property
    def n_vertices(self):
        return len(self.edges) + 1

    @property
    def leaves(self):
        return tuple(range(self.n + 1))

    def adjacency(self):
        adj = {v: [] for v in range(self.n_vertices)}
        for a, b in self.edges:
            adj[a].append(b)
            adj[b].append(a)
        return adj

    def canonical_form(self):
        """String invariant under relabelling internal vertices, rooted at leaf 0"""
        adj = self.adjacency()
        n_labelled = self.n + 1

        def label(v, parent):
            if v < n_labelled:
                own = str(v)
            elif self.planted and v == n_labelled:
                own = ROOT
            else:
                own = ""
            children = sorted(label(w, v) for w in adj[v] if w != parent)
            return f"{own}({','.join(children)})" if children else own

        return label(0, None)

    def paths_from_root(self):
        """For every leaf i >= 1, the edge indices on the path from leaf 0"""
        adj = {v: [] for v in range(self.n_vertices)}
        for idx, (a, b) in enumerate(self.edges):
            adj[a].append((b, idx))
            adj[b].append((a, idx))
        path = {0: ()}
        stack = [0]
        while stack:
            v = stack.pop()
            for w, idx in adj[v]:
                if w not in path:
                    path[w] = path[v] + (idx,)
                    stack.append(w)
        return {i: path[i] for i in range(1, self.n + 1)}


def _insert(edges, leaf, new_vertex):
    for idx, (a, b) in enumerate(edges):
        rest = edges[:idx] + edges[idx + 1:]
        yield rest + ((a, new_vertex), (new_vertex, b), (new_vertex, leaf))


def enumerate_trees(n, planted=True):
    """All trees with labelled leaves 0..n, one per isomorphism class."""
    if not 1 <= n <= MAX_LEAVES:
        raise KernelError(f"tree enumeration supports 1 <= n <= {MAX_LEAVES}, got {n}")
    return list(_enumerate(n, planted))


@lru_cache(maxsize=None)
def _enumerate(n, planted):
    if planted:
        # vertex ids are relabelled at the end
        root = "r"
        forms = [((root, 0),)]
        first = 1
    else:
        forms = [((0, 1),)]
        first = 2
    counter = itertools.count()
    for leaf in range(first, n + 1):
        grown = []
        for edges in forms:
            grown.extend(_insert(edges, leaf, ("i", next(counter))))
        forms = grown
    trees = {}
    for edges in forms:
        tree = _relabel(n, edges, planted)
        trees.setdefault(tree.canonical_form(), tree)
    if len(trees) != len(forms):
        raise KernelError("leaf insertion produced isomorphic duplicates")
    logger.debug("enumerated %d trees for n=%d (planted=%s)", len(trees), n, planted)
    return tuple(trees.values())


def _relabel(n, edges, planted):
    mapping = {i: i for i in range(n + 1)}
    nxt = n + 1
    if planted:
        mapping["r"] = nxt
        nxt += 1
    for a, b in edges:
        for v in (a, b):
            if v not in mapping:
                mapping[v] = nxt
                nxt += 1
    return DiagramTree(n, tuple((mapping[a], mapping[b]) for a, b in edges), planted)


def tree_count(n, planted=True):
    return double_factorial(2 * n - 1) if planted else double_factorial(2 * n - 3)


def _tree_moment(tree, monomials, kappa):
    """E prod_i P_i(X_i), X_i the sum of independent kappa displacements along the path to leaf i"""
    paths = tree.paths_from_root()
    factors = []
    for i, P in enumerate(monomials, start=1):
        for u in P.directions:
            factors.append((u, paths[i]))
    if not factors:
        return 1.0
    if any(not path for _, path in factors):
        return 0.0
    total = 0.0
    for choice in itertools.product(*(path for _, path in factors)):
        per_edge = {}
        for (u, _), e in zip(factors, choice):
            per_edge.setdefault(e, []).append(u)
        term = 1.0
        for dirs in per_edge.values():
            term *= kappa.direction_moment(tuple(sorted(dirs)))
            if term == 0.0:
                break
        total += term
    return total


def _check_monomials(n, monomials, d):
    if len(monomials) != n:
        raise KernelError(f"expected {n} monomials, got {len(monomials)}")
    if sum(P.degree for P in monomials) > 8:
        raise KernelError("total monomial degree is capped at 8")
    if any(P.d != d for P in monomials):
        raise KernelError("monomial dimension does not match the kernel")


def diagram_moment(n, monomials, kappa, planted=True):
    """sum over trees of E prod_{i=1..n} P_i(X_i), from the exact kappa moment tables"""
    _check_monomials(n, monomials, kappa.d)
    return math.fsum(_tree_moment(tree, monomials, kappa) for tree in enumerate_trees(n, planted))


def diagram_moment_mc(n, monomials, kappa, samples=100_000, seed=0, planted=True):
    """Monte Carlo version of `diagram_moment`; returns (value, stderr)"""
    _check_monomials(n, monomials, kappa.d)
    sampler = kappa.sampler(seed)
    values = np.zeros(samples)
    for tree in enumerate_trees(n, planted):
        steps = sampler.sample(samples * len(tree.edges)).reshape(len(tree.edges), samples, kappa.d)
        prod = np.ones(samples)
        for i, path in tree.paths_from_root().items():
            position = steps[list(path)].sum(axis=0) if path else np.zeros((samples, kappa.d))
            prod *= monomials[i - 1].evaluate(position)
        values += prod
    return float(values.mean()), float(values.std(ddof=1) / math.sqrt(samples))
