"""
Exact percolation expectations on small weighted graphs by summing over all
2^E configurations.

Configurations are the integers 0..2^E-1 (bit e = state of edge e). Cluster
bitmasks come from OR-propagation along open edges until nothing changes;
chemical distances from the root from a layer-synchronous BFS on bitmasks.
"""

import itertools
import logging
import math
from dataclasses import asdict, dataclass, field
from functools import cached_property

import networkx as nx
import numpy as np
from networkx.algorithms import isomorphism

from .errors import OracleError
from .kernel import KernelSpec

logger = logging.getLogger(__name__)

MAX_EDGES = 20
MAX_VERTICES = 12
MAX_POWER = 5

_POPCOUNT = np.array([bin(i).count("1") for i in range(1 << MAX_VERTICES)], dtype=np.int64)


@dataclass(frozen=True)
class SmallWeightedGraph:
    n: int
    edges: tuple
    weights: tuple
    root: int = 0
    name: str = "graph"
    positions: tuple = None

    def __post_init__(self):
        if not 1 <= self.n <= MAX_VERTICES:
            raise OracleError(f"graphs are capped at {MAX_VERTICES} vertices, got {self.n}")
        if len(self.edges) > MAX_EDGES:
            raise OracleError(f"graphs are capped at {MAX_EDGES} edges, got {len(self.edges)}", len(self.edges))
        if len(self.edges) != len(self.weights):
            raise OracleError("every edge needs exactly one weight", len(self.edges))
        seen = set()
        for a, b in self.edges:
            if not (0 <= a < self.n and 0 <= b < self.n) or a == b:
                raise OracleError(f"invalid edge ({a}, {b})", len(self.edges))
            key = (min(a, b), max(a, b))
            if key in seen:
                raise OracleError(f"duplicate edge {key}", len(self.edges))
            seen.add(key)
        for w in self.weights:
            if not (math.isfinite(w) and w > 0):
                raise OracleError(f"edge weights must be finite and positive, got {w}", len(self.edges))
        if not 0 <= self.root < self.n:
            raise OracleError(f"root {self.root} is not a vertex")

    @property
    def n_edges(self):
        return len(self.edges)

    def degree_weights(self):
        """Total weight of edges at each vertex"""
        out = np.zeros(self.n)
        for (a, b), w in zip(self.edges, self.weights):
            out[a] += w
            out[b] += w
        return out

    @property
    def max_degree_weight(self):
        """|J*|: supremal total weight of edges at a vertex"""
        return float(self.degree_weights().max()) if self.n_edges else 0.0

    def to_networkx(self):
        G = nx.Graph()
        G.add_nodes_from(range(self.n))
        for (a, b), w in zip(self.edges, self.weights):
            G.add_edge(a, b, weight=w)
        return G

    @cached_property
    def is_transitive(self):
        """True when an automorphism preserving weights maps the root to every vertex"""
        G = self.to_networkx()
        edge_match = isomorphism.numerical_edge_match("weight", 1.0, rtol=1e-9)
        for v in range(self.n):
            G1, G2 = G.copy(), G.copy()
            nx.set_node_attributes(G1, {u: u == self.root for u in G1}, "mark")
            nx.set_node_attributes(G2, {u: u == v for u in G2}, "mark")
            matcher = isomorphism.GraphMatcher(G1, G2, node_match=isomorphism.categorical_node_match("mark", False),
                                               edge_match=edge_match)
            if not matcher.is_isomorphic():
                return False
        return True

    def to_dict(self):
        return {"name": self.name, "n": self.n, "edges": [list(e) for e in self.edges],
                "weights": list(self.weights), "root": self.root}


class Enumeration:
    """All configurations of a graph at one beta, with per-configuration cluster data."""

    def __init__(self, g: SmallWeightedGraph, beta):
        if beta < 0:
            raise OracleError(f"beta must be nonnegative, got {beta}")
        self.g = g
        self.beta = float(beta)
        E = g.n_edges
        self.omega = np.arange(1 << E, dtype=np.int64)
        self.bits = [((self.omega >> e) & 1).astype(bool) for e in range(E)]
        J = np.asarray(g.weights, dtype=float)
        self.p = -np.expm1(-self.beta * J)
        self.dp = J * np.exp(-self.beta * J)
        prob = np.ones(len(self.omega))
        for e in range(E):
            prob *= np.where(self.bits[e], self.p[e], 1.0 - self.p[e])
        self.prob = prob
        self.masks = self._component_masks()
        self.sizes = _POPCOUNT[self.masks]

    def _component_masks(self):
        n = self.g.n
        masks = np.empty((n, len(self.omega)), dtype=np.int64)
        for v in range(n):
            masks[v] = 1 << v
        changed = True
        while changed:
            changed = False
            for e, (a, b) in enumerate(self.g.edges):
                merged = masks[a] | masks[b]
                open_e = self.bits[e]
                upd_a = open_e & (merged != masks[a])
                upd_b = open_e & (merged != masks[b])
                if upd_a.any() or upd_b.any():
                    changed = True
                    masks[a] = np.where(open_e, merged, masks[a])
                    masks[b] = np.where(open_e, merged, masks[b])
        return masks

    @property
    def total_mass(self):
        return float(math.fsum(self.prob))

    def expect(self, values):
        return float(np.dot(self.prob, values))

    def connected(self, x, y):
        return ((self.masks[x] >> y) & 1).astype(bool)

    def chemical_layers(self, source=None):
        """Per configuration, the number of vertices at each chemical distance k >= 1 from source"""
        source = self.g.root if source is None else source
        frontier = np.full(len(self.omega), 1 << source, dtype=np.int64)
        visited = frontier.copy()
        layers = []
        for _ in range(self.g.n - 1):
            reach = np.zeros_like(frontier)
            for e, (a, b) in enumerate(self.g.edges):
                open_e = self.bits[e]
                reach |= np.where(open_e & (((frontier >> a) & 1) == 1), 1 << b, 0)
                reach |= np.where(open_e & (((frontier >> b) & 1) == 1), 1 << a, 0)
            frontier = reach & ~visited
            if not frontier.any():
                break
            visited |= frontier
            layers.append(_POPCOUNT[frontier])
        return layers

    def chemical_sum(self, q, source=None):
        """per configuration: sum over x in K of d_chem(source, x)^q"""
        total = np.zeros(len(self.omega))
        for k, count in enumerate(self.chemical_layers(source), start=1):
            total += count * float(k) ** q
        return total

    def beta_derivative(self, values):
        """d/dbeta E f by the pivotal decomposition over edges"""
        total = 0.0
        for e in range(self.g.n_edges):
            flip = self.omega ^ (1 << e)
            on = self.bits[e]
            pivotal = (self.prob[on] + self.prob[flip[on]]) * (values[on] - values[flip[on]])
            total += self.dp[e] * math.fsum(pivotal)
        return total


@dataclass
class ExactReport:
    graph: str
    beta: float
    root: int
    mass: float
    moments: dict = field(default_factory=dict)
    truncated: dict = field(default_factory=dict)
    tau: dict = field(default_factory=dict)
    tau_all: dict = field(default_factory=dict)
    disjoint_products: dict = field(default_factory=dict)
    corrections: dict = field(default_factory=dict)
    chemical: dict = field(default_factory=dict)
    derivatives: dict = field(default_factory=dict)

    def to_dict(self):
        return {k: ({str(kk): vv for kk, vv in v.items()} if isinstance(v, dict) else v)
                for k, v in asdict(self).items()}


def observable_values(enum: Enumeration, name):
    """
    Per-configuration values of a named observable of the root cluster:
    moment:p, truncated:m, tau:x, chem:q, size_at:v.
    """
    kind, _, arg = name.partition(":")
    root = enum.g.root
    size = enum.sizes[root].astype(float)
    if kind == "moment":
        return size ** int(arg)
    if kind == "truncated":
        return np.minimum(size, float(arg))
    if kind == "tau":
        return enum.connected(root, int(arg)).astype(float)
    if kind == "chem":
        return enum.chemical_sum(int(arg))
    if kind == "size_at":
        return enum.sizes[int(arg)].astype(float)
    if kind == "constant":
        return np.full(len(enum.omega), float(arg or 1.0))
    raise OracleError(f"unknown observable {name!r}")


def exact_expectations(g: SmallWeightedGraph, beta, observables=None, triples=(), corrections=(1, 2)):
    """
    ExactReport for the root cluster. `observables` restricts the derivative
    table to the named observables (all moments and truncations when None).
    """
    enum = Enumeration(g, beta)
    root = g.root
    size = enum.sizes[root].astype(float)
    report = ExactReport(g.name, float(beta), root, enum.total_mass)
    for p in range(1, MAX_POWER + 1):
        report.moments[p] = enum.expect(size ** p)
    for m in range(1, g.n + 1):
        report.truncated[m] = enum.expect(np.minimum(size, m))
    for x in range(g.n):
        report.tau[x] = enum.expect(enum.connected(root, x))
    for points in triples:
        joint = np.ones(len(enum.omega), dtype=bool)
        for x in points:
            joint &= enum.connected(root, x)
        report.tau_all[tuple(points)] = enum.expect(joint)
    mean_root = report.moments[1]
    for y in range(g.n):
        size_y = enum.sizes[y].astype(float)
        apart = ~enum.connected(root, y)
        report.disjoint_products[y] = enum.expect(size * size_y * apart)
        for k in corrections:
            report.corrections[(k, y)] = mean_root * enum.expect(size_y ** k) - enum.expect(size * size_y ** k * apart)
    for q in (1, 2):
        report.chemical[q] = enum.expect(enum.chemical_sum(q))
    names = observables or [f"moment:{p}" for p in (1, 2)] + [f"truncated:{m}" for m in range(1, g.n + 1)]
    for name in names:
        report.derivatives[name] = enum.beta_derivative(observable_values(enum, name))
    return report


def exact_beta_derivative(g: SmallWeightedGraph, beta, observable):
    """Russo derivative d/dbeta E f for a named observable (or a callable of the enumeration)"""
    enum = Enumeration(g, beta)
    values = observable(enum) if callable(observable) else observable_values(enum, observable)
    return enum.beta_derivative(np.asarray(values, dtype=float))


def finite_difference_derivative(g: SmallWeightedGraph, beta, observable, step=1e-6):
    def mean(b):
        enum = Enumeration(g, b)
        values = observable(enum) if callable(observable) else observable_values(enum, observable)
        return enum.expect(values)
    lo = max(beta - step, 0.0)
    return (mean(beta + step) - mean(lo)) / (beta + step - lo)


# -- instances ----------------------------------------------------------------------

def single_edge(weight=1.0):
    return SmallWeightedGraph(2, ((0, 1),), (float(weight),), name="single-edge")


def triangle(weight=1.0):
    return SmallWeightedGraph(3, ((0, 1), (1, 2), (0, 2)), (float(weight),) * 3, name="triangle")


def cycle(n, weight=1.0):
    edges = tuple((i, (i + 1) % n) for i in range(n))
    return SmallWeightedGraph(n, edges, (float(weight),) * n, name=f"C{n}")


def complete(n, weight=1.0):
    edges = tuple(itertools.combinations(range(n), 2))
    return SmallWeightedGraph(n, edges, (float(weight),) * len(edges), name=f"K{n}")


def long_range_box(L, r, alpha=1.0 / 3.0, d=1, scale=1.0):
    """d = 1 torus Z_L with cut-off kernel weights J_r (minimal-image distance)"""
    if d != 1:
        raise OracleError("long-range oracle boxes are one-dimensional")
    spec = KernelSpec(d=1, alpha=alpha)
    # edges with 2k = r carry zero weight and are left out
    k_max = int(math.ceil(r / 2)) - 1
    if L < 2 * k_max + 2:
        raise OracleError(f"box L={L} too small for r={r}")
    edges, weights = [], []
    for a in range(L):
        for k in range(1, k_max + 1):
            b = (a + k) % L
            edges.append((a, b))
            weights.append(scale * float(spec.cutoff_kernel(2.0 * k, r)))
    positions = tuple((a if a < L // 2 else a - L,) for a in range(L))
    return SmallWeightedGraph(L, tuple(edges), tuple(weights), name=f"LR(L={L},r={r:g})", positions=positions)


def builtin_instances():
    """The fixed oracle instances: single edge, triangle, C6, K4 and a 10-vertex long-range box"""
    return [single_edge(), triangle(), cycle(6), complete(4), long_range_box(10, 5.0, scale=4.0)]


def random_instances(count, seed=0):
    """Cycles, complete graphs, long-range boxes and randomly weighted graphs"""
    rng = np.random.default_rng(seed)
    out = []
    for i in range(count):
        kind = i % 4
        if kind == 0:
            out.append(cycle(int(rng.integers(3, 9)), weight=float(rng.uniform(0.5, 2.0))))
        elif kind == 1:
            out.append(complete(int(rng.integers(3, 7)), weight=float(rng.uniform(0.5, 2.0))))
        elif kind == 2:
            L = int(rng.choice([6, 8, 10]))
            out.append(long_range_box(L, 5.0, alpha=float(rng.choice([1 / 3, 2 / 3, 1.0])),
                                      scale=float(rng.uniform(1.0, 8.0))))
        else:
            n = int(rng.integers(4, 9))
            pairs = list(itertools.combinations(range(n), 2))
            chosen = rng.choice(len(pairs), size=min(len(pairs), int(rng.integers(n - 1, 2 * n))), replace=False)
            edges = tuple(pairs[j] for j in sorted(chosen))
            weights = tuple(float(w) for w in rng.uniform(0.2, 3.0, size=len(edges)))
            out.append(SmallWeightedGraph(n, edges, weights, root=int(rng.integers(0, n)), name=f"random-{i}"))
    return out
