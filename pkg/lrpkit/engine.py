"""
Cluster sampling on finite tori and small weighted graphs.

All samplers read edge states from counter-based per-pair exponentials
(see `lrpkit.rng`): the pair {v, w} is open at inverse temperature beta iff
beta * J(v, w) >= E(v, w). One replica is therefore one fixed configuration,
shared by every exploration mode and every rung of a (beta, r) ladder.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import shortest_path

from . import rng
from .errors import BoxTooSmallError, EngineError, LadderError, MemoryBudgetError
from .kernel import KernelSpec
from .unionfind import WeightedQuickUnion

logger = logging.getLogger(__name__)

VERTEX_SET = "vertex-set"
WITH_CHEMICAL = "with-chemical"
MODES = (VERTEX_SET, WITH_CHEMICAL)

DEFAULT_PAIR_BUDGET = 50_000_000


@dataclass(frozen=True)
class TorusBox:
    L: int
    d: int

    def __post_init__(self):
        if self.d < 1:
            raise EngineError(f"dimension must be positive, got d={self.d}")
        if self.L < 2:
            raise BoxTooSmallError(self.L, None, 2)

    @property
    def n_vertices(self):
        return self.L ** self.d

    def check(self, r):
        if math.isfinite(r) and self.L < 2 * int(math.floor(r / 2)) + 2:
            raise BoxTooSmallError(self.L, r, 2 * int(math.floor(r / 2)) + 2)


@dataclass(frozen=True)
class ReplicaStream:
    """Randomness of one replica: (master seed, replica index)"""
    seed: int
    replica: int

    def key(self, tag=0):
        return rng.replica_key(self.seed, self.replica, tag)


def lattice_radius(r, L):
    """Largest max-coordinate offset within norm r; r=inf stops below L/2, leaving out the antipodal shell"""
    if math.isinf(r):
        return L // 2 - 1
    return int(math.floor(r / 2))


class TorusLattice:
    """Torus Z_L^d carrying the cut-off kernel J_r with minimal-image distances."""

    def __init__(self, spec: KernelSpec, r, box: TorusBox):
        if not r > 0:
            raise EngineError(f"cut-off radius must be positive, got {r}")
        if box.d != spec.d:
            raise EngineError(f"box dimension {box.d} does not match kernel dimension {spec.d}")
        box.check(r)
        self.spec = spec
        self.r = float(r)
        self.box = box
        self.L = box.L
        self.d = box.d
        self.n_vertices = box.n_vertices
        self.k_max = lattice_radius(r, box.L)
        self._build_offsets()

    def _build_offsets(self):
        k = self.k_max
        if k < 1:
            self.offsets = np.zeros((0, self.d), dtype=np.int64)
            self.dist = np.zeros(0)
            self.weights = np.zeros(0)
            self.shells = []
            return
        axis = np.arange(-k, k + 1)
        grids = np.meshgrid(*([axis] * self.d), indexing="ij")
        offsets = np.stack([g.ravel() for g in grids], axis=-1)
        shell = np.max(np.abs(offsets), axis=1)
        offsets, shell = offsets[shell > 0], shell[shell > 0]
        # group by shell, lexicographic inside a shell
        order = np.lexsort(tuple(offsets[:, i] for i in range(self.d - 1, -1, -1)) + (shell,))
        self.offsets = offsets[order]
        shell = shell[order]
        self.dist = 2.0 * shell
        self.weights = np.asarray(self.spec.cutoff_kernel(self.dist, self.r), dtype=float)
        bounds = np.flatnonzero(np.diff(shell)) + 1
        starts = np.concatenate([[0], bounds])
        stops = np.concatenate([bounds, [len(shell)]])
        self.shells = [(int(a), int(b), float(self.dist[a])) for a, b in zip(starts, stops)]

    @cached_property
    def _half_offsets(self):
        """One offset of each +/- pair (first nonzero coordinate positive)"""
        first = np.zeros(len(self.offsets), dtype=np.int64)
        for i in range(self.d - 1, -1, -1):
            col = self.offsets[:, i]
            first = np.where(col != 0, col, first)
        return first > 0

    def coords(self, v):
        return np.stack(np.unravel_index(np.asarray(v), (self.L,) * self.d), axis=-1)

    def index(self, coords):
        coords = np.mod(np.asarray(coords, dtype=np.int64), self.L)
        return np.ravel_multi_index(tuple(np.moveaxis(coords, -1, 0)), (self.L,) * self.d)

    def neighbours(self, v):
        """Candidate partners of v and the kernel weight of each pair"""
        w = self.index(self.coords(v) + self.offsets)
        return np.atleast_1d(w), self.weights

    def displacements(self, origin, vertices):
        """Minimal-image displacements, coordinates in [-L/2, L/2)"""
        delta = self.coords(vertices) - self.coords(origin)
        return np.mod(delta + self.L // 2, self.L) - self.L // 2

    def norms(self, displacements):
        return 2 * np.max(np.abs(displacements), axis=-1) if len(displacements) else np.zeros(0)

    @property
    def pair_count(self):
        return self.n_vertices * len(self.offsets) // 2

    def pair_blocks(self):
        """Every unordered candidate pair exactly once, one offset at a time"""
        all_v = np.arange(self.n_vertices)
        base = self.coords(all_v)
        for off, weight in zip(self.offsets[self._half_offsets], self.weights[self._half_offsets]):
            yield all_v, self.index(base + off), np.full(self.n_vertices, weight)


class GraphSubstrate:
    """A small weighted graph seen through the same interface as the torus."""

    def __init__(self, n_vertices, edges, weights, positions=None):
        self.n_vertices = int(n_vertices)
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        self.edge_a, self.edge_b = edges[:, 0], edges[:, 1]
        self.edge_w = np.asarray(weights, dtype=float)
        self.positions = (
            np.zeros((self.n_vertices, 1), dtype=np.int64) if positions is None
            else np.asarray(positions, dtype=np.int64)
        )
        self.d = self.positions.shape[1]
        self.shells = None
        nbr = [[] for _ in range(self.n_vertices)]
        for a, b, w in zip(self.edge_a, self.edge_b, self.edge_w):
            nbr[a].append((b, w))
            nbr[b].append((a, w))
        self._nbr = [
            (np.array([x for x, _ in lst], dtype=np.int64), np.array([w for _, w in lst], dtype=float))
            for lst in nbr
        ]

    @classmethod
    def from_graph(cls, graph):
        return cls(graph.n, graph.edges, graph.weights, graph.positions)

    def neighbours(self, v):
        return self._nbr[int(v)]

    def displacements(self, origin, vertices):
        return self.positions[np.asarray(vertices)] - self.positions[origin]

    def norms(self, displacements):
        return 2 * np.max(np.abs(displacements), axis=-1) if len(displacements) else np.zeros(0)

    def index(self, coords):
        raise EngineError("graph substrates address vertices by index only")

    @property
    def pair_count(self):
        return len(self.edge_w)

    def pair_blocks(self):
        yield self.edge_a, self.edge_b, self.edge_w


@dataclass
class ClusterStats:
    """Exact statistics of one explored cluster (origin first in `vertices`)."""
    origin: int
    vertices: np.ndarray
    displacements: np.ndarray
    chem: np.ndarray = None
    internal_edges: int = None

    @property
    def size(self):
        return int(len(self.vertices))

    @cached_property
    def members(self):
        return np.sort(self.vertices)

    @cached_property
    def norms(self):
        return 2 * np.max(np.abs(self.displacements), axis=-1)

    def contains(self, v):
        i = np.searchsorted(self.members, v)
        return bool(i < len(self.members) and self.members[i] == v)

    def box_count(self, rho):
        return int(np.count_nonzero(self.norms <= rho))

    def box_counts(self, rhos):
        return {rho: self.box_count(rho) for rho in rhos}

    def spatial_moment(self, p, u):
        """sum over x in K of <x, u>^p"""
        proj = self.displacements @ np.asarray(u, dtype=float)
        return float(np.sum(proj ** p))

    def norm_moment(self, p):
        return float(np.sum(self.norms.astype(float) ** p))

    def chem_moment(self, q, p=0):
        """sum over x in K of d_chem(0, x)^q ||x||^p"""
        if self.chem is None:
            raise EngineError("chemical distances need with-chemical exploration")
        return float(np.sum(self.chem.astype(float) ** q * self.norms.astype(float) ** p))

    def truncated(self, m):
        return min(self.size, m)

    def truncations(self, ms):
        return {m: self.truncated(m) for m in ms}


def _bfs(substrate, beta, origin, key, blocked=None):
    """Breadth-first exploration; returns vertices in BFS order and their depths."""
    n = substrate.n_vertices
    seen = np.zeros(n, dtype=bool) if blocked is None else blocked.copy()
    seen[origin] = True
    order = [int(origin)]
    depth = [0]
    head = 0
    while head < len(order) and beta > 0:
        v, dv = order[head], depth[head]
        head += 1
        w, J = substrate.neighbours(v)
        free = ~seen[w]
        if not free.any():
            continue
        w, J = w[free], J[free]
        e = rng.pair_exponentials(key, rng.pair_keys(v, w, n))
        new = w[beta * J >= e]
        if len(new):
            seen[new] = True
            order.extend(new.tolist())
            depth.extend([dv + 1] * len(new))
    return np.asarray(order, dtype=np.int64), np.asarray(depth, dtype=np.int64)


def _bfs_skip(substrate, beta, origin, stream: ReplicaStream):
    """Vertex-set exploration with geometric skips inside each shell."""
    n = substrate.n_vertices
    seen = np.zeros(n, dtype=bool)
    seen[origin] = True
    order, depth, head = [int(origin)], [0], 0
    probs = [(a, b, -math.expm1(-beta * substrate.weights[a])) for a, b, _ in substrate.shells]
    while head < len(order) and beta > 0:
        v, dv = order[head], depth[head]
        head += 1
        gen = rng.philox_generator(stream.seed, stream.replica, stream=v)
        w_all, _ = substrate.neighbours(v)
        hits = []
        for a, b, p in probs:
            if p <= 0:
                continue
            size = b - a
            pos = -1
            while True:
                pos += int(gen.geometric(p))
                if pos >= size:
                    break
                hits.append(a + pos)
        if not hits:
            continue
        cand = w_all[np.asarray(hits, dtype=np.int64)]
        new = np.unique(cand[~seen[cand]])
        if len(new):
            seen[new] = True
            order.extend(new.tolist())
            depth.extend([dv + 1] * len(new))
    return np.asarray(order, dtype=np.int64), np.asarray(depth, dtype=np.int64)


def _chemical(substrate, beta, vertices, key):
    """Decide every pair inside the cluster; return (d_chem per vertex, open edge count)."""
    n = substrate.n_vertices
    local = {int(v): i for i, v in enumerate(vertices)}
    inside = np.zeros(n, dtype=bool)
    inside[vertices] = True
    rows, cols = [], []
    for i, v in enumerate(vertices):
        w, J = substrate.neighbours(v)
        keep = inside[w] & (w > v)
        if not keep.any():
            continue
        w, J = w[keep], J[keep]
        e = rng.pair_exponentials(key, rng.pair_keys(v, w, n))
        for x in w[beta * J >= e]:
            rows.append(i)
            cols.append(local[int(x)])
    size = len(vertices)
    adjacency = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(size, size)).tocsr()
    dist = shortest_path(adjacency, directed=False, unweighted=True, indices=0)
    return dist.astype(np.int64), len(rows)


def explore(substrate, beta, origin, stream: ReplicaStream, mode=VERTEX_SET, tag=0,
            blocked=None, skip_sampling=False):
    """Cluster of `origin` in configuration `tag` of the replica, avoiding `blocked` vertices."""
    if mode not in MODES:
        raise EngineError(f"unknown exploration mode {mode!r}")
    if skip_sampling:
        if mode != VERTEX_SET or blocked is not None or substrate.shells is None:
            raise EngineError("skip sampling is only available for plain vertex-set exploration on a torus")
        vertices, depth = _bfs_skip(substrate, beta, origin, stream)
    else:
        vertices, depth = _bfs(substrate, beta, origin, stream.key(tag), blocked)
    disp = substrate.displacements(origin, vertices)
    if mode == WITH_CHEMICAL:
        chem, n_edges = _chemical(substrate, beta, vertices, stream.key(tag))
        return ClusterStats(int(origin), vertices, disp, chem=chem, internal_edges=n_edges)
    return ClusterStats(int(origin), vertices, disp, chem=depth)


def explore_cluster(spec: KernelSpec, r, box: TorusBox, origin, mode, stream: ReplicaStream,
                    skip_sampling=False):
    """Cluster of `origin` under P_{beta, r} on the torus (beta taken from spec)."""
    lattice = TorusLattice(spec, r, box)
    origin = lattice.index(origin) if np.ndim(origin) else int(origin)
    return explore(lattice, spec.beta, origin, stream, mode, skip_sampling=skip_sampling)


@dataclass
class Configuration:
    """Eagerly sampled configuration with union-find labels for every vertex."""
    substrate: object
    beta: float
    stream: ReplicaStream
    open_a: np.ndarray
    open_b: np.ndarray
    labels: np.ndarray
    sizes: np.ndarray = field(repr=False)

    @property
    def n_clusters(self):
        return int(self.labels.max()) + 1 if len(self.labels) else 0

    def cluster_sizes(self):
        return np.bincount(self.labels)

    def max_cluster_size(self):
        return int(self.sizes.max())

    def open_pair_keys(self):
        return np.sort(rng.pair_keys(self.open_a, self.open_b, self.substrate.n_vertices))

    def max_box_intersection(self, box_vertices):
        """max over clusters K_x of |K_x ∩ box|"""
        counts = np.bincount(self.labels[np.asarray(box_vertices)])
        return int(counts.max()) if len(counts) else 0


def sample_full_configuration(substrate, beta, stream: ReplicaStream, tag=0,
                              pair_budget=DEFAULT_PAIR_BUDGET):
    """Decide every candidate pair and label all clusters."""
    if substrate.pair_count > pair_budget:
        raise MemoryBudgetError(substrate.pair_count, pair_budget)
    key = stream.key(tag)
    n = substrate.n_vertices
    open_a, open_b = [], []
    if beta > 0:
        for a, b, J in substrate.pair_blocks():
            e = rng.pair_exponentials(key, rng.pair_keys(a, b, n))
            is_open = beta * J >= e
            open_a.append(a[is_open])
            open_b.append(b[is_open])
    open_a = np.concatenate(open_a) if open_a else np.zeros(0, dtype=np.int64)
    open_b = np.concatenate(open_b) if open_b else np.zeros(0, dtype=np.int64)
    uf = WeightedQuickUnion(n)
    uf.union_edges(open_a, open_b)
    return Configuration(substrate, beta, stream, open_a, open_b, uf.labels(), uf.sizes())


def validate_ladder(ladder):
    """Ladder of (beta, r) rungs, both coordinates nondecreasing."""
    ladder = [(float(b), float(r)) for b, r in ladder]
    if not ladder:
        raise LadderError("ladder must contain at least one rung")
    for (b0, r0), (b1, r1) in zip(ladder, ladder[1:]):
        if b1 < b0 or r1 < r0:
            raise LadderError(f"ladder is not monotone at rung ({b0}, {r0}) -> ({b1}, {r1})")
    return ladder


def coupled_sweep(spec: KernelSpec, ladder, box: TorusBox, origin, stream: ReplicaStream,
                  mode=VERTEX_SET):
    """
    Clusters of `origin` along a (beta, r) ladder from one draw of the pair variables.

    `ladder` is either a list of radii (beta from spec) or a list of (beta, r) pairs.
    """
    rungs = [(spec.beta, r) if np.ndim(r) == 0 else tuple(r) for r in ladder]
    rungs = validate_ladder(rungs)
    box.check(max(r for _, r in rungs))
    out = []
    for beta, r in rungs:
        lattice = TorusLattice(spec, r, box)
        out.append(explore(lattice, beta, origin, stream, mode))
    return out


def coupled_configurations(spec: KernelSpec, ladder, box: TorusBox, stream: ReplicaStream,
                           pair_budget=DEFAULT_PAIR_BUDGET):
    """Full configurations along a ladder, sharing the pair variables."""
    rungs = validate_ladder(ladder)
    box.check(max(r for _, r in rungs))
    return [
        sample_full_configuration(TorusLattice(spec, r, box), beta, stream, pair_budget=pair_budget)
        for beta, r in rungs
    ]


@dataclass
class CoupledClusters:
    """
    Priority overlay of three configurations omega_0, omega_x, omega_y.

    K0 = K_0 (= K_0^0), Kx = K_x^{0x}, Ky = K_y^{0xy}; Kx_ind = K_x^x,
    Ky_ind = K_y^y; Ky_0y = K_y^{0y}; Ky_xy = K_y^{xy}.
    """
    points: tuple
    K0: ClusterStats
    Kx: ClusterStats
    Ky: ClusterStats
    Kx_ind: ClusterStats
    Ky_ind: ClusterStats
    Ky_0y: ClusterStats
    Ky_xy: ClusterStats

    def c_0y(self, a):
        y = self.points[2]
        return self.Ky_ind.contains(a) and not (self.Ky_0y.contains(a) and not self.K0.contains(y))

    def c_xy(self, a):
        y = self.points[2]
        return self.Ky_ind.contains(a) and not (self.Ky_xy.contains(a) and not self.Kx_ind.contains(y))

    def c_0xy(self, a):
        y = self.points[2]
        outside = not self.K0.contains(y) and not self.Kx.contains(y)
        return self.Ky_ind.contains(a) and not (self.Ky.contains(a) and outside)

    def events(self, probes):
        return {int(a): (self.c_0y(a), self.c_xy(a), self.c_0xy(a)) for a in probes}


def _blocked(n, *clusters):
    mask = np.zeros(n, dtype=bool)
    for cluster in clusters:
        mask[cluster.vertices] = True
    return mask


def _overlay(substrate, beta, seed_vertex, stream, tag, priority):
    """Cluster of seed in its own configuration, avoiding higher-priority clusters."""
    for cluster in priority:
        if cluster.contains(seed_vertex):
            return cluster
    blocked = _blocked(substrate.n_vertices, *priority) if priority else None
    return explore(substrate, beta, seed_vertex, stream, tag=tag, blocked=blocked)


def coupled_clusters(substrate, beta, points, stream: ReplicaStream):
    """Three-cluster priority coupling for points (0, x, y)."""
    o, x, y = (int(p) for p in points)
    if len({o, x, y}) != 3:
        raise EngineError(f"coupled points must be distinct, got {points}")
    K0 = explore(substrate, beta, o, stream, tag=0)
    Kx_ind = explore(substrate, beta, x, stream, tag=1)
    Ky_ind = explore(substrate, beta, y, stream, tag=2)
    Kx = _overlay(substrate, beta, x, stream, 1, [K0])
    Ky = _overlay(substrate, beta, y, stream, 2, [K0, Kx])
    Ky_0y = _overlay(substrate, beta, y, stream, 2, [K0])
    Ky_xy = _overlay(substrate, beta, y, stream, 2, [Kx_ind])
    return CoupledClusters((o, x, y), K0, Kx, Ky, Kx_ind, Ky_ind, Ky_0y, Ky_xy)
