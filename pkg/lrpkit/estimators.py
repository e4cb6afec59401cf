"""
Monte Carlo estimators built on replica streams of explored clusters.

Every estimator draws replicas 0..n-1 of one master seed, so two estimators
called with the same parameters see the same clusters. Error bars are batch
means over `n_batches` contiguous replica batches; ratios use the jackknife
over the same batches.
"""

import logging
import math
from dataclasses import asdict, dataclass, field, replace
from functools import partial

import numpy as np

from .engine import (
    VERTEX_SET,
    WITH_CHEMICAL,
    GraphSubstrate,
    ReplicaStream,
    TorusBox,
    TorusLattice,
    explore,
    sample_full_configuration,
)
from .errors import EstimatorError, NoCrossingError
from .harness.pool import serial_pool
from .kernel import KernelSpec

logger = logging.getLogger(__name__)

DEFAULT_BATCHES = 32
MIN_BATCHES = 16
MAX_MOMENT = 6
EDIAN_LEVEL = math.exp(-1.0)


@dataclass(frozen=True)
class SimulationParams:
    """One parameter point: kernel (beta included), cut-off, torus side or small graph, seed."""
    spec: KernelSpec
    r: float = math.inf
    L: int = None
    seed: int = 0
    origin: int = 0
    mode: str = VERTEX_SET
    graph: object = None
    n_batches: int = DEFAULT_BATCHES
    skip_sampling: bool = False
    pair_budget: int = 50_000_000

    def __post_init__(self):
        if (self.graph is None) == (self.L is None):
            raise EstimatorError("give exactly one of a torus side L or a graph")

    @property
    def beta(self):
        return self.spec.beta

    def with_beta(self, beta):
        return replace(self, spec=self.spec.with_beta(beta))

    def substrate(self):
        if self.graph is not None:
            return GraphSubstrate.from_graph(self.graph)
        return TorusLattice(self.spec, self.r, TorusBox(self.L, self.spec.d))

    def echo(self):
        return {"d": self.spec.d, "alpha": self.spec.alpha, "beta": self.spec.beta,
                "r": self.r, "L": self.L}


@dataclass
class Estimate:
    value: float
    stderr: float
    n_replicas: int
    n_batches: int
    seed: int
    params: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)

    def within(self, target, k=3.0, floor=1e-12):
        return abs(self.value - target) <= k * self.stderr + floor


@dataclass
class BetaCEstimate:
    value: float
    bracket: tuple
    sizes_used: list
    method: str
    exponent: float
    curve: list = field(default_factory=list)

    def __post_init__(self):
        lo, hi = self.bracket
        if not lo <= self.value <= hi:
            raise EstimatorError(f"beta_c estimate {self.value} outside its bracket {self.bracket}")

    def to_dict(self):
        return asdict(self)


@dataclass
class ErrorTerms:
    E1: Estimate
    E2: Estimate
    dK_dr: Estimate
    dK2_dr: Estimate

    def to_dict(self):
        return {
            "E1": self.E1.to_dict(), "E2": self.E2.to_dict(),
            "dK_dr": self.dK_dr.to_dict(), "dK2_dr": self.dK2_dr.to_dict(),
        }


# -- batch statistics -----------------------------------------------------------

def _batches(n, n_batches):
    if n_batches < MIN_BATCHES:
        raise EstimatorError(f"at least {MIN_BATCHES} batches are required, got {n_batches}")
    if n < n_batches:
        raise EstimatorError(f"{n} replicas cannot fill {n_batches} batches")
    return np.array_split(np.arange(n), n_batches)


def batch_means(samples, n_batches=DEFAULT_BATCHES):
    """(mean, stderr) of a 1-d sample by batch means"""
    samples = np.asarray(samples, dtype=float)
    groups = _batches(len(samples), n_batches)
    means = np.array([samples[g].mean() for g in groups])
    stderr = float(np.std(means, ddof=1) / math.sqrt(len(means)))
    return float(samples.mean()), stderr


def jackknife(columns, fn, n_batches=DEFAULT_BATCHES):
    """(fn(column means), jackknife stderr) with leave-one-batch-out resampling"""
    columns = np.asarray(columns, dtype=float)
    groups = _batches(len(columns), n_batches)
    total = columns.sum(axis=0)
    n = len(columns)
    with np.errstate(divide="ignore", invalid="ignore"):
        value = fn(total / n)
        loo = np.array([fn((total - columns[g].sum(axis=0)) / (n - len(g))) for g in groups])
    if not np.all(np.isfinite(loo)) or not np.isfinite(value):
        raise EstimatorError("degenerate ratio: a denominator vanished")
    B = len(groups)
    stderr = float(np.sqrt((B - 1) / B * np.sum((loo - loo.mean()) ** 2)))
    return float(value), stderr


def _estimate(samples, params, n_batches=None):
    n_batches = params.n_batches if n_batches is None else n_batches
    value, stderr = batch_means(samples, n_batches)
    return Estimate(value, stderr, len(samples), n_batches, params.seed, params.echo())


def _ratio(columns, fn, params):
    value, stderr = jackknife(columns, fn, params.n_batches)
    return Estimate(value, stderr, len(columns), params.n_batches, params.seed, params.echo())


# -- per-replica observables (picklable) ------------------------------------------

@dataclass(frozen=True)
class SizeObservable:
    """[|K|^p for p in powers] + [min(|K|, m) for m in truncations]"""
    powers: tuple = (1,)
    truncations: tuple = ()

    def __call__(self, stats):
        size = float(stats.size)
        return [size ** p for p in self.powers] + [min(size, m) for m in self.truncations]


@dataclass(frozen=True)
class TailObservable:
    thresholds: tuple

    def __call__(self, stats):
        return [float(stats.size >= t) for t in self.thresholds]


@dataclass(frozen=True)
class ContainsObservable:
    targets: tuple

    def __call__(self, stats):
        return [float(stats.contains(t)) for t in self.targets]


@dataclass(frozen=True)
class ChemicalObservable:
    q: int
    p: int = 0

    def __call__(self, stats):
        return [stats.chem_moment(self.q, self.p)]


def _cluster_chunk(params, observable, start, stop):
    substrate = params.substrate()
    rows = []
    for replica in range(start, stop):
        stats = explore(substrate, params.beta, params.origin, ReplicaStream(params.seed, replica),
                        params.mode, skip_sampling=params.skip_sampling)
        rows.append(observable(stats))
    return np.asarray(rows, dtype=float).reshape(stop - start, -1)


def sample_observable(params, n, observable, pool=None, label="clusters"):
    """Per-replica observable rows, shape (n, k), in replica order"""
    pool = pool or serial_pool()
    return pool.map(partial(_cluster_chunk, params, observable), n, label=label)


# -- moments ----------------------------------------------------------------

def estimate_moments(params, n, powers=(1, 2), truncations=(), pool=None):
    """Estimates of E|K|^p and E min{|K|, m} from one pass over the replicas"""
    for p in powers:
        if not 1 <= p <= MAX_MOMENT:
            raise EstimatorError(f"moment order must lie in 1..{MAX_MOMENT}, got {p}")
    for m in truncations:
        if not m >= 1:
            raise EstimatorError(f"truncation level must be at least 1, got {m}")
    rows = sample_observable(params, n, SizeObservable(tuple(powers), tuple(truncations)), pool, "moments")
    out = {}
    for j, p in enumerate(powers):
        out[f"moment_{p}"] = _estimate(rows[:, j], params)
    for j, m in enumerate(truncations, start=len(powers)):
        out[f"truncated_{m}"] = _estimate(rows[:, j], params)
    return out


def estimate_moment(p, params, n, pool=None):
    return estimate_moments(params, n, powers=(p,), pool=pool)[f"moment_{p}"]


def estimate_truncated(m, params, n, pool=None):
    rows = sample_observable(params, n, SizeObservable((), (m,)), pool, "truncated")
    return _estimate(rows[:, 0], params)


def estimate_volume_tail(params, n, thresholds, pool=None):
    """{t: P(|K| >= t)} for each threshold, from one pass"""
    thresholds = tuple(int(t) for t in thresholds)
    if any(t < 1 for t in thresholds):
        raise EstimatorError("tail thresholds must be at least 1")
    rows = sample_observable(params, n, TailObservable(thresholds), pool, "volume-tail")
    return {t: _estimate(rows[:, j], params) for j, t in enumerate(thresholds)}


def estimate_vertex_factor(params, n, pool=None):
    """V = E|K|^2 / (E|K|)^3 with a jackknife error bar"""
    rows = sample_observable(params, n, SizeObservable((1, 2)), pool, "vertex-factor")
    return _ratio(rows, lambda m: m[1] / m[0] ** 3, params)


def estimate_chemical_moment(q, p, params, n, pool=None):
    """E sum_{x in K} d_chem(0, x)^q ||x||^p"""
    params = replace(params, mode=WITH_CHEMICAL)
    rows = sample_observable(params, n, ChemicalObservable(q, p), pool, "chemical")
    return _estimate(rows[:, 0], params)


# -- edian ----------------------------------------------------------------------

def edian(samples):
    """least n >= 1 with empirical P(S >= n) <= e^{-1}"""
    samples = np.asarray(samples, dtype=np.int64)
    counts = np.bincount(samples, minlength=int(samples.max()) + 2)
    tail = counts[::-1].cumsum()[::-1]
    ok = np.flatnonzero(tail <= len(samples) * EDIAN_LEVEL)
    return int(ok[ok >= 1][0])


def _ball_vertices(lattice, origin, r):
    points = lattice.spec.ball_points(r)
    return lattice.index(lattice.coords(origin) + points)


def _edian_chunk(params, start, stop):
    lattice = params.substrate()
    box = _ball_vertices(lattice, params.origin, params.r)
    out = np.empty(stop - start, dtype=np.int64)
    for i, replica in enumerate(range(start, stop)):
        config = sample_full_configuration(lattice, params.beta, ReplicaStream(params.seed, replica),
                                           pair_budget=params.pair_budget)
        out[i] = config.max_box_intersection(box)
    return out


def estimate_edian(params, n, pool=None):
    """Edian of max_x |K_x ∩ B_r| with B_r centred at the origin vertex"""
    if params.graph is not None:
        raise EstimatorError("the edian is defined on the torus only")
    if not math.isfinite(params.r):
        raise EstimatorError("the edian needs a finite cut-off radius")
    TorusLattice(params.spec, params.r, TorusBox(params.L, params.spec.d))  # size check
    pool = pool or serial_pool()
    samples = pool.map(partial(_edian_chunk, params), n, label="edian")
    groups = _batches(len(samples), params.n_batches)
    per_batch = np.array([edian(samples[g]) for g in groups], dtype=float)
    stderr = float(np.std(per_batch, ddof=1) / math.sqrt(len(per_batch)))
    return Estimate(float(edian(samples)), stderr, len(samples), params.n_batches, params.seed, params.echo())


# -- connection probabilities -------------------------------------------------------

def _target_vertices(params, points, margin_fraction=0.25):
    substrate = params.substrate()
    if params.graph is not None:
        return substrate, [int(p) for p in points]
    limit = params.L * margin_fraction
    targets = []
    for point in points:
        point = np.atleast_1d(np.asarray(point, dtype=np.int64))
        if point.shape != (params.spec.d,):
            raise EstimatorError(f"point {point.tolist()} does not have dimension {params.spec.d}")
        if np.max(np.abs(point)) > limit:
            raise EstimatorError(f"point {point.tolist()} lies outside the margin |x_i| <= {limit:g}")
        targets.append(int(substrate.index(substrate.coords(params.origin) + point)))
    return substrate, targets


@dataclass
class ConnectionEstimate:
    two_point: list
    three_point: Estimate = None

    def to_dict(self):
        return {"two_point": [e.to_dict() for e in self.two_point],
                "three_point": None if self.three_point is None else self.three_point.to_dict()}


def estimate_connection(points, params, n, pool=None):
    """tau(0, x) for every point, and tau(0, x, y, ...) when two or more points are given"""
    _, targets = _target_vertices(params, points)
    rows = sample_observable(params, n, ContainsObservable(tuple(targets)), pool, "connection")
    two = [_estimate(rows[:, j], params) for j in range(len(targets))]
    three = _estimate(rows.prod(axis=1), params) if len(targets) >= 2 else None
    return ConnectionEstimate(two, three)


def estimate_three_point_ratio(x, y, params, n, pool=None):
    """
    tau(0, x, y) / sqrt(tau(0, x) tau(0, y) tau(x, y)), with tau(x, y) read as
    tau(0, y - x) by translation invariance; returns (ratio, tau(0, x, y)).
    """
    x, y = np.asarray(x, dtype=np.int64), np.asarray(y, dtype=np.int64)
    _, targets = _target_vertices(params, [x, y, y - x])
    rows = sample_observable(params, n, ContainsObservable(tuple(targets)), pool, "three-point")
    columns = np.column_stack([rows, rows[:, 0] * rows[:, 1]])
    ratio = _ratio(columns, lambda m: m[3] / np.sqrt(m[0] * m[1] * m[2]), params)
    return ratio, _estimate(columns[:, 3], params)


# -- correction sums D^(k) -------------------------------------------------------

def _correction_terms(substrate, params, stream, probes, order):
    """per-probe |K_0| (|K_y^y|^k - 1(y not in K_0) |K_y^{0y}|^k) for k in `order`"""
    K0 = explore(substrate, params.beta, params.origin, stream, tag=0)
    blocked = None
    terms = np.zeros((len(probes), len(order)))
    for i, y in enumerate(probes):
        Ky = explore(substrate, params.beta, y, stream, tag=2)
        own = np.array([float(Ky.size) ** k for k in order])
        if K0.contains(y):
            terms[i] = K0.size * own
            continue
        if not np.isin(Ky.vertices, K0.vertices).any():
            # K_y^y avoids K_0, so the restricted cluster is K_y^y itself
            continue
        if blocked is None:
            blocked = np.zeros(substrate.n_vertices, dtype=bool)
            blocked[K0.vertices] = True
        Ky_0y = explore(substrate, params.beta, y, stream, tag=2, blocked=blocked)
        terms[i] = K0.size * (own - np.array([float(Ky_0y.size) ** k for k in order]))
    return K0, terms


def _correction_chunk(params, probes, weights, order, start, stop):
    substrate = params.substrate()
    rows = []
    for replica in range(start, stop):
        K0, terms = _correction_terms(substrate, params, ReplicaStream(params.seed, replica), probes, order)
        size = float(K0.size)
        rows.append(list(weights @ terms) + [size, size * size])
    return np.asarray(rows, dtype=float).reshape(stop - start, -1)


def probe_lattice(params, radius):
    """Vertices y with ||y|| <= radius around the origin, plus their displacements"""
    if params.graph is not None:
        raise EstimatorError("probe lattices need a torus; pass explicit probes on a graph")
    if radius / 2 > params.L / 4:
        raise EstimatorError(f"probe radius {radius} exceeds the box margin L/4 = {params.L / 4:g} per coordinate")
    substrate = params.substrate()
    points = params.spec.ball_points(radius)
    return [int(v) for v in substrate.index(substrate.coords(params.origin) + points)], points


def _variant_order(variant):
    orders = {"D1": 1, "D2": 2}
    if variant not in orders:
        raise EstimatorError(f"unknown correction variant {variant!r}; use D1 or D2")
    return orders[variant]


def estimate_correction(variant, monomial, params, n, probe_radius=None, probes=None, pool=None):
    """
    sum over probes y of D^(k)(0, y) P(y / r).

    Probes default to the lattice ball of radius L/4 around the origin; on a
    graph pass explicit vertex probes (weights are then P = 1).
    """
    k = _variant_order(variant)
    if probes is None:
        radius = params.L / 4 if probe_radius is None else probe_radius
        probes, points = probe_lattice(params, radius)
        scale = params.r if math.isfinite(params.r) else 1.0
        weights = monomial.evaluate(points / scale) if monomial is not None else np.ones(len(probes))
    else:
        probes = [int(y) for y in probes]
        weights = np.ones(len(probes))
    pool = pool or serial_pool()
    rows = pool.map(partial(_correction_chunk, params, probes, np.asarray(weights, dtype=float), (k,)),
                    n, label=f"correction-{variant}")
    return _estimate(rows[:, 0], params)


def estimate_error_terms(params, n, pool=None):
    """
    E_1 = sum_{y in B_r} D^(1) / (|B_r| (E|K|)^2), E_2 = sum D^(2) / (|B_r| E|K| E|K|^2),
    and the r-derivatives of E|K| and E|K|^2 they predict.
    """
    if not math.isfinite(params.r):
        raise EstimatorError("error terms need a finite cut-off radius")
    probes, _ = probe_lattice(params, params.r)
    ball = params.spec.ball_size(params.r)
    pool = pool or serial_pool()
    rows = pool.map(partial(_correction_chunk, params, probes, np.ones(len(probes)), (1, 2)),
                    n, label="error-terms")
    slope = params.beta * float(params.spec.kernel_derivative(params.r)) * ball
    E1 = _ratio(rows, lambda m: m[0] / (ball * m[2] ** 2), params)
    E2 = _ratio(rows, lambda m: m[1] / (ball * m[2] * m[3]), params)
    dK = _ratio(rows, lambda m: slope * m[2] ** 2 - slope * m[0] / ball, params)
    dK2 = _ratio(rows, lambda m: 3 * slope * m[2] * m[3] - 3 * slope * m[1] / ball, params)
    return ErrorTerms(E1, E2, dK, dK2)


def _radius_difference_chunk(params, r_hi, start, stop):
    low = params.substrate()
    high = replace(params, r=r_hi).substrate()
    out = np.empty(stop - start)
    for i, replica in enumerate(range(start, stop)):
        stream = ReplicaStream(params.seed, replica)
        a = explore(low, params.beta, params.origin, stream)
        b = explore(high, params.beta, params.origin, stream)
        out[i] = b.size - a.size
    return out


def estimate_radius_derivative(params, n, h, pool=None):
    """(E_{r+h}|K| - E_r|K|) / h from coupled explorations at r and r + h"""
    if not h > 0:
        raise EstimatorError(f"step must be positive, got {h}")
    pool = pool or serial_pool()
    diffs = pool.map(partial(_radius_difference_chunk, params, params.r + h), n, label="radius-derivative")
    return _estimate(diffs / h, params)


# -- beta_c -------------------------------------------------------------------------

def _max_cluster_chunk(spec, L, seed, pair_budget, start, stop):
    lattice = TorusLattice(spec, math.inf, TorusBox(L, spec.d))
    out = np.empty(stop - start)
    for i, replica in enumerate(range(start, stop)):
        config = sample_full_configuration(lattice, spec.beta, ReplicaStream(seed, replica), pair_budget=pair_budget)
        out[i] = config.max_cluster_size()
    return out


def crossing_observable(spec, L, n, seed=0, pool=None, pair_budget=50_000_000, n_batches=DEFAULT_BATCHES):
    """u(beta, L) = E[max cluster size] / L^{(d+alpha)/2} on the full torus kernel"""
    pool = pool or serial_pool()
    sizes = pool.map(partial(_max_cluster_chunk, spec, L, seed, pair_budget), n,
                     label=f"u(beta={spec.beta:.12g},L={L})")
    scale = L ** (spec.exponent / 2.0)
    mean, stderr = batch_means(sizes / scale, n_batches)
    return mean, stderr


def estimate_beta_c(spec, L_list, tol, n, seed=0, bracket=(0.0, 1.0), pool=None,
                    scan_points=9, pair_budget=50_000_000, n_batches=DEFAULT_BATCHES):
    """
    Bisection on the crossing of u(beta, L) for the two largest sizes.

    Bisection stops at width `tol`, or earlier when the midpoint difference is
    within two standard errors of zero; the bracket then reflects statistical
    resolution.
    """
    sizes = sorted(set(int(L) for L in L_list))
    if len(sizes) < 2:
        raise EstimatorError("beta_c needs at least two torus sizes")
    small, big = sizes[-2], sizes[-1]
    cache = {}

    def u(beta, L):
        key = (beta, L)
        if key not in cache:
            cache[key] = crossing_observable(spec.with_beta(beta), L, n, seed, pool, pair_budget, n_batches)
        return cache[key]

    def diff(beta):
        (ub, sb), (us, ss) = u(beta, big), u(beta, small)
        return ub - us, math.hypot(sb, ss)

    def curve():
        return [{"beta": b, "L": L, "u": m, "stderr": s} for (b, L), (m, s) in sorted(cache.items())]

    lo, hi = (float(x) for x in bracket)
    if not 0 <= lo < hi:
        raise EstimatorError(f"invalid beta bracket {bracket}")
    d_lo, _ = diff(lo)
    d_hi, _ = diff(hi)
    if not (d_lo < 0 < d_hi):
        for beta in np.linspace(lo, hi, scan_points):
            for L in sizes:
                u(float(beta), L)
        raise NoCrossingError(
            f"no crossing of u(beta, L={small}) and u(beta, L={big}) in [{lo}, {hi}] "
            f"(differences {d_lo:.4g} at lo, {d_hi:.4g} at hi)", curve()
        )
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        d_mid, s_mid = diff(mid)
        logger.debug("beta_c bisection: [%.6f, %.6f] mid diff %.4g +- %.2g", lo, hi, d_mid, s_mid)
        if abs(d_mid) <= 2 * s_mid:
            logger.info("beta_c bisection stopped at statistical resolution, width %.3g", hi - lo)
            break
        if d_mid < 0:
            lo = mid
        else:
            hi = mid
    exponent = spec.exponent / 2.0
    return BetaCEstimate(0.5 * (lo + hi), (lo, hi), [small, big],
                         f"max-cluster crossing, exponent (d+alpha)/2 = {exponent:g}", exponent, curve())
