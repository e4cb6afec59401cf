"""
Experiment pipelines, one per config kind. Each pipeline streams
self-describing records to `<out>/<kind>.jsonl`.
"""

import json
import logging
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .. import estimators, inequalities, oracle
from ..analytics import (
    KappaModel,
    Monomial,
    diagram_moment,
    diagram_moment_mc,
    enumerate_trees,
    ode_exact,
    ode_solve,
    tree_count,
    universal_constants,
)
from ..analytics import levy
from ..analytics.monomials import multi_indices
from ..errors import ConfigError, NoCrossingError, ReportError
from ..fitting import MIN_POINTS, fit_power_law
from .checkpoint import Checkpoint
from .config import ExperimentConfig
from .pool import ReplicaPool
from .report import report_scaling

logger = logging.getLogger(__name__)

ORACLE_BETAS = (0.1, 0.5, 1.0, 2.0)


def jsonable(value):
    """Plain JSON types; infinities become "inf"/"-inf" and NaN becomes null"""
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return jsonable(value.tolist())
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return None
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    if isinstance(value, Path):
        return str(value)
    return value


class RecordWriter:
    """Appends one JSON object per line; the file is truncated when the writer opens"""

    def __init__(self, path, config: ExperimentConfig):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.config = config
        self.config_hash = config.config_hash()
        self.count = 0
        self.records = []
        self._fh = open(self.path, "w", encoding="utf-8")

    def write(self, observable, value, stderr=None, n=None, params=None, batches=None, **extra):
        record = {
            "id": f"{self.config_hash}-{self.count:05d}",
            "kind": self.config.kind,
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "config": self.config.echo(),
            "params": params or {"d": self.config.d, "alpha": self.config.alpha},
            "observable": observable,
            "value": value,
            "stderr": stderr,
            "n": n,
            "seed": self.config.seed,
            "batches": batches,
        }
        record.update(extra)
        record = jsonable(record)
        self._fh.write(json.dumps(record, sort_keys=True) + "\n")
        self._fh.flush()
        self.records.append(record)
        self.count += 1
        return record

    def estimate(self, observable, est, **extra):
        return self.write(observable, est.value, est.stderr, est.n_replicas, est.params, est.n_batches, **extra)

    def close(self):
        self._fh.close()


@dataclass
class RunContext:
    config: ExperimentConfig
    writer: RecordWriter
    out_dir: Path
    workers: int = None
    progress: bool = None
    checkpoint: Checkpoint = None
    reports: list = field(default_factory=list)

    @property
    def n(self):
        return self.config.n_replicas

    def pool(self, scope):
        checkpoint = self.checkpoint.scoped(scope) if self.checkpoint else None
        return ReplicaPool(self.workers, self.config.chunk_size, self.progress, checkpoint)

    def report(self, target, records, name, **kwargs):
        """report_scaling, logging (not raising) when the grid is too small"""
        try:
            result = report_scaling(records, target, self.out_dir, name=name, **kwargs)
        except ReportError as exc:
            logger.warning("skipping %s report %s: %s", target, name, exc)
            return None
        self.reports.append(result)
        self.writer.write(f"{target}_fit", result.fit.exponent, result.fit.exponent_stderr,
                          result.fit.n_points, report=result.to_dict())
        return result


# -- grids ----------------------------------------------------------------------------

def _sigma(records):
    """Record stderrs for a weighted fit, or None when any is zero"""
    s = [rec["stderr"] or 0.0 for rec in records]
    return s if all(v > 0 for v in s) else None


def _require(config, name, key):
    values = getattr(config, name)
    if not values:
        raise ConfigError(f"experiment kind {config.kind!r} needs a non-empty grid", field=key)
    return values


def _scope(beta, L, r):
    return f"beta={beta:.12g}_L={L}_r={r:g}"


def _params(config, beta, L, r):
    return estimators.SimulationParams(
        config.spec.with_beta(beta), r=r, L=L, seed=config.seed, mode=config.mode,
        n_batches=config.n_batches, skip_sampling=bool(config.option("skip_sampling", False)),
    )


# finite-volume defaults when grid.L is omitted: L = 8 r for clusters, 4 r for the edian
CLUSTER_SIDE_FACTOR = 8
EDIAN_SIDE_FACTOR = 4


def default_side(r, factor=CLUSTER_SIDE_FACTOR):
    """Even torus side of about factor * r, large enough for the cut-off"""
    if not math.isfinite(r):
        raise ConfigError("an infinite cut-off radius needs an explicit torus side", field="grid.L")
    side = max(math.ceil(factor * r), 2 * math.floor(r / 2) + 2)
    return side + side % 2


def _side_columns(config, factor=CLUSTER_SIDE_FACTOR):
    """One tuple of sides per radius for each L column; a single derived column when grid.L is omitted"""
    if config.sides:
        return [(L,) * len(config.radii) for L in config.sides]
    return [tuple(default_side(r, factor) for r in config.radii)]


def _column_label(config, column):
    return f"L{column[0]}" if config.sides else f"L{CLUSTER_SIDE_FACTOR}r"


def _grid(config, factor=CLUSTER_SIDE_FACTOR):
    betas = _require(config, "betas", "grid.beta")
    columns = _side_columns(config, factor)
    for beta in betas:
        for column in columns:
            for r, L in zip(config.radii, column):
                yield beta, L, r


def _l_dependence(ctx, observables):
    """
    For every observable measured at more than one torus side with the same
    (beta, r, x), one record with the per-L values and the shift between the
    largest and the smallest side.
    """
    groups = {}
    for rec in list(ctx.writer.records):
        if rec["observable"] not in observables or not isinstance(rec.get("params"), dict):
            continue
        params = rec["params"]
        if params.get("L") is None:
            continue
        key = (rec["observable"], params.get("beta"), params.get("r"), rec.get("x"))
        groups.setdefault(key, {})[params["L"]] = rec
    for (observable, beta, r, x), by_side in groups.items():
        if len(by_side) < 2:
            continue
        sides = sorted(by_side)
        values = [math.nan if by_side[L]["value"] is None else by_side[L]["value"] for L in sides]
        stderrs = [by_side[L]["stderr"] or 0.0 for L in sides]
        ctx.writer.write(f"{observable}_vs_L", values[-1] - values[0], math.hypot(stderrs[0], stderrs[-1]),
                         by_side[sides[-1]]["n"], {**by_side[sides[-1]]["params"], "L": sides},
                         x=x, sides=sides, values=values, stderrs=stderrs)


def _predicted(config, target):
    """Asymptotic curve from options.beta_c and options.ball_integral, when both are given"""
    beta_c, integral = config.option("beta_c"), config.option("ball_integral")
    if beta_c is None or integral is None:
        return None
    constants = universal_constants(config.d, config.alpha, beta_c, ball_integral=integral)
    if target == "vertex_factor":
        return lambda r: constants.vertex_factor(r) if r > 1 else math.nan
    if target == "volume_tail":
        return lambda n: constants.volume_tail(n) if n > 1 else math.nan
    return None


# -- simulation pipelines ---------------------------------------------------------------

def run_simulate(ctx):
    config = ctx.config
    truncations = tuple(config.option("truncations", [4]))
    tail = tuple(config.option("tail", []))
    for beta, L, r in _grid(config):
        params = _params(config, beta, L, r)
        pool = ctx.pool(_scope(beta, L, r))
        moments = estimators.estimate_moments(params, ctx.n, (1, 2, 3), truncations, pool)
        for name, est in moments.items():
            ctx.writer.estimate(name, est)
        ctx.writer.estimate("vertex_factor", estimators.estimate_vertex_factor(params, ctx.n, pool), x=r)
        if tail:
            for t, est in estimators.estimate_volume_tail(params, ctx.n, tail, pool).items():
                ctx.writer.estimate("volume_tail", est, x=t)
        if config.mode == estimators.WITH_CHEMICAL:
            ctx.writer.estimate("chemical_1", estimators.estimate_chemical_moment(1, 0, params, ctx.n, pool))


def run_betac(ctx):
    config = ctx.config
    sides = _require(config, "sides", "grid.L")
    bracket = tuple(config.option("bracket", [0.0, 1.0]))
    try:
        result = estimators.estimate_beta_c(
            config.spec, sides, float(config.option("tol", 1e-3)), ctx.n, config.seed, bracket,
            ctx.pool("betac"), int(config.option("scan_points", 9)), n_batches=config.n_batches,
        )
    except NoCrossingError as exc:
        for point in exc.curve:
            ctx.writer.write("u", point["u"], point["stderr"], ctx.n,
                             {"d": config.d, "alpha": config.alpha, "beta": point["beta"], "L": point["L"]})
        raise
    for point in result.curve:
        ctx.writer.write("u", point["u"], point["stderr"], ctx.n,
                         {"d": config.d, "alpha": config.alpha, "beta": point["beta"], "L": point["L"]})
    ctx.writer.write("beta_c", result.value, (result.bracket[1] - result.bracket[0]) / 2.0, ctx.n,
                     bracket=list(result.bracket), sizes_used=result.sizes_used, method=result.method,
                     exponent=result.exponent)


def run_edian(ctx):
    for beta, L, r in _grid(ctx.config, EDIAN_SIDE_FACTOR):
        params = _params(ctx.config, beta, L, r)
        est = estimators.estimate_edian(params, ctx.n, ctx.pool(_scope(beta, L, r)))
        ctx.writer.estimate("edian", est, x=r)
    _l_dependence(ctx, ("edian",))


def run_scaling(ctx):
    """Moments and vertex factor over the r grid, with fits per (beta, L)"""
    config = ctx.config
    tail = tuple(config.option("tail", []))
    for beta in _require(config, "betas", "grid.beta"):
        for column in _side_columns(config):
            label = _column_label(config, column)
            vertex, first = [], []
            for r, L in zip(config.radii, column):
                params = _params(config, beta, L, r)
                pool = ctx.pool(_scope(beta, L, r))
                moments = estimators.estimate_moments(params, ctx.n, (1, 2), (), pool)
                first.append(ctx.writer.estimate("moment_1", moments["moment_1"], x=r))
                ctx.writer.estimate("moment_2", moments["moment_2"], x=r)
                vertex.append(ctx.writer.estimate(
                    "vertex_factor", estimators.estimate_vertex_factor(params, ctx.n, pool), x=r))
            if len(first) >= MIN_POINTS and all(math.isfinite(r) for r in config.radii):
                fit = fit_power_law([rec["x"] for rec in first], [rec["value"] for rec in first],
                                    _sigma(first))
                ctx.writer.write("susceptibility_exponent", fit.exponent, fit.exponent_stderr, len(first),
                                 {"d": config.d, "alpha": config.alpha, "beta": beta, "L": list(column)},
                                 prediction=config.alpha)
                ctx.report("vertex_factor", vertex, f"vertex_factor_beta{beta:g}_{label}",
                           predicted=_predicted(config, "vertex_factor"))
            if tail:
                r, L = config.radii[-1], column[-1]
                params = _params(config, beta, L, r)
                records = [ctx.writer.estimate("volume_tail", est, x=t) for t, est in
                           estimators.estimate_volume_tail(params, ctx.n, tail, ctx.pool(_scope(beta, L, r))).items()]
                ctx.report("volume_tail", records, f"volume_tail_beta{beta:g}_{label}",
                           predicted=_predicted(config, "volume_tail"))
    _l_dependence(ctx, ("moment_1", "moment_2", "vertex_factor", "volume_tail"))


def _axis_points(d, distances):
    return [np.array([k] + [0] * (d - 1)) for k in distances]


def _default_distances(L):
    top = max(1, L // 4)
    return sorted({int(round(v)) for v in np.geomspace(1, top, 8)})


def run_twopoint(ctx):
    config = ctx.config
    for beta, L, r in _grid(config):
        distances = config.option("points", None) or _default_distances(L)
        params = _params(config, beta, L, r)
        result = estimators.estimate_connection(_axis_points(config.d, distances), params, ctx.n,
                                                ctx.pool(_scope(beta, L, r)))
        records = [ctx.writer.estimate("two_point", est, x=k) for k, est in zip(distances, result.two_point)]
        ctx.report("two_point", records, f"two_point_beta{beta:g}_L{L}_r{r:g}")
    _l_dependence(ctx, ("two_point",))


def run_threepoint(ctx):
    """Three-point ratio along x = m e_1, y = -2m e_1 (d_min = m, d_max = 3m)"""
    config = ctx.config
    for beta, L, r in _grid(config):
        scales = config.option("d_min", None) or [m for m in _default_distances(L) if 2 * m <= L // 4]
        params = _params(config, beta, L, r)
        records = []
        for m in scales:
            x = np.array([m] + [0] * (config.d - 1))
            ratio, tau3 = estimators.estimate_three_point_ratio(
                x, -2 * x, params, ctx.n, ctx.pool(_scope(beta, L, r) + f"_m={m}"))
            ctx.writer.estimate("three_point", tau3, x=m, d_max=3 * m)
            records.append(ctx.writer.estimate("three_point_ratio", ratio, x=m, d_max=3 * m))
        ctx.report("three_point", records, f"three_point_beta{beta:g}_L{L}_r{r:g}")


def run_corrections(ctx):
    config = ctx.config
    powers = config.option("monomial", None)
    monomial = Monomial.coordinate(tuple(powers)) if powers else None
    for beta, L, r in _grid(config):
        params = _params(config, beta, L, r)
        pool = ctx.pool(_scope(beta, L, r))
        for variant in config.option("variants", ["D1", "D2"]):
            est = estimators.estimate_correction(variant, monomial, params, ctx.n,
                                                 config.option("probe_radius"), pool=pool)
            ctx.writer.estimate(f"correction_{variant}", est, monomial=powers)
        if math.isfinite(r):
            terms = estimators.estimate_error_terms(params, ctx.n, pool)
            for name, est in terms.to_dict().items():
                ctx.writer.write(name, est["value"], est["stderr"], est["n_replicas"], est["params"],
                                 est["n_batches"])
            h = config.option("h")
            if h:
                ctx.writer.estimate("dK_dr_measured",
                                    estimators.estimate_radius_derivative(params, ctx.n, float(h), pool))


# -- analytic pipelines -----------------------------------------------------------------

def run_kappa(ctx):
    config = ctx.config
    model = KappaModel(config.d, config.alpha, eps=float(config.option("eps", 1e-3)))
    k2 = (2,) + (0,) * (config.d - 1)
    ctx.writer.write("kappa_moment_2", model.moment(k2), route="moment-generating series")
    if config.d <= 2:
        ctx.writer.write("levy_moment_2_quadrature", levy.levy_moment_quadrature(config.d, config.alpha, k2),
                         route="quadrature")
    if config.d == 1:
        ctx.writer.write("kappa_moment_2_recurrence", levy.second_moment_from_recurrence(config.alpha),
                         route="recurrence")
    samples = int(config.option("samples", 1_000_000))
    draws = model.sampler(config.seed).sample(samples)[:, 0]
    sq = draws ** 2
    ctx.writer.write("kappa_moment_2_mc", float(sq.mean()), float(sq.std(ddof=1) / math.sqrt(samples)), samples,
                     expected=model.moment(k2) - model.truncation_bias(k2))
    for n in config.option("ball_n", [4]):
        result = model.localized_ball_integral(int(n), samples=int(config.option("ball_samples", 400_000)),
                                               seed=config.seed)
        ctx.writer.write("ball_integral", result.value, result.monte_carlo_stderr, int(n),
                         integral=result.to_dict())


def _recurrence_monomials(d, max_degree):
    out = []
    for degree in range(max_degree + 1):
        out.extend(Monomial.coordinate(k) for k in multi_indices(d, degree))
    if d >= 2 and max_degree >= 2:
        diag = tuple([1.0 / math.sqrt(2.0)] * 2 + [0.0] * (d - 2))
        out.append(Monomial(d, (diag, diag)))
    return out


def run_recurrence(ctx):
    config = ctx.config
    max_degree = int(config.option("max_degree", 4 if config.d == 1 else 2))
    for alpha in config.option("alphas", [config.alpha]):
        model = KappaModel(config.d, alpha)
        for n in range(1, int(config.option("max_n", 5)) + 1):
            for P in _recurrence_monomials(config.d, max_degree):
                ctx.writer.write("recurrence_residual", model.relative_recurrence_residual(n, P),
                                 params={"d": config.d, "alpha": alpha}, x=n, monomial=P.to_list())


def run_diagrams(ctx):
    config = ctx.config
    model = KappaModel(config.d, config.alpha)
    planted = bool(config.option("planted", True))
    samples = config.option("samples")
    for n in range(1, int(config.option("max_n", 6)) + 1):
        trees = enumerate_trees(n, planted)
        ctx.writer.write("tree_count", len(trees), x=n, expected=tree_count(n, planted), planted=planted)
        constant = [Monomial.one(config.d)] * n
        ctx.writer.write("diagram_constant", diagram_moment(n, constant, model, planted), x=n)
        if n <= 4:
            squares = [Monomial.coordinate((2,) + (0,) * (config.d - 1))] * n
            exact = diagram_moment(n, squares, model, planted)
            ctx.writer.write("diagram_square", exact, x=n)
            if samples:
                value, err = diagram_moment_mc(n, squares, model, int(samples), config.seed, planted)
                ctx.writer.write("diagram_square_mc", value, err, int(samples), x=n, expected=exact)


def run_ode(ctx):
    config = ctx.config
    a = float(config.option("a", 1.0))
    gamma = float(config.option("gamma", 2.0))
    C = float(config.option("C", 1.0))
    if config.option("beta_c") is not None and config.option("ball_integral") is not None:
        constants = universal_constants(config.d, config.alpha, config.option("beta_c"),
                                        ball_integral=config.option("ball_integral"))
        a, gamma, C = constants.ode_parameters()
    f1 = float(config.option("f1", 1.0))
    r_max = float(config.option("r_max", 1e12))
    traj = ode_solve(a, gamma, C, float(config.option("delta", 0.0)), f1, r_max,
                     int(config.option("points", 241)))
    csv_path = ctx.out_dir / "ode_trajectory.csv"
    frame = traj.to_frame()
    frame["exact"] = ode_exact(a, gamma, C, f1, frame["r"].to_numpy())
    frame["asymptote_ratio"] = traj.asymptote_ratio(C)
    frame.to_csv(csv_path, index=False)
    params = {"a": a, "gamma": gamma, "C": C, "f1": f1}
    check_r = min(1e6, r_max)
    exact = ode_exact(a, gamma, C, f1, check_r)
    ctx.writer.write("ode_relative_error", abs(float(traj.at(check_r)) - exact) / exact, params=params, x=check_r)
    decades = np.geomspace(max(r_max / 1e6, 10.0), r_max, 7)
    ratios = traj.asymptote_ratio(C, decades)
    ctx.writer.write("asymptote_ratio", float(ratios[-1]), params=params, x=r_max,
                     monotone=bool(np.all(np.diff(ratios) > 0)), ratios=ratios, trajectory=str(csv_path))


def run_constants(ctx):
    config = ctx.config
    beta_c = config.option("beta_c")
    if beta_c is None:
        raise ConfigError("constants need options.beta_c", field="options.beta_c")
    constants = universal_constants(config.d, config.alpha, float(beta_c), config.option("ball_integral"),
                                    samples=int(config.option("samples", 400_000)), seed=config.seed)
    for name in ("ball_integral", "C", "A_amplitude", "volume_prefactor"):
        ctx.writer.write(name, getattr(constants, name), method=constants.method)
    a, gamma, C_ode = constants.ode_parameters()
    ctx.writer.write("ode_parameters", C_ode, a=a, gamma=gamma)
    for r in config.radii:
        if not (math.isfinite(r) and r > 1):
            continue
        first, second = constants.first_moment(r), constants.second_moment(r)
        ctx.writer.write("predicted_moment_1", first, x=r)
        ctx.writer.write("predicted_moment_2", second, x=r)
        ctx.writer.write("predicted_typical_size", second / first, x=r)
        ctx.writer.write("predicted_vertex_factor", constants.vertex_factor(r), x=r)


def _oracle_instances(config):
    instances = oracle.builtin_instances()
    count = int(config.option("random", 0))
    if count:
        instances += oracle.random_instances(count, config.seed)
    max_edges = int(config.option("max_edges", oracle.MAX_EDGES))
    return [g for g in instances if g.n_edges <= max_edges]


def run_oracle(ctx):
    config = ctx.config
    betas = config.betas or ORACLE_BETAS
    all_results = []
    for g in _oracle_instances(config):
        for beta in betas:
            report = oracle.exact_expectations(g, beta)
            params = {"graph": g.name, "beta": beta}
            for p, value in report.moments.items():
                ctx.writer.write(f"exact_moment_{p}", value, params=params)
            if 4 in report.truncated:
                ctx.writer.write("exact_truncated_4", report.truncated[4], params=params)
            ctx.writer.write("exact_derivative_1", report.derivatives["moment:1"], params=params)
        results = inequalities.inequality_suite(g, betas)
        for res in results:
            ctx.writer.write(f"inequality:{res.name}", res.margin, params={"graph": g.name, "beta": res.beta},
                             status=res.status, reason=res.reason, small=res.small, large=res.large,
                             check=res.params)
        all_results.extend(results)
    summary = inequalities.summarize(all_results)
    ctx.writer.write("inequality_summary", summary["min_margin"], passed=summary["pass"], failed=summary["fail"],
                     skipped=summary["skipped"])


PIPELINES = {
    "simulate": run_simulate,
    "betac": run_betac,
    "edian": run_edian,
    "scaling": run_scaling,
    "twopoint": run_twopoint,
    "threepoint": run_threepoint,
    "corrections": run_corrections,
    "kappa": run_kappa,
    "recurrence": run_recurrence,
    "diagrams": run_diagrams,
    "ode": run_ode,
    "constants": run_constants,
    "oracle": run_oracle,
}


@dataclass
class RunSummary:
    kind: str
    path: Path
    records: list
    config_hash: str
    reports: list


def run(config: ExperimentConfig, workers=None, progress=None, checkpoint=True):
    """Execute the configured pipeline; returns the written records"""
    out_dir = Path(config.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    writer = RecordWriter(out_dir / f"{config.kind}.jsonl", config)
    store = Checkpoint(out_dir, writer.config_hash) if checkpoint else None
    ctx = RunContext(config, writer, out_dir, workers if workers is not None else config.workers, progress, store)
    logger.info("running %s pipeline (hash %s) -> %s", config.kind, writer.config_hash, writer.path)
    try:
        PIPELINES[config.kind](ctx)
    finally:
        writer.close()
    return RunSummary(config.kind, writer.path, writer.records, writer.config_hash, ctx.reports)
