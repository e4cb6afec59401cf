import math

import numpy as np
import pytest

from lrpkit import estimators as est
from lrpkit.errors import EstimatorError, NoCrossingError
from lrpkit.harness.pool import ReplicaPool
from lrpkit.kernel import KernelSpec
from lrpkit.oracle import complete, cycle, exact_expectations, single_edge, triangle

N = 4096


def graph_params(g, beta, seed=0):
    return est.SimulationParams(KernelSpec(1, 1.0 / 3.0, beta), graph=g, seed=seed, origin=g.root)


def test_params_need_exactly_one_substrate(primary):
    with pytest.raises(EstimatorError):
        est.SimulationParams(primary)
    with pytest.raises(EstimatorError):
        est.SimulationParams(primary, L=16, graph=single_edge())


def test_batch_means_of_constant_sample():
    mean, stderr = est.batch_means(np.full(320, 2.5))
    assert mean == 2.5
    assert stderr == 0.0


def test_batch_means_needs_enough_batches():
    with pytest.raises(EstimatorError):
        est.batch_means(np.ones(100), n_batches=8)
    with pytest.raises(EstimatorError):
        est.batch_means(np.ones(10), n_batches=16)


def test_jackknife_of_ratio_is_exact_for_proportional_columns():
    x = np.arange(1.0, 65.0)
    value, stderr = est.jackknife(np.column_stack([x, 3 * x]), lambda m: m[1] / m[0])
    assert value == pytest.approx(3.0)
    assert stderr == pytest.approx(0.0, abs=1e-12)


def test_edian_upper_rounding():
    assert est.edian(np.arange(1, 11)) == 8
    assert est.edian(np.ones(50, dtype=int)) == 2


def test_single_edge_moments_match_closed_form():
    params = graph_params(single_edge(), 1.0, seed=3)
    moments = est.estimate_moments(params, N, (1, 2), (1,))
    p = 1 - math.exp(-1.0)
    assert moments["moment_1"].within(1 + p, k=4)
    assert moments["moment_2"].within(1 + 3 * p, k=4)
    assert moments["truncated_1"].value == 1.0


@pytest.mark.parametrize("g,beta", [(triangle(), 0.7), (cycle(6), 0.9), (complete(4), 0.4)])
def test_moments_and_connections_match_enumeration(g, beta):
    exact = exact_expectations(g, beta)
    params = graph_params(g, beta, seed=11)
    moments = est.estimate_moments(params, N, (1, 2), (4,))
    assert moments["moment_1"].within(exact.moments[1], k=4)
    assert moments["moment_2"].within(exact.moments[2], k=4)
    assert moments["truncated_4"].within(exact.truncated[4], k=4)
    conn = est.estimate_connection([1, 2], params, N)
    assert conn.two_point[0].within(exact.tau[1], k=4)
    assert conn.two_point[1].within(exact.tau[2], k=4)


def test_three_point_matches_enumeration():
    g = cycle(6)
    exact = exact_expectations(g, 1.2, triples=[(1, 3)])
    conn = est.estimate_connection([1, 3], graph_params(g, 1.2, seed=5), N)
    assert conn.three_point.within(exact.tau_all[(1, 3)], k=4)


def test_correction_d1_matches_enumeration():
    g = cycle(6)
    exact = exact_expectations(g, 0.8)
    params = graph_params(g, 0.8, seed=21)
    for y in (1, 3):
        d1 = est.estimate_correction("D1", None, params, N, probes=[y])
        assert d1.within(exact.corrections[(1, y)], k=4)
        assert d1.value >= 0


def test_correction_rejects_unknown_variant():
    with pytest.raises(EstimatorError):
        est.estimate_correction("D3", None, graph_params(triangle(), 0.5), 64, probes=[1])


def test_vertex_factor_is_a_ratio(primary):
    params = est.SimulationParams(primary.with_beta(0.3), r=8.0, L=64, seed=1)
    vf = est.estimate_vertex_factor(params, 512)
    moments = est.estimate_moments(params, 512)
    assert vf.value == pytest.approx(moments["moment_2"].value / moments["moment_1"].value ** 3)
    assert vf.stderr > 0


def test_volume_tail_is_monotone(primary):
    params = est.SimulationParams(primary.with_beta(0.5), r=16.0, L=128, seed=2)
    tail = est.estimate_volume_tail(params, 1024, (1, 2, 4, 8))
    values = [tail[t].value for t in (1, 2, 4, 8)]
    assert values[0] == 1.0
    assert all(a >= b for a, b in zip(values, values[1:]))


def test_chemical_moment_zero_power_is_size(primary):
    params = est.SimulationParams(primary.with_beta(0.5), r=8.0, L=64, seed=4)
    chem0 = est.estimate_chemical_moment(0, 0, params, 256)
    size = est.estimate_moment(1, params, 256)
    assert chem0.value == pytest.approx(size.value)


def test_edian_estimate_is_positive(primary):
    params = est.SimulationParams(primary.with_beta(0.3), r=8.0, L=32, seed=0)
    edian = est.estimate_edian(params, 256)
    assert edian.value >= 1
    assert edian.n_replicas == 256


def test_edian_needs_finite_radius(primary):
    with pytest.raises(EstimatorError):
        est.estimate_edian(est.SimulationParams(primary, L=32), 64)


def test_probe_points_respect_margin(primary):
    params = est.SimulationParams(primary.with_beta(0.2), r=8.0, L=64)
    with pytest.raises(EstimatorError):
        est.estimate_connection([[40]], params, 64)


def test_error_terms_and_radius_derivative(primary):
    params = est.SimulationParams(primary.with_beta(0.3), r=4.0, L=32, seed=9)
    terms = est.estimate_error_terms(params, 512)
    assert terms.E1.value >= 0
    assert terms.E2.value >= 0
    deriv = est.estimate_radius_derivative(params, 512, h=2.0)
    assert deriv.value >= 0


def test_worker_count_does_not_change_estimates(primary):
    params = est.SimulationParams(primary.with_beta(0.4), r=8.0, L=64, seed=6)
    one = est.estimate_moments(params, 640, pool=ReplicaPool(workers=1, chunk_size=64, progress=False))
    two = est.estimate_moments(params, 640, pool=ReplicaPool(workers=2, chunk_size=64, progress=False))
    assert one["moment_1"].value == two["moment_1"].value
    assert one["moment_2"].stderr == two["moment_2"].stderr


def test_beta_c_reports_missing_crossing(primary):
    with pytest.raises(NoCrossingError) as info:
        est.estimate_beta_c(primary, [8, 16], tol=0.01, n=64, bracket=(0.0, 0.001), scan_points=3,
                            n_batches=16)
    assert info.value.curve
    assert {point["L"] for point in info.value.curve} == {8, 16}


def test_beta_c_needs_two_sizes(primary):
    with pytest.raises(EstimatorError):
        est.estimate_beta_c(primary, [16], tol=0.01, n=64)
