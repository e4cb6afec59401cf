import itertools
import math

import numpy as np
import pytest

from lrpkit.errors import OracleError
from lrpkit.oracle import (
    Enumeration,
    SmallWeightedGraph,
    builtin_instances,
    complete,
    cycle,
    exact_beta_derivative,
    exact_expectations,
    finite_difference_derivative,
    long_range_box,
    random_instances,
    single_edge,
    triangle,
)


def path(n):
    return SmallWeightedGraph(n, tuple((i, i + 1) for i in range(n - 1)), (1.0,) * (n - 1), name=f"P{n}")


def hand_enumerated_triangle_tau():
    """P(0 <-> 1) with each edge open with probability 1/2, counting the 8 configurations"""
    hits = 0
    for e01, e12, e02 in itertools.product((0, 1), repeat=3):
        hits += bool(e01 or (e12 and e02))
    return hits / 8


def test_single_edge_closed_form():
    for beta in (0.0, 0.3, 2.0):
        report = exact_expectations(single_edge(), beta)
        assert report.moments[1] == pytest.approx(1 + (1 - math.exp(-beta)), rel=1e-14)


def test_zero_beta_is_all_singletons():
    report = exact_expectations(cycle(5), 0.0)
    assert report.moments[1] == 1.0
    assert all(report.tau[x] == 0.0 for x in range(1, 5))
    assert report.tau[0] == 1.0


def test_triangle_at_half_probability():
    tau = hand_enumerated_triangle_tau()
    assert tau == 5 / 8
    report = exact_expectations(triangle(), math.log(2.0))
    assert report.tau[1] == pytest.approx(tau, rel=1e-14)
    assert report.moments[1] == pytest.approx(1 + 2 * tau, rel=1e-14)


@pytest.mark.parametrize("g", builtin_instances()[:4] + [path(5)])
def test_probabilities_sum_to_one(g):
    assert Enumeration(g, 0.8).total_mass == pytest.approx(1.0, abs=1e-12)


def test_derivative_at_zero_and_of_constants():
    assert exact_beta_derivative(single_edge(2.5), 0.0, "moment:1") == pytest.approx(2.5)
    assert exact_beta_derivative(triangle(), 0.7, "constant:1") == 0.0


@pytest.mark.parametrize("observable", ["moment:1", "moment:2", "truncated:2", "tau:1", "chem:1"])
def test_russo_matches_finite_differences(observable):
    g = triangle()
    analytic = exact_beta_derivative(g, 0.5, observable)
    numeric = finite_difference_derivative(g, 0.5, observable)
    assert analytic == pytest.approx(numeric, rel=1e-8)


def test_moments_increase_in_beta():
    g = cycle(6)
    means = [exact_expectations(g, b).moments[1] for b in (0.1, 0.5, 1.0, 2.0)]
    taus = [exact_expectations(g, b).tau[3] for b in (0.1, 0.5, 1.0, 2.0)]
    assert np.all(np.diff(means) > 0)
    assert np.all(np.diff(taus) > 0)


def test_transitive_graphs_have_equal_cluster_means():
    g = complete(4)
    enum = Enumeration(g, 0.6)
    means = [enum.expect(enum.sizes[v]) for v in range(g.n)]
    assert max(means) - min(means) <= 1e-12


@pytest.mark.parametrize("g,expected", [
    (cycle(6), True),
    (complete(4), True),
    (long_range_box(8, 4.0), True),
    (path(4), False),
    (SmallWeightedGraph(3, ((0, 1), (1, 2), (0, 2)), (1.0, 1.0, 2.0)), False),
])
def test_transitivity(g, expected):
    assert g.is_transitive is expected


def test_chemical_sums_on_a_path():
    enum = Enumeration(path(4), 50.0)
    # all edges open with overwhelming probability: distances 1, 2, 3
    assert enum.expect(enum.chemical_sum(1)) == pytest.approx(6.0, rel=1e-12)
    assert enum.expect(enum.chemical_sum(2)) == pytest.approx(14.0, rel=1e-12)


def test_corrections_are_nonnegative():
    report = exact_expectations(cycle(6), 1.0)
    assert all(v >= -1e-12 for v in report.corrections.values())


def test_edge_cap_names_the_count():
    with pytest.raises(OracleError) as info:
        complete(7)
    assert info.value.edge_count == 21


@pytest.mark.parametrize("kwargs", [
    {"n": 3, "edges": ((0, 0),), "weights": (1.0,)},
    {"n": 3, "edges": ((0, 1), (1, 0)), "weights": (1.0, 1.0)},
    {"n": 3, "edges": ((0, 1),), "weights": (0.0,)},
    {"n": 13, "edges": (), "weights": ()},
])
def test_invalid_graphs(kwargs):
    with pytest.raises(OracleError):
        SmallWeightedGraph(**kwargs)


def test_long_range_box_weights_follow_the_kernel():
    g = long_range_box(10, 5.0)
    assert g.n == 10
    assert g.n_edges == 20
    near = 0.75 * (2 ** (-4 / 3) - 5 ** (-4 / 3))
    far = 0.75 * (4 ** (-4 / 3) - 5 ** (-4 / 3))
    np.testing.assert_allclose(sorted(set(np.round(g.weights, 12))), sorted({round(far, 12), round(near, 12)}))


def test_long_range_box_drops_edges_at_the_cutoff():
    assert long_range_box(10, 4.0).n_edges == 10


def test_random_instances_are_reproducible():
    a = [g.to_dict() for g in random_instances(8, seed=3)]
    b = [g.to_dict() for g in random_instances(8, seed=3)]
    assert a == b
