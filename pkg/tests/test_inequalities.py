import math

import pytest

from lrpkit.analytics.diagrams import double_factorial
from lrpkit.inequalities import FAIL, PASS, SKIPPED, inequality_suite, summarize
from lrpkit.oracle import SmallWeightedGraph, builtin_instances, complete, cycle, random_instances

BETAS = (0.1, 0.5, 1.0, 2.0)


def failures(results):
    return [(r.name, r.graph, r.beta, r.params, r.small, r.large) for r in results if r.status == FAIL]


def star(n):
    return SmallWeightedGraph(n, tuple((0, v) for v in range(1, n)), (1.0,) * (n - 1), name=f"star{n}")


def test_tree_graph_margin_at_zero_beta():
    results = [r for r in inequality_suite(complete(4), [0.0]) if r.name == "tree-graph"]
    assert [r.params["p"] for r in results] == [2, 3, 4]
    for r in results:
        assert r.status == PASS
        assert r.margin == pytest.approx(double_factorial(2 * r.params["p"] - 3) - 1)


@pytest.mark.parametrize("g", [complete(4), cycle(6)], ids=["K4", "C6"])
def test_transitive_graphs_pass_everything(g):
    results = inequality_suite(g, BETAS)
    assert failures(results) == []
    assert all(r.status != SKIPPED for r in results)


@pytest.mark.parametrize("g", builtin_instances()[:4], ids=lambda g: g.name)
def test_builtin_instances(g):
    assert failures(inequality_suite(g, BETAS)) == []


@pytest.mark.slow
def test_long_range_box_instance():
    g = builtin_instances()[4]
    assert g.n_edges == 20
    assert failures(inequality_suite(g, BETAS)) == []


def test_transitive_only_checks_are_skipped_on_a_star():
    results = inequality_suite(star(5), [0.7])
    skipped = {r.name for r in results if r.status == SKIPPED}
    assert {"tree-graph", "generalized-tree-graph", "finitary-magnetization", "chemical-sum"} <= skipped
    assert all(r.reason for r in results if r.status == SKIPPED)
    assert failures(results) == []
    # checks valid on every graph still run
    assert any(r.name == "gladkov" and r.status == PASS for r in results)
    assert any(r.name == "bk-disjoint" and r.status == PASS for r in results)


def test_zero_beta_inverse_terms_are_finite_where_multiplied_by_zero():
    results = inequality_suite(cycle(4), [0.0])
    assert failures(results) == []
    for r in results:
        if r.status == PASS:
            assert not math.isnan(r.margin)


def test_summary_counts():
    results = inequality_suite(cycle(5), [0.5])
    counts = summarize(results)
    assert counts[PASS] + counts[FAIL] + counts[SKIPPED] == len(results)
    assert counts[FAIL] == 0
    assert counts["min_margin"] >= -1e-9


def test_random_instances():
    for g in random_instances(12, seed=1):
        assert failures(inequality_suite(g, (0.3, 1.5))) == [], g.name


@pytest.mark.slow
def test_many_random_instances():
    for g in random_instances(100, seed=2024):
        assert failures(inequality_suite(g, BETAS)) == [], g.name
