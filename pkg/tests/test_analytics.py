import math

import numpy as np
import pytest

from lrpkit.analytics import (
    KappaModel,
    Monomial,
    ball_moment,
    diagram_moment,
    divisors,
    enumerate_trees,
    levy_moment,
    ode_exact,
    ode_solve,
    tree_count,
    universal_constants,
)
from lrpkit.analytics.diagrams import double_factorial
from lrpkit.analytics.levy import (
    gamma_integral,
    intensity,
    levy_moment_quadrature,
    second_moment_from_recurrence,
    truncation_bias,
)
from lrpkit.errors import KernelError

ALPHA = 1 / 3
DIAGONAL = (math.sqrt(0.5), math.sqrt(0.5))


class TestLevy:
    def test_second_moment_three_ways(self):
        assert levy_moment(1, ALPHA, (2,)) == pytest.approx(1 / 60, rel=1e-14)
        assert levy_moment_quadrature(1, ALPHA, (2,)) == pytest.approx(1 / 60, rel=1e-9)
        assert second_moment_from_recurrence(ALPHA) == pytest.approx(1 / 60, rel=1e-14)

    @pytest.mark.parametrize("k", [(2, 0), (0, 4), (2, 2)])
    def test_two_dimensional_quadrature(self, k):
        assert levy_moment_quadrature(2, 2 / 3, k) == pytest.approx(levy_moment(2, 2 / 3, k), rel=1e-7)

    def test_odd_moments_vanish(self):
        assert levy_moment(2, 2 / 3, (1, 1)) == 0.0

    def test_divergent_moment(self):
        with pytest.raises(KernelError):
            levy_moment(1, 1.5, (0,))

    def test_truncation_bias_shrinks_with_eps(self):
        biases = [truncation_bias(1, ALPHA, eps, (2,)) for eps in (1e-1, 1e-2, 1e-3)]
        assert biases[0] > biases[1] > biases[2] > 0
        assert truncation_bias(1, ALPHA, 1.0, (2,)) == pytest.approx(1 / 60, rel=1e-12)

    def test_intensity(self):
        assert intensity(1, ALPHA, 1.0) == 0.0
        assert intensity(1, ALPHA, 1e-3) > intensity(1, ALPHA, 1e-2) > 0

    def test_gamma_integral_at_one(self):
        assert gamma_integral(1.0) == pytest.approx(math.pi / 2)


class TestMonomials:
    def test_unit_directions_are_enforced(self):
        with pytest.raises(KernelError):
            Monomial(2, ((1.0, 1.0),))

    def test_divisor_multiplicities(self):
        P = Monomial.coordinate((2, 1))
        divs = divisors(P)
        assert sum(d.multiplicity for d in divs) == 2 ** P.degree
        assert len(divs) == 6

    def test_addition_identity(self):
        rng = np.random.default_rng(5)
        P = Monomial(2, ((1.0, 0.0), DIAGONAL, DIAGONAL, (0.0, 1.0)))
        for _ in range(10):
            x, y = rng.normal(size=2), rng.normal(size=2)
            rhs = sum(d.multiplicity * d.divisor.evaluate(y) * d.quotient.evaluate(x) for d in divisors(P))
            assert P.evaluate(x + y) == pytest.approx(rhs, rel=1e-12)

    def test_ball_moments(self):
        assert ball_moment(Monomial.one(3)) == 1.0
        assert ball_moment(Monomial.coordinate((2,))) == pytest.approx(1 / 12)
        assert ball_moment(Monomial.coordinate((1, 1))) == 0.0
        # <x, u>^2 for the diagonal in d = 2: (x1^2 + x2^2) / 2
        assert ball_moment(Monomial(2, (DIAGONAL, DIAGONAL))) == pytest.approx(1 / 12)


class TestKappa:
    def test_second_moment_table(self):
        model = KappaModel(1, ALPHA)
        assert model.moment((2,)) == pytest.approx(1 / 60, rel=1e-14)
        assert model.moment((1,)) == 0.0
        assert model.moment((2,), n=3) == pytest.approx(3 / 60, rel=1e-14)
        assert model.cumulant((2,)) == pytest.approx(1 / 60, rel=1e-14)

    @pytest.mark.parametrize("d,alpha", [(1, 1 / 3), (2, 2 / 3), (3, 1.0)])
    @pytest.mark.parametrize("n", [1, 2, 4])
    def test_recurrence(self, d, alpha, n):
        model = KappaModel(d, alpha)
        if d == 1:
            monomials = [Monomial.one(1), Monomial.coordinate((2,)), Monomial.coordinate((4,))]
        elif d == 2:
            monomials = [Monomial.coordinate((2, 0)), Monomial.coordinate((2, 2)), Monomial(2, (DIAGONAL,) * 2)]
        else:
            monomials = [Monomial.coordinate((2, 0, 0)), Monomial.coordinate((1, 1, 0)), Monomial.coordinate((0, 0, 2))]
        for P in monomials:
            assert model.relative_recurrence_residual(n, P) <= 1e-8

    def test_kappa_transform_is_normalized(self):
        model = KappaModel(1, ALPHA)
        assert model.kappa_hat(0.0) == 1.0
        assert 0 < model.kappa_hat(10.0) < 1

    def test_sampler_second_moment(self):
        model = KappaModel(1, ALPHA, eps=1e-3)
        x = model.sampler(seed=11).sample(200_000)[:, 0]
        expected = 1 / 60 - model.truncation_bias((2,))
        stderr = (x ** 2).std(ddof=1) / math.sqrt(len(x))
        assert abs((x ** 2).mean() - expected) <= 5 * stderr

    def test_invalid_degree(self):
        with pytest.raises(KernelError):
            KappaModel(1, ALPHA, max_degree=7)

    @pytest.mark.slow
    def test_ball_integral_transform_matches_monte_carlo(self):
        result = KappaModel(1, ALPHA).localized_ball_integral(4, samples=400_000, seed=1)
        assert 0 < result.value < 1
        assert abs(result.transform_value - result.monte_carlo_value) <= 0.01 * result.transform_value


class TestDiagrams:
    @pytest.mark.parametrize("n,count", [(1, 1), (2, 3), (3, 15), (4, 105), (5, 945), (6, 10395)])
    def test_planted_tree_counts(self, n, count):
        assert len(enumerate_trees(n)) == count == tree_count(n)

    @pytest.mark.parametrize("n", [2, 3, 4, 5])
    def test_unplanted_tree_counts(self, n):
        assert len(enumerate_trees(n, planted=False)) == double_factorial(2 * n - 3)

    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    def test_constant_monomials_count_trees(self, n):
        model = KappaModel(1, ALPHA)
        assert diagram_moment(n, [Monomial.one(1)] * n, model) == pytest.approx(double_factorial(2 * n - 1))

    def test_single_leaf_second_moment(self):
        model = KappaModel(1, ALPHA)
        assert diagram_moment(1, [Monomial.coordinate((2,))], model) == pytest.approx(1 / 60, rel=1e-12)

    def test_wrong_monomial_count(self):
        with pytest.raises(KernelError):
            diagram_moment(2, [Monomial.one(1)], KappaModel(1, ALPHA))


class TestODE:
    def test_closed_form_value(self):
        assert ode_exact(2.0, 2.0, 1.0, 1.0, math.e) == pytest.approx(math.e ** 2 / math.sqrt(5), rel=1e-14)

    def test_integrator_matches_closed_form(self):
        trajectory = ode_solve(ALPHA, 2.0, 0.7, 0.0, 1.3, 1e6)
        exact = ode_exact(ALPHA, 2.0, 0.7, 1.3, trajectory.r)
        np.testing.assert_allclose(trajectory.f, exact, rtol=1e-8)

    def test_asymptote_ratio_approaches_one(self):
        trajectory = ode_solve(1.0, 2.0, 1.0, lambda r: 1 / r, 1.0, 1e8)
        ratios = trajectory.asymptote_ratio(1.0, [1e4, 1e8])
        assert abs(ratios[1] - 1) < abs(ratios[0] - 1)

    def test_invalid_parameters(self):
        with pytest.raises(KernelError):
            ode_solve(0.0, 2.0, 1.0, 0.0, 1.0, 10.0)


class TestConstants:
    def test_supplied_ball_integral(self):
        c = universal_constants(1, ALPHA, 0.5, ball_integral=0.2)
        assert c.C == pytest.approx(0.4)
        assert c.A_amplitude == pytest.approx(1 / math.sqrt(12 * 0.5 * 0.2))
        assert c.method == "supplied"
        a, gamma, C = c.ode_parameters()
        assert (a, gamma) == (1.0, 2.0)

    def test_rejects_nonpositive_beta(self):
        with pytest.raises(KernelError):
            universal_constants(1, ALPHA, 0.0, ball_integral=0.2)
