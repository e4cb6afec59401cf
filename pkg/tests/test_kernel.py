import math

import numpy as np
import pytest
from scipy import integrate

from lrpkit.errors import KernelError
from lrpkit.kernel import KernelSpec


@pytest.mark.parametrize("x,d,expected", [
    ((0, 0), 2, 0),
    ((1, 0), 2, 2),
    ((-3, 2, 1), 3, 6),
])
def test_scaled_sup_norm(x, d, expected):
    assert KernelSpec(d=d, alpha=d / 3.0).norm(x) == expected


def test_norm_rejects_wrong_dimension(primary):
    with pytest.raises(KernelError):
        primary.norm((1, 2))


def test_cutoff_kernel_vanishes_at_and_beyond_radius(primary):
    assert primary.cutoff_kernel(4.0, 4.0) == 0.0
    assert primary.cutoff_kernel(6.0, 4.0) == 0.0


def test_cutoff_kernel_closed_form_and_quadrature(primary):
    expected = (2 ** (-4 / 3) - 4 ** (-4 / 3)) * 0.75
    assert primary.cutoff_kernel(2.0, 4.0) == pytest.approx(expected, rel=1e-14)
    quad, _ = integrate.quad(lambda s: s ** (-7 / 3), 2.0, 4.0)
    assert primary.cutoff_kernel(2.0, 4.0) == pytest.approx(quad, rel=1e-10)


def test_cutoff_kernel_is_monotone_in_radius(primary):
    radii = np.array([2.5, 4.0, 8.0, 64.0, math.inf])
    values = [primary.cutoff_kernel(2.0, r) for r in radii]
    assert np.all(np.diff(values) > 0)
    assert values[-1] == pytest.approx(primary.full_kernel(2.0))


def test_cutoff_kernel_rejects_nonpositive_distance(primary):
    with pytest.raises(KernelError):
        primary.cutoff_kernel(0.0, 4.0)


def test_edge_probability(primary):
    assert primary.edge_probability(2.0, 4.0, beta=0.0) == 0.0
    assert primary.edge_probability(6.0, 4.0, beta=1.0) == 0.0
    expected = 1 - math.exp(-0.75 * 2 ** (-4 / 3))
    assert primary.edge_probability(2.0, math.inf, beta=1.0) == pytest.approx(expected, rel=1e-14)


def test_activation_radius_closed_form(primary):
    u = -math.expm1(-0.1)
    r_star = primary.activation_radius(2.0, 1.0, u)
    assert r_star == pytest.approx((2 ** (-4 / 3) - (4 / 3) * 0.1) ** (-0.75), rel=1e-12)
    assert r_star == pytest.approx(2.718, abs=1e-3)
    assert primary.edge_probability(2.0, r_star, 1.0) == pytest.approx(u, rel=1e-10)


def test_activation_radius_infinite_when_edge_never_opens(primary):
    p_full = primary.edge_probability(2.0, math.inf, 1.0)
    assert primary.activation_radius(2.0, 1.0, min(0.999, p_full + 0.01)) == math.inf


def test_activation_radius_rejects_zero_beta(primary):
    with pytest.raises(KernelError):
        primary.activation_radius(2.0, 0.0, 0.5)


@pytest.mark.parametrize("d,r,expected", [(1, 4, 5), (2, 2, 9), (1, 1000, 1001), (3, 1.9, 1)])
def test_ball_size(d, r, expected):
    spec = KernelSpec(d=d, alpha=d / 3.0)
    assert spec.ball_size(r) == expected
    assert len(spec.ball_points(r)) == expected


def test_ball_size_grows_like_volume(primary):
    assert primary.ball_size(1000) / 1000 == pytest.approx(1.0, rel=2e-3)


def test_ball_points_lie_in_ball(secondary):
    points = secondary.ball_points(6)
    assert np.all(secondary.norm(points) <= 6)


def test_shell_sizes_partition_the_ball(secondary):
    assert 1 + secondary.shell_sizes(3).sum() == secondary.ball_size(6)


def test_total_weight_matches_shell_sum(primary):
    r = 9.0
    direct = sum(2 * primary.cutoff_kernel(2.0 * k, r) for k in range(1, 5))
    assert primary.total_weight(r) == pytest.approx(direct, rel=1e-14)


@pytest.mark.parametrize("kwargs", [
    {"d": 0, "alpha": 1.0},
    {"d": 1, "alpha": -1.0},
    {"d": 1, "alpha": 1.0, "beta": -0.1},
])
def test_invalid_specs_raise(kwargs):
    with pytest.raises(KernelError):
        KernelSpec(**kwargs)


def test_critical_line_preset():
    spec = KernelSpec.critical_line(2)
    assert spec.alpha == pytest.approx(2 / 3)
    assert spec.exponent == pytest.approx(8 / 3)
