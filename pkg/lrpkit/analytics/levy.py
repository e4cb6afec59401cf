"""
The Levy measure dPi_1/dx = (alpha/(d+alpha)) (||x||^{-d-alpha} - 1) on the unit ball.

Moments follow from the homogeneity of x^k under the scaled sup norm:
integral over the ball of radius t of x^k is c_k t^{d+|k|}, hence

    m_Pi(k) = alpha c_k / (|k| - alpha),   c_k = prod (1/2)^{k_i}/(k_i+1).
"""

import logging
import math

import numpy as np
from scipy import integrate

from ..errors import KernelError
from .monomials import coordinate_ball_moment, multi_indices

logger = logging.getLogger(__name__)


def check_alpha(alpha):
    if not (0 < alpha < 2):
        raise KernelError(f"the Levy kernel needs 0 < alpha < 2, got {alpha}")


def levy_moment(d, alpha, k):
    """integral of x^k dPi_1 (multi-index k)"""
    check_alpha(alpha)
    degree = sum(k)
    if any(ki % 2 for ki in k):
        return 0.0
    if degree <= alpha:
        raise KernelError(f"moment of degree {degree} diverges for alpha={alpha}")
    return alpha * coordinate_ball_moment(k) / (degree - alpha)


def levy_moments(d, alpha, max_degree):
    """Table {k: m_Pi(k)} for every multi-index with 2 <= |k| <= max_degree"""
    check_alpha(alpha)
    return {
        k: levy_moment(d, alpha, k)
        for degree in range(2, max_degree + 1)
        for k in multi_indices(d, degree)
    }


def intensity(d, alpha, eps):
    """Lambda(eps) = Pi_1({||x|| >= eps}); zero for eps >= 1"""
    check_alpha(alpha)
    if eps <= 0:
        raise KernelError(f"truncation radius must be positive, got {eps}")
    if eps >= 1:
        return 0.0
    return alpha / (d + alpha) * (d * (eps ** -alpha - 1.0) / alpha - (1.0 - eps ** d))


def truncation_bias(d, alpha, eps, k):
    """Part of m_Pi(k) carried by jumps with ||x|| < eps"""
    check_alpha(alpha)
    degree = sum(k)
    c = coordinate_ball_moment(k)
    if c == 0.0:
        return 0.0
    eps = min(eps, 1.0)
    s = d + degree
    return alpha / (d + alpha) * c * s * (eps ** (degree - alpha) / (degree - alpha) - eps ** s / s)


def levy_density(d, alpha, norm):
    return alpha / (d + alpha) * (np.asarray(norm, dtype=float) ** (-d - alpha) - 1.0)


def levy_moment_quadrature(d, alpha, k):
    """
    Same moment by direct quadrature (d = 1 or 2), independent of the closed form.
    """
    check_alpha(alpha)
    if len(k) != d:
        raise KernelError(f"multi-index {k} does not have dimension {d}")
    if any(ki % 2 for ki in k):
        return 0.0
    if d == 1:
        (p,) = k
        val, err = integrate.quad(
            lambda x: x ** p * levy_density(1, alpha, 2 * x), 0.0, 0.5, limit=200, epsabs=1e-14, epsrel=1e-12
        )
        logger.debug("levy quadrature d=1 k=%s err=%.2e", k, err)
        return 2.0 * val
    if d == 2:
        a, b = k
        # even integrand: fold onto [0, 1/2]^2, then split along the diagonal
        below, _ = integrate.dblquad(
            lambda y, x: x ** a * y ** b * levy_density(2, alpha, 2 * x), 0.0, 0.5, 0.0, lambda x: x,
            epsabs=1e-13, epsrel=1e-11,
        )
        above, _ = integrate.dblquad(
            lambda x, y: x ** a * y ** b * levy_density(2, alpha, 2 * y), 0.0, 0.5, 0.0, lambda y: y,
            epsabs=1e-13, epsrel=1e-11,
        )
        return 4.0 * (below + above)
    raise KernelError("quadrature cross-check is implemented for d <= 2")


def second_moment_from_recurrence(alpha):
    """d = 1 degree-2 moment recovered from the n = 1 recurrence: alpha b/(2 - alpha), b = 1/12"""
    check_alpha(alpha)
    return alpha * (1.0 / 12.0) / (2.0 - alpha)


def sample_jumps(d, alpha, eps, count, rng):
    """
    `count` jumps from Pi_1 restricted to ||x|| >= eps, normalized.

    Norm: propose s ~ s^{-alpha-1} on [eps, 1] by inversion, accept with
    probability 1 - s^{d+alpha}. Direction: uniform on the surface of the
    sup-norm sphere (one of 2d faces, remaining coordinates uniform).
    """
    radii = np.empty(0)
    lo = eps ** -alpha
    while len(radii) < count:
        need = count - len(radii)
        batch = max(64, int(need * 1.3))
        u = rng.random(batch)
        s = (lo - u * (lo - 1.0)) ** (-1.0 / alpha)
        keep = rng.random(batch) < 1.0 - s ** (d + alpha)
        radii = np.concatenate([radii, s[keep]])
    radii = radii[:count]
    half = radii[:, None] / 2.0
    jumps = (rng.random((count, d)) * 2.0 - 1.0) * half
    face = rng.integers(0, d, size=count)
    sign = np.where(rng.random(count) < 0.5, -1.0, 1.0)
    jumps[np.arange(count), face] = sign * half[:, 0]
    return jumps


def gamma_integral(alpha):
    """integral_0^inf (1 - cos t) t^{-1-alpha} dt"""
    check_alpha(alpha)
    if alpha == 1.0:
        return math.pi / 2.0
    return math.gamma(1.0 - alpha) * math.cos(math.pi * alpha / 2.0) / alpha
