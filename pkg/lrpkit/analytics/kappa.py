"""
The kernel kappa: law of the symmetric Levy process with measure Pi_1 stopped at
an independent Exp(1) time, and its convolution powers kappa^{*n}.

Moments are exact: with Phi(theta) = sum_k m_Pi(k) theta^k / k!, the moment
generating function of kappa^{*n} is (1 - Phi)^{-n}, expanded as a truncated
multivariate power series. Localized integrals over the unit ball need the
transform side (d = 1) or Monte Carlo.
"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate

from ..errors import KernelError, QuadratureMismatchError
from . import levy
from .monomials import Monomial, divisors, ball_moment, multi_factorial, multi_indices

logger = logging.getLogger(__name__)

DEFAULT_EPS = 1e-3
MAX_DEGREE = 8
GATE = 0.01
# frequencies above this use the oscillatory (QAWF) quadrature
XI_SPLIT = 200.0
J_SPLIT = 50.0


def _series_mul(a, b, max_degree):
    out = {}
    for ka, ca in a.items():
        da = sum(ka)
        for kb, cb in b.items():
            if da + sum(kb) > max_degree:
                continue
            k = tuple(x + y for x, y in zip(ka, kb))
            out[k] = out.get(k, 0.0) + ca * cb
    return out


@dataclass(frozen=True)
class LocalizedIntegral:
    n: int
    value: float
    transform_value: float
    monte_carlo_value: float
    monte_carlo_stderr: float
    method: str
    conditional: bool

    def to_dict(self):
        return {
            "n": self.n,
            "value": self.value,
            "transform_value": self.transform_value,
            "monte_carlo_value": self.monte_carlo_value,
            "monte_carlo_stderr": self.monte_carlo_stderr,
            "method": self.method,
            "conditional": self.conditional,
        }


class KappaModel:
    """Moment tables of kappa and kappa^{*n}; d = 1 transform side; jump-truncated sampler."""

    def __init__(self, d, alpha, max_degree=MAX_DEGREE, eps=DEFAULT_EPS):
        levy.check_alpha(alpha)
        if d < 1:
            raise KernelError(f"dimension must be positive, got {d}")
        if max_degree % 2 or max_degree > MAX_DEGREE:
            raise KernelError(f"max_degree must be even and at most {MAX_DEGREE}, got {max_degree}")
        if not 0 < eps <= 1:
            raise KernelError(f"truncation radius must lie in (0, 1], got {eps}")
        self.d = d
        self.alpha = float(alpha)
        self.max_degree = max_degree
        self.eps = eps
        self.levy_table = levy.levy_moments(d, alpha, max_degree)
        self._phi = {
            k: m / multi_factorial(k) for k, m in self.levy_table.items() if m != 0.0
        }
        self._phi_powers = [{(0,) * d: 1.0}]
        for _ in range(max_degree // 2):
            self._phi_powers.append(_series_mul(self._phi_powers[-1], self._phi, max_degree))
        self._tables = {}
        self._direction_cache = {}

    # -- moment tables -------------------------------------------------------

    def moment_table(self, n=1):
        """{k: integral x^k kappa^{*n}(x) dx} for |k| <= max_degree"""
        if n < 1:
            raise KernelError(f"convolution power must be positive, got {n}")
        if n not in self._tables:
            series = {}
            for j, power in enumerate(self._phi_powers):
                coeff = math.comb(n + j - 1, j)
                for k, c in power.items():
                    series[k] = series.get(k, 0.0) + coeff * c
            table = {}
            for degree in range(self.max_degree + 1):
                for k in multi_indices(self.d, degree):
                    table[k] = series.get(k, 0.0) * multi_factorial(k)
            self._tables[n] = table
        return self._tables[n]

    def moment(self, k, n=1):
        k = tuple(k)
        if sum(k) > self.max_degree:
            raise KernelError(f"degree {sum(k)} exceeds the table degree {self.max_degree}")
        return self.moment_table(n)[k]

    def monomial_moment(self, P: Monomial, n=1):
        return P.expectation(lambda k: self.moment(k, n))

    def direction_moment(self, directions):
        """E prod <X, u> for X ~ kappa, memoized by the sorted direction tuple"""
        if directions not in self._direction_cache:
            self._direction_cache[directions] = self.monomial_moment(Monomial(self.d, directions))
        return self._direction_cache[directions]

    def cumulant(self, k, n=1):
        """Joint cumulant table entry (d = 1: univariate cumulants via moments)"""
        if self.d != 1:
            raise KernelError("cumulants are tabulated for d = 1 only")
        (p,) = k
        moments = [self.moment((j,), n) for j in range(p + 1)]
        cum = [0.0] * (p + 1)
        for m in range(1, p + 1):
            cum[m] = moments[m] - math.fsum(
                math.comb(m - 1, j - 1) * cum[j] * moments[m - j] for j in range(1, m)
            )
        return cum[p]

    def conv_ball_moment(self, n, P: Monomial):
        """integral of (kappa^{*n} * 1_B)(y) P(y) dy"""
        return math.fsum(
            div.multiplicity * self.monomial_moment(div.quotient, n) * ball_moment(div.divisor)
            for div in divisors(P)
        )

    def recurrence_residual(self, n, P: Monomial):
        """(deg P + alpha n) m_n(P) - alpha n (kappa^{*(n+1)} * 1_B)(P)"""
        if n < 1:
            raise KernelError(f"n must be at least 1, got {n}")
        lhs = (P.degree + self.alpha * n) * self.monomial_moment(P, n)
        return lhs - self.alpha * n * self.conv_ball_moment(n + 1, P)

    def relative_recurrence_residual(self, n, P: Monomial):
        lhs = (P.degree + self.alpha * n) * self.monomial_moment(P, n)
        res = self.recurrence_residual(n, P)
        return abs(res) / abs(lhs) if lhs != 0 else abs(res)

    # -- transform side (d = 1) ----------------------------------------------

    def _require_line(self):
        if self.d != 1:
            raise KernelError("the transform side is only available for d = 1")

    @lru_cache(maxsize=65536)
    def _cos_integral(self, y):
        """J(y) = integral_0^y (1 - cos t) t^{-1-alpha} dt"""
        a = self.alpha
        if y <= 0:
            return 0.0
        if y <= J_SPLIT:
            val, _ = integrate.quad(lambda t: (1.0 - math.cos(t)) * t ** (-1.0 - a), 0.0, y,
                                    limit=400, epsabs=1e-13, epsrel=1e-12)
            return val
        tail, _ = integrate.quad(lambda t: t ** (-1.0 - a), y, np.inf, weight="cos", wvar=1.0,
                                 limlst=100)
        return levy.gamma_integral(a) - y ** (-a) / a + tail

    def psi(self, xi):
        """psi(xi) = integral (1 - cos xi x) dPi_1(x), d = 1"""
        self._require_line()
        xi = abs(float(xi))
        if xi == 0.0:
            return 0.0
        a = self.alpha
        if xi < 1e-3:
            # Taylor: psi = sum_j (-1)^{j+1} m_Pi(2j) xi^{2j} / (2j)!
            return math.fsum(
                (-1) ** (j + 1) * self.levy_table[(2 * j,)] * xi ** (2 * j) / math.factorial(2 * j)
                for j in range(1, self.max_degree // 2 + 1)
            )
        return a / (1.0 + a) * (
            2.0 ** (-a) * xi ** a * self._cos_integral(xi / 2.0) - 1.0 + 2.0 * math.sin(xi / 2.0) / xi
        )

    def kappa_hat(self, xi):
        """Fourier transform of kappa: 1 / (1 + psi)"""
        return 1.0 / (1.0 + self.psi(xi))

    def transform_ball_integral(self, n):
        """(1/pi) integral_0^inf (1 + psi)^{-n} (2/xi) sin(xi/2) d xi"""
        self._require_line()

        def smooth(xi):
            if xi == 0.0:
                return 1.0 / math.pi
            return self.kappa_hat(xi) ** n * 2.0 * math.sin(xi / 2.0) / (math.pi * xi)

        head, err_head = integrate.quad(smooth, 0.0, XI_SPLIT, limit=1000, epsabs=1e-12, epsrel=1e-10)
        tail, err_tail = integrate.quad(
            lambda xi: self.kappa_hat(xi) ** n * 2.0 / (math.pi * xi),
            XI_SPLIT, np.inf, weight="sin", wvar=0.5, limlst=200,
        )
        logger.debug("transform integral n=%d head=%.3e tail=%.3e errors=(%.1e, %.1e)",
                     n, head, tail, err_head, err_tail)
        return head + tail

    # -- sampling -------------------------------------------------------------

    @property
    def intensity(self):
        return levy.intensity(self.d, self.alpha, self.eps)

    def truncation_bias(self, k):
        return levy.truncation_bias(self.d, self.alpha, self.eps, k)

    def sampler(self, seed=0):
        return KappaSampler(self.d, self.alpha, self.eps, seed)

    def localized_ball_integral(self, n, samples=400_000, seed=0, gate=GATE):
        """
        integral over the unit ball of kappa^{*n}, by transform quadrature (d = 1)
        and by Monte Carlo; the two must agree to within `gate`.
        """
        if n < 1:
            raise KernelError(f"n must be at least 1, got {n}")
        conditional = n * self.alpha <= self.d
        draws = self.sampler(seed).sample_kappa_conv(n, samples)
        inside = np.max(np.abs(draws), axis=1) <= 0.5
        mc = float(inside.mean())
        mc_err = float(inside.std(ddof=1) / math.sqrt(samples))
        if self.d != 1:
            logger.info("ball integral n=%d (d=%d): Monte Carlo only, %.6f +- %.1e", n, self.d, mc, mc_err)
            return LocalizedIntegral(n, mc, math.nan, mc, mc_err, "monte-carlo", conditional)
        transform = self.transform_ball_integral(n)
        if abs(transform - mc) > gate * abs(transform):
            raise QuadratureMismatchError(transform, mc, gate)
        method = "transform+monte-carlo" + (" (conditional)" if conditional else "")
        logger.info("ball integral n=%d: transform %.6f, Monte Carlo %.6f +- %.1e", n, transform, mc, mc_err)
        return LocalizedIntegral(n, transform, transform, mc, mc_err, method, conditional)


class KappaSampler:
    """Draws from kappa (or kappa^{*n}) with jumps of norm below eps discarded."""

    def __init__(self, d, alpha, eps=DEFAULT_EPS, seed=0):
        levy.check_alpha(alpha)
        if not 0 < eps <= 1:
            raise KernelError(f"truncation radius must lie in (0, 1], got {eps}")
        self.d, self.alpha, self.eps = d, alpha, eps
        self.rate = levy.intensity(d, alpha, eps)
        self.rng = np.random.default_rng(seed)

    def _stopped(self, times):
        size = len(times)
        out = np.zeros((size, self.d))
        if self.rate == 0.0:
            return out
        counts = self.rng.poisson(times * self.rate)
        total = int(counts.sum())
        if total == 0:
            return out
        jumps = levy.sample_jumps(self.d, self.alpha, self.eps, total, self.rng)
        owner = np.repeat(np.arange(size), counts)
        for axis in range(self.d):
            out[:, axis] = np.bincount(owner, weights=jumps[:, axis], minlength=size)
        return out

    def sample(self, size=1):
        """X stopped at T ~ Exp(1)"""
        return self._stopped(self.rng.exponential(1.0, size))

    def sample_kappa_conv(self, n, size=1):
        """kappa^{*n}: the process stopped at an independent Gamma(n, 1) time"""
        if n < 1:
            raise KernelError(f"n must be at least 1, got {n}")
        return self._stopped(self.rng.gamma(n, 1.0, size))


def kappa_sampler(d, alpha, eps=DEFAULT_EPS, seed=0):
    return KappaSampler(d, alpha, eps, seed)
