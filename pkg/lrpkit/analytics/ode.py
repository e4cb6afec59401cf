"""
f'(r) = (a/r) (1 - C_r (r^{-a} f)^gamma + delta_r) f, integrated in
u = log r, g = log f, where it reads dg/du = a (1 - C e^{gamma (g - a u)} + delta).
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy.integrate import solve_ivp

from ..errors import KernelError, ODEIntegrationError

logger = logging.getLogger(__name__)

RTOL = 1e-11
ATOL = 1e-12


def _as_function(value):
    if callable(value):
        return value
    return lambda r: value


def _check(a, gamma, f_at_1):
    if not (a > 0 and gamma > 0 and f_at_1 > 0):
        raise KernelError(f"need a, gamma, f(1) > 0, got a={a}, gamma={gamma}, f(1)={f_at_1}")


def ode_exact(a, gamma, C, f_at_1, r):
    """Closed form for constant C and delta = 0: r^a (f(1)^-gamma + a gamma C log r)^(-1/gamma)"""
    _check(a, gamma, f_at_1)
    if C <= 0:
        raise KernelError(f"C must be positive, got {C}")
    r = np.asarray(r, dtype=float)
    value = r ** a * (f_at_1 ** -gamma + a * gamma * C * np.log(r)) ** (-1.0 / gamma)
    return float(value) if value.ndim == 0 else value


def ode_rhs(a, gamma, C, r, f, delta=0.0):
    """right-hand side f'(r), used for residual checks"""
    return a / r * (1.0 - C * (r ** -a * f) ** gamma + delta) * f


@dataclass
class Trajectory:
    a: float
    gamma: float
    r: np.ndarray
    f: np.ndarray
    solution: object = None

    def at(self, r):
        """Dense-output value of f at r"""
        u = np.log(np.asarray(r, dtype=float))
        return np.exp(self.solution.sol(u)[0])

    def asymptote_ratio(self, C, r=None):
        """f(r) (a gamma C log r)^(1/gamma) / r^a, which tends to 1"""
        if r is None:
            r, f = self.r, self.f
        else:
            r = np.asarray(r, dtype=float)
            f = self.at(r)
        with np.errstate(divide="ignore", invalid="ignore"):
            return f * (self.a * self.gamma * C * np.log(r)) ** (1.0 / self.gamma) / r ** self.a

    def to_frame(self):
        return pd.DataFrame({"r": self.r, "f": self.f})


def ode_solve(a, gamma, C_of_r, delta_of_r, f_at_1, r_max, points=200):
    """
    Integrate from r = 1 to r_max. C_of_r and delta_of_r are callables of r or constants.
    The returned trajectory is sampled on a log grid of `points` radii.
    """
    _check(a, gamma, f_at_1)
    if r_max <= 1:
        raise KernelError(f"r_max must exceed 1, got {r_max}")
    C_of_r = _as_function(C_of_r)
    delta_of_r = _as_function(0.0 if delta_of_r is None else delta_of_r)

    def rhs(u, g):
        r = math.exp(u)
        return [a * (1.0 - C_of_r(r) * math.exp(gamma * (g[0] - a * u)) + delta_of_r(r))]

    u_max = math.log(r_max)
    grid = np.linspace(0.0, u_max, points)
    sol = solve_ivp(rhs, (0.0, u_max), [math.log(f_at_1)], method="DOP853", t_eval=grid,
                    dense_output=True, rtol=RTOL, atol=ATOL)
    logger.debug("ode: %d rhs evaluations, status %d", sol.nfev, sol.status)
    if sol.status != 0:
        u_last = sol.t[-1] if len(sol.t) else 0.0
        g_last = sol.y[0, -1] if sol.y.size else math.log(f_at_1)
        raise ODEIntegrationError(sol.message, (math.exp(u_last), math.exp(g_last)))
    return Trajectory(a, gamma, np.exp(sol.t), np.exp(sol.y[0]), sol)
