"""Universal constants of the critical-line asymptotics, all driven by the ball integral of kappa^{*4}."""

import logging
import math
from dataclasses import asdict, dataclass

from ..errors import KernelError
from .kappa import KappaModel

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class UniversalConstants:
    d: int
    alpha: float
    beta_c: float
    ball_integral: float
    C: float
    A_amplitude: float
    volume_prefactor: float
    method: str

    def to_dict(self):
        return asdict(self)

    def vertex_factor(self, r):
        """V_r ~ (beta_c / alpha)^2 A / sqrt(log r)"""
        return (self.beta_c / self.alpha) ** 2 * self.A_amplitude / math.sqrt(math.log(r))

    def first_moment(self, r):
        """E_r|K| ~ (alpha / beta_c) r^alpha"""
        return self.alpha / self.beta_c * r ** self.alpha

    def second_moment(self, r):
        """E_r|K|^2 ~ (alpha / beta_c) (6 beta_c C)^(-1/2) r^{3 alpha} / sqrt(log r)"""
        return self.alpha / self.beta_c / math.sqrt(6 * self.beta_c * self.C) * r ** (3 * self.alpha) / math.sqrt(math.log(r))

    def volume_tail(self, n):
        """P(|K| >= n) ~ prefactor (log n)^(1/4) / sqrt(n)"""
        return self.volume_prefactor * math.log(n) ** 0.25 / math.sqrt(n)

    def ode_parameters(self):
        """(a, gamma, C) of the log-correction ODE satisfied by E_r|K|^2"""
        return 3 * self.alpha, 2.0, self.C * self.beta_c ** 3 / self.alpha ** 3


def universal_constants(d, alpha, beta_c, ball_integral=None, samples=400_000, seed=0):
    """C = 2 I, A = 1/sqrt(12 beta_c I), prefactor = (alpha/beta_c) sqrt(2/pi) (6 beta_c I/alpha)^(1/4)"""
    if not beta_c > 0:
        raise KernelError(f"beta_c must be positive, got {beta_c}")
    if ball_integral is None:
        result = KappaModel(d, alpha).localized_ball_integral(4, samples=samples, seed=seed)
        integral, method = result.value, result.method
    else:
        integral, method = float(ball_integral), "supplied"
    if not integral > 0:
        raise KernelError(f"ball integral must be positive, got {integral}")
    C = 2.0 * integral
    A = 1.0 / math.sqrt(12.0 * beta_c * integral)
    prefactor = alpha / beta_c * math.sqrt(2.0 / math.pi) * (6.0 * beta_c / alpha * integral) ** 0.25
    logger.info("constants: C=%.6g A=%.6g prefactor=%.6g (beta_c=%.6g)", C, A, prefactor, beta_c)
    return UniversalConstants(d, alpha, beta_c, integral, C, A, prefactor, method)
