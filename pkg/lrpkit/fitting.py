"""Weighted least-squares fits in log-log coordinates."""

import logging
from dataclasses import asdict, dataclass

import numpy as np

from .errors import EstimatorError

logger = logging.getLogger(__name__)

MIN_POINTS = 4


@dataclass(frozen=True)
class FitResult:
    exponent: float
    amplitude: float
    exponent_stderr: float
    amplitude_stderr: float
    n_points: int
    kind: str = "power-law"
    fixed_exponent: float = None

    def to_dict(self):
        return asdict(self)

    def predict(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "power-law":
            return self.amplitude * x ** self.exponent
        return self.amplitude * x ** self.fixed_exponent * np.log(x) ** self.exponent


def _points(x, y, sigma):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise EstimatorError("x and y must be one-dimensional and of equal length")
    if len(x) < MIN_POINTS:
        raise EstimatorError(f"a fit needs at least {MIN_POINTS} points, got {len(x)}")
    if np.any(x <= 0) or np.any(y <= 0):
        raise EstimatorError("log-log fits need positive x and y")
    if sigma is not None:
        sigma = np.asarray(sigma, dtype=float)
        if sigma.shape != y.shape or np.any(sigma <= 0):
            raise EstimatorError("sigma must be positive and match y")
    return x, y, sigma


def _linear_fit(t, z, sigma_z):
    """z = slope t + intercept; returns (slope, intercept, var_slope, var_intercept)"""
    if sigma_z is None:
        coef, cov = np.polyfit(t, z, 1, cov=True)
    else:
        coef, cov = np.polyfit(t, z, 1, w=1.0 / sigma_z, cov="unscaled")
    return coef[0], coef[1], max(cov[0, 0], 0.0), max(cov[1, 1], 0.0)


def fit_power_law(x, y, sigma=None):
    """y = A x^b; sigma are the absolute errors of y"""
    x, y, sigma = _points(x, y, sigma)
    sigma_log = None if sigma is None else sigma / y
    slope, intercept, v_slope, v_int = _linear_fit(np.log(x), np.log(y), sigma_log)
    amplitude = float(np.exp(intercept))
    logger.debug("power-law fit: exponent %.6g +- %.2g", slope, np.sqrt(v_slope))
    return FitResult(float(slope), amplitude, float(np.sqrt(v_slope)), amplitude * float(np.sqrt(v_int)), len(x))


def fit_log_correction(x, y, fixed_exponent, sigma=None):
    """y = A x^{fixed} (log x)^c; regresses log(y x^{-fixed}) on log log x (needs x > 1)"""
    x, y, sigma = _points(x, y, sigma)
    if np.any(x <= 1):
        raise EstimatorError("log-correction fits need x > 1")
    sigma_log = None if sigma is None else sigma / y
    z = np.log(y) - fixed_exponent * np.log(x)
    slope, intercept, v_slope, v_int = _linear_fit(np.log(np.log(x)), z, sigma_log)
    amplitude = float(np.exp(intercept))
    return FitResult(float(slope), amplitude, float(np.sqrt(v_slope)), amplitude * float(np.sqrt(v_int)),
                     len(x), kind="log-correction", fixed_exponent=float(fixed_exponent))
