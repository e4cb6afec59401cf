"""
Kernel definitions: scaled sup norm, full and cut-off kernels, edge
probabilities and activation radii.

The norm is ||x|| = 2 max_i |x_i|, so the unit ball [-1/2, 1/2]^d has volume
exactly 1. The kernel satisfies |J'(t)| = t^(-d-alpha-1), which gives the
closed forms

    J(t)   = t^(-d-alpha) / (d+alpha)
    J_r(t) = (t^(-d-alpha) - r^(-d-alpha)) / (d+alpha)   for 0 < t <= r
"""

import math
from dataclasses import asdict, dataclass, replace

import numpy as np

from .errors import KernelError

NORM_SCALE = 2


@dataclass(frozen=True)
class KernelSpec:
    d: int
    alpha: float
    beta: float = 0.0
    norm_scale: int = NORM_SCALE

    def __post_init__(self):
        if not isinstance(self.d, (int, np.integer)) or self.d < 1:
            raise KernelError(f"dimension must be a positive integer, got {self.d!r}")
        if not (math.isfinite(self.alpha) and self.alpha > 0):
            raise KernelError(f"alpha must be positive and finite, got {self.alpha!r}")
        if not (math.isfinite(self.beta) and self.beta >= 0):
            raise KernelError(f"beta must be nonnegative and finite, got {self.beta!r}")
        if self.norm_scale != NORM_SCALE:
            raise KernelError("only the scaled sup norm (norm_scale=2) is supported")

    @classmethod
    def critical_line(cls, d, beta=0.0):
        """Preset on the line d = 3 alpha"""
        if d >= 6:
            raise KernelError("critical-line presets need d < 6")
        return cls(d=d, alpha=d / 3.0, beta=beta)

    @property
    def exponent(self):
        return self.d + self.alpha

    def with_beta(self, beta):
        return replace(self, beta=float(beta))

    def to_dict(self):
        return asdict(self)

    # -- norm and balls -------------------------------------------------

    def norm(self, x):
        """Scaled sup norm of one lattice vector, or of each row of an array"""
        x = np.asarray(x)
        if x.ndim == 0:
            x = x.reshape(1)
        if x.shape[-1] != self.d:
            raise KernelError(f"expected vectors of length {self.d}, got shape {x.shape}")
        return self.norm_scale * np.max(np.abs(x), axis=-1)

    def ball_size(self, r):
        if r < 0:
            raise KernelError(f"radius must be nonnegative, got {r}")
        return (2 * int(math.floor(r / self.norm_scale)) + 1) ** self.d

    def ball_points(self, r):
        """Lattice points of B_r in lexicographic order, shape (|B_r|, d)"""
        if r < 0:
            raise KernelError(f"radius must be nonnegative, got {r}")
        k = int(math.floor(r / self.norm_scale))
        axis = np.arange(-k, k + 1)
        grids = np.meshgrid(*([axis] * self.d), indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=-1)

    # -- kernels ----------------------------------------------------------

    def kernel_derivative(self, t):
        """|J'(t)| = t^(-d-alpha-1)"""
        t = np.asarray(t, dtype=float)
        return t ** (-self.exponent - 1.0)

    def full_kernel(self, dist):
        dist = _positive(dist, "dist")
        return dist ** (-self.exponent) / self.exponent

    def cutoff_kernel(self, dist, r):
        """J_r(dist); zero outside 0 < dist <= r. r may be +inf."""
        dist = _positive(dist, "dist")
        r = np.asarray(r, dtype=float)
        if np.any(np.isnan(r)) or np.any(r <= 0):
            raise KernelError("cut-off radius must be positive")
        s = self.exponent
        with np.errstate(divide="ignore"):
            tail = np.where(np.isinf(r), 0.0, r ** (-s))
        value = np.where(dist <= r, (dist ** (-s) - tail) / s, 0.0)
        return _scalar(value)

    def edge_probability(self, dist, r, beta=None):
        beta = self.beta if beta is None else beta
        if beta < 0:
            raise KernelError(f"beta must be nonnegative, got {beta}")
        return _scalar(-np.expm1(-beta * np.asarray(self.cutoff_kernel(dist, r))))

    def activation_radius(self, dist, beta, u):
        """
        Least r with edge_probability(dist, r, beta) >= u.

        Returns +inf when the edge stays closed even for the full kernel.
        """
        dist = _positive(dist, "dist")
        if not beta > 0:
            raise KernelError(f"activation radii need beta > 0, got {beta}")
        u = np.asarray(u, dtype=float)
        if np.any((u <= 0) | (u >= 1)):
            raise KernelError("u must lie in the open interval (0, 1)")
        t = -np.log1p(-u) / beta
        return _scalar(self.radius_for_threshold(dist, t))

    def radius_for_threshold(self, dist, t):
        """Least r with J_r(dist) >= t, or +inf"""
        s = self.exponent
        head = np.asarray(dist, dtype=float) ** (-s)
        rest = head - s * np.asarray(t, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            radius = np.where(rest > 0, np.abs(rest) ** (-1.0 / s), np.inf)
        return radius

    # -- lattice sums -------------------------------------------------------

    def shell_sizes(self, k_max):
        """Number of lattice points at norm 2k for k = 1..k_max"""
        k = np.arange(1, k_max + 1)
        return (2 * k + 1) ** self.d - (2 * k - 1) ** self.d

    def shell_weights(self, k_max, r=math.inf):
        """Total kernel weight carried by each shell k = 1..k_max"""
        k = np.arange(1, k_max + 1)
        return self.shell_sizes(k_max) * np.asarray(self.cutoff_kernel(2.0 * k, r))

    def total_weight(self, r):
        """|J_r| = sum over x != 0 of J_r(0, x) (finite for finite r)"""
        if not math.isfinite(r):
            raise KernelError("total weight is only tabulated for finite r")
        k_max = int(math.floor(r / self.norm_scale))
        if k_max < 1:
            return 0.0
        return float(np.sum(self.shell_weights(k_max, r)))


def _positive(dist, name):
    dist = np.asarray(dist, dtype=float)
    if not np.all(np.isfinite(dist)):
        raise KernelError(f"{name} must be finite")
    if np.any(dist <= 0):
        raise KernelError(f"{name} must be positive")
    return dist


def _scalar(value):
    value = np.asarray(value)
    return float(value) if value.ndim == 0 else value
