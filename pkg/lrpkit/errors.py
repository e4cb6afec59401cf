"""Exception hierarchy shared by the library and the CLI."""


class LRPError(Exception):
    """Base class for every error raised by lrpkit"""


class KernelError(LRPError, ValueError):
    """Invalid kernel parameters or kernel arguments"""


class BoxTooSmallError(LRPError, ValueError):
    """Torus too small for the requested cut-off radius"""

    def __init__(self, L, r, minimum):
        self.L, self.r, self.minimum = L, r, minimum
        super().__init__(
            f"torus side L={L} is too small for cut-off r={r}; need L >= {minimum}"
        )


class MemoryBudgetError(LRPError):
    """Full-configuration sampling would decide too many pairs"""

    def __init__(self, pair_count, budget):
        self.pair_count, self.budget = pair_count, budget
        super().__init__(
            f"full configuration needs {pair_count} pair decisions, budget is {budget}"
        )


class EngineError(LRPError, ValueError):
    """Invalid sampling request (mode, points, substrate)"""


class LadderError(LRPError, ValueError):
    """Non-monotone (beta, r) ladder"""


class EstimatorError(LRPError, ValueError):
    """Estimator invoked with unusable input"""


class NoCrossingError(EstimatorError):
    """No finite-size crossing inside the beta search bracket"""

    def __init__(self, message, curve):
        self.curve = curve
        super().__init__(message)


class OracleError(LRPError, ValueError):
    """Graph outside the exact-enumeration caps"""

    def __init__(self, message, edge_count=None):
        self.edge_count = edge_count
        super().__init__(message)


class QuadratureMismatchError(LRPError):
    """Transform-side and Monte Carlo values disagree beyond the gate"""

    def __init__(self, transform_value, monte_carlo_value, tolerance):
        self.transform_value = transform_value
        self.monte_carlo_value = monte_carlo_value
        self.tolerance = tolerance
        super().__init__(
            f"transform value {transform_value:.6g} and Monte Carlo value "
            f"{monte_carlo_value:.6g} differ by more than {tolerance:.0%}"
        )


class ODEIntegrationError(LRPError):
    """Integrator failed (typically step-size underflow)"""

    def __init__(self, message, last_point):
        self.last_point = last_point
        super().__init__(f"{message} (last valid point r={last_point[0]:.6g}, f={last_point[1]:.6g})")


class ConfigError(LRPError, ValueError):
    """Invalid experiment configuration"""

    def __init__(self, message, field=None, line=None):
        self.field, self.line = field, line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        prefix = ", ".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)


class ReportError(LRPError):
    """Results are missing points required by a report"""

    def __init__(self, message, missing=()):
        self.missing = list(missing)
        super().__init__(message)
