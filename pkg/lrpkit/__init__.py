"""Monte Carlo, exact-enumeration and analytic tools for long-range percolation on the critical line."""

from .errors import LRPError
from .kernel import KernelSpec

__version__ = "0.1.0"

__all__ = ["KernelSpec", "LRPError", "__version__"]
