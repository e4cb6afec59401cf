from .constants import UniversalConstants, universal_constants
from .diagrams import DiagramTree, diagram_moment, diagram_moment_mc, enumerate_trees, tree_count
from .kappa import KappaModel, KappaSampler, LocalizedIntegral, kappa_sampler
from .levy import intensity, levy_moment, levy_moments, truncation_bias
from .monomials import Monomial, ball_moment, divisors
from .ode import Trajectory, ode_exact, ode_solve
