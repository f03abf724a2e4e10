"""Numerical toolkit for linearizing holomorphic semicocycles.

Decides and constructs gauges M with M(F_t(x)) Gamma_t(x) = e^{tB0} M(x)
for semicocycles over contracting semigroups on the unit ball, via limit
schedules, integral criteria, polynomial correctors, and Taylor/Sylvester
recursions.
"""

__version__ = "0.1.0"

from .dynamics import SemigroupSpec, condition_star, flow, linear_part
from .errors import ToolkitError
from .linearize import (Schedule, coboundary_check, corrected_limit,
                        corrector_fit, integral_criterion, naive_limit,
                        taylor_linearize, verify_cohomology)
from .mapexpr import ExpPolyScalar, Polynomial, RationalEntry
from .scenarios import Scenario, builtin, load_scenario
from .semicocycle import SemicocycleSpec, evolve, gamma_at
from .spectra import char_ratio, kappa_minus, kappa_plus, resonance
from .tolerances import DEFAULT, Tolerances

__all__ = [
    "__version__", "SemigroupSpec", "SemicocycleSpec", "Scenario",
    "Polynomial", "RationalEntry", "ExpPolyScalar", "Schedule",
    "Tolerances", "DEFAULT", "ToolkitError",
    "flow", "linear_part", "condition_star", "evolve", "gamma_at",
    "kappa_plus", "kappa_minus", "char_ratio", "resonance",
    "naive_limit", "corrected_limit", "corrector_fit", "integral_criterion",
    "taylor_linearize", "verify_cohomology", "coboundary_check",
    "builtin", "load_scenario",
]
