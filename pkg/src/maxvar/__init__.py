"""Maximal-function second-derivative toolkit.

Exact calculus for piecewise-linear single-peak functions, the uncentered
maximal operator with its contact-point solver and derivative formulas,
variation functionals, the slope-oscillation blow-up family, a
variable-bandwidth mollifier, and executable lemma checks.
"""

from .errors import *  # noqa: F401,F403
from .pwl import ClassReport, PwlFunction, StepFunction, hat, triangle_bump
from .scalars import EXTENDED, FLOAT64, ScalarContext, get_context
from .maximal import (
    GridSpec,
    MaximalEvaluation,
    a_prime,
    centered_maximal_value,
    evaluate,
    luiro_residual,
    maximal_derivative,
    maximal_second_derivative,
    maximal_value,
    profile,
    solve_contact,
)
from .variation import (
    SampledSignal,
    q_variation,
    q_variation_bruteforce,
    sup_variation,
    total_variation,
    weak_quasi_norm,
)

__version__ = "0.1.0"
