"""Cumulative Ord family: admissibility, pmfs, moments, orthogonal polynomials,
Fourier coefficients and two-parameter variance bounds."""

from .bounds import BoundReport, bound_report, variance_bound
from .core import Quadratic
from .errors import (
    ClassCError,
    CumOrdError,
    DegenerateRecurrenceError,
    InputError,
    MomentBudgetError,
    NotAdmissibleError,
    OrderError,
    RankDeficiencyError,
    UnreachableBranchError,
    WindowTooSmallError,
)
from .family import (
    DistributionKind,
    OrdModel,
    build_pmf,
    canonical_pair,
    check_admissible,
    classify,
    derive_distribution,
    determine_support,
    transform,
)
from .fourier import TestFunction, builtin, fourier_coefficient, from_expression, spectrum
from .moments import ascending_factorial_moments, descending_factorial_moments, moment_table
from .polynomials import orthonormal_basis, rodrigues_polynomial

__version__ = "0.1.0"

__all__ = [
    "BoundReport",
    "ClassCError",
    "CumOrdError",
    "DegenerateRecurrenceError",
    "DistributionKind",
    "InputError",
    "MomentBudgetError",
    "NotAdmissibleError",
    "OrdModel",
    "OrderError",
    "Quadratic",
    "RankDeficiencyError",
    "TestFunction",
    "UnreachableBranchError",
    "WindowTooSmallError",
    "ascending_factorial_moments",
    "bound_report",
    "build_pmf",
    "builtin",
    "canonical_pair",
    "check_admissible",
    "classify",
    "derive_distribution",
    "descending_factorial_moments",
    "determine_support",
    "fourier_coefficient",
    "from_expression",
    "moment_table",
    "orthonormal_basis",
    "rodrigues_polynomial",
    "spectrum",
    "transform",
    "variance_bound",
]
