"""Numerical toolkit for the Cheeger and Buser bounds on weighted one-dimensional spaces."""

from .bounds import (
    BoundReport,
    ExplicitBound,
    MeasureRegime,
    buser_functional,
    cheeger_lower,
    constant_M,
    explicit_h_lower,
    explicit_upper,
    implicit_h_lower_bound,
    lambda_upper_from_h,
    sandwich,
)
from .errors import (
    BuserKitError,
    DomainError,
    InfeasibleBoundError,
    NumericalError,
    RegimeError,
)
from .heat import HeatEngine, VerificationRecord, evolve
from .isoperimetry import CutFamily, brute_force_cheeger, cheeger_constant, coarea_check
from .spaces import PRESETS, SpaceConfig, WeightedLine, build_space
from .special import (
    J_K_closed,
    J_K_quadrature,
    gaussian_isoperimetric_I,
    j_K,
    lambert_w_m1,
    norm_ppf,
)
from .spectral import EigenResult, lambda0, lambda1
from .suite import run_suite

__version__ = "0.1.0"

__all__ = [
    "BoundReport", "ExplicitBound", "MeasureRegime", "buser_functional", "cheeger_lower",
    "constant_M", "explicit_h_lower", "explicit_upper", "implicit_h_lower_bound",
    "lambda_upper_from_h", "sandwich",
    "BuserKitError", "DomainError", "InfeasibleBoundError", "NumericalError", "RegimeError",
    "HeatEngine", "VerificationRecord", "evolve",
    "CutFamily", "brute_force_cheeger", "cheeger_constant", "coarea_check",
    "PRESETS", "SpaceConfig", "WeightedLine", "build_space",
    "J_K_closed", "J_K_quadrature", "gaussian_isoperimetric_I", "j_K", "lambert_w_m1",
    "norm_ppf",
    "EigenResult", "lambda0", "lambda1",
    "run_suite",
]
