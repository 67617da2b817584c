"""Spectral inversion: equation solvers, the LP and the estimators."""

from .estimators import (
    DEFAULT_SMOOTHING,
    SolverError,
    default_grid,
    estimate_Fa,
    estimate_icv_approach1,
    estimate_icv_approach2,
)
from .minimax import AffineResidual, InversionResult, SmoothingConfig, estimate_weights_minimax, smooth_weights
from .mp import MPError, mp_forward
from .simplex import LPError, LPResult, simplex
from .step1 import (
    DomainCheck,
    Step1Config,
    Step1Solution,
    domain_check,
    solve_step1_mA,
    solve_tn,
    tn_residual,
    tn_threshold,
    transport_tn,
)
from .step2 import GammaStarProfile, Step2Error, closed_form_M, solve_step2_M, step2_residual

__all__ = [
    "AffineResidual",
    "DEFAULT_SMOOTHING",
    "DomainCheck",
    "GammaStarProfile",
    "InversionResult",
    "LPError",
    "LPResult",
    "MPError",
    "SmoothingConfig",
    "SolverError",
    "Step1Config",
    "Step1Solution",
    "Step2Error",
    "closed_form_M",
    "default_grid",
    "domain_check",
    "estimate_Fa",
    "estimate_icv_approach1",
    "estimate_icv_approach2",
    "estimate_weights_minimax",
    "mp_forward",
    "simplex",
    "smooth_weights",
    "solve_step1_mA",
    "solve_step2_M",
    "solve_tn",
    "step2_residual",
    "tn_residual",
    "tn_threshold",
    "transport_tn",
]
