"""End-to-end spectrum estimators built on the step solvers and the LP.

All three estimators work internally in units of the largest observed
eigenvalue ``c``: spectra are divided by ``c``, so is the noise variance
and the volatility profile, and the complex grid is read in those units.
Every equation involved is homogeneous under this rescaling, so the
estimate is simply scaled back by ``c`` at the end. This keeps the grid
meaningful whatever the price scale and the LP data well above solver
tolerances.
"""

from __future__ import annotations

from dataclasses import asdict, replace

import numpy as np

from ..spectra import ComplexGrid, SpectralDistribution, stieltjes
from .minimax import (
    AffineResidual,
    InversionResult,
    SmoothingConfig,
    estimate_weights_minimax,
    smooth_weights,
)
from .step1 import Step1Config, solve_step1_mA
from .step2 import GammaStarProfile, Step2Error, solve_step2_M

__all__ = [
    "SolverError",
    "default_grid",
    "estimate_Fa",
    "estimate_icv_approach1",
    "estimate_icv_approach2",
    "DEFAULT_SMOOTHING",
    "MAX_STEP2_FAILURE",
]

DEFAULT_SMOOTHING = SmoothingConfig()
MAX_STEP2_FAILURE = 0.20


class SolverError(RuntimeError):
    """Too many grid points failed; ``diagnostics`` says where."""

    def __init__(self, message: str, diagnostics: dict):
        super().__init__(message)
        self.diagnostics = diagnostics


def default_grid() -> ComplexGrid:
    """10 x 10 lattice, Re in [-20, 0], Im in [1, 20] (normalised units)."""
    return ComplexGrid.lattice()


def _scale_of(dist: SpectralDistribution) -> float:
    c = dist.max_support
    if not c > 0:
        raise ValueError("spectrum is identically zero")
    return c


def _fit(
    x: np.ndarray,
    z: np.ndarray,
    ok: np.ndarray,
    offset: np.ndarray,
    matrix: np.ndarray,
    smoothing: SmoothingConfig | None,
    scale: float,
    extra: dict,
) -> InversionResult:
    """Minimax (and optional smoothing) on the usable rows, then rescale."""
    rm = AffineResidual(offset[ok], matrix[ok])
    base = estimate_weights_minimax(x, rm)
    w = base.estimate.weights
    smoothed = False
    if smoothing is not None:
        ws = smooth_weights(x, rm, base.objective, smoothing)
        if ws is not None:
            w, smoothed = ws, True
    J = z.size
    residuals = np.full(J, np.nan + 1j * np.nan)
    residuals[ok] = rm(w)
    diag = dict(extra)
    diag.update(
        {
            "scale": scale,
            "smoothing": None if smoothing is None else asdict(smoothing),
            "smoothed": smoothed,
            "minimax_objective": base.objective,
            "returned_objective": rm.sup_norm(w),
            "usable_points": int(ok.sum()),
        }
    )
    return InversionResult(
        estimate=SpectralDistribution(x * scale, w),
        objective=base.objective,
        z=z * scale,
        residuals=residuals,
        converged=extra.get("_converged", ok),
        in_domain=extra.get("_in_domain", ok),
        diagnostics={k: v for k, v in diag.items() if not k.startswith("_")},
    )


def estimate_Fa(
    F_pav: SpectralDistribution,
    cfg: Step1Config,
    grid: ComplexGrid | None = None,
    K: int = 100,
    smoothing: SmoothingConfig | None = DEFAULT_SMOOTHING,
) -> InversionResult:
    """Spectrum of the noiseless signal matrix from the noisy one."""
    grid = grid or default_grid()
    c = _scale_of(F_pav)
    Fn = F_pav.scaled(1.0 / c)
    cfgn = replace(cfg, sigma_eff2=cfg.sigma_eff2 / c)
    sol = solve_step1_mA(Fn, cfgn, grid)
    ok = sol.ok
    if not ok.any():
        raise SolverError("step 1 failed at every grid point", _step1_diag(sol))
    z = grid.points
    x = np.linspace(0.0, 1.0, K)
    offset = sol.sample.values
    matrix = -1.0 / (x[None, :] - z[:, None])
    extra = _step1_diag(sol)
    extra["_converged"], extra["_in_domain"] = sol.converged, sol.in_domain
    return _fit(x, z, ok, offset, matrix, smoothing, c, extra)


def _step1_diag(sol) -> dict:
    return {
        "step1_iterations": sol.iterations,
        "step1_converged": int(sol.converged.sum()),
        "step1_in_domain": int(sol.in_domain.sum()),
        "step1_max_residual": float(np.max(sol.residuals)),
    }


def estimate_icv_approach1(
    F_pav: SpectralDistribution,
    cfg: Step1Config,
    grid: ComplexGrid | None,
    K: int,
    profile: GammaStarProfile,
    zeta: float,
    smoothing: SmoothingConfig | None = DEFAULT_SMOOTHING,
) -> InversionResult:
    """ICV spectrum through the signal transform and the profile equation.

    The profile is rescaled to integrate to ``zeta`` if it does not already,
    since the equations assume the two agree.
    """
    if not zeta > 0:
        raise ValueError("zeta must be positive")
    grid = grid or default_grid()
    c = _scale_of(F_pav)
    Fn = F_pav.scaled(1.0 / c)
    cfgn = replace(cfg, sigma_eff2=cfg.sigma_eff2 / c)
    rescaled = abs(profile.zeta - zeta) > 1e-9 * zeta
    prof = profile.with_integral(zeta).scaled(1.0 / c)
    zn = zeta / c

    sol = solve_step1_mA(Fn, cfgn, grid)
    z = grid.points
    J = z.size
    M = np.full(J, np.nan + 1j * np.nan)
    ok = sol.ok.copy()
    failures = []
    for j in np.flatnonzero(ok):
        try:
            M[j] = solve_step2_M(complex(sol.sample.values[j]), complex(z[j]), cfg.y, prof)
        except Step2Error as exc:
            ok[j] = False
            failures.append(exc.diagnostics)
    extra = _step1_diag(sol)
    extra.update({"step2_failures": J - int(ok.sum()), "profile_rescaled": rescaled})
    if J - ok.sum() > MAX_STEP2_FAILURE * J:
        extra["step2_attempts"] = failures
        raise SolverError(
            f"{J - int(ok.sum())} of {J} grid points failed in step 1 or step 2", extra
        )
    x = np.linspace(0.0, 1.0, K)
    Mz = np.where(ok, M, 1.0)
    offset = sol.sample.values
    matrix = zn / (z[:, None] * (x[None, :] * Mz[:, None] + zn))
    extra["_converged"], extra["_in_domain"] = sol.converged, sol.in_domain
    return _fit(x, z, ok, offset, matrix, smoothing, c, extra)


def estimate_icv_approach2(
    F_B: SpectralDistribution,
    y: float,
    grid: ComplexGrid | None = None,
    K: int = 100,
    smoothing: SmoothingConfig | None = DEFAULT_SMOOTHING,
) -> InversionResult:
    """Population spectrum from a sample spectrum through the MP equation."""
    if not y > 0:
        raise ValueError("y must be positive")
    grid = grid or default_grid()
    c = _scale_of(F_B)
    z = grid.points
    mB = stieltjes(F_B.scaled(1.0 / c), z)
    x = np.linspace(0.0, 1.0, K)
    denom = x[None, :] * (1.0 - y * (1.0 + z * mB))[:, None] - z[:, None]
    ok = np.ones(z.size, dtype=bool)
    return _fit(x, z, ok, mB, -1.0 / denom, smoothing, c, {})
