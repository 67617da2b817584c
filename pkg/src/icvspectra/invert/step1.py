"""Signal-plus-noise inversion: recover the signal Stieltjes transform.

For a noisy sample covariance with spectrum ``F``, aspect ratio ``y`` and
per-entry noise variance ``s2``, the signal transform ``m`` at ``z`` solves

    m = int dF(tau) / (tau / g - z g + s2 (y - 1)),    g = 1 - y s2 m,

inside the domain where ``Im(z g^2 - s2 (y - 1) g) > 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from ..spectra import ComplexGrid, SpectralDistribution, StieltjesSample, stieltjes

__all__ = [
    "Step1Config",
    "DomainCheck",
    "Step1Solution",
    "domain_check",
    "step1_rhs",
    "solve_step1_point",
    "solve_step1_mA",
    "tn_threshold",
    "solve_tn",
    "tn_residual",
    "transport_tn",
]


@dataclass(frozen=True)
class Step1Config:
    """``y = p/m``; ``sigma_eff2`` is the per-entry noise variance."""

    y: float
    sigma_eff2: float
    tol: float = 1e-12
    max_iter: int = 5000
    damping: float = 0.5
    stall_iter: int = 200

    def __post_init__(self) -> None:
        if not self.y > 0:
            raise ValueError("y must be positive")
        if self.sigma_eff2 < 0:
            raise ValueError("sigma_eff2 must be nonnegative")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if not 0 < self.damping <= 1:
            raise ValueError("damping must lie in (0, 1]")


@dataclass(frozen=True)
class DomainCheck:
    value: complex
    in_domain: bool
    margin: float


def domain_check(m: complex, z: complex, y: float, s2: float) -> DomainCheck:
    g = 1.0 - y * s2 * m
    margin = float((z * g * g - s2 * (y - 1.0) * g).imag)
    return DomainCheck(complex(m), margin > 0, margin)


def step1_rhs(m: complex, z: complex, dist: SpectralDistribution, y: float, s2: float) -> tuple[complex, complex]:
    """Right-hand side and its derivative in ``m``."""
    g = 1.0 - y * s2 * m
    denom = dist.points / g - z * g + s2 * (y - 1.0)
    rhs = np.sum(dist.weights / denom)
    d_denom = y * s2 * (dist.points / (g * g) + z)
    drhs = -np.sum(dist.weights * d_denom / (denom * denom))
    return complex(rhs), complex(drhs)


@dataclass
class _PointResult:
    value: complex
    converged: bool
    iterations: int
    residual: float
    method: str


def _fixed_point(m0, z, dist, cfg) -> _PointResult:
    y, s2 = cfg.y, cfg.sigma_eff2
    m = complex(m0)
    d = cfg.damping
    rhs, _ = step1_rhs(m, z, dist, y, s2)
    res = abs(m - rhs)
    best = res
    since_best = 0
    for it in range(1, cfg.max_iter + 1):
        if res <= cfg.tol:
            return _PointResult(m, True, it - 1, res, "fixed-point")
        cand = (1.0 - d) * m + d * rhs
        cand_rhs, _ = step1_rhs(cand, z, dist, y, s2)
        cand_res = abs(cand - cand_rhs)
        if not math.isfinite(cand_res):
            return _PointResult(m, False, it, res, "fixed-point")
        if cand_res > res and d > 1e-6:
            d *= 0.5
        m, rhs, res = cand, cand_rhs, cand_res
        if res < 0.999 * best:
            best, since_best = res, 0
        else:
            since_best += 1
            if since_best >= cfg.stall_iter:
                break
    return _PointResult(m, res <= cfg.tol, cfg.max_iter, res, "fixed-point")


def _newton(m0, z, dist, cfg, max_iter: int = 100) -> _PointResult:
    y, s2 = cfg.y, cfg.sigma_eff2
    m = complex(m0)
    res = math.inf
    for it in range(max_iter):
        rhs, drhs = step1_rhs(m, z, dist, y, s2)
        f = m - rhs
        res = abs(f)
        if res <= cfg.tol:
            return _PointResult(m, True, it, res, "newton")
        fp = 1.0 - drhs
        if fp == 0 or not math.isfinite(abs(fp)):
            break
        step = f / fp
        # backtrack on the residual
        lam = 1.0
        while lam > 1e-8:
            cand = m - lam * step
            c_rhs, _ = step1_rhs(cand, z, dist, y, s2)
            if abs(cand - c_rhs) < res:
                break
            lam *= 0.5
        m = cand
    rhs, _ = step1_rhs(m, z, dist, y, s2)
    res = abs(m - rhs)
    return _PointResult(m, res <= cfg.tol, max_iter, res, "newton")


def solve_step1_point(z: complex, dist: SpectralDistribution, cfg: Step1Config, m0: complex | None = None) -> _PointResult:
    """Damped fixed point from ``m0`` with a Newton fallback."""
    if m0 is None:
        m0 = stieltjes(dist, z)
    fp = _fixed_point(m0, z, dist, cfg)
    if fp.converged:
        return fp
    nt = _newton(fp.value if math.isfinite(fp.residual) else m0, z, dist, cfg)
    if nt.converged:
        nt.iterations += fp.iterations
        return nt
    return fp if fp.residual <= nt.residual else nt


@dataclass
class Step1Solution:
    """Per-grid-point solutions with convergence and domain flags."""

    sample: StieltjesSample
    converged: NDArray[np.bool_]
    in_domain: NDArray[np.bool_]
    margins: NDArray[np.float64]
    residuals: NDArray[np.float64]
    iterations: NDArray[np.int64]
    methods: list[str] = field(default_factory=list)

    @property
    def ok(self) -> NDArray[np.bool_]:
        return self.converged & self.in_domain & (self.sample.values.imag > 0)


def solve_step1_mA(dist: SpectralDistribution, cfg: Step1Config, grid: ComplexGrid) -> Step1Solution:
    """Solve for the signal transform at every grid point.

    Points are visited in decreasing ``Im(z)``. Each starts from the observed
    transform; a failure or an out-of-domain root is retried from the
    solution at the nearest already-solved point.
    """
    z_all = grid.points
    J = z_all.size
    values = np.zeros(J, dtype=complex)
    conv = np.zeros(J, dtype=bool)
    dom = np.zeros(J, dtype=bool)
    margins = np.zeros(J)
    residuals = np.zeros(J)
    iters = np.zeros(J, dtype=np.int64)
    methods = [""] * J
    solved: list[int] = []
    for j in grid.by_decreasing_imag():
        z = complex(z_all[j])
        res = solve_step1_point(z, dist, cfg)
        chk = domain_check(res.value, z, cfg.y, cfg.sigma_eff2)
        good = res.converged and chk.in_domain and res.value.imag > 0
        if not good and solved:
            near = min(solved, key=lambda i: abs(z_all[i] - z))
            retry = solve_step1_point(z, dist, cfg, m0=values[near])
            rchk = domain_check(retry.value, z, cfg.y, cfg.sigma_eff2)
            if retry.converged and rchk.in_domain and retry.value.imag > 0:
                retry.method += "+continuation"
                res, chk, good = retry, rchk, True
        values[j] = res.value
        conv[j] = res.converged
        dom[j] = chk.in_domain
        margins[j] = chk.margin
        residuals[j] = res.residual
        iters[j] = res.iterations
        methods[j] = res.method
        if good:
            solved.append(int(j))
    return Step1Solution(StieltjesSample(z_all, values), conv, dom, margins, residuals, iters, methods)


def tn_threshold(y: float, sigma: float, b: float) -> float:
    """``2 (sigma + 1) sqrt((y + 1)(b + 1))``: contraction guaranteed above it."""
    return 2.0 * (sigma + 1.0) * math.sqrt((y + 1.0) * (b + 1.0))


def _tn_map(t: complex, z: complex, dist: SpectralDistribution, y: float, s2: float) -> complex:
    return complex(y * np.sum(dist.weights * dist.points / (dist.points - z + t * s2)) - 1.0)


def solve_tn(
    dist: SpectralDistribution,
    y: float,
    sigma: float,
    z: complex,
    t0: complex = -1.0 + 0.0j,
    tol: float = 1e-13,
    max_iter: int = 10_000,
) -> complex:
    """Fixed point of ``G(t) = y int x / (x - z + t sigma^2) dF(x) - 1``.

    Requires ``Im(z)`` above :func:`tn_threshold`, where ``G`` is a
    contraction on ``{0 <= Im t <= Im z / (2 (sigma + 1)^2)}``.
    """
    b = dist.max_support
    k_star = tn_threshold(y, sigma, b)
    if not z.imag > k_star:
        raise ValueError(f"Im(z)={z.imag:.4g} does not exceed the contraction bound {k_star:.4g}")
    s2 = sigma * sigma
    t = complex(t0)
    for _ in range(max_iter):
        nxt = _tn_map(t, z, dist, y, s2)
        if abs(nxt - t) <= tol * max(1.0, abs(nxt)):
            return nxt
        t = nxt
    raise RuntimeError("t_n iteration did not converge")


def tn_residual(t: complex, dist: SpectralDistribution, y: float, sigma: float, z: complex) -> float:
    """Residual of ``t = y - 1 + y w m(w)`` with ``w = z - t sigma^2``."""
    w = z - t * sigma * sigma
    return abs(t - (y - 1.0 + y * w * stieltjes(dist, w)))


def transport_tn(dist: SpectralDistribution, y: float, sigma: float, z: complex) -> tuple[complex, complex]:
    """Map ``z`` to ``(alpha, m_A(alpha))`` through the ``t_n`` change of variables.

    ``w = z - t sigma^2``, ``delta = y sigma^2 m(w)``, ``alpha = z (1 + delta)``
    and ``m_A(alpha) = m(w) / (1 + delta)``.
    """
    t = solve_tn(dist, y, sigma, z)
    s2 = sigma * sigma
    w = z - t * s2
    mw = stieltjes(dist, w)
    delta = y * s2 * mw
    return z * (1.0 + delta), mw / (1.0 + delta)
