"""The volatility-profile equation linking the signal transform to M(z).

Given ``m_A(z)`` and a piecewise-constant squared-volatility profile
``g(s)``, ``M`` solves

    int_0^1 M / (M - g(s) c) ds = r,
    c = y (1/z + m_A),   r = 1 - y - y z m_A.

For a constant profile this is linear in ``M`` and ``M = r g c / (r - 1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from ..simkit import VolPath

__all__ = ["GammaStarProfile", "Step2Error", "solve_step2_M", "step2_residual", "closed_form_M"]


class Step2Error(RuntimeError):
    """No root in the upper half-plane was found."""

    def __init__(self, message: str, diagnostics: dict):
        super().__init__(message)
        self.diagnostics = diagnostics


@dataclass(frozen=True)
class GammaStarProfile:
    """Squared volatility ``levels[i]`` held on ``[breaks[i], breaks[i+1])``."""

    breaks: NDArray[np.float64]
    levels: NDArray[np.float64]

    def __post_init__(self) -> None:
        b = np.asarray(self.breaks, dtype=np.float64).ravel()
        v = np.asarray(self.levels, dtype=np.float64).ravel()
        if b.size != v.size + 1 or v.size == 0:
            raise ValueError("need len(breaks) == len(levels) + 1")
        if abs(b[0]) > 1e-12 or abs(b[-1] - 1.0) > 1e-12 or np.any(np.diff(b) <= 0):
            raise ValueError("breaks must ascend strictly from 0 to 1")
        if not np.all(np.isfinite(v)) or np.any(v <= 0):
            raise ValueError("profile values must be positive")
        object.__setattr__(self, "breaks", b)
        object.__setattr__(self, "levels", v)

    @property
    def durations(self) -> NDArray[np.float64]:
        return np.diff(self.breaks)

    @property
    def zeta(self) -> float:
        """Integral of the profile."""
        return float(self.durations @ self.levels)

    def scaled(self, c: float) -> "GammaStarProfile":
        return GammaStarProfile(self.breaks, self.levels * c)

    def with_integral(self, zeta: float) -> "GammaStarProfile":
        """Same shape, rescaled to integrate to ``zeta``."""
        return self.scaled(zeta / self.zeta)

    @classmethod
    def constant(cls, zeta: float) -> "GammaStarProfile":
        return cls(np.array([0.0, 1.0]), np.array([float(zeta)]))

    @classmethod
    def from_levels(cls, levels: ArrayLike, durations: ArrayLike) -> "GammaStarProfile":
        d = np.asarray(durations, dtype=np.float64)
        if np.any(d <= 0) or abs(d.sum() - 1.0) > 1e-9:
            raise ValueError("durations must be positive and sum to 1")
        breaks = np.concatenate([[0.0], np.cumsum(d)])
        breaks[-1] = 1.0
        return cls(breaks, np.asarray(levels, dtype=np.float64))

    @classmethod
    def from_path(cls, vol: VolPath) -> "GammaStarProfile":
        """Trapezoid levels on the path grid; integrates to ``vol.zeta``."""
        g2 = vol.gamma**2
        levels = 0.5 * (g2[:-1] + g2[1:])
        n = levels.size
        return cls(np.linspace(0.0, 1.0, n + 1), levels)

    def compressed(self) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        """Distinct levels with their total durations."""
        lv, inv = np.unique(self.levels, return_inverse=True)
        return lv, np.bincount(inv, weights=self.durations)


def _coefficients(mA: complex, z: complex, y: float) -> tuple[complex, complex]:
    return y * (1.0 / z + mA), 1.0 - y - y * z * mA


def closed_form_M(mA: complex, z: complex, y: float, g: float) -> complex:
    c, r = _coefficients(mA, z, y)
    return r * g * c / (r - 1.0)


def step2_residual(M: complex, mA: complex, z: complex, y: float, profile: GammaStarProfile) -> float:
    c, r = _coefficients(mA, z, y)
    lv, dur = profile.compressed()
    return abs(complex(np.sum(dur * M / (M - lv * c))) - r)


def _newton(M0, lv, dur, c, r, tol, max_iter=200):
    M = complex(M0)
    f = complex(np.sum(dur * M / (M - lv * c))) - r
    for _ in range(max_iter):
        if abs(f) <= tol:
            return M, abs(f)
        d = M - lv * c
        fp = complex(np.sum(dur * (-lv * c) / (d * d)))
        if fp == 0 or not math.isfinite(abs(fp)):
            break
        step = f / fp
        lam = 1.0
        while lam > 1e-10:
            cand = M - lam * step
            fc = complex(np.sum(dur * cand / (cand - lv * c))) - r
            if math.isfinite(abs(fc)) and abs(fc) < abs(f):
                break
            lam *= 0.5
        else:
            break
        M, f = cand, fc
    return M, abs(f)


def solve_step2_M(
    mA: complex,
    z: complex,
    y: float,
    profile: GammaStarProfile,
    tol: float = 1e-10,
    n_starts: int = 8,
) -> complex:
    """Complex Newton with multiple starts around the constant-profile value.

    Only roots with ``Im(M) > 0`` and residual at most ``tol`` are accepted;
    among several, the one with the smallest residual wins.
    """
    if not z.imag > 0:
        raise ValueError("Im(z) must be positive")
    c, r = _coefficients(mA, z, y)
    lv, dur = profile.compressed()
    base = closed_form_M(mA, z, y, profile.zeta)
    if lv.size == 1:
        starts = [base]
    else:
        scale = max(abs(base), 1e-300)
        angles = np.exp(2j * np.pi * np.arange(n_starts - 1) / (n_starts - 1))
        starts = [base] + [base + 0.25 * scale * a for a in angles]
    tried = []
    best = None
    for s in starts:
        M, res = _newton(s, lv, dur, c, r, tol)
        tried.append((complex(M), res))
        if res <= tol and M.imag > 0 and (best is None or res < best[1]):
            best = (M, res)
            if res <= 1e-3 * tol:
                break
    if best is None:
        raise Step2Error(
            f"no root in the upper half-plane at z={z}",
            {"z": complex(z), "mA": complex(mA), "attempts": tried},
        )
    return complex(best[0])
