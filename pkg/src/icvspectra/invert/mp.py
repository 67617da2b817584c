"""Forward Marchenko-Pastur equation, used as a test oracle."""

from __future__ import annotations

import math

import numpy as np

from ..spectra import SpectralDistribution

__all__ = ["MPError", "mp_rhs", "mp_forward"]


class MPError(RuntimeError):
    pass


def mp_rhs(m: complex, H: SpectralDistribution, y: float, z: complex) -> complex:
    """``int dH(tau) / (tau (1 - y (1 + z m)) - z)``."""
    return complex(np.sum(H.weights / (H.points * (1.0 - y * (1.0 + z * m)) - z)))


def mp_forward(
    H: SpectralDistribution,
    y: float,
    z: complex,
    tol: float = 1e-12,
    damping: float = 0.5,
    max_iter: int = 100_000,
) -> complex:
    """Stieltjes transform of the sample spectrum for population ``H``.

    Damped fixed point from ``-1/z``; the damping halves whenever the
    residual grows.
    """
    if not z.imag > 0:
        raise ValueError("Im(z) must be positive")
    if y < 0:
        raise ValueError("y must be nonnegative")
    m, res = _damped(H, y, z, -1.0 / z, tol, damping, max_iter)
    if res > tol or m.imag <= 0:
        m, res = _continuation(H, y, z, tol)
    if res > tol:
        raise MPError(f"no convergence at z={z} (residual {res:.3e})")
    if m.imag <= 0:
        raise MPError(f"fixed point left the upper half-plane at z={z}")
    return m


def _damped(H, y, z, m, tol, damping, max_iter):
    d = damping
    rhs = mp_rhs(m, H, y, z)
    res = abs(m - rhs)
    for _ in range(max_iter):
        if res <= tol:
            break
        cand = (1.0 - d) * m + d * rhs
        cand_rhs = mp_rhs(cand, H, y, z)
        cand_res = abs(cand - cand_rhs)
        if not math.isfinite(cand_res):
            break
        if cand_res > res and d > 1e-8:
            d *= 0.5
        m, rhs, res = cand, cand_rhs, cand_res
    return m, res


def _newton(H, y, z, m, tol, max_iter=100):
    res = math.inf
    for _ in range(max_iter):
        den = H.points * (1.0 - y * (1.0 + z * m)) - z
        f = m - complex(np.sum(H.weights / den))
        res = abs(f)
        if res <= tol:
            break
        fp = 1.0 - complex(np.sum(H.weights * H.points * y * z / (den * den)))
        if fp == 0:
            break
        m = m - f / fp
    return m, res


def _continuation(H, y, z, tol, max_steps=10_000):
    """Newton along a path from far up the imaginary axis down to ``z``.

    Far from the real axis the damped iteration converges quickly. Each
    step predicts ``m(z') = m(z) z / z'`` (exact where ``m ~ c/z``) and is
    shortened whenever Newton fails or leaves the upper half-plane.
    """
    top = max(10.0 * z.imag, 10.0 * (1.0 + H.max_support) * (1.0 + y))
    zk = complex(z.real, top)
    m, res = _damped(H, y, zk, -1.0 / zk, tol, 0.5, 100_000)
    ratio = 1.25
    for _ in range(max_steps):
        if zk.imag <= z.imag:
            break
        nxt = complex(z.real, max(z.imag, zk.imag / ratio))
        cand, cres = _newton(H, y, nxt, m * zk / nxt, tol)
        if cres <= tol and cand.imag > 0:
            zk, m, res = nxt, cand, cres
            ratio = min(1.25, ratio * 1.1)
        else:
            ratio = 1.0 + (ratio - 1.0) / 2.0
            if ratio < 1.0 + 1e-6:
                break
    return m, res
