"""Pre-averaged returns and the covariance-type matrices built from them."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .simkit import FactorLoading, SyncObservations, VolPath

__all__ = [
    "CovMatrix",
    "PavWindows",
    "DegenerateInputError",
    "window_length",
    "preaveraged_returns",
    "pav_matrix",
    "signal_pav_matrix",
    "b_matrix",
    "estimate_noise_variances",
    "homogenize_noise",
    "true_icv",
    "effective_noise_variance",
    "estimate_zeta",
]

LABELS = ("PAV", "A_m", "B_m", "SIGMA_TILDE", "ICV")


class DegenerateInputError(ValueError):
    """A pre-averaged return vector is numerically zero."""


@dataclass(frozen=True)
class CovMatrix:
    entries: NDArray[np.float64]
    label: str

    def __post_init__(self) -> None:
        a = np.asarray(self.entries, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("covariance matrix must be square")
        if self.label not in LABELS:
            raise ValueError(f"unknown label {self.label!r}")
        object.__setattr__(self, "entries", a)

    @property
    def p(self) -> int:
        return self.entries.shape[0]

    def eigenvalues(self) -> NDArray[np.float64]:
        return np.linalg.eigvalsh(self.entries)

    def to_csv(self, path: str | Path) -> None:
        np.savetxt(path, self.entries, delimiter=",", fmt="%.17g")


@dataclass(frozen=True)
class PavWindows:
    """Pre-averaged returns: column ``i`` is the difference of two k-averages."""

    k: int
    m: int
    returns: NDArray[np.float64]
    theta: float | None = None
    alpha: float | None = None

    @property
    def p(self) -> int:
        return self.returns.shape[0]

    @property
    def y(self) -> float:
        return self.p / self.m

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["k", "m", "theta"])
            writer.writerow([self.k, self.m, "" if self.theta is None else repr(self.theta)])
            for row in self.returns:
                writer.writerow([repr(float(x)) for x in row])


def window_length(n: int, theta: float, alpha: float) -> int:
    """``k = floor(theta * n**alpha)``."""
    k = int(math.floor(theta * n**alpha + 1e-9))
    if k < 1:
        raise ValueError(f"window length rule gives k={k} for n={n}")
    return k


def preaveraged_returns(
    obs: SyncObservations | NDArray[np.float64],
    k: int,
    theta: float | None = None,
    alpha: float | None = None,
) -> PavWindows:
    """Block-average differences over ``m = floor(n/2k)`` window pairs.

    Observations past index ``2km - 1`` are discarded.
    """
    values = obs.values if isinstance(obs, SyncObservations) else np.asarray(obs, float)
    n = values.shape[1] - 1
    if k < 1 or 2 * k > n:
        raise ValueError(f"need 1 <= k and 2k <= n (k={k}, n={n})")
    m = n // (2 * k)
    blocks = values[:, : 2 * k * m].reshape(values.shape[0], m, 2, k).mean(axis=3)
    returns = blocks[:, :, 1] - blocks[:, :, 0]
    return PavWindows(k, m, returns, theta, alpha)


def _outer_sum(r: NDArray[np.float64]) -> NDArray[np.float64]:
    s = r @ r.T
    return 0.5 * (s + s.T)


def pav_matrix(w: PavWindows) -> CovMatrix:
    return CovMatrix(3.0 * _outer_sum(w.returns), "PAV")


def signal_pav_matrix(latent: SyncObservations, k: int) -> CovMatrix:
    """The noiseless counterpart of :func:`pav_matrix`."""
    return CovMatrix(3.0 * _outer_sum(preaveraged_returns(latent, k).returns), "A_m")


def b_matrix(obs: SyncObservations | PavWindows, k: int | None = None) -> tuple[CovMatrix, CovMatrix, float]:
    """Time-variation adjusted matrix, its self-normalised part and zeta-hat.

    Returns ``(B_m, Sigma_tilde, zeta_hat)`` with
    ``Sigma_tilde = (p/m) sum_i r_i r_i^T / |r_i|^2`` and
    ``B_m = zeta_hat * Sigma_tilde``, ``zeta_hat = 3 sum_i |r_i|^2 / p``.
    """
    w = obs if isinstance(obs, PavWindows) else preaveraged_returns(obs, k)
    r = w.returns
    norms2 = np.einsum("ij,ij->j", r, r)
    bad = np.flatnonzero(np.sqrt(norms2) < 1e-300)
    if bad.size:
        raise DegenerateInputError(f"pre-averaged return(s) {bad.tolist()} have zero norm")
    p, m = r.shape
    unit = r / np.sqrt(norms2)
    sigma_tilde = (p / m) * _outer_sum(unit)
    zeta_hat = 3.0 * float(norms2.sum()) / p
    return CovMatrix(zeta_hat * sigma_tilde, "B_m"), CovMatrix(sigma_tilde, "SIGMA_TILDE"), zeta_hat


def estimate_noise_variances(obs: SyncObservations) -> NDArray[np.float64]:
    """``v_j = sum_i (Delta Y_i^j)^2 / (2n)``."""
    if obs.n < 2:
        raise ValueError("need n >= 2")
    d = np.diff(obs.values, axis=1)
    return np.einsum("ij,ij->i", d, d) / (2.0 * obs.n)


def homogenize_noise(
    obs: SyncObservations, variances: ArrayLike, rng: np.random.Generator
) -> tuple[SyncObservations, float]:
    """Top up every asset's noise variance to the largest one.

    Returns the modified panel and the common variance ``max_j v_j``.
    """
    v = np.asarray(variances, dtype=np.float64)
    if v.shape != (obs.p,) or np.any(v < 0):
        raise ValueError("variances must be a nonnegative length-p vector")
    dmax2 = float(v.max())
    extra = dmax2 - v
    if not np.any(extra > 0):
        return SyncObservations(obs.values.copy()), dmax2
    noise = np.sqrt(extra)[:, None] * rng.standard_normal(obs.values.shape)
    return SyncObservations(obs.values + noise), dmax2


def true_icv(vol: VolPath, loading: FactorLoading) -> CovMatrix:
    return CovMatrix(vol.zeta * loading.sigma_breve, "ICV")


def effective_noise_variance(w: PavWindows, noise_variance: float) -> float:
    """Per-entry noise variance of PAV written as a signal-plus-noise matrix.

    PAV equals ``(1/m) sum (a_i + e_i)(a_i + e_i)^T`` with
    ``e_i = sqrt(3m) * (pre-averaged noise)``, whose entries have variance
    ``6 m sigma_e^2 / k``; this tends to ``3 sigma_e^2 / theta^2`` when
    ``k = theta sqrt(n)``.
    """
    return 6.0 * w.m * noise_variance / w.k


def estimate_zeta(w: PavWindows, noise_variances: ArrayLike | None = None) -> float:
    """Trace-based estimate of the integrated squared volatility.

    ``3 (sum_i |r_i|^2 - (2m/k) sum_j v_j) / p``: the noise part of each
    pre-averaged return has expected squared norm ``(2/k) sum_j v_j``.
    The target is ``tr(ICV)/p``, i.e. zeta when ``tr(Lambda Lambda^T) = p``.
    """
    total = float(np.einsum("ij,ij->", w.returns, w.returns))
    if noise_variances is not None:
        total -= 2.0 * w.m / w.k * float(np.sum(noise_variances))
    z = 3.0 * total / w.p
    if not z > 0:
        raise ValueError("noise correction leaves a nonpositive zeta estimate")
    return z
