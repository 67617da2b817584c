"""Spectral distributions, Stieltjes transforms and distribution distances."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.typing import ArrayLike, NDArray

__all__ = [
    "SpectralDistribution",
    "ComplexGrid",
    "StieltjesSample",
    "point_mass",
    "esd",
    "stieltjes",
    "kolmogorov_distance",
    "cdf_table",
]

WEIGHT_TOL = 1e-9
MERGE_RTOL = 1e-14
NEG_EIG_TOL = 1e-8


@dataclass(frozen=True)
class SpectralDistribution:
    """Weighted point masses on the nonnegative half-line.

    Points are sorted ascending and duplicates (relative tolerance 1e-14)
    are merged with summed weights. Weights are renormalised to sum to one;
    inputs whose weights are off by more than ``WEIGHT_TOL`` are rejected.
    """

    points: NDArray[np.float64]
    weights: NDArray[np.float64]

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=np.float64).ravel()
        wts = np.asarray(self.weights, dtype=np.float64).ravel()
        if pts.shape != wts.shape or pts.size == 0:
            raise ValueError("points and weights must be non-empty and of equal length")
        if not (np.all(np.isfinite(pts)) and np.all(np.isfinite(wts))):
            raise ValueError("points and weights must be finite")
        if np.any(pts < 0):
            raise ValueError("support points must be nonnegative")
        if np.any(wts < -WEIGHT_TOL):
            raise ValueError("weights must be nonnegative")
        total = wts.sum()
        if abs(total - 1.0) > WEIGHT_TOL:
            raise ValueError(f"weights sum to {total!r}, expected 1")
        wts = np.clip(wts, 0.0, None)
        order = np.argsort(pts, kind="stable")
        pts, wts = pts[order], wts[order]
        pts, wts = _merge_duplicates(pts, wts)
        # skip sub-ulp rescaling so that reconstruction is a fixed point
        if abs(wts.sum() - 1.0) > 1e-12:
            wts = wts / wts.sum()
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", wts)

    @property
    def size(self) -> int:
        return int(self.points.size)

    @property
    def max_support(self) -> float:
        return float(self.points[-1])

    def mean(self) -> float:
        return float(np.dot(self.points, self.weights))

    def scaled(self, c: float) -> "SpectralDistribution":
        """Distribution of ``c * X``."""
        return SpectralDistribution(self.points * c, self.weights)

    def cdf(self, xs: ArrayLike) -> NDArray[np.float64]:
        return cdf_table(self, xs)

    def stieltjes(self, z: ArrayLike) -> NDArray[np.complex128] | complex:
        return stieltjes(self, z)

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["point", "weight"])
            for x, w in zip(self.points, self.weights):
                writer.writerow([repr(float(x)), repr(float(w))])

    @classmethod
    def from_csv(cls, path: str | Path) -> "SpectralDistribution":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(data[:, 0], data[:, 1])


def _merge_duplicates(pts: NDArray, wts: NDArray) -> tuple[NDArray, NDArray]:
    if pts.size < 2:
        return pts, wts
    gap = np.diff(pts)
    same = gap <= MERGE_RTOL * np.maximum(np.abs(pts[1:]), np.finfo(float).tiny)
    if not same.any():
        return pts, wts
    starts = np.concatenate([[True], ~same])
    group = np.cumsum(starts) - 1
    merged_w = np.bincount(group, weights=wts)
    return pts[starts], merged_w


def point_mass(x: float) -> SpectralDistribution:
    return SpectralDistribution(np.array([x], dtype=float), np.array([1.0]))


def esd(mat: ArrayLike) -> SpectralDistribution:
    """Empirical spectral distribution of a symmetric matrix.

    Accepts a plain array or anything with an ``entries`` attribute (such as
    :class:`icvspectra.preavg.CovMatrix`). Eigenvalues in ``[-1e-8, 0)`` are
    clamped to zero; anything more negative is an error.
    """
    a = np.asarray(getattr(mat, "entries", mat), dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("esd needs a square matrix")
    scale = max(1.0, float(np.abs(a).max(initial=0.0)))
    if not np.allclose(a, a.T, rtol=0.0, atol=1e-10 * scale):
        raise ValueError("esd needs a symmetric matrix")
    eig = np.linalg.eigvalsh(0.5 * (a + a.T))
    if eig[0] < -NEG_EIG_TOL:
        raise ValueError(f"matrix has a materially negative eigenvalue {eig[0]:.3e}")
    eig = np.clip(eig, 0.0, None)
    p = eig.size
    return SpectralDistribution(eig, np.full(p, 1.0 / p))


def stieltjes(dist: SpectralDistribution, z: ArrayLike) -> NDArray[np.complex128] | complex:
    """m(z) = sum_k w_k / (x_k - z), for z in the upper half-plane."""
    zz = np.asarray(z, dtype=np.complex128)
    if np.any(zz.imag <= 0):
        raise ValueError("Stieltjes transform needs Im(z) > 0")
    flat = zz.reshape(-1)
    vals = (dist.weights[None, :] / (dist.points[None, :] - flat[:, None])).sum(axis=1)
    if zz.ndim == 0:
        return complex(vals[0])
    return vals.reshape(zz.shape)


def kolmogorov_distance(f: SpectralDistribution, g: SpectralDistribution) -> float:
    """sup_x |F(x) - G(x)|, evaluated exactly on the union of jump points."""
    xs = np.union1d(f.points, g.points)
    return float(np.max(np.abs(cdf_table(f, xs) - cdf_table(g, xs))))


def cdf_table(dist: SpectralDistribution, xs: ArrayLike) -> NDArray[np.float64]:
    """Right-continuous CDF of ``dist`` at ascending ``xs``."""
    x = np.asarray(xs, dtype=np.float64)
    if x.size == 0:
        return np.zeros(0)
    if np.any(np.diff(x) < 0):
        raise ValueError("xs must be ascending")
    cum = np.concatenate([[0.0], np.cumsum(dist.weights)])
    idx = np.searchsorted(dist.points, x, side="right")
    return np.minimum(cum[idx], 1.0)


@dataclass(frozen=True)
class ComplexGrid:
    """Evaluation points in the upper half-plane."""

    points: NDArray[np.complex128]

    def __post_init__(self) -> None:
        z = np.asarray(self.points, dtype=np.complex128).ravel()
        if z.size == 0:
            raise ValueError("grid is empty")
        if np.any(z.imag <= 0):
            raise ValueError("grid points must have strictly positive imaginary part")
        object.__setattr__(self, "points", z)

    def __len__(self) -> int:
        return int(self.points.size)

    @classmethod
    def lattice(
        cls,
        re_range: tuple[float, float] = (-20.0, 0.0),
        im_range: tuple[float, float] = (1.0, 20.0),
        n_re: int = 10,
        n_im: int = 10,
        scale: float = 1.0,
    ) -> "ComplexGrid":
        """Cartesian lattice of equally spaced real and imaginary parts.

        ``scale`` multiplies every point; the estimators pass the largest
        observed eigenvalue so the lattice is expressed in spectrum units.
        """
        re = np.linspace(re_range[0], re_range[1], n_re)
        im = np.linspace(im_range[0], im_range[1], n_im)
        return cls(scale * (re[:, None] + 1j * im[None, :]).ravel())

    def scaled(self, c: float) -> "ComplexGrid":
        return ComplexGrid(self.points * c)

    def by_decreasing_imag(self) -> NDArray[np.intp]:
        """Index order for continuation from large to small Im(z)."""
        return np.lexsort((self.points.real, -self.points.imag))


@dataclass(frozen=True)
class StieltjesSample:
    """Transform values ``values[j]`` at grid points ``z[j]``."""

    z: NDArray[np.complex128]
    values: NDArray[np.complex128]

    def __post_init__(self) -> None:
        z = np.asarray(self.z, dtype=np.complex128).ravel()
        v = np.asarray(self.values, dtype=np.complex128).ravel()
        if z.shape != v.shape:
            raise ValueError("z and values must have equal length")
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return int(self.z.size)
