"""Minimax fitting of point-mass weights to Stieltjes-type residuals."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.typing import ArrayLike, NDArray

from ..spectra import SpectralDistribution
from .simplex import LPError, simplex

__all__ = [
    "AffineResidual",
    "InversionResult",
    "estimate_weights_minimax",
    "smooth_weights",
    "SmoothingConfig",
]


@dataclass(frozen=True)
class AffineResidual:
    """``e_j(w) = offset[j] + sum_k w_k * matrix[j, k]``."""

    offset: NDArray[np.complex128]
    matrix: NDArray[np.complex128]

    def __post_init__(self) -> None:
        a = np.asarray(self.offset, dtype=np.complex128).ravel()
        b = np.atleast_2d(np.asarray(self.matrix, dtype=np.complex128))
        if b.shape[0] != a.size or a.size == 0 or b.shape[1] == 0:
            raise ValueError("matrix must be J x K with J = len(offset) >= 1 and K >= 1")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise ValueError("residual map has non-finite entries")
        object.__setattr__(self, "offset", a)
        object.__setattr__(self, "matrix", b)

    def __call__(self, w: ArrayLike) -> NDArray[np.complex128]:
        return self.offset + self.matrix @ np.asarray(w, dtype=np.float64)

    def sup_norm(self, w: ArrayLike) -> float:
        e = self(w)
        return float(np.max(np.maximum(np.abs(e.real), np.abs(e.imag))))

    def real_rows(self) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        """Stacked ``[Re; Im]`` so that the residual parts are ``A w + a``."""
        A = np.vstack([self.matrix.real, self.matrix.imag])
        a = np.concatenate([self.offset.real, self.offset.imag])
        return A, a


@dataclass
class InversionResult:
    """Estimated spectrum with the residual diagnostics that produced it.

    ``objective`` is the minimax optimum; ``residuals`` are those of the
    returned weights, which differ from the optimum only when the smoothing
    stage was applied.
    """

    estimate: SpectralDistribution
    objective: float
    z: NDArray[np.complex128]
    residuals: NDArray[np.complex128]
    converged: NDArray[np.bool_]
    in_domain: NDArray[np.bool_]
    diagnostics: dict = field(default_factory=dict)

    @property
    def achieved(self) -> float:
        e = self.residuals[self.converged & self.in_domain]
        if e.size == 0:
            return float("nan")
        return float(np.max(np.maximum(np.abs(e.real), np.abs(e.imag))))

    def to_dict(self) -> dict:
        per_z = [
            {
                "z_re": float(z.real),
                "z_im": float(z.imag),
                "residual": float(max(abs(e.real), abs(e.imag))),
                "converged": bool(c),
                "in_domain": bool(d),
            }
            for z, e, c, d in zip(self.z, self.residuals, self.converged, self.in_domain)
        ]
        return {
            "estimate": [[float(x), float(w)] for x, w in zip(self.estimate.points, self.estimate.weights)],
            "objective": float(self.objective),
            "per_z": per_z,
            "diagnostics": _jsonable(self.diagnostics),
        }

    def to_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _minimax_lp(res: AffineResidual) -> tuple[NDArray[np.float64], float]:
    A, a = res.real_rows()
    K = A.shape[1]
    # variables (w_1..w_K, s); rows  A w - s <= -a  and  -A w - s <= a
    ones = np.ones((A.shape[0], 1))
    A_ub = np.vstack([np.hstack([A, -ones]), np.hstack([-A, -ones])])
    b_ub = np.concatenate([-a, a])
    A_eq = np.hstack([np.ones((1, K)), np.zeros((1, 1))])
    c = np.zeros(K + 1)
    c[-1] = 1.0
    sol = simplex(c, A_ub, b_ub, A_eq, [1.0])
    w = sol.x[:K]
    return w / w.sum(), float(sol.x[-1])


def estimate_weights_minimax(grid_x: ArrayLike, residual_map: AffineResidual) -> InversionResult:
    """Minimise ``max_j max(|Re e_j|, |Im e_j|)`` over the probability simplex.

    Solved as a linear program in ``(w, s)`` by the in-house Bland-rule
    simplex.
    """
    x = np.asarray(grid_x, dtype=np.float64).ravel()
    if x.size != residual_map.matrix.shape[1]:
        raise ValueError("grid_x must have one point per residual-map column")
    if x.size > 1 and np.any(np.diff(x) <= 0):
        raise ValueError("grid_x must be strictly ascending")
    if x.size == 1:
        w = np.ones(1)
        obj = residual_map.sup_norm(w)
        iters = 0
    else:
        w, _ = _minimax_lp(residual_map)
        # report the exact sup norm of the returned weights
        obj = residual_map.sup_norm(w)
        iters = None
    J = residual_map.offset.size
    return InversionResult(
        estimate=SpectralDistribution(x, w),
        objective=obj,
        z=np.zeros(J, dtype=complex),
        residuals=residual_map(w),
        converged=np.ones(J, dtype=bool),
        in_domain=np.ones(J, dtype=bool),
        diagnostics={"lp_pivots": iters},
    )


@dataclass(frozen=True)
class SmoothingConfig:
    """Second-stage regularisation of the minimax weights.

    The residual bound is ``max((1 + slack) * s_star, floor)`` where
    ``s_star`` is the minimax optimum; ``order`` picks first (total
    variation) or second differences as the penalty.
    """

    slack: float = 1.0
    floor: float = 1e-5
    order: int = 2

    def __post_init__(self) -> None:
        if self.slack < 0 or self.floor < 0:
            raise ValueError("slack and floor must be nonnegative")
        if self.order not in (1, 2):
            raise ValueError("order must be 1 or 2")

    def bound(self, objective: float) -> float:
        return max((1.0 + self.slack) * objective, self.floor)


def smooth_weights(
    grid_x: ArrayLike,
    residual_map: AffineResidual,
    objective: float,
    config: SmoothingConfig = SmoothingConfig(),
) -> NDArray[np.float64] | None:
    """Least-roughness weights within a residual band around the optimum.

    The minimax optimum is typically a sparse vertex of the simplex with a
    handful of atoms, a poor picture of a continuous spectrum. Among all
    weight vectors whose sup-norm residual is at most
    ``config.bound(objective)``, this picks one minimising the L1 norm of
    the ``config.order``-th differences of the weights. Returns None if the
    LP fails.
    """
    x = np.asarray(grid_x, dtype=np.float64).ravel()
    K = x.size
    if K <= config.order:
        return None
    A, a = residual_map.real_rows()
    bound = config.bound(objective)
    R = A.shape[0]
    # variables (w, u) with u >= |D w| elementwise
    D = np.diff(np.eye(K), n=config.order, axis=0)
    nu = D.shape[0]
    I = np.eye(nu)
    A_ub = np.vstack(
        [
            np.hstack([A, np.zeros((R, nu))]),
            np.hstack([-A, np.zeros((R, nu))]),
            np.hstack([D, -I]),
            np.hstack([-D, -I]),
        ]
    )
    b_ub = np.concatenate([bound - a, bound + a, np.zeros(2 * nu)])
    A_eq = np.hstack([np.ones((1, K)), np.zeros((1, nu))])
    c = np.concatenate([np.zeros(K), np.ones(nu)])
    try:
        sol = simplex(c, A_ub, b_ub, A_eq, [1.0])
    except LPError:
        return None
    w = sol.x[:K]
    return w / w.sum()
