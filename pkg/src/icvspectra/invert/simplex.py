"""Dense two-phase primal simplex with a Bland anti-cycling fallback.

Solves ``min c^T x  s.t.  A_ub x <= b_ub,  A_eq x = b_eq,  x >= 0``.
The problems here are small (a few hundred rows), so a full tableau with
numpy row operations is simpler and fast enough. The tableau is rebuilt
from the original data every ``refactor_every`` pivots and at the end of
each phase, which keeps round-off from accumulating on the highly
degenerate minimax programs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

__all__ = ["LPError", "LPResult", "simplex"]

PIVOT_TOL = 1e-9
FEAS_TOL = 1e-12


class LPError(RuntimeError):
    """Infeasible, unbounded, or iteration limit reached."""


@dataclass(frozen=True)
class LPResult:
    x: NDArray[np.float64]
    objective: float
    iterations: int


def _pivot(t: NDArray[np.float64], row: int, col: int) -> None:
    t[row] /= t[row, col]
    factor = t[:, col].copy()
    factor[row] = 0.0
    t -= np.outer(factor, t[row])


@dataclass
class _State:
    basis: NDArray[np.intp]
    stalled: int = 0
    pivots: int = 0


def _run(t: NDArray[np.float64], state: _State, tol: float, budget: int, degenerate_limit: int) -> bool:
    """At most ``budget`` simplex pivots on ``t``; True once optimal.

    Entering columns are priced by the most negative reduced cost (lowest
    index on ties) and the leaving row among ratio ties is the one with the
    largest pivot element. After ``degenerate_limit`` consecutive pivots
    without progress both choices switch to Bland's smallest-index rule
    until the objective moves again, which rules out cycling.
    """
    m = t.shape[0] - 1
    basis = state.basis
    for _ in range(budget):
        cost = t[-1, :-1]
        candidates = np.flatnonzero(cost < -tol)
        if candidates.size == 0:
            return True
        bland = state.stalled >= degenerate_limit
        col = int(candidates[0]) if bland else int(candidates[np.argmin(cost[candidates])])
        column = t[:m, col]
        positive = column > PIVOT_TOL
        if not positive.any():
            raise LPError("linear program is unbounded")
        rhs = np.maximum(t[:m, -1], 0.0)
        ratios = np.full(m, np.inf)
        ratios[positive] = rhs[positive] / column[positive]
        best = ratios.min()
        if bland:
            ties = np.flatnonzero(ratios <= best + tol * max(1.0, abs(best)))
            row = int(ties[np.argmin(basis[ties])])
        else:
            # Harris two-pass test: largest pivot within a feasibility band
            relaxed = np.full(m, np.inf)
            relaxed[positive] = (rhs[positive] + FEAS_TOL) / column[positive]
            ties = np.flatnonzero(ratios <= relaxed.min())
            row = int(ties[np.argmax(column[ties])])
            best = ratios[row]
        state.stalled = state.stalled + 1 if best <= tol else 0
        _pivot(t, row, col)
        basis[row] = col
        state.pivots += 1
    return False


def _tableau(full: NDArray, b: NDArray, basis: NDArray, cost: NDArray) -> NDArray:
    """``[B^-1 A | B^-1 b]`` with the reduced-cost row underneath."""
    m, ncol = full.shape
    body = np.linalg.solve(full[:, basis], np.hstack([full, b[:, None]]))
    # basic columns are exact unit vectors by construction
    body[:, basis] = np.eye(m)
    body[:, -1] = np.where(body[:, -1] > -1e-9, np.maximum(body[:, -1], 0.0), body[:, -1])
    t = np.zeros((m + 1, ncol + 1))
    t[:m] = body
    t[-1, :ncol] = cost
    t[-1] -= cost[basis] @ t[:m]
    return t


def _solve_phase(full, b, state, cost, tol, max_iter, degenerate_limit, refactor_every):
    while True:
        t = _tableau(full, b, state.basis, cost)
        budget = min(refactor_every, max_iter - state.pivots)
        if budget <= 0:
            raise LPError(f"simplex did not finish within {max_iter} pivots")
        if _run(t, state, tol, budget, degenerate_limit):
            return _tableau(full, b, state.basis, cost)


def simplex(
    c: ArrayLike,
    A_ub: ArrayLike | None = None,
    b_ub: ArrayLike | None = None,
    A_eq: ArrayLike | None = None,
    b_eq: ArrayLike | None = None,
    tol: float = 1e-10,
    max_iter: int = 200_000,
    degenerate_limit: int = 50,
    refactor_every: int = 100,
) -> LPResult:
    c = np.asarray(c, dtype=np.float64)
    nvar = c.size
    a_ub = np.zeros((0, nvar)) if A_ub is None else np.atleast_2d(np.asarray(A_ub, float))
    r_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, float).ravel()
    a_eq = np.zeros((0, nvar)) if A_eq is None else np.atleast_2d(np.asarray(A_eq, float))
    r_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, float).ravel()
    n_ub = a_ub.shape[0]
    m = n_ub + a_eq.shape[0]
    nstd = nvar + n_ub

    # columns: original | slacks | artificials
    a = np.zeros((m, nstd))
    a[:n_ub, :nvar] = a_ub
    a[:n_ub, nvar:] = np.eye(n_ub)
    a[n_ub:, :nvar] = a_eq
    b = np.concatenate([r_ub, r_eq])
    flip = b < 0
    a[flip] *= -1.0
    b[flip] *= -1.0

    basis = np.full(m, -1, dtype=np.intp)
    slack_rows = np.flatnonzero(~flip[:n_ub])
    basis[slack_rows] = nvar + slack_rows
    need_art = np.flatnonzero(basis < 0)
    n_art = need_art.size
    full = np.zeros((m, nstd + n_art))
    full[:, :nstd] = a
    full[need_art, nstd + np.arange(n_art)] = 1.0
    basis[need_art] = nstd + np.arange(n_art)
    state = _State(basis)

    if n_art:
        # phase one: minimise the sum of artificials
        cost1 = np.zeros(nstd + n_art)
        cost1[nstd:] = 1.0
        t = _solve_phase(full, b, state, cost1, tol, max_iter, degenerate_limit, refactor_every)
        if -t[-1, -1] > 1e-8 * max(1.0, np.abs(b).max(initial=0.0)):
            raise LPError("linear program is infeasible")
        # drive zero-level artificials out of the basis
        keep = np.ones(m, dtype=bool)
        for row in np.flatnonzero(state.basis >= nstd):
            entries = np.abs(t[row, :nstd])
            entries[state.basis[state.basis < nstd]] = 0.0
            j = int(np.argmax(entries))
            if entries[j] > PIVOT_TOL:
                _pivot(t, row, j)
                state.basis[row] = j
            else:
                keep[row] = False  # redundant equality
        full, b = full[keep][:, :nstd], b[keep]
        state.basis = state.basis[keep]

    cost2 = np.zeros(nstd)
    cost2[:nvar] = c
    t = _solve_phase(full, b, state, cost2, tol, max_iter, degenerate_limit, refactor_every)
    x_full = np.zeros(nstd)
    x_full[state.basis] = t[:-1, -1]
    x = np.clip(x_full[:nvar], 0.0, None)
    return LPResult(x, float(c @ x), state.pivots)
