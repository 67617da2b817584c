"""Diffusion, microstructure-noise and asynchronous-trading simulators.

The latent log-price follows ``dX_t = mu dt + gamma_t Lambda dW_t`` with a
mean-reverting, U-shaped scalar volatility ``gamma_t``. Observations are the
latent values plus additive noise, either on a regular grid or at the event
times of independent Poisson clocks.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from numpy.typing import ArrayLike, NDArray

logger = logging.getLogger(__name__)

__all__ = [
    "VolConfig",
    "VolPath",
    "FactorLoading",
    "NoiseModel",
    "SyncObservations",
    "AsyncObservations",
    "simulate_vol_path",
    "deterministic_vol_path",
    "make_factor_loading",
    "draw_price_shocks",
    "leverage_increments",
    "simulate_latent_paths",
    "add_noise",
    "simulate_async_observations",
    "previous_tick_sync",
    "SyncError",
]


class SyncError(ValueError):
    """An asset has no observation at or before a synchronisation time."""


@dataclass(frozen=True)
class VolConfig:
    """Parameters of ``d gamma = -rho (gamma - phi_t) dt + sigma_vol dW~``.

    The reversion target is ``phi_t = 2 sqrt(phi_a + phi_b cos(2 pi t))``.
    ``gamma0=None`` starts the path on the target, ``phi_0``.
    """

    rho: float = 10.0
    sigma_vol: float = 0.05
    phi_a: float = 0.0009
    phi_b: float = 0.0008
    gamma0: float | None = None
    leverage: bool = True

    def __post_init__(self) -> None:
        if self.rho < 0 or self.sigma_vol < 0:
            raise ValueError("rho and sigma_vol must be nonnegative")
        if not self.phi_a >= self.phi_b >= 0:
            raise ValueError("need phi_a >= phi_b >= 0 so that phi_t is real")

    def phi(self, t: ArrayLike) -> NDArray[np.float64]:
        t = np.asarray(t, dtype=np.float64)
        return 2.0 * np.sqrt(self.phi_a + self.phi_b * np.cos(2.0 * np.pi * t))

    def phi_sq_integral(self, s: ArrayLike, t: ArrayLike) -> NDArray[np.float64]:
        """Closed form of the integral of phi^2 over [s, t]."""
        s = np.asarray(s, dtype=np.float64)
        t = np.asarray(t, dtype=np.float64)
        two_pi = 2.0 * np.pi
        return 4.0 * (
            self.phi_a * (t - s)
            + self.phi_b * (np.sin(two_pi * t) - np.sin(two_pi * s)) / two_pi
        )

    @property
    def start(self) -> float:
        return float(self.phi(0.0)) if self.gamma0 is None else float(self.gamma0)


@dataclass(frozen=True)
class VolPath:
    """Volatility on the grid ``t_i = i/n`` and ``zeta = int gamma^2 dt``."""

    gamma: NDArray[np.float64]
    zeta: float

    def __post_init__(self) -> None:
        if not np.all(np.isfinite(self.gamma)):
            raise ValueError("volatility path is not finite")
        if not self.zeta > 0:
            raise ValueError("integrated variance must be positive")

    @property
    def n(self) -> int:
        return self.gamma.size - 1

    @classmethod
    def from_values(cls, gamma: ArrayLike) -> "VolPath":
        g = np.asarray(gamma, dtype=np.float64)
        t = np.linspace(0.0, 1.0, g.size)
        return cls(g, float(np.trapezoid(g * g, t)))


def simulate_vol_path(cfg: VolConfig, n: int, wtilde_increments: ArrayLike) -> VolPath:
    """Euler-Maruyama on the observation grid.

    ``wtilde_increments`` are the Brownian increments of the volatility driver
    over each step; they must already carry variance ``1/n``.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    dw = np.asarray(wtilde_increments, dtype=np.float64)
    if dw.shape != (n,):
        raise ValueError(f"expected {n} increments, got shape {dw.shape}")
    if not np.all(np.isfinite(dw)):
        raise ValueError("volatility increments must be finite")
    dt = 1.0 / n
    phi = cfg.phi(np.arange(n) * dt)
    g = np.empty(n + 1)
    g[0] = cfg.start
    # sequential recursion; n ~ 1e4-1e5 so a Python loop is acceptable
    a = 1.0 - cfg.rho * dt
    drift = cfg.rho * dt * phi
    shock = cfg.sigma_vol * dw
    for i in range(n):
        g[i + 1] = a * g[i] + drift[i] + shock[i]
    return VolPath.from_values(g)


def deterministic_vol_path(cfg: VolConfig, n: int) -> VolPath:
    """``gamma_t = phi_t`` on the grid, with the exact integral of phi^2."""
    g = cfg.phi(np.arange(n + 1) / n)
    return VolPath(g, float(cfg.phi_sq_integral(0.0, 1.0)))


@dataclass(frozen=True)
class FactorLoading:
    """``Lambda`` and ``sigma_breve = Lambda Lambda^T = U D U^T``."""

    lambda_: NDArray[np.float64]
    sigma_breve: NDArray[np.float64]
    eigenvalues: NDArray[np.float64] = field(repr=False)

    @property
    def p(self) -> int:
        return self.sigma_breve.shape[0]


_EIGEN_SAMPLERS: dict[str, Callable[[np.random.Generator, int], NDArray]] = {
    "beta(1,3)": lambda rng, p: rng.beta(1.0, 3.0, size=p),
    "identity": lambda rng, p: np.ones(p),
}


def haar_orthogonal(p: int, rng: np.random.Generator) -> NDArray[np.float64]:
    q, r = np.linalg.qr(rng.standard_normal((p, p)))
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs


def make_factor_loading(
    p: int,
    rng: np.random.Generator,
    eigen_dist: str | Callable[[np.random.Generator, int], NDArray] = "beta(1,3)",
    rotate: bool = True,
    eigenvalues: ArrayLike | None = None,
) -> FactorLoading:
    """Random ``sigma_breve = U D U^T`` with ``Lambda`` its symmetric root.

    With ``rotate=False`` the basis is the identity (diagonal loading).
    ``eigenvalues`` bypasses the sampler.
    """
    if p < 1:
        raise ValueError("p must be positive")
    if eigenvalues is not None:
        d = np.asarray(eigenvalues, dtype=np.float64)
        if d.shape != (p,):
            raise ValueError("eigenvalues must have length p")
    else:
        sampler = _EIGEN_SAMPLERS[eigen_dist] if isinstance(eigen_dist, str) else eigen_dist
        d = np.asarray(sampler(rng, p), dtype=np.float64)
    if np.any(d < 0):
        raise ValueError("loading eigenvalues must be nonnegative")
    u = haar_orthogonal(p, rng) if rotate else np.eye(p)
    sigma = (u * d) @ u.T
    lam = (u * np.sqrt(d)) @ u.T
    return FactorLoading(0.5 * (lam + lam.T), 0.5 * (sigma + sigma.T), d)


@dataclass(frozen=True)
class NoiseModel:
    """Additive observation noise, independent across assets.

    ``variant`` is ``"iid_diag"`` or ``"ar1"``; for ``"ar1"`` the lag-one
    coefficient ``phi`` is in [0, 1) and ``variances`` are the marginal ones.
    """

    variant: str
    variances: NDArray[np.float64]
    phi: float = 0.0

    def __post_init__(self) -> None:
        v = np.atleast_1d(np.asarray(self.variances, dtype=np.float64))
        object.__setattr__(self, "variances", v)
        if self.variant not in ("iid_diag", "ar1"):
            raise ValueError(f"unknown noise variant {self.variant!r}")
        if np.any(v < 0):
            raise ValueError("noise variances must be nonnegative")
        if self.variant == "ar1" and not 0.0 <= self.phi < 1.0:
            raise ValueError("ar1 coefficient must lie in [0, 1)")

    @classmethod
    def iid(cls, variance: float | ArrayLike, p: int | None = None) -> "NoiseModel":
        v = np.asarray(variance, dtype=float)
        if v.ndim == 0 and p is not None:
            v = np.full(p, float(v))
        return cls("iid_diag", v)

    @classmethod
    def ar1(cls, phi: float, variance: float | ArrayLike, p: int | None = None) -> "NoiseModel":
        v = np.asarray(variance, dtype=float)
        if v.ndim == 0 and p is not None:
            v = np.full(p, float(v))
        return cls("ar1", v, phi)

    def draw(self, p: int, length: int, rng: np.random.Generator) -> NDArray[np.float64]:
        """A ``p x length`` noise array."""
        v = np.broadcast_to(self.variances, (p,))
        sd = np.sqrt(v)[:, None]
        innov = rng.standard_normal((p, length))
        if self.variant == "iid_diag" or self.phi == 0.0:
            return sd * innov
        eps = np.empty_like(innov)
        eps[:, 0] = innov[:, 0]
        c = np.sqrt(1.0 - self.phi**2)
        for i in range(1, length):
            eps[:, i] = self.phi * eps[:, i - 1] + c * innov[:, i]
        return sd * eps


@dataclass(frozen=True)
class SyncObservations:
    """``values[:, i]`` is the observation vector at ``t_i = i/n``."""

    values: NDArray[np.float64]

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2 or v.shape[1] < 2:
            raise ValueError("values must be p x (n+1) with n >= 1")
        if not np.all(np.isfinite(v)):
            raise ValueError("observations must be finite")
        object.__setattr__(self, "values", v)

    @property
    def p(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1] - 1

    @property
    def times(self) -> NDArray[np.float64]:
        return np.arange(self.n + 1) / self.n

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow([repr(float(t)) for t in self.times])
            for row in self.values:
                writer.writerow([repr(float(x)) for x in row])

    @classmethod
    def from_csv(cls, path: str | Path) -> "SyncObservations":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(data)


@dataclass(frozen=True)
class AsyncObservations:
    """Per-asset event times in [0, 1] and observed log-prices.

    Simulated data also carries the noiseless ``latent`` values.
    """

    times: tuple[NDArray[np.float64], ...]
    values: tuple[NDArray[np.float64], ...]
    latent: tuple[NDArray[np.float64], ...] | None = None

    def __post_init__(self) -> None:
        if len(self.times) != len(self.values):
            raise ValueError("times and values must cover the same assets")
        for j, (t, v) in enumerate(zip(self.times, self.values)):
            if t.shape != v.shape or t.ndim != 1:
                raise ValueError(f"asset {j}: times and values differ in shape")
            if t.size and np.any(np.diff(t) <= 0):
                raise ValueError(f"asset {j}: times must be strictly increasing")
        if self.latent is not None and [x.shape for x in self.latent] != [t.shape for t in self.times]:
            raise ValueError("latent values must match the event times")

    @property
    def p(self) -> int:
        return len(self.times)

    def latent_view(self) -> "AsyncObservations":
        """The same event times carrying the noiseless values."""
        if self.latent is None:
            raise ValueError("no latent values attached")
        return AsyncObservations(self.times, self.latent)


def draw_price_shocks(n: int, p: int, rng: np.random.Generator) -> NDArray[np.float64]:
    """Standard normal shocks ``Z`` of shape ``(n, p)``; row i drives step i."""
    return rng.standard_normal((n, p))


def leverage_increments(shocks: NDArray[np.float64]) -> NDArray[np.float64]:
    """Increments of ``sum_j W^j / sqrt(p)`` implied by the price shocks."""
    n, p = shocks.shape
    return shocks.sum(axis=1) / np.sqrt(p * n)


def simulate_latent_paths(
    vol: VolPath,
    loading: FactorLoading,
    n: int,
    rng: np.random.Generator | None = None,
    drift: ArrayLike | None = None,
    shocks: NDArray[np.float64] | None = None,
) -> SyncObservations:
    """Latent panel with ``X_0 = 0`` and Euler steps on ``t_i = i/n``.

    ``dX_i = mu/n + gamma_{t_{i-1}} Lambda Z_i / sqrt(n)``. Pass ``shocks``
    to reuse the draws that fed a leverage-coupled volatility path.
    """
    if vol.gamma.size != n + 1:
        raise ValueError(f"volatility path has {vol.gamma.size} points, expected {n + 1}")
    p = loading.p
    if shocks is None:
        if rng is None:
            raise ValueError("need rng or shocks")
        shocks = draw_price_shocks(n, p, rng)
    if shocks.shape != (n, p):
        raise ValueError(f"shocks must have shape {(n, p)}, got {shocks.shape}")
    steps = (shocks @ loading.lambda_.T) * (vol.gamma[:-1, None] / np.sqrt(n))
    x = np.zeros((p, n + 1))
    np.cumsum(steps.T, axis=1, out=x[:, 1:])
    if drift is not None:
        mu = np.asarray(drift, dtype=np.float64)
        if mu.shape != (p,):
            raise ValueError("drift must have length p")
        # added in closed form so a constant drift lands exactly on mu * i/n
        x += mu[:, None] * np.arange(n + 1)[None, :] / n
    return SyncObservations(x)


def add_noise(
    latent: SyncObservations, model: NoiseModel, rng: np.random.Generator
) -> SyncObservations:
    """Observed panel ``Y = X + eps`` with noise at every grid index 0..n."""
    if np.all(model.variances == 0):
        return SyncObservations(latent.values.copy())
    eps = model.draw(latent.p, latent.n + 1, rng)
    return SyncObservations(latent.values + eps)


def _poisson_times(rate: float, rng: np.random.Generator) -> NDArray[np.float64]:
    count = rng.poisson(rate)
    t = np.sort(rng.uniform(0.0, 1.0, size=count))
    return t[t > 0.0]


def simulate_async_observations(
    vol_cfg: VolConfig,
    loading_eigenvalues: ArrayLike,
    rate: float,
    noise: NoiseModel,
    rng: np.random.Generator,
) -> AsyncObservations:
    """Independent Poisson trading clocks on [0, 1] for each asset.

    The latent model is ``dX^j = phi_t sqrt(d_j) dW^j`` (diagonal loading and
    deterministic volatility), so each asset is simulated exactly on its own
    event times using the closed-form integral of ``phi^2``. Every asset has
    an observation at ``t = 0``.
    """
    if not rate > 0:
        raise ValueError("Poisson rate must be positive")
    d = np.asarray(loading_eigenvalues, dtype=np.float64)
    p = d.size
    times: list[NDArray] = []
    values: list[NDArray] = []
    latent: list[NDArray] = []
    for j in range(p):
        ev = _poisson_times(rate, rng)
        while ev.size == 0:
            logger.warning("asset %d drew an empty event stream; resampling", j)
            ev = _poisson_times(rate, rng)
        t = np.concatenate([[0.0], ev])
        iv = vol_cfg.phi_sq_integral(t[:-1], t[1:]) * d[j]
        x = np.concatenate([[0.0], np.cumsum(np.sqrt(iv) * rng.standard_normal(ev.size))])
        eps = NoiseModel(noise.variant, np.broadcast_to(noise.variances, (p,))[j : j + 1], noise.phi)
        y = x + eps.draw(1, t.size, rng)[0]
        times.append(t)
        values.append(y)
        latent.append(x)
    return AsyncObservations(tuple(times), tuple(values), tuple(latent))


def sync_grid(grid_step: float) -> NDArray[np.float64]:
    """Grid ``t_i = i * grid_step`` covering [0, 1]."""
    if not 0 < grid_step <= 1:
        raise ValueError("grid_step must lie in (0, 1]")
    n = int(np.floor(1.0 / grid_step + 1e-9))
    return np.arange(n + 1) * grid_step


def previous_tick_sync(
    obs: AsyncObservations, grid_step: float, return_ticks: bool = False
) -> SyncObservations | tuple[SyncObservations, NDArray[np.float64]]:
    """Map each asset to its latest observation at or before every ``t_i``.

    With ``return_ticks`` the matrix of previous-tick times ``tau[j, i]`` is
    returned too.
    """
    grid = sync_grid(grid_step)
    out = np.empty((obs.p, grid.size))
    taus = np.empty_like(out) if return_ticks else None
    for j, (t, v) in enumerate(zip(obs.times, obs.values)):
        idx = np.searchsorted(t, grid, side="right") - 1
        if idx[0] < 0:
            raise SyncError(f"asset {j} has no observation at or before t={grid[0]}")
        out[j] = v[idx]
        if taus is not None:
            taus[j] = t[idx]
    synced = SyncObservations(out)
    return (synced, taus) if return_ticks else synced

