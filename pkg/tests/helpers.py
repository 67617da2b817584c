"""Shared simulation setups for the test-suite."""

import functools
import json

import numpy as np

from icvspectra.experiment import PRESETS, _merge, run_experiment, validate_config
from icvspectra.preavg import pav_matrix, preaveraged_returns, signal_pav_matrix, true_icv
from icvspectra.simkit import (
    NoiseModel,
    VolConfig,
    add_noise,
    draw_price_shocks,
    leverage_increments,
    make_factor_loading,
    simulate_latent_paths,
    simulate_vol_path,
)
from icvspectra.spectra import esd

N = 23400


def sync_panel(seed, p=100, n=N, noise=2e-4, ar_phi=0.0):
    """Latent and noisy panels of the U-shaped leverage model."""
    rng = np.random.default_rng(seed)
    ld = make_factor_loading(p, rng)
    shocks = draw_price_shocks(n, p, rng)
    vol = simulate_vol_path(VolConfig(), n, leverage_increments(shocks))
    x = simulate_latent_paths(vol, ld, n, shocks=shocks)
    model = NoiseModel.ar1(ar_phi, noise, p) if ar_phi else NoiseModel.iid(noise, p)
    y = add_noise(x, model, rng)
    return x, y, vol, ld, true_icv(vol, ld)


def pav_pair(seed, k=76):
    """ESDs of PAV (noisy) and A_m (latent) plus the window bookkeeping."""
    x, y, vol, ld, icv = sync_panel(seed)
    w = preaveraged_returns(y, k)
    return esd(pav_matrix(w)), esd(signal_pav_matrix(x, k)), w, vol, icv


def kernel_form(v, k, i):
    """Triangular-kernel sum of increments for window pair i (1-based)."""
    dv = np.diff(v, axis=-1)  # dv[..., l - 1] = V_l - V_{l-1}
    j = np.arange(-k + 1, k)
    weights = 1.0 - np.abs(j) / k
    return dv[..., (2 * i - 1) * k + j - 1] @ weights


# master seed for every Monte-Carlo tolerance check, fixed before the first run
ACCEPTANCE_SEED = 1000


@functools.lru_cache(maxsize=None)
def preset_run(name, replicate, seed=ACCEPTANCE_SEED, overrides=None):
    """Cached in-memory report of one preset replicate.

    ``overrides`` is a JSON string merged over the preset.
    """
    doc = dict(PRESETS[name], seed=seed)
    if overrides:
        doc = _merge(doc, json.loads(overrides))
    return run_experiment(validate_config(doc), replicate, write=False)


def median_distance(name, key, replicates=5, overrides=None):
    reports = [preset_run(name, r, overrides=overrides) for r in range(replicates)]
    return float(np.median([rep.distances[key] for rep in reports])), reports


ACCEPTANCE_LINES = []


def report_criterion(number, ok, detail):
    """Record and print one pass/fail line for an acceptance criterion."""
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok
