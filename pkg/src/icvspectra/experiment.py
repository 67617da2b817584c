"""Experiment configuration, presets and the end-to-end pipeline."""

from __future__ import annotations

import copy
import csv
import hashlib
import json
import math
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .invert import (
    GammaStarProfile,
    SmoothingConfig,
    Step1Config,
    estimate_Fa,
    estimate_icv_approach1,
    estimate_icv_approach2,
)
from .preavg import (
    b_matrix,
    effective_noise_variance,
    estimate_noise_variances,
    estimate_zeta,
    pav_matrix,
    preaveraged_returns,
    signal_pav_matrix,
    true_icv,
    window_length,
)
from .simkit import (
    NoiseModel,
    SyncObservations,
    VolConfig,
    add_noise,
    deterministic_vol_path,
    draw_price_shocks,
    leverage_increments,
    make_factor_loading,
    previous_tick_sync,
    simulate_async_observations,
    simulate_latent_paths,
    simulate_vol_path,
)
from .spectra import ComplexGrid, SpectralDistribution, cdf_table, esd, kolmogorov_distance

__all__ = [
    "SCENARIOS",
    "PRESETS",
    "ConfigError",
    "StageError",
    "ExperimentConfig",
    "ExperimentReport",
    "validate_config",
    "stage_rng",
    "simulate_panels",
    "run_experiment",
    "emit_plot_data",
    "load_report",
]

SCENARIOS = ("sync_approach1", "sync_approach2", "async_approach1", "async_approach2", "mp_roundtrip")

# fixed stream indices: adding or dropping a stage never reshuffles another
STAGES = {"loading": 0, "vol": 1, "paths": 2, "noise": 3, "async": 4, "mp": 5}

_BASE: dict[str, Any] = {
    "scenario": "sync_approach1",
    "seed": 0,
    "out": "runs",
    "sim": {
        "p": 100,
        "n": 23400,
        "vol": {"rho": 10.0, "sigma_vol": 0.05, "phi_a": 0.0009, "phi_b": 0.0008, "gamma0": None, "leverage": True},
        "loading": {"eigen_dist": "beta(1,3)", "rotate": True},
        "noise": {"variant": "iid_diag", "variance": 2e-4, "phi": 0.0},
        "async": {"enabled": False, "rate": 23400.0, "grid_step": 1.0 / 23400.0},
    },
    "k_rule": {"theta": 0.5, "alpha": 0.5},
    "grid": {"re_range": [-20.0, 0.0], "im_range": [1.0, 20.0], "n_re": 10, "n_im": 10},
    "K": 200,
    "zeta_mode": "oracle",
    "smoothing": {"slack": 1.0, "floor": 1e-5, "order": 2},
    "mp": {"p": 200, "m": 400, "population": {"points": [1.0, 3.0], "weights": [0.5, 0.5]}},
}


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for key, val in over.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


PRESETS: dict[str, dict[str, Any]] = {
    "sync_approach1": _merge(_BASE, {"scenario": "sync_approach1"}),
    "sync_approach2": _merge(
        _BASE, {"scenario": "sync_approach2", "k_rule": {"theta": 1.5, "alpha": 0.6}, "zeta_mode": "estimated"}
    ),
    "async_approach1": _merge(
        _BASE,
        {
            "scenario": "async_approach1",
            "sim": {
                "vol": {"sigma_vol": 0.0, "leverage": False},
                "loading": {"rotate": False},
                "async": {"enabled": True, "grid_step": 4.0 / 23400.0},
            },
        },
    ),
    "async_approach2": _merge(
        _BASE,
        {
            "scenario": "async_approach2",
            "sim": {
                "vol": {"sigma_vol": 0.0, "leverage": False},
                "loading": {"rotate": False},
                "async": {"enabled": True, "grid_step": 1.0 / 23400.0},
            },
            "k_rule": {"theta": 1.5, "alpha": 0.6},
            "zeta_mode": "estimated",
        },
    ),
    "mp_roundtrip": _merge(_BASE, {"scenario": "mp_roundtrip", "k_rule": {"theta": 1.5, "alpha": 0.6}}),
}

PRESET_NOTES = {
    "sync_approach1": "p=100, n=23400, k=floor(0.5 sqrt n)=76, iid noise 2e-4, oracle zeta and profile",
    "sync_approach2": "p=100, n=23400, k=floor(1.5 n^0.6)=627, B_m with zeta-hat",
    "async_approach1": "Poisson rate 23400 per asset, previous tick every 4 s (n=5850), approach I",
    "async_approach2": "Poisson rate 23400 per asset, previous tick every 1 s (n=23400), approach II",
    "mp_roundtrip": "Wishart sample p=200, m=400, population 0.5*delta_1 + 0.5*delta_3",
}


class ConfigError(ValueError):
    """Every violated invariant, one message per field."""

    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = errors


class StageError(RuntimeError):
    """A pipeline stage failed; ``stage`` names it."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage '{stage}' failed: {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated, fully resolved experiment description.

    ``document`` is the resolved JSON-compatible form; everything else is a
    typed view of it.
    """

    document: dict = field(compare=True, hash=False)

    @property
    def scenario(self) -> str:
        return self.document["scenario"]

    @property
    def seed(self) -> int:
        return int(self.document["seed"])

    @property
    def out(self) -> Path:
        return Path(self.document["out"])

    @property
    def p(self) -> int:
        return int(self.document["sim"]["p"])

    @property
    def n(self) -> int:
        return int(self.document["sim"]["n"])

    @property
    def K(self) -> int:
        return int(self.document["K"])

    @property
    def is_async(self) -> bool:
        return self.scenario.startswith("async")

    @property
    def approach(self) -> int:
        return 1 if self.scenario.endswith("approach1") else 2

    def vol_config(self) -> VolConfig:
        return VolConfig(**self.document["sim"]["vol"])

    def noise_model(self) -> NoiseModel:
        nz = self.document["sim"]["noise"]
        var = nz["variances"] if nz.get("variances") is not None else nz["variance"]
        v = np.broadcast_to(np.asarray(var, dtype=float), (self.p,)).copy()
        return NoiseModel(nz["variant"], v, float(nz.get("phi", 0.0)))

    def grid(self) -> ComplexGrid:
        g = self.document["grid"]
        return ComplexGrid.lattice(tuple(g["re_range"]), tuple(g["im_range"]), int(g["n_re"]), int(g["n_im"]))

    def smoothing(self) -> SmoothingConfig | None:
        s = self.document["smoothing"]
        return None if s is None else SmoothingConfig(float(s["slack"]), float(s["floor"]), int(s["order"]))

    def with_overrides(self, **top: Any) -> "ExperimentConfig":
        return validate_config(_merge(self.document, top))

    def to_dict(self) -> dict:
        return copy.deepcopy(self.document)


def _known_keys(template: dict, doc: dict, prefix: str, unknown: list[str]) -> None:
    for key, val in doc.items():
        path = f"{prefix}{key}"
        if key not in template:
            unknown.append(path)
        elif isinstance(template[key], dict) and isinstance(val, dict) and key != "population":
            _known_keys(template[key], val, path + ".", unknown)


def _check(errors: list[str], cond: bool, msg: str) -> None:
    if not cond:
        errors.append(msg)


def _num(x: Any) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


def validate_config(raw: dict) -> ExperimentConfig:
    """Resolve a raw document against its scenario preset and check it.

    Missing fields are filled from the preset named by ``scenario``. Unknown
    keys produce a warning. All violations are collected and raised together
    as a :class:`ConfigError`.
    """
    if not isinstance(raw, dict):
        raise ConfigError(["config: document must be a JSON object"])
    errors: list[str] = []
    scenario = raw.get("scenario", "sync_approach1")
    if scenario not in SCENARIOS:
        raise ConfigError([f"scenario: must be one of {', '.join(SCENARIOS)} (got {scenario!r})"])
    unknown: list[str] = []
    _known_keys(_BASE, raw, "", unknown)
    if "variances" in raw.get("sim", {}).get("noise", {}):
        unknown = [u for u in unknown if u != "sim.noise.variances"]
    for key in unknown:
        warnings.warn(f"unknown config key '{key}' ignored", UserWarning, stacklevel=2)
    doc = _merge(PRESETS[scenario], {k: v for k, v in raw.items() if k in _BASE})
    for u in unknown:
        parts = u.split(".")
        node = doc
        for part in parts[:-1]:
            node = node.get(part, {})
        if isinstance(node, dict):
            node.pop(parts[-1], None)
    if "variances" in raw.get("sim", {}).get("noise", {}):
        doc["sim"]["noise"]["variances"] = raw["sim"]["noise"]["variances"]

    seed = doc["seed"]
    _check(errors, isinstance(seed, int) and not isinstance(seed, bool) and 0 <= seed < 2**64,
           "seed: must be an integer in [0, 2^64)")
    _check(errors, isinstance(doc["out"], str) and doc["out"] != "", "out: must be a non-empty path string")
    sim = doc["sim"]
    _check(errors, isinstance(sim["p"], int) and sim["p"] >= 1, "sim.p: must be an integer >= 1")
    _check(errors, isinstance(sim["n"], int) and sim["n"] >= 2, "sim.n: must be an integer >= 2")
    vol = sim["vol"]
    for key in ("rho", "sigma_vol", "phi_a", "phi_b"):
        _check(errors, _num(vol[key]) and vol[key] >= 0, f"sim.vol.{key}: must be a nonnegative number")
    if _num(vol["phi_a"]) and _num(vol["phi_b"]):
        _check(errors, vol["phi_a"] >= vol["phi_b"], "sim.vol.phi_b: must not exceed phi_a (phi_t must stay real)")
    _check(errors, vol["gamma0"] is None or _num(vol["gamma0"]), "sim.vol.gamma0: must be null or a number")
    _check(errors, isinstance(vol["leverage"], bool), "sim.vol.leverage: must be true or false")
    _check(errors, sim["loading"]["eigen_dist"] in ("beta(1,3)", "identity"),
           "sim.loading.eigen_dist: must be 'beta(1,3)' or 'identity'")
    _check(errors, isinstance(sim["loading"]["rotate"], bool), "sim.loading.rotate: must be true or false")
    nz = sim["noise"]
    _check(errors, nz["variant"] in ("iid_diag", "ar1"), "sim.noise.variant: must be 'iid_diag' or 'ar1'")
    var = nz.get("variances", nz["variance"])
    var_arr = np.asarray(var, dtype=float) if isinstance(var, (int, float, list)) and not isinstance(var, bool) else None
    _check(errors, var_arr is not None and np.all(np.isfinite(var_arr)) and np.all(var_arr >= 0),
           "sim.noise.variance: must be a nonnegative number or list")
    if var_arr is not None and var_arr.ndim == 1 and isinstance(sim["p"], int):
        _check(errors, var_arr.size == sim["p"], "sim.noise.variances: list length must equal sim.p")
    _check(errors, _num(nz["phi"]) and 0 <= nz["phi"] < 1, "sim.noise.phi: must lie in [0, 1)")
    asy = sim["async"]
    _check(errors, isinstance(asy["enabled"], bool), "sim.async.enabled: must be true or false")
    _check(errors, _num(asy["rate"]) and asy["rate"] > 0, "sim.async.rate: must be positive")
    _check(errors, _num(asy["grid_step"]) and 0 < asy["grid_step"] <= 1, "sim.async.grid_step: must lie in (0, 1]")
    is_async = scenario.startswith("async")
    _check(errors, asy["enabled"] == is_async,
           f"sim.async.enabled: must be {str(is_async).lower()} for scenario {scenario}")
    if is_async and _num(asy["grid_step"]) and asy["grid_step"] > 0:
        n_sync = int(math.floor(1.0 / asy["grid_step"] + 1e-9))
        doc["sim"]["n"] = n_sync

    kr = doc["k_rule"]
    _check(errors, _num(kr["theta"]) and kr["theta"] > 0, "k_rule.theta: must be positive")
    if _num(kr["alpha"]) and scenario != "mp_roundtrip":
        if scenario.endswith("approach1"):
            _check(errors, kr["alpha"] == 0.5,
                   "k_rule.alpha: approach1 requires alpha = 0.5 (window length k = floor(theta sqrt n))")
        else:
            _check(errors, 0.5 < kr["alpha"] < 1,
                   "k_rule.alpha: approach2 requires alpha in (0.5, 1) (window length must outgrow sqrt n)")
    else:
        _check(errors, _num(kr["alpha"]), "k_rule.alpha: must be a number")

    g = doc["grid"]
    for key in ("re_range", "im_range"):
        ok = isinstance(g[key], list) and len(g[key]) == 2 and all(_num(v) for v in g[key])
        _check(errors, ok and g[key][0] <= g[key][1], f"grid.{key}: must be [low, high] with low <= high")
    if isinstance(g["im_range"], list) and len(g["im_range"]) == 2 and _num(g["im_range"][0]):
        _check(errors, g["im_range"][0] > 0, "grid.im_range: imaginary parts must be positive")
    for key in ("n_re", "n_im"):
        _check(errors, isinstance(g[key], int) and g[key] >= 1, f"grid.{key}: must be an integer >= 1")
    _check(errors, isinstance(doc["K"], int) and doc["K"] >= 1, "K: must be an integer >= 1")
    _check(errors, doc["zeta_mode"] in ("oracle", "estimated"), "zeta_mode: must be 'oracle' or 'estimated'")
    sm = doc["smoothing"]
    if sm is not None:
        _check(errors, isinstance(sm, dict) and _num(sm.get("slack")) and sm["slack"] >= 0,
               "smoothing.slack: must be a nonnegative number")
        _check(errors, isinstance(sm, dict) and _num(sm.get("floor")) and sm["floor"] >= 0,
               "smoothing.floor: must be a nonnegative number")
        _check(errors, isinstance(sm, dict) and sm.get("order") in (1, 2), "smoothing.order: must be 1 or 2")
    mp = doc["mp"]
    _check(errors, isinstance(mp["p"], int) and mp["p"] >= 1, "mp.p: must be an integer >= 1")
    _check(errors, isinstance(mp["m"], int) and mp["m"] >= 1, "mp.m: must be an integer >= 1")
    pop = mp["population"]
    try:
        SpectralDistribution(pop["points"], pop["weights"])
    except (KeyError, TypeError, ValueError) as exc:
        errors.append(f"mp.population: {exc}")
    if errors:
        raise ConfigError(errors)
    return ExperimentConfig(doc)


def stage_rng(seed: int, stage: str, replicate: int = 0) -> np.random.Generator:
    """Independent generator for one stage of one replicate."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(replicate, STAGES[stage])))


@dataclass
class SimulatedPanels:
    observed: SyncObservations
    latent: SyncObservations
    icv: Any
    vol: Any
    noise_variance: float


def simulate_panels(cfg: ExperimentConfig, replicate: int = 0) -> SimulatedPanels:
    """Simulation stage of a sync or async scenario."""
    p, n, seed = cfg.p, cfg.n, cfg.seed
    vcfg = cfg.vol_config()
    noise = cfg.noise_model()
    ld = cfg.document["sim"]["loading"]
    loading = make_factor_loading(p, stage_rng(seed, "loading", replicate), ld["eigen_dist"], ld["rotate"])
    if cfg.is_async:
        asy = cfg.document["sim"]["async"]
        vol = deterministic_vol_path(vcfg, n)
        obs = simulate_async_observations(vcfg, loading.eigenvalues, asy["rate"], noise,
                                          stage_rng(seed, "async", replicate))
        observed = previous_tick_sync(obs, asy["grid_step"])
        latent = previous_tick_sync(obs.latent_view(), asy["grid_step"])
    else:
        shocks = draw_price_shocks(n, p, stage_rng(seed, "paths", replicate))
        if vcfg.leverage:
            dw = leverage_increments(shocks)
        else:
            dw = stage_rng(seed, "vol", replicate).standard_normal(n) / math.sqrt(n)
        vol = simulate_vol_path(vcfg, n, dw)
        latent = simulate_latent_paths(vol, loading, n, shocks=shocks)
        observed = add_noise(latent, noise, stage_rng(seed, "noise", replicate))
    return SimulatedPanels(observed, latent, true_icv(vol, loading), vol, float(noise.variances.max()))


@dataclass
class ExperimentReport:
    """Distributions, distances and diagnostics of one run.

    ``timings`` holds wall-clock seconds and is kept out of the JSON report
    so that the report is a deterministic function of the config.
    """

    config: dict
    distributions: dict[str, SpectralDistribution] = field(default_factory=dict)
    distances: dict[str, float] = field(default_factory=dict)
    scalars: dict[str, float] = field(default_factory=dict)
    diagnostics: dict[str, Any] = field(default_factory=dict)
    timings: dict[str, float] = field(default_factory=dict)
    files: dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "distributions": {k: f"dist_{k}.csv" for k in self.distributions},
            "distances": self.distances,
            "scalars": self.scalars,
            "diagnostics": self.diagnostics,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, allow_nan=True) + "\n"

    def digest(self) -> str:
        """SHA-256 of the report and every distribution table.

        The output directory is left out so that moving a run keeps its hash.
        """
        doc = self.to_dict()
        doc["config"] = {k: v for k, v in doc["config"].items() if k != "out"}
        h = hashlib.sha256(json.dumps(doc, sort_keys=True, allow_nan=True).encode())
        for name in sorted(self.distributions):
            d = self.distributions[name]
            h.update(name.encode())
            h.update(np.ascontiguousarray(d.points).tobytes())
            h.update(np.ascontiguousarray(d.weights).tobytes())
        return h.hexdigest()

    def write(self, directory: str | Path) -> Path:
        out = Path(directory)
        out.mkdir(parents=True, exist_ok=True)
        for name, dist in self.distributions.items():
            path = out / f"dist_{name}.csv"
            dist.to_csv(path)
            self.files[name] = str(path)
        report = out / "report.json"
        report.write_text(self.to_json())
        self.files["report"] = str(report)
        (out / "report.sha256").write_text(self.digest() + "\n")
        (out / "timings.json").write_text(json.dumps(self.timings, indent=2, sort_keys=True) + "\n")
        return report


def _inversion_diag(res) -> dict:
    d = res.to_dict()
    return {"objective": d["objective"], "per_z": d["per_z"], "solver": d["diagnostics"]}


class _Timer:
    def __init__(self, report: ExperimentReport):
        self.report = report

    def stage(self, name: str):
        return _Stage(self.report, name)


class _Stage:
    def __init__(self, report: ExperimentReport, name: str):
        self.report, self.name = report, name

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        self.report.timings[self.name] = time.perf_counter() - self.t0
        if exc is not None and not isinstance(exc, StageError):
            raise StageError(self.name, exc) from exc
        return False


def run_experiment(
    cfg: ExperimentConfig,
    replicate: int = 0,
    write: bool = True,
    directory: str | Path | None = None,
) -> ExperimentReport:
    """Run one scenario end to end; optionally write the report files.

    Replicate ``r`` draws from seed streams disjoint from every other
    replicate. Files go to ``directory`` (default: the configured output).
    """
    report = ExperimentReport(config=cfg.to_dict())
    report.scalars["replicate"] = replicate
    timer = _Timer(report)
    if cfg.scenario == "mp_roundtrip":
        _run_mp(cfg, replicate, report, timer)
    else:
        _run_panel(cfg, replicate, report, timer)
    if write:
        report.write(cfg.out if directory is None else directory)
    return report


def _run_mp(cfg: ExperimentConfig, replicate: int, report: ExperimentReport, timer: _Timer) -> None:
    mp = cfg.document["mp"]
    p, m = mp["p"], mp["m"]
    pop = SpectralDistribution(mp["population"]["points"], mp["population"]["weights"])
    with timer.stage("simulate"):
        rng = stage_rng(cfg.seed, "mp", replicate)
        counts = np.round(pop.weights * p).astype(int)
        counts[-1] = p - counts[:-1].sum()
        tau = np.repeat(pop.points, counts)
        z = rng.standard_normal((p, m)) * np.sqrt(tau)[:, None]
        S = z @ z.T / m
        F_S = esd(0.5 * (S + S.T))
    with timer.stage("invert"):
        res = estimate_icv_approach2(F_S, p / m, cfg.grid(), cfg.K, cfg.smoothing())
    report.distributions.update({"population": pop, "sample": F_S, "estimate": res.estimate})
    report.distances["estimate_vs_population"] = kolmogorov_distance(res.estimate, pop)
    report.scalars.update({"y": p / m})
    report.diagnostics["inversion"] = _inversion_diag(res)


def _run_panel(cfg: ExperimentConfig, replicate: int, report: ExperimentReport, timer: _Timer) -> None:
    with timer.stage("simulate"):
        sim = simulate_panels(cfg, replicate)
    F_icv = esd(sim.icv)
    p = cfg.p
    kr = cfg.document["k_rule"]
    smoothing = cfg.smoothing()
    estimated = cfg.document["zeta_mode"] == "estimated"
    report.scalars.update({"zeta": sim.vol.zeta, "trace_icv_over_p": float(np.trace(sim.icv.entries) / p)})
    with timer.stage("preprocess"):
        n = sim.observed.n
        k = window_length(n, kr["theta"], kr["alpha"])
        w = preaveraged_returns(sim.observed, k, kr["theta"], kr["alpha"])
        report.scalars.update({"n": n, "k": k, "m": w.m, "y": w.y})
        if cfg.approach == 1:
            pav = pav_matrix(w)
            F_pav = esd(pav)
            F_a = esd(signal_pav_matrix(sim.latent, k))
            v_hat = estimate_noise_variances(sim.observed)
            noise_var = float(v_hat.max()) if estimated else sim.noise_variance
            zeta_hat = estimate_zeta(w, v_hat)
            report.scalars.update({"zeta_hat": zeta_hat, "noise_variance_used": noise_var})
        else:
            B, _, zeta_hat = b_matrix(w)
            F_B = esd(B)
            report.scalars["zeta_hat"] = zeta_hat
    report.distributions["icv"] = F_icv
    if cfg.approach == 1:
        with timer.stage("invert"):
            s1 = Step1Config(y=w.y, sigma_eff2=effective_noise_variance(w, noise_var))
            res_a = estimate_Fa(F_pav, s1, cfg.grid(), cfg.K, smoothing)
            profile = GammaStarProfile.from_path(sim.vol)
            zeta = zeta_hat if estimated else sim.vol.zeta
            res_i = estimate_icv_approach1(F_pav, s1, cfg.grid(), cfg.K, profile, zeta, smoothing)
        report.distributions.update({"pav": F_pav, "a_m": F_a, "estimate_a_m": res_a.estimate,
                                     "estimate_icv": res_i.estimate})
        report.distances["estimate_a_m_vs_a_m"] = kolmogorov_distance(res_a.estimate, F_a)
        report.distances["estimate_icv_vs_icv"] = kolmogorov_distance(res_i.estimate, F_icv)
        report.scalars["sigma_eff2"] = s1.sigma_eff2
        report.diagnostics["step1_inversion"] = _inversion_diag(res_a)
        report.diagnostics["icv_inversion"] = _inversion_diag(res_i)
    else:
        with timer.stage("invert"):
            res = estimate_icv_approach2(F_B, w.y, cfg.grid(), cfg.K, smoothing)
        report.distributions.update({"b_m": F_B, "estimate_icv": res.estimate})
        report.distances["estimate_icv_vs_icv"] = kolmogorov_distance(res.estimate, F_icv)
        report.diagnostics["icv_inversion"] = _inversion_diag(res)


def load_report(directory: str | Path) -> ExperimentReport:
    """Rebuild a report from the files :meth:`ExperimentReport.write` left."""
    out = Path(directory)
    doc = json.loads((out / "report.json").read_text())
    dists = {name: SpectralDistribution.from_csv(out / fname) for name, fname in doc["distributions"].items()}
    timings_path = out / "timings.json"
    timings = json.loads(timings_path.read_text()) if timings_path.exists() else {}
    return ExperimentReport(doc["config"], dists, doc["distances"], doc["scalars"], doc["diagnostics"], timings)


def emit_plot_data(report: ExperimentReport, directory: str | Path, points: int = 400) -> list[Path]:
    """CDF tables of every distribution on a shared 400-point x-range.

    Writes ``cdf_<name>.csv`` (columns ``x,cdf``) per distribution and a
    ``plot_manifest.json`` listing them; returns all written paths.
    """
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    entries = []
    if report.distributions:
        top = max(d.max_support for d in report.distributions.values())
        xs = np.linspace(0.0, 1.05 * top if top > 0 else 1.0, points)
        for name in sorted(report.distributions):
            path = out / f"cdf_{name}.csv"
            cdf = cdf_table(report.distributions[name], xs)
            with open(path, "w", newline="") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(["x", "cdf"])
                for x, f in zip(xs, cdf):
                    writer.writerow([repr(float(x)), repr(float(f))])
            written.append(path)
            entries.append({"name": name, "file": path.name, "rows": points})
    manifest = out / "plot_manifest.json"
    doc = {"scenario": report.config.get("scenario"), "x_points": points, "series": entries,
           "distances": report.distances}
    manifest.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    written.append(manifest)
    return written
