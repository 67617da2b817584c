"""Command-line entry point: ``icvspectra <verb> [flags]``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .experiment import (
    PRESET_NOTES,
    PRESETS,
    ConfigError,
    ExperimentConfig,
    StageError,
    _merge,
    emit_plot_data,
    load_report,
    run_experiment,
    simulate_panels,
    validate_config,
)
from .spectra import SpectralDistribution, esd

log = logging.getLogger("icvspectra")

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 2, 3


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="icvspectra", description="Spectral estimation of integrated covariance.")
    sub = ap.add_subparsers(dest="verb", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", type=Path, help="JSON experiment document")
        p.add_argument("--preset", choices=sorted(PRESETS), help="start from a named scenario preset")
        p.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
        p.add_argument("--out", type=Path, help="output directory")
        p.add_argument("--replicates", type=int, default=1, help="independent replicate runs")
        p.add_argument("--workers", type=int, default=None, help="parallel processes for replicates")
        p.add_argument("-v", "--verbose", action="store_true")

    common(sub.add_parser("simulate", help="simulate observations and the true ICV only"))
    common(sub.add_parser("estimate", help="run the configured scenario end to end"))
    common(sub.add_parser("mp-roundtrip", help="run the Wishart round-trip scenario"))
    rep = sub.add_parser("report", help="write CDF plot tables for a finished run")
    rep.add_argument("--out", type=Path, required=True, help="run directory holding report.json")
    rep.add_argument("-v", "--verbose", action="store_true")
    presets = sub.add_parser("presets", help="scenario presets")
    presets.add_argument("action", choices=["list"])
    presets.add_argument("-v", "--verbose", action="store_true", help="print the full documents")
    return ap


def _resolve(args: argparse.Namespace, scenario: str | None = None) -> ExperimentConfig:
    raw: dict = {}
    if args.preset:
        raw = PRESETS[args.preset]
    if args.config:
        try:
            doc = json.loads(args.config.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError([f"config: cannot read {args.config}: {exc}"]) from exc
        if not isinstance(doc, dict):
            raise ConfigError(["config: document must be a JSON object"])
        raw = _merge(raw, doc)
    if scenario is not None:
        if raw.get("scenario", scenario) != scenario:
            raise ConfigError([f"scenario: this verb runs {scenario}, config names {raw['scenario']}"])
        raw = _merge(PRESETS[scenario], raw)
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.out is not None:
        raw["out"] = str(args.out)
    if args.replicates < 1:
        raise ConfigError(["--replicates: must be at least 1"])
    return validate_config(raw)


def _targets(cfg: ExperimentConfig, replicates: int) -> list[Path]:
    if replicates == 1:
        return [cfg.out]
    return [cfg.out / f"replicate_{r:03d}" for r in range(replicates)]


def _run_one(doc: dict, replicate: int, directory: str) -> dict:
    report = run_experiment(validate_config(doc), replicate, True, directory)
    return {"replicate": replicate, "directory": directory, "distances": report.distances,
            "sha256": report.digest()}


def _estimate(cfg: ExperimentConfig, replicates: int, workers: int | None) -> dict:
    dirs = [str(d) for d in _targets(cfg, replicates)]
    doc = cfg.to_dict()
    if replicates == 1:
        rows = [_run_one(doc, 0, dirs[0])]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_one, doc, r, dirs[r]) for r in range(replicates)]
            rows = [f.result() for f in futures]
    summary = {"scenario": cfg.scenario, "seed": cfg.seed, "replicates": rows}
    if replicates > 1:
        names = sorted(rows[0]["distances"])
        summary["median_distances"] = {k: float(np.median([r["distances"][k] for r in rows])) for k in names}
        cfg.out.mkdir(parents=True, exist_ok=True)
        (cfg.out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return summary


def _simulate(cfg: ExperimentConfig, replicates: int) -> dict:
    rows = []
    for r, target in enumerate(_targets(cfg, replicates)):
        target.mkdir(parents=True, exist_ok=True)
        if cfg.scenario == "mp_roundtrip":
            mp = cfg.document["mp"]
            pop = SpectralDistribution(mp["population"]["points"], mp["population"]["weights"])
            pop.to_csv(target / "dist_population.csv")
            rows.append({"replicate": r, "directory": str(target)})
            continue
        try:
            sim = simulate_panels(cfg, r)
        except Exception as exc:  # surfaced with the stage name like run_experiment does
            raise StageError("simulate", exc) from exc
        sim.observed.to_csv(target / "observations.csv")
        sim.latent.to_csv(target / "latent.csv")
        sim.icv.to_csv(target / "icv.csv")
        esd(sim.icv).to_csv(target / "dist_icv.csv")
        (target / "config.json").write_text(json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n")
        rows.append({"replicate": r, "directory": str(target), "zeta": sim.vol.zeta})
    return {"scenario": cfg.scenario, "replicates": rows}


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    warnings.simplefilter("default")
    try:
        if args.verb == "presets":
            for name in sorted(PRESETS):
                print(f"{name}: {PRESET_NOTES[name]}")
                if args.verbose:
                    print(json.dumps(PRESETS[name], indent=2, sort_keys=True))
            return EXIT_OK
        if args.verb == "report":
            report = load_report(args.out)
            for path in emit_plot_data(report, args.out / "plot"):
                print(path)
            return EXIT_OK
        cfg = _resolve(args, "mp_roundtrip" if args.verb == "mp-roundtrip" else None)
        if args.verb == "simulate":
            out = _simulate(cfg, args.replicates)
        else:
            out = _estimate(cfg, args.replicates, args.workers)
        print(json.dumps(out, indent=2, sort_keys=True))
        return EXIT_OK
    except ConfigError as exc:
        for msg in exc.errors:
            print(f"config error: {msg}", file=sys.stderr)
        return EXIT_CONFIG
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
