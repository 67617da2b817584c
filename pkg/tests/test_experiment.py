import json
import warnings

import numpy as np
import pytest
from helpers import ACCEPTANCE_SEED, preset_run

from icvspectra import cli
from icvspectra import experiment as ex
from icvspectra.experiment import (
    PRESETS,
    ConfigError,
    ExperimentReport,
    StageError,
    emit_plot_data,
    load_report,
    run_experiment,
    simulate_panels,
    stage_rng,
    validate_config,
)
from icvspectra.spectra import SpectralDistribution


def test_approach2_rejects_square_root_window():
    with pytest.raises(ConfigError) as info:
        validate_config({"scenario": "sync_approach2", "k_rule": {"alpha": 0.5}})
    assert any(e.startswith("k_rule.alpha") and "(0.5, 1)" in e for e in info.value.errors)


def test_approach1_requires_square_root_window():
    with pytest.raises(ConfigError) as info:
        validate_config({"scenario": "async_approach1", "k_rule": {"alpha": 0.6}})
    assert any(e.startswith("k_rule.alpha") for e in info.value.errors)


def test_all_violations_are_reported():
    bad = {"scenario": "sync_approach2", "k_rule": {"alpha": 0.5, "theta": -1}, "K": 0, "sim": {"p": 0}}
    with pytest.raises(ConfigError) as info:
        validate_config(bad)
    fields = {e.split(":")[0] for e in info.value.errors}
    assert {"k_rule.alpha", "k_rule.theta", "K", "sim.p"} <= fields


def test_error_messages_describe_the_condition():
    with pytest.raises(ConfigError) as info:
        validate_config({"scenario": "sync_approach2", "k_rule": {"alpha": 0.5}})
    assert info.value.errors == [
        "k_rule.alpha: approach2 requires alpha in (0.5, 1) (window length must outgrow sqrt n)"
    ]


def test_unknown_scenario_is_a_config_error():
    with pytest.raises(ConfigError):
        validate_config({"scenario": "nope"})
    with pytest.raises(ConfigError):
        validate_config([1, 2])


def test_minimal_document_gets_defaults():
    cfg = validate_config({"scenario": "sync_approach2"})
    assert cfg.document == PRESETS["sync_approach2"]
    assert cfg.K == 200 and cfg.p == 100 and cfg.n == 23400
    assert cfg.document["k_rule"] == {"theta": 1.5, "alpha": 0.6}
    assert cfg.document["zeta_mode"] == "estimated"


def test_unknown_key_warns_only():
    with pytest.warns(UserWarning, match="colour"):
        cfg = validate_config({"scenario": "sync_approach1", "colour": "red", "sim": {"flavour": 1}})
    assert "colour" not in cfg.document and "flavour" not in cfg.document["sim"]


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_resolved_config_round_trips(name):
    cfg = validate_config(PRESETS[name])
    echo = json.loads(json.dumps(cfg.to_dict()))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert validate_config(echo) == cfg


def test_async_grid_sets_sample_size():
    assert validate_config({"scenario": "async_approach1"}).n == 5850
    assert validate_config({"scenario": "async_approach2"}).n == 23400


def test_stage_streams_are_disjoint():
    a = stage_rng(5, "paths", 0).standard_normal(4)
    assert not np.allclose(a, stage_rng(5, "noise", 0).standard_normal(4))
    assert not np.allclose(a, stage_rng(5, "paths", 1).standard_normal(4))
    np.testing.assert_array_equal(a, stage_rng(5, "paths", 0).standard_normal(4))


def test_noise_toggle_keeps_latent_paths():
    base = {"scenario": "sync_approach1", "seed": 3, "sim": {"p": 10, "n": 2000}}
    quiet = validate_config({**base, "sim": {"p": 10, "n": 2000, "noise": {"variance": 0.0}}})
    loud = validate_config(base)
    a, b = simulate_panels(quiet), simulate_panels(loud)
    np.testing.assert_array_equal(a.latent.values, b.latent.values)
    np.testing.assert_array_equal(a.observed.values, a.latent.values)
    assert not np.array_equal(b.observed.values, b.latent.values)


def test_sync_report_contents(tmp_path):
    rep = preset_run("sync_approach1", 0)
    assert {"icv", "a_m", "pav", "estimate_a_m", "estimate_icv"} <= set(rep.distributions)
    assert set(rep.distances) == {"estimate_a_m_vs_a_m", "estimate_icv_vs_icv"}
    assert all(0 <= d <= 1 for d in rep.distances.values())
    assert rep.scalars["k"] == 76 and rep.scalars["n"] == 23400
    assert rep.config["seed"] == ACCEPTANCE_SEED
    rep.write(tmp_path)
    doc = json.loads((tmp_path / "report.json").read_text())
    for fname in doc["distributions"].values():
        assert (tmp_path / fname).exists()
    back = load_report(tmp_path)
    assert back.digest() == rep.digest()


def test_async_report_records_sample_size():
    rep = preset_run("async_approach1", 0)
    assert rep.scalars["n"] == 5850
    assert "estimate_icv_vs_icv" in rep.distances


def test_mp_roundtrip_records_distance():
    rep = preset_run("mp_roundtrip", 0)
    assert 0 <= rep.distances["estimate_vs_population"] <= 1
    assert rep.scalars["y"] == 0.5
    assert set(rep.distributions) == {"population", "sample", "estimate"}


def test_plot_data_three_distributions(tmp_path):
    rep = ExperimentReport(config={"scenario": "mp_roundtrip"})
    rep.distributions = {
        "a": SpectralDistribution([1.0], [1.0]),
        "b": SpectralDistribution([0.5, 2.0], [0.5, 0.5]),
        "c": SpectralDistribution([3.0], [1.0]),
    }
    paths = emit_plot_data(rep, tmp_path)
    assert sorted(p.name for p in paths) == ["cdf_a.csv", "cdf_b.csv", "cdf_c.csv", "plot_manifest.json"]
    raw = (tmp_path / "cdf_b.csv").read_bytes()
    assert b"\r" not in raw and raw.startswith(b"x,cdf\n")
    rows = raw.decode().strip().split("\n")[1:]
    assert len(rows) == 400
    cdf = np.array([float(r.split(",")[1]) for r in rows])
    assert np.all(np.diff(cdf) >= 0) and cdf[-1] == 1.0
    manifest = json.loads((tmp_path / "plot_manifest.json").read_text())
    assert [s["name"] for s in manifest["series"]] == ["a", "b", "c"]


def test_plot_data_empty_report(tmp_path):
    paths = emit_plot_data(ExperimentReport(config={}), tmp_path)
    assert [p.name for p in paths] == ["plot_manifest.json"]
    assert json.loads(paths[0].read_text())["series"] == []


def test_rerun_gives_identical_files(tmp_path):
    cfg = validate_config({"scenario": "mp_roundtrip", "seed": 42})
    files = []
    for sub in ("one", "two"):
        rep = run_experiment(cfg, directory=tmp_path / sub)
        emit_plot_data(rep, tmp_path / sub / "plot")
        files.append({p.relative_to(tmp_path / sub): p.read_bytes()
                      for p in sorted((tmp_path / sub).rglob("*")) if p.is_file() and p.name != "timings.json"})
    assert files[0] == files[1]
    assert (tmp_path / "one" / "timings.json").exists()


def test_failing_stage_is_named(monkeypatch):
    def boom(*args, **kwargs):
        raise ArithmeticError("forced")

    monkeypatch.setattr(ex, "estimate_icv_approach2", boom)
    with pytest.raises(StageError) as info:
        run_experiment(validate_config({"scenario": "mp_roundtrip"}), write=False)
    assert info.value.stage == "invert"
    assert "forced" in str(info.value)


def test_cli_presets_list(capsys):
    assert cli.main(["presets", "list"]) == 0
    out = capsys.readouterr().out
    assert all(name in out for name in PRESETS)


def test_cli_config_errors_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"scenario": "sync_approach2", "k_rule": {"alpha": 0.5}, "K": -1}))
    assert cli.main(["estimate", "--config", str(bad)]) == 2
    err = capsys.readouterr().err
    assert "k_rule.alpha" in err and "K:" in err
    assert cli.main(["estimate", "--config", str(tmp_path / "missing.json")]) == 2
    (tmp_path / "junk.json").write_text("{not json")
    assert cli.main(["estimate", "--config", str(tmp_path / "junk.json")]) == 2
    assert cli.main(["report", "--out", str(tmp_path / "nothing")]) == 2


def test_cli_solver_failure_exit_3(tmp_path, monkeypatch, capsys):
    def boom(*args, **kwargs):
        raise ArithmeticError("forced")

    monkeypatch.setattr(ex, "estimate_icv_approach2", boom)
    assert cli.main(["mp-roundtrip", "--out", str(tmp_path)]) == 3
    assert "invert" in capsys.readouterr().err


def test_cli_roundtrip_and_report(tmp_path, capsys):
    out = tmp_path / "run"
    assert cli.main(["mp-roundtrip", "--seed", "9", "--out", str(out)]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert (out / "report.json").exists() and (out / "report.sha256").exists()
    assert summary["replicates"][0]["sha256"] == (out / "report.sha256").read_text().strip()
    assert cli.main(["report", "--out", str(out)]) == 0
    assert (out / "plot" / "plot_manifest.json").exists()
    assert len(list((out / "plot").glob("cdf_*.csv"))) == 3


def test_cli_replicates_write_summary(tmp_path, capsys):
    out = tmp_path / "reps"
    assert cli.main(["mp-roundtrip", "--seed", "9", "--replicates", "2", "--workers", "2", "--out", str(out)]) == 0
    summary = json.loads((out / "summary.json").read_text())
    hashes = [r["sha256"] for r in summary["replicates"]]
    assert len(set(hashes)) == 2
    assert "estimate_vs_population" in summary["median_distances"]


def test_cli_simulate_writes_panels(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"scenario": "sync_approach1", "sim": {"p": 5, "n": 500}}))
    assert cli.main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "sim")]) == 0
    for name in ("observations.csv", "latent.csv", "icv.csv", "dist_icv.csv", "config.json"):
        assert (tmp_path / "sim" / name).exists()
