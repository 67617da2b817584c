import numpy as np
import pytest
from helpers import median_distance, pav_pair

from icvspectra.invert import (
    GammaStarProfile,
    SolverError,
    Step1Config,
    Step2Error,
    estimate_Fa,
    estimate_icv_approach1,
    estimate_icv_approach2,
)
from icvspectra.invert import estimators
from icvspectra.spectra import ComplexGrid, SpectralDistribution, esd, kolmogorov_distance, point_mass


def wishart_esd(seed, p, m, scale=1.0):
    z = np.random.default_rng(seed).standard_normal((p, m))
    return esd(scale * z @ z.T / m)


def test_zero_noise_point_mass_concentrates_near_one():
    res = estimate_Fa(point_mass(1.0), Step1Config(y=0.5, sigma_eff2=0.0))
    est = res.estimate
    truth = point_mass(1.0)
    xs = np.concatenate([np.linspace(-0.5, 0.9, 200), np.linspace(1.1, 2.0, 200)])
    assert np.max(np.abs(est.cdf(xs) - truth.cdf(xs))) <= 0.05
    assert est.weights.sum() == pytest.approx(1.0, abs=1e-9)


def test_grid_size_changes_objective_by_less_than_factor_two():
    F_pav, _, w, _, _ = pav_pair(0)
    cfg = Step1Config(y=w.y, sigma_eff2=6 * w.m * 2e-4 / w.k)
    obj = [estimate_Fa(F_pav, cfg, K=K, smoothing=None).objective for K in (50, 100)]
    assert max(obj) <= 2 * min(obj)


def test_minimax_only_estimate_is_a_distribution():
    F_pav, _, w, vol, _ = pav_pair(1)
    cfg = Step1Config(y=w.y, sigma_eff2=6 * w.m * 2e-4 / w.k)
    res = estimate_icv_approach1(F_pav, cfg, None, 100, GammaStarProfile.from_path(vol), vol.zeta, smoothing=None)
    assert res.estimate.weights.sum() == pytest.approx(1.0, abs=1e-9)
    assert np.all(res.estimate.weights >= 0)
    assert res.objective >= 0


def test_estimates_scale_with_the_spectrum():
    F = wishart_esd(0, 40, 200)
    a = estimate_icv_approach2(F, 0.2, K=60)
    b = estimate_icv_approach2(F.scaled(1e-4), 0.2, K=60)
    np.testing.assert_allclose(b.estimate.points, a.estimate.points * 1e-4, rtol=1e-12)
    np.testing.assert_allclose(b.estimate.weights, a.estimate.weights, atol=1e-9)


def test_constant_vol_identity_loading_recovers_point_mass():
    # zero noise, constant gamma, identity loading: A_m is a Wishart matrix scaled by zeta
    zeta, p, m = 0.3, 20, 400
    F = wishart_esd(7, p, m, zeta)
    res = estimate_icv_approach1(F, Step1Config(y=p / m, sigma_eff2=0.0), None, 100,
                                 GammaStarProfile.constant(zeta), zeta)
    assert kolmogorov_distance(res.estimate, point_mass(zeta)) <= 0.1


def test_small_y_approach2_recovers_point_mass():
    zeta, p, m = 0.3, 20, 2000
    F = wishart_esd(8, p, m, zeta)
    res = estimate_icv_approach2(F, p / m)
    assert kolmogorov_distance(res.estimate, point_mass(zeta)) <= 0.1


def test_sync_approach1_signal_spectrum():
    med, reports = median_distance("sync_approach1", "estimate_a_m_vs_a_m")
    assert med <= 0.15
    for rep in reports:
        assert rep.distributions["estimate_a_m"].weights.sum() == pytest.approx(1.0, abs=1e-9)


def test_sync_approach1_icv_oracle_zeta():
    med, _ = median_distance("sync_approach1", "estimate_icv_vs_icv")
    assert med <= 0.15


def test_sync_approach1_icv_estimated_zeta():
    med, _ = median_distance("sync_approach1", "estimate_icv_vs_icv", overrides='{"zeta_mode": "estimated"}')
    assert med <= 0.20


def test_sync_approach2_icv():
    med, reports = median_distance("sync_approach2", "estimate_icv_vs_icv")
    assert reports[0].scalars["k"] == 627 and reports[0].scalars["m"] == 18
    assert reports[0].scalars["y"] == pytest.approx(100 / 18)
    assert med <= 0.20


def _flaky_step2(fail_every):
    calls = {"n": 0}
    real = estimators.solve_step2_M

    def fake(mA, z, y, profile):
        calls["n"] += 1
        if calls["n"] % fail_every == 0:
            raise Step2Error("forced", {"z": z})
        return real(mA, z, y, profile)

    return fake


def test_step2_failures_over_threshold_abort(monkeypatch):
    F = wishart_esd(3, 20, 100, 0.5)
    cfg = Step1Config(y=0.2, sigma_eff2=0.0)
    monkeypatch.setattr(estimators, "solve_step2_M", _flaky_step2(4))  # 25% of points
    with pytest.raises(SolverError) as info:
        estimate_icv_approach1(F, cfg, None, 50, GammaStarProfile.constant(0.5), 0.5)
    assert info.value.diagnostics["step2_failures"] == 25
    assert len(info.value.diagnostics["step2_attempts"]) == 25


def test_step2_failures_under_threshold_are_skipped(monkeypatch):
    F = wishart_esd(3, 20, 100, 0.5)
    cfg = Step1Config(y=0.2, sigma_eff2=0.0)
    monkeypatch.setattr(estimators, "solve_step2_M", _flaky_step2(10))  # 10% of points
    res = estimate_icv_approach1(F, cfg, None, 50, GammaStarProfile.constant(0.5), 0.5)
    assert res.diagnostics["step2_failures"] == 10
    assert res.diagnostics["usable_points"] == 90
    assert np.isnan(res.residuals).sum() == 10


def test_zeta_must_be_positive():
    with pytest.raises(ValueError):
        estimate_icv_approach1(point_mass(1.0), Step1Config(y=1.0, sigma_eff2=0.0), None, 10,
                               GammaStarProfile.constant(1.0), 0.0)
    with pytest.raises(ValueError):
        estimate_icv_approach2(SpectralDistribution([0.0], [1.0]), 0.5)


def test_custom_grid_is_respected():
    grid = ComplexGrid.lattice(n_re=3, n_im=4)
    res = estimate_icv_approach2(wishart_esd(1, 10, 50), 0.2, grid, K=20)
    assert res.z.size == 12
    assert len(res.to_dict()["per_z"]) == 12
