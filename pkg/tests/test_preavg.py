import numpy as np
import pytest
from helpers import kernel_form
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from icvspectra.preavg import (
    DegenerateInputError,
    PavWindows,
    b_matrix,
    effective_noise_variance,
    estimate_noise_variances,
    estimate_zeta,
    homogenize_noise,
    pav_matrix,
    preaveraged_returns,
    signal_pav_matrix,
    true_icv,
    window_length,
)
from icvspectra.simkit import (
    NoiseModel,
    SyncObservations,
    VolConfig,
    VolPath,
    add_noise,
    draw_price_shocks,
    leverage_increments,
    make_factor_loading,
    simulate_latent_paths,
    simulate_vol_path,
)

N = 23400


def sync_panel(seed, p=100, n=N, noise=2e-4, normalise_trace=False):
    rng = np.random.default_rng(seed)
    ld = make_factor_loading(p, rng)
    if normalise_trace:
        d = ld.eigenvalues * p / ld.eigenvalues.sum()
        ld = make_factor_loading(p, rng, eigenvalues=d)
    shocks = draw_price_shocks(n, p, rng)
    vol = simulate_vol_path(VolConfig(), n, leverage_increments(shocks))
    x = simulate_latent_paths(vol, ld, n, shocks=shocks)
    y = add_noise(x, NoiseModel.iid(noise, p), rng)
    return x, y, vol, ld


def test_window_rule():
    assert window_length(N, 0.5, 0.5) == 76
    assert window_length(N, 1.5, 0.6) == 627
    assert N // (2 * 76) == 153 and N // (2 * 627) == 18


def test_constant_path_gives_zero_returns():
    w = preaveraged_returns(SyncObservations(np.full((3, 101), 4.2)), 5)
    np.testing.assert_array_equal(w.returns, 0.0)


def test_k_one_is_plain_differences():
    v = np.random.default_rng(0).standard_normal((2, 21))
    w = preaveraged_returns(v, 1)
    np.testing.assert_array_equal(w.returns, v[:, 1:20:2] - v[:, 0:20:2])


@settings(max_examples=50)
@given(
    arrays(np.float64, (2, 61), elements=st.floats(-100, 100)),
    st.integers(1, 10),
)
def test_block_average_equals_triangular_kernel(v, k):
    w = preaveraged_returns(v, k)
    for i in range(1, w.m + 1):
        np.testing.assert_allclose(w.returns[:, i - 1], kernel_form(v, k, i), rtol=0, atol=1e-12 * max(1, np.abs(v).max()))


def test_random_path_k5_kernel_identity():
    v = np.cumsum(np.random.default_rng(1).standard_normal((4, 201)), axis=1)
    w = preaveraged_returns(v, 5)
    expected = np.stack([kernel_form(v, 5, i) for i in range(1, w.m + 1)], axis=1)
    np.testing.assert_allclose(w.returns, expected, rtol=0, atol=1e-12)


def test_window_too_long_rejected():
    with pytest.raises(ValueError):
        preaveraged_returns(np.zeros((1, 10)), 6)


def test_pav_zero_and_scalar():
    assert np.all(pav_matrix(PavWindows(2, 3, np.zeros((4, 3)))).entries == 0)
    r = np.array([[0.1, -0.2, 0.3]])
    assert pav_matrix(PavWindows(1, 3, r)).entries[0, 0] == pytest.approx(3 * np.sum(r**2), rel=1e-15)


def test_noiseless_scalar_pav_is_near_icv():
    ld = make_factor_loading(1, None, eigenvalues=[1.0], rotate=False)
    vol = VolPath.from_values(np.full(N + 1, 0.06))
    vals = []
    for seed in range(20):
        x = simulate_latent_paths(vol, ld, N, np.random.default_rng(seed))
        vals.append(pav_matrix(preaveraged_returns(x, 76)).entries[0, 0])
    assert np.mean(vals) == pytest.approx(0.0036, rel=0.15)


def test_zero_noise_pav_equals_signal_pav():
    x, _, _, _ = sync_panel(0, p=5, n=2000)
    y = add_noise(x, NoiseModel.iid(0.0, 5), np.random.default_rng(1))
    assert np.array_equal(pav_matrix(preaveraged_returns(y, 20)).entries, signal_pav_matrix(x, 20).entries)


def test_sigma_tilde_trace_and_scalar_case():
    rng = np.random.default_rng(2)
    for p, m in [(3, 10), (50, 18), (100, 7)]:
        w = PavWindows(4, m, rng.standard_normal((p, m)) * rng.uniform(0.01, 10, size=m))
        _, st_, _ = b_matrix(w)
        assert np.trace(st_.entries) == pytest.approx(p, abs=1e-10)
    r = np.array([[0.5, -1.0, 2.0]])
    B, st_, zh = b_matrix(PavWindows(1, 3, r))
    assert st_.entries[0, 0] == pytest.approx(1.0, abs=1e-15)
    assert B.entries[0, 0] == pytest.approx(3 * np.sum(r**2), rel=1e-15)
    assert zh == pytest.approx(3 * np.sum(r**2), rel=1e-15)


def test_b_matrix_rejects_zero_return():
    r = np.array([[1.0, 0.0], [2.0, 0.0]])
    with pytest.raises(DegenerateInputError, match=r"\[1\]"):
        b_matrix(PavWindows(1, 2, r))


def test_matrices_are_psd_and_scale_equivariant():
    x, y, _, _ = sync_panel(3, p=20, n=4000)
    c = 3.7
    w, wc = preaveraged_returns(y, 40), preaveraged_returns(SyncObservations(c * y.values), 40)
    B, S, _ = b_matrix(w)
    Bc, Sc, _ = b_matrix(wc)
    for mat in (pav_matrix(w), signal_pav_matrix(x, 40), B, S):
        assert np.linalg.eigvalsh(mat.entries).min() >= -1e-8
    np.testing.assert_allclose(pav_matrix(wc).entries, c**2 * pav_matrix(w).entries, rtol=1e-12)
    np.testing.assert_allclose(Bc.entries, c**2 * B.entries, rtol=1e-12)
    np.testing.assert_allclose(Sc.entries, S.entries, rtol=1e-12, atol=1e-14)
    xc = SyncObservations(c * x.values)
    np.testing.assert_allclose(signal_pav_matrix(xc, 40).entries, c**2 * signal_pav_matrix(x, 40).entries, rtol=1e-12)


def test_zeta_hat_large_window_matches_zeta_under_unit_trace_convention():
    ratios = []
    for seed in range(20):
        _, y, vol, _ = sync_panel(100 + seed, normalise_trace=True)
        _, _, zh = b_matrix(y, 627)
        ratios.append(zh / vol.zeta)
    assert abs(np.mean(ratios) - 1) <= 0.10


def test_zeta_hat_large_window_targets_trace_of_icv():
    ratios = []
    for seed in range(20):
        _, y, vol, ld = sync_panel(200 + seed)
        _, _, zh = b_matrix(y, 627)
        ratios.append(zh / (np.trace(true_icv(vol, ld).entries) / 100))
    assert abs(np.mean(ratios) - 1) <= 0.10


def test_noise_variance_estimates():
    y = add_noise(SyncObservations(np.zeros((4, N + 1))), NoiseModel.iid(2e-4, 4), np.random.default_rng(5))
    np.testing.assert_allclose(estimate_noise_variances(y), 2e-4, rtol=0.05)
    ld = make_factor_loading(4, None, eigenvalues=np.ones(4), rotate=False)
    x = simulate_latent_paths(VolPath.from_values(np.full(N + 1, 0.06)), ld, N, np.random.default_rng(6))
    v = estimate_noise_variances(x)
    np.testing.assert_allclose(v, 0.0036 / (2 * N), rtol=0.05)
    assert v.max() < 1e-3 * 2e-4
    assert np.all(estimate_noise_variances(SyncObservations(np.full((2, 50), 1.5))) == 0.0)


def test_homogenize_noise():
    x = SyncObservations(np.random.default_rng(0).standard_normal((2, 11)))
    out, d2 = homogenize_noise(x, [1e-4, 1e-4], np.random.default_rng(1))
    assert d2 == 1e-4 and np.array_equal(out.values, x.values)

    base = add_noise(SyncObservations(np.zeros((2, N + 1))), NoiseModel.iid(np.array([4e-4, 1e-4])),
                     np.random.default_rng(2))
    out, d2 = homogenize_noise(base, [4e-4, 1e-4], np.random.default_rng(3))
    assert d2 == 4e-4
    added = out.values - base.values
    assert np.all(added[0] == 0.0)
    assert added[1].var() == pytest.approx(3e-4, rel=0.05)
    np.testing.assert_allclose(estimate_noise_variances(out), 4e-4, rtol=0.05)


def test_true_icv_examples():
    ld = make_factor_loading(6, np.random.default_rng(0))
    vol = VolPath.from_values(np.ones(11))
    np.testing.assert_allclose(true_icv(vol, ld).entries, ld.sigma_breve, rtol=1e-15)
    one = make_factor_loading(1, None, eigenvalues=[1.0], rotate=False)
    assert true_icv(VolPath.from_values(np.full(101, 0.06)), one).entries[0, 0] == pytest.approx(0.0036, rel=1e-12)
    vol = simulate_vol_path(VolConfig(), 500, np.random.default_rng(1).standard_normal(500) / np.sqrt(500))
    ev = np.linalg.eigvalsh(true_icv(vol, ld).entries)
    np.testing.assert_allclose(ev, vol.zeta * np.linalg.eigvalsh(ld.sigma_breve), rtol=0, atol=1e-12)
    assert true_icv(vol, ld).label == "ICV"


def test_effective_noise_variance_limit():
    w = PavWindows(76, 153, np.zeros((1, 153)), 0.5, 0.5)
    assert effective_noise_variance(w, 2e-4) == pytest.approx(3 * 2e-4 / 0.25, rel=0.01)


def test_zeta_estimate_bias_correction():
    x, y, vol, ld = sync_panel(11)
    w = preaveraged_returns(y, 76)
    target = np.trace(true_icv(vol, ld).entries) / 100
    corrected = estimate_zeta(w, estimate_noise_variances(y))
    raw = estimate_zeta(w)
    assert abs(corrected / target - 1) < abs(raw / target - 1)
    assert corrected == pytest.approx(target, rel=0.1)
