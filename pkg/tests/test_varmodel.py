import numpy as np
import pytest

from volconn.synth import DgpSpec, simulate_var
from volconn.varmodel import (
    VarFitError,
    companion_matrix,
    fit_var,
    ma_coefficients,
    select_lag_aic,
    spectral_radius,
)


def test_fit_recovers_var1_coefficients():
    phi = np.array([[0.5, 0.0], [0.0, 0.5]])
    x = simulate_var(DgpSpec(phi=(phi,), sigma=np.eye(2), T=5000, seed=42))
    model = fit_var(x, 1)
    np.testing.assert_allclose(model.phi[0], phi, atol=0.05)
    assert model.stable
    assert model.z == 3
    assert model.residuals.shape == (4999, 2)


def test_scalar_closed_form():
    # y_t = 0.9 y_{t-1} built exactly, tiny jitter to keep the regressors full rank
    rng = np.random.default_rng(0)
    y = np.empty(400)
    y[0] = 1.0
    for t in range(1, 400):
        y[t] = 0.9 * y[t - 1]
    y += rng.normal(0, 1e-10, size=400)
    model = fit_var(y[:, None], 1)
    assert model.phi[0][0, 0] == pytest.approx(0.9, abs=1e-6)


def test_constant_panel_is_rank_deficient():
    with pytest.raises(VarFitError, match="rank"):
        fit_var(np.zeros((100, 2)), 1)


def test_too_short_window():
    with pytest.raises(VarFitError, match="too short"):
        fit_var(np.random.default_rng(0).random((5, 3)), 2)


def test_residual_orthogonality():
    x = simulate_var(DgpSpec(phi=(np.array([[0.4, 0.1], [0.2, 0.3]]),),
                             sigma=np.eye(2), T=800, seed=7))
    model = fit_var(x, 1)
    X = np.column_stack([np.ones(799), x[:-1]])
    cross = X.T @ model.residuals
    scale = np.abs(X).sum()
    assert np.max(np.abs(cross)) / scale < 1e-8


def test_sigma_df_correction():
    x = simulate_var(DgpSpec(phi=(0.3 * np.eye(2),), sigma=np.eye(2), T=500, seed=3))
    model = fit_var(x, 2)
    T_eff = 500 - 2
    raw = model.residuals.T @ model.residuals
    np.testing.assert_allclose(model.sigma, raw / (T_eff - model.z), rtol=1e-12)


def test_ma_zero_dynamics():
    psi = ma_coefficients((np.zeros((2, 2)),), 3)
    np.testing.assert_array_equal(psi.psi[0], np.eye(2))
    np.testing.assert_array_equal(psi.psi[1], 0)
    np.testing.assert_array_equal(psi.psi[2], 0)


def test_ma_var1_is_matrix_power():
    rng = np.random.default_rng(11)
    for _ in range(100):
        phi = rng.uniform(-0.5, 0.5, size=(3, 3))
        phi *= 0.9 / max(spectral_radius([phi]), 1e-6)
        psi = ma_coefficients([phi], 21)
        acc = np.eye(3)
        for h in range(1, 21):
            acc = phi @ acc
            np.testing.assert_allclose(psi.psi[h], acc, atol=1e-12)


def test_ma_var2_two_steps():
    a = np.array([[0.3, 0.1], [0.0, 0.2]])
    b = np.array([[0.1, 0.0], [0.05, 0.1]])
    psi = ma_coefficients([a, b], 3)
    np.testing.assert_allclose(psi.psi[1], a)
    np.testing.assert_allclose(psi.psi[2], a @ a + b)


def test_stability_flag_matches_divergence():
    stable_phi = 0.5 * np.eye(2)
    unstable_phi = 1.05 * np.eye(2)
    assert spectral_radius([stable_phi]) < 1 < spectral_radius([unstable_phi])
    grow = ma_coefficients([unstable_phi], 50).psi
    decay = ma_coefficients([stable_phi], 50).psi
    assert np.abs(grow[-1]).max() > np.abs(grow[0]).max()
    assert np.abs(decay[-1]).max() < 1e-10


def test_companion_shape():
    comp = companion_matrix([np.eye(2) * 0.1, np.eye(2) * 0.2])
    assert comp.shape == (4, 4)
    np.testing.assert_array_equal(comp[2:, :2], np.eye(2))


def test_aic_single_candidate():
    x = np.random.default_rng(0).random((50, 2))
    assert select_lag_aic(x, 1) == 1


def test_aic_prefers_small_lag_on_white_noise():
    wins = 0
    for seed in range(100):
        x = simulate_var(DgpSpec(phi=(np.zeros((2, 2)),), sigma=np.eye(2), T=2000, seed=seed))
        if select_lag_aic(x, 4) == 1:
            wins += 1
    assert wins > 50


def test_aic_detects_var2():
    phi1 = np.zeros((2, 2))
    phi2 = np.array([[0.5, 0.0], [0.0, 0.5]])
    hits = 0
    for seed in range(10):
        x = simulate_var(DgpSpec(phi=(phi1, phi2), sigma=np.eye(2), T=5000, seed=seed))
        if select_lag_aic(x, 4) == 2:
            hits += 1
    assert hits >= 8


def test_model_json_dump():
    x = simulate_var(DgpSpec(phi=(0.2 * np.eye(2),), sigma=np.eye(2), T=300, seed=0))
    d = fit_var(x, 1).to_dict()
    assert d["p"] == 1 and len(d["phi"]) == 1 and len(d["phi"][0]) == 2
