import numpy as np
import pytest

from volconn.synth import (
    DgpSpec,
    SimulationError,
    population_connectedness,
    simulate_var,
    stationary_covariance,
)


def test_white_noise_covariance():
    spec = DgpSpec(phi=(np.zeros((2, 2)),), sigma=np.eye(2), T=10000, seed=1)
    x = simulate_var(spec)
    np.testing.assert_allclose(np.cov(x.T), np.eye(2), atol=0.05)


def test_seed_determinism():
    spec = DgpSpec(phi=(0.3 * np.eye(2),), sigma=np.eye(2), T=500, seed=9)
    np.testing.assert_array_equal(simulate_var(spec), simulate_var(spec))


def test_lag1_autocovariance_matches_lyapunov():
    phi = np.array([[0.5, 0.2], [0.0, 0.5]])
    spec = DgpSpec(phi=(phi,), sigma=np.eye(2), T=5000, seed=2)
    x = simulate_var(spec)
    gamma0 = stationary_covariance([phi], np.eye(2))
    # lag-1 autocovariance of a VAR(1) is phi @ gamma0
    expected = phi @ gamma0
    xc = x - x.mean(axis=0)
    sample = xc[1:].T @ xc[:-1] / (len(x) - 1)
    np.testing.assert_allclose(sample, expected, atol=0.05)
    np.testing.assert_allclose(np.cov(x.T), gamma0, atol=0.05)


def test_unstable_spec_rejected():
    with pytest.raises(SimulationError, match="unstable"):
        simulate_var(DgpSpec(phi=(1.01 * np.eye(2),), sigma=np.eye(2), T=100, seed=0))
    with pytest.raises(SimulationError, match="unstable"):
        population_connectedness((1.01 * np.eye(2),), np.eye(2), 10)


def test_non_psd_sigma_rejected():
    with pytest.raises(SimulationError, match="positive definite"):
        simulate_var(DgpSpec(phi=(np.zeros((2, 2)),), sigma=np.array([[1.0, 2.0], [2.0, 1.0]]), T=100, seed=0))


def test_population_white_noise_zero_total():
    t = population_connectedness((np.zeros((2, 2)),), np.eye(2), 10)
    assert t.total == 0.0


def test_population_static_correlation_closed_form():
    t = population_connectedness((np.zeros((2, 2)),), np.array([[1, 0.5], [0.5, 1]]), 1)
    assert t.total == pytest.approx(20.0, abs=1e-10)


def test_population_perfect_dependence_limit():
    rho = 0.999999
    t = population_connectedness((np.zeros((2, 2)),), np.array([[1, rho], [rho, 1]]), 1)
    assert t.total == pytest.approx(50.0, abs=0.01)


def test_estimator_consistency():
    from volconn.connectedness import connectedness_table, gfevd
    from volconn.varmodel import fit_var, ma_coefficients

    phi = np.array([[0.5, 0.2], [0.1, 0.4]])
    sigma = np.array([[1.0, 0.3], [0.3, 1.0]])
    pop = population_connectedness((phi,), sigma, 10).total
    gaps = []
    for seed in range(5):
        x = simulate_var(DgpSpec(phi=(phi,), sigma=sigma, T=5000, seed=seed))
        model = fit_var(x, 1)
        est = connectedness_table(gfevd(ma_coefficients(model, 10), model.sigma, 10)).total
        gaps.append(abs(est - pop))
    assert np.mean(gaps) < 1.0
