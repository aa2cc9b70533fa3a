import numpy as np
import pytest

from volconn.connectedness import (
    ConnectednessError,
    connectedness_table,
    gfevd,
)
from volconn.varmodel import MaCoefficients, ma_coefficients, spectral_radius


def random_stable_system(rng, n, p=1):
    phi = [rng.uniform(-0.4, 0.4, size=(n, n)) for _ in range(p)]
    rho = spectral_radius(phi)
    if rho >= 0.95:
        phi = [m * 0.9 / rho for m in phi]
    a = rng.uniform(-1, 1, size=(n, n))
    sigma = a @ a.T + n * np.eye(n)
    return phi, sigma


def brute_force_gfevd(phi, sigma, horizon):
    """Literal accumulation of the forecast-error terms, loop by loop."""
    n = sigma.shape[0]
    psi = ma_coefficients(phi, horizon).psi
    theta = np.zeros((n, n))
    for j in range(n):
        ej = np.zeros(n)
        ej[j] = 1.0
        denom = 0.0
        for h in range(horizon):
            denom += ej @ psi[h] @ sigma @ psi[h].T @ ej
        for k in range(n):
            ek = np.zeros(n)
            ek[k] = 1.0
            num = 0.0
            for h in range(horizon):
                num += (ej @ psi[h] @ sigma @ ek) ** 2
            theta[j, k] = num / (sigma[k, k] * denom)
    return theta


def test_identity_case():
    psi = MaCoefficients(horizon=1, psi=np.eye(2)[None])
    f = gfevd(psi, np.eye(2), 1)
    np.testing.assert_allclose(f.theta, np.eye(2))
    np.testing.assert_allclose(f.normalized, np.eye(2))


def test_static_correlated_closed_form():
    rho = 0.5
    psi = MaCoefficients(horizon=1, psi=np.eye(2)[None])
    f = gfevd(psi, np.array([[1, rho], [rho, 1]]), 1)
    expected = rho**2 / (1 + rho**2)
    assert f.normalized[0, 1] == pytest.approx(expected, abs=1e-12)
    table = connectedness_table(f)
    assert table.total == pytest.approx(20.0, abs=1e-10)


def test_row_sums_and_grand_sum():
    rng = np.random.default_rng(5)
    for _ in range(50):
        n = rng.integers(2, 7)
        p = int(rng.integers(1, 3))
        phi, sigma = random_stable_system(rng, n, p)
        psi = ma_coefficients(phi, 10)
        f = gfevd(psi, sigma, 10)
        np.testing.assert_allclose(f.normalized.sum(axis=1), 1.0, atol=1e-12)
        assert f.normalized.sum() == pytest.approx(n, abs=1e-10)
        assert np.all(f.theta >= 0)


def test_margins_sum_to_total():
    rng = np.random.default_rng(6)
    phi, sigma = random_stable_system(rng, 4)
    table = connectedness_table(gfevd(ma_coefficients(phi, 10), sigma, 10))
    assert table.from_margin.sum() == pytest.approx(table.total, abs=1e-10)
    assert table.to_margin.sum() == pytest.approx(table.total, abs=1e-10)
    assert 0 <= table.total <= 100 * 3 / 4


def test_permutation_equivariance():
    rng = np.random.default_rng(7)
    phi, sigma = random_stable_system(rng, 4)
    psi = ma_coefficients(phi, 10)
    f = gfevd(psi, sigma, 10)
    perm = rng.permutation(4)
    P = np.eye(4)[perm]
    phi_p = [P @ m @ P.T for m in phi]
    f_p = gfevd(ma_coefficients(phi_p, 10), P @ sigma @ P.T, 10)
    np.testing.assert_allclose(f_p.normalized, P @ f.normalized @ P.T, atol=1e-10)
    t, t_p = connectedness_table(f), connectedness_table(f_p)
    assert t_p.total == pytest.approx(t.total, abs=1e-10)


def test_diagonal_system_zero_total():
    phi = [np.diag([0.5, 0.3, 0.2])]
    sigma = np.diag([1.0, 2.0, 0.5])
    table = connectedness_table(gfevd(ma_coefficients(phi, 10), sigma, 10))
    assert table.total == 0.0
    np.testing.assert_array_equal(table.from_margin, 0.0)


def test_brute_force_oracle():
    rng = np.random.default_rng(8)
    for n in (2, 3):
        for horizon in (1, 3, 5):
            phi, sigma = random_stable_system(rng, n, p=1)
            psi = ma_coefficients(phi, horizon)
            fast = gfevd(psi, sigma, horizon).theta
            slow = brute_force_gfevd(phi, sigma, horizon)
            np.testing.assert_allclose(fast, slow, atol=1e-10)


def test_bad_sigma_diagonal():
    psi = MaCoefficients(horizon=1, psi=np.eye(2)[None])
    with pytest.raises(ConnectednessError, match="diagonal"):
        gfevd(psi, np.array([[1.0, 0.0], [0.0, -1.0]]), 1)


def test_horizon_exceeds_psi():
    psi = MaCoefficients(horizon=2, psi=np.zeros((2, 2, 2)))
    with pytest.raises(ConnectednessError, match="MA terms"):
        gfevd(psi, np.eye(2), 5)


def test_table_delimited_layout():
    rng = np.random.default_rng(9)
    phi, sigma = random_stable_system(rng, 3)
    table = connectedness_table(
        gfevd(ma_coefficients(phi, 10), sigma, 10, assets=("X", "Y", "Z"))
    )
    text = table.to_delimited()
    lines = text.strip().splitlines()
    assert lines[0] == ",X,Y,Z,FROM"
    assert len(lines) == 5
    assert lines[-1].startswith("TO,")
    corner = float(lines[-1].split(",")[-1])
    assert corner == pytest.approx(table.total, abs=1e-6)


def test_table_json_round_trip():
    import json

    rng = np.random.default_rng(10)
    phi, sigma = random_stable_system(rng, 2)
    table = connectedness_table(gfevd(ma_coefficients(phi, 5), sigma, 5))
    data = json.loads(table.to_json())
    assert data["total"] == pytest.approx(table.total)
    assert len(data["pairwise"]) == 2
