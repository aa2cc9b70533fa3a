"""Synthetic VAR panels and population connectedness oracles."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from volconn.connectedness import ConnectednessTable, connectedness_table, gfevd
from volconn.varmodel import ma_coefficients, spectral_radius


class SimulationError(ValueError):
    pass


@dataclass(frozen=True)
class DgpSpec:
    """A stable Gaussian VAR data-generating process."""

    phi: tuple
    sigma: np.ndarray
    T: int
    burn_in: int = 500
    seed: int = 0
    intercept: np.ndarray | None = None

    def __post_init__(self):
        phi = tuple(np.asarray(m, dtype=float) for m in self.phi)
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "sigma", np.asarray(self.sigma, dtype=float))


def simulate_var(spec: DgpSpec) -> np.ndarray:
    """Draw a T x N panel from the process, discarding the burn-in."""
    phi = spec.phi
    sigma = spec.sigma
    N = sigma.shape[0]
    p = len(phi)
    rho = spectral_radius(phi)
    if rho >= 1.0:
        raise SimulationError(f"unstable process: companion spectral radius {rho:.4f} >= 1")
    try:
        chol = np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError as exc:
        raise SimulationError("sigma is not positive definite") from exc

    rng = np.random.default_rng(spec.seed)
    total = spec.T + spec.burn_in
    shocks = rng.standard_normal((total, N)) @ chol.T
    intercept = np.zeros(N) if spec.intercept is None else np.asarray(spec.intercept, dtype=float)

    y = np.zeros((total + p, N))
    for t in range(p, total + p):
        acc = intercept + shocks[t - p]
        for j in range(1, p + 1):
            acc = acc + phi[j - 1] @ y[t - j]
        y[t] = acc
    return y[p + spec.burn_in :]


def population_connectedness(phi, sigma, horizon: int) -> ConnectednessTable:
    """Connectedness evaluated at the true parameters (noise-free oracle)."""
    phi = [np.asarray(m, dtype=float) for m in phi]
    sigma = np.asarray(sigma, dtype=float)
    rho = spectral_radius(phi)
    if rho >= 1.0:
        raise SimulationError(f"unstable process: companion spectral radius {rho:.4f} >= 1")
    psi = ma_coefficients(phi, horizon)
    return connectedness_table(gfevd(psi, sigma, horizon))


def stationary_covariance(phi, sigma) -> np.ndarray:
    """Solve the discrete Lyapunov equation of the companion form."""
    from scipy.linalg import solve_discrete_lyapunov

    from volconn.varmodel import companion_matrix

    phi = [np.asarray(m, dtype=float) for m in phi]
    sigma = np.asarray(sigma, dtype=float)
    N = sigma.shape[0]
    p = len(phi)
    comp = companion_matrix(phi)
    q = np.zeros((N * p, N * p))
    q[:N, :N] = sigma
    full = solve_discrete_lyapunov(comp, q)
    return full[:N, :N]
