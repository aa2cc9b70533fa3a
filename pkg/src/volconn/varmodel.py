"""VAR(p) estimation, lag selection and moving-average coefficients."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class VarFitError(ValueError):
    """Raised when a VAR cannot be estimated on the given window."""


@dataclass(frozen=True)
class VarModel:
    """A fitted VAR(p) with intercept.

    ``sigma`` carries the degrees-of-freedom corrected residual covariance
    E'E / (T_eff - z) with z = N*p + 1 regressors per equation.
    """

    p: int
    phi: tuple[np.ndarray, ...]          # p matrices, each N x N
    intercept: np.ndarray                # N
    residuals: np.ndarray                # (T - p) x N
    sigma: np.ndarray                    # N x N
    z: int
    stable: bool
    spectral_radius: float

    @property
    def n_assets(self) -> int:
        return self.intercept.shape[0]

    def to_dict(self) -> dict:
        """JSON-friendly dump, matrices row-major."""
        return {
            "p": self.p,
            "n_assets": self.n_assets,
            "intercept": self.intercept.tolist(),
            "phi": [m.tolist() for m in self.phi],
            "sigma": self.sigma.tolist(),
            "z": self.z,
            "stable": self.stable,
            "spectral_radius": self.spectral_radius,
        }


@dataclass(frozen=True)
class MaCoefficients:
    """Moving-average coefficients Psi_0 .. Psi_{H-1}, Psi_0 = I."""

    horizon: int
    psi: np.ndarray = field(repr=False)  # H x N x N

    @property
    def n_assets(self) -> int:
        return self.psi.shape[1]


def _design_matrix(window: np.ndarray, p: int) -> tuple[np.ndarray, np.ndarray]:
    """Stack [1, y_{t-1}, ..., y_{t-p}] regressors and targets y_t."""
    T, N = window.shape
    y = window[p:]
    X = np.empty((T - p, N * p + 1))
    X[:, 0] = 1.0
    for lag in range(1, p + 1):
        X[:, 1 + (lag - 1) * N : 1 + lag * N] = window[p - lag : T - lag]
    return X, y


def _check_rank(X: np.ndarray) -> None:
    # QR diagonal pins down the first dependent column for the error message.
    r = np.linalg.qr(X, mode="r")
    diag = np.abs(np.diag(r))
    tol = max(X.shape) * np.finfo(float).eps * (diag.max() if diag.size else 1.0)
    bad = np.nonzero(diag <= tol)[0]
    if bad.size:
        col = int(bad[0])
        name = "intercept" if col == 0 else f"lag regressor column {col}"
        raise VarFitError(f"rank-deficient regressor matrix ({name} is linearly dependent)")


def companion_matrix(phi) -> np.ndarray:
    """Companion form of the lag polynomial; spectral radius < 1 means stable."""
    phi = [np.asarray(m, dtype=float) for m in phi]
    N = phi[0].shape[0]
    p = len(phi)
    comp = np.zeros((N * p, N * p))
    comp[:N] = np.hstack(phi)
    if p > 1:
        comp[N:, : N * (p - 1)] = np.eye(N * (p - 1))
    return comp


def spectral_radius(phi) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(companion_matrix(phi)))))


def fit_var(window: np.ndarray, p: int) -> VarModel:
    """Fit a VAR(p) with intercept by per-equation least squares.

    Uses a QR-based solver rather than normal equations; volatility panels
    are often near-collinear inside short rolling windows.
    """
    window = np.asarray(window, dtype=float)
    if window.ndim != 2:
        raise VarFitError("panel window must be a T x N matrix")
    T, N = window.shape
    if p < 1:
        raise VarFitError("lag order must be >= 1")
    z = N * p + 1
    if T <= z:
        raise VarFitError(f"window too short: T={T} must exceed N*p+1={z}")
    if not np.all(np.isfinite(window)):
        raise VarFitError("panel window contains non-finite values")

    X, y = _design_matrix(window, p)
    _check_rank(X)
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)  # (N*p+1) x N

    intercept = coef[0].copy()
    phi = tuple(coef[1 + (lag - 1) * N : 1 + lag * N].T.copy() for lag in range(1, p + 1))
    residuals = y - X @ coef
    T_eff = T - p
    sigma = residuals.T @ residuals / (T_eff - z)
    sigma = (sigma + sigma.T) / 2.0

    rho = spectral_radius(phi)
    return VarModel(
        p=p,
        phi=phi,
        intercept=intercept,
        residuals=residuals,
        sigma=sigma,
        z=z,
        stable=rho < 1.0,
        spectral_radius=rho,
    )


def select_lag_aic(window: np.ndarray, p_max: int) -> int:
    """Pick the lag minimizing AIC = ln det(Sigma_ml) + 2*p*N^2/T_eff.

    All candidates are fit on the common effective sample (rows p_max+1..T)
    so the criteria are comparable; ties break toward the smaller lag.
    """
    window = np.asarray(window, dtype=float)
    if p_max < 1:
        raise VarFitError("p_max must be >= 1")
    T, N = window.shape
    T_eff = T - p_max
    if T_eff <= N * p_max + 1:
        raise VarFitError(f"window too short to compare lags up to {p_max}")

    best_p, best_aic = 1, np.inf
    y = window[p_max:]
    for p in range(1, p_max + 1):
        X = np.empty((T_eff, N * p + 1))
        X[:, 0] = 1.0
        for lag in range(1, p + 1):
            X[:, 1 + (lag - 1) * N : 1 + lag * N] = window[p_max - lag : T - lag]
        _check_rank(X)
        coef, *_ = np.linalg.lstsq(X, y, rcond=None)
        resid = y - X @ coef
        sigma_ml = resid.T @ resid / T_eff
        sign, logdet = np.linalg.slogdet(sigma_ml)
        if sign <= 0:
            raise VarFitError(f"degenerate residual covariance at lag {p}")
        aic = logdet + 2.0 * p * N * N / T_eff
        if aic < best_aic:
            best_p, best_aic = p, aic
    return best_p


def ma_coefficients(model_or_phi, horizon: int) -> MaCoefficients:
    """Moving-average coefficients via Psi_h = sum_j Phi_j Psi_{h-j}, Psi_0 = I."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    phi = model_or_phi.phi if isinstance(model_or_phi, VarModel) else model_or_phi
    phi = [np.asarray(m, dtype=float) for m in phi]
    N = phi[0].shape[0]
    p = len(phi)
    psi = np.zeros((horizon, N, N))
    psi[0] = np.eye(N)
    for h in range(1, horizon):
        acc = np.zeros((N, N))
        for j in range(1, min(h, p) + 1):
            acc += phi[j - 1] @ psi[h - j]
        psi[h] = acc
    return MaCoefficients(horizon=horizon, psi=psi)
