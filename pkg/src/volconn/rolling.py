"""Rolling-window spillover series, asymmetry measure, bootstrap test, OLS."""

from __future__ import annotations

import datetime as dt
import logging
import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from volconn.connectedness import connectedness_table, gfevd
from volconn.realized import RealizedPanel
from volconn.spectral import band_fevd, frequency_response, make_bands
from volconn.varmodel import VarFitError, fit_var, ma_coefficients, select_lag_aic

logger = logging.getLogger(__name__)


class RollingError(ValueError):
    pass


@dataclass(frozen=True)
class RollingConfig:
    window: int = 200
    horizon: int = 10
    lag: int = 2
    select_lag: bool = False      # per-window AIC up to lag_max instead of fixed lag
    lag_max: int = 5
    step: int = 1
    band_day_ranges: tuple | None = None   # e.g. ((1, 5), (5, 20), (20, 300))
    resolution: int = 100

    def __post_init__(self):
        if self.window < 2:
            raise RollingError("window must be >= 2")
        if self.step < 1:
            raise RollingError("step must be >= 1")
        if self.horizon < 1:
            raise RollingError("horizon must be >= 1")


@dataclass(frozen=True)
class SpilloverSeries:
    """Per-window totals, directional margins and band totals, in percent."""

    dates: tuple[dt.date, ...]
    assets: tuple[str, ...]
    total: np.ndarray = field(repr=False)
    from_margin: np.ndarray = field(repr=False)   # T x N
    to_margin: np.ndarray = field(repr=False)     # T x N
    band_names: tuple[str, ...] = ()
    band_totals: np.ndarray | None = field(default=None, repr=False)  # T x n_bands
    stable: np.ndarray | None = field(default=None, repr=False)
    errors: tuple[str | None, ...] = ()

    def to_frame(self) -> pd.DataFrame:
        cols = {"total": self.total}
        for i, a in enumerate(self.assets):
            cols[f"FROM_{a}"] = self.from_margin[:, i]
        for i, a in enumerate(self.assets):
            cols[f"TO_{a}"] = self.to_margin[:, i]
        for i, b in enumerate(self.band_names):
            cols[f"band_{b}"] = self.band_totals[:, i]
        if self.stable is not None:
            cols["stable"] = self.stable
        return pd.DataFrame(cols, index=pd.Index(self.dates, name="date"))


@dataclass(frozen=True)
class SamSeries:
    """Spillover asymmetry (S+ - S-) with optional bootstrap bands."""

    dates: tuple[dt.date, ...]
    sam: np.ndarray = field(repr=False)
    lower: np.ndarray | None = field(default=None, repr=False)
    upper: np.ndarray | None = field(default=None, repr=False)
    reject: np.ndarray | None = field(default=None, repr=False)

    def to_frame(self) -> pd.DataFrame:
        cols = {"sam": self.sam}
        if self.lower is not None:
            cols["sam_lo"] = self.lower
            cols["sam_hi"] = self.upper
            cols["reject"] = self.reject
        return pd.DataFrame(cols, index=pd.Index(self.dates, name="date"))


def _window_starts(T: int, cfg: RollingConfig) -> list[int]:
    if T < cfg.window:
        raise RollingError(f"panel length {T} shorter than window {cfg.window}")
    return list(range(0, T - cfg.window + 1, cfg.step))


def _window_total(values: np.ndarray, cfg: RollingConfig, bands=None):
    """Fit one window; returns (table, band_totals, stable).

    With bands configured the table is evaluated with cfg.resolution MA
    terms instead of cfg.horizon, so the band totals add up to the row's
    total exactly; the two horizons agree to truncation error on stable
    fits but only the shared resolution makes the additivity identity hold.
    """
    p = select_lag_aic(values, cfg.lag_max) if cfg.select_lag else cfg.lag
    model = fit_var(values, p)
    band_totals = None
    if bands is not None:
        psi_long = ma_coefficients(model, cfg.resolution)
        table = connectedness_table(gfevd(psi_long, model.sigma, cfg.resolution))
        grid = frequency_response(psi_long, cfg.resolution)
        bf = band_fevd(grid, model.sigma, bands)
        from volconn.spectral import band_connectedness

        band_totals = np.array([band_connectedness(b).total for b in bf])
    else:
        psi = ma_coefficients(model, cfg.horizon)
        table = connectedness_table(gfevd(psi, model.sigma, cfg.horizon))
    return table, band_totals, model.stable


def rolling_connectedness(panel: RealizedPanel, cfg: RollingConfig) -> SpilloverSeries:
    """Connectedness table per rolling window of the panel.

    A window whose VAR fit fails emits a NaN row tagged with the error and
    the run continues.
    """
    T, N = panel.shape
    starts = _window_starts(T, cfg)
    bands = make_bands(cfg.band_day_ranges, cfg.resolution) if cfg.band_day_ranges else None
    n_bands = len(bands) if bands else 0

    total = np.full(len(starts), np.nan)
    from_m = np.full((len(starts), N), np.nan)
    to_m = np.full((len(starts), N), np.nan)
    band_totals = np.full((len(starts), n_bands), np.nan) if bands else None
    stable = np.zeros(len(starts), dtype=bool)
    errors: list[str | None] = [None] * len(starts)
    dates = tuple(panel.dates[s + cfg.window - 1] for s in starts)

    for i, s in enumerate(starts):
        values = panel.values[s : s + cfg.window]
        try:
            table, bt, ok = _window_total(values, cfg, bands)
        except (VarFitError, ValueError) as exc:
            errors[i] = str(exc)
            logger.warning("window ending %s failed: %s", dates[i], exc)
            continue
        total[i] = table.total
        from_m[i] = table.from_margin
        to_m[i] = table.to_margin
        if bands:
            band_totals[i] = bt
        stable[i] = ok

    return SpilloverSeries(
        dates=dates,
        assets=panel.assets,
        total=total,
        from_margin=from_m,
        to_margin=to_m,
        band_names=tuple(b.name for b in bands) if bands else (),
        band_totals=band_totals,
        stable=stable,
        errors=tuple(errors),
    )


def _check_aligned(panel_plus: RealizedPanel, panel_minus: RealizedPanel) -> None:
    if panel_plus.dates != panel_minus.dates or panel_plus.assets != panel_minus.assets:
        raise RollingError("plus/minus panels must share identical dates and assets")


def _sam_one_window(vp: np.ndarray, vm: np.ndarray, cfg: RollingConfig) -> float:
    tp = _window_total(vp, cfg)[0].total
    tm = _window_total(vm, cfg)[0].total
    return tp - tm


def spillover_asymmetry(panel_plus: RealizedPanel, panel_minus: RealizedPanel,
                        cfg: RollingConfig) -> SamSeries:
    """S+ - S- per window, from two independent VAR systems of the same cfg."""
    _check_aligned(panel_plus, panel_minus)
    T = panel_plus.shape[0]
    starts = _window_starts(T, cfg)
    dates = tuple(panel_plus.dates[s + cfg.window - 1] for s in starts)
    sam = np.full(len(starts), np.nan)
    for i, s in enumerate(starts):
        try:
            sam[i] = _sam_one_window(
                panel_plus.values[s : s + cfg.window], panel_minus.values[s : s + cfg.window], cfg
            )
        except (VarFitError, ValueError) as exc:
            logger.warning("SAM window ending %s failed: %s", dates[i], exc)
    return SamSeries(dates=dates, sam=sam)


def circular_block_indices(rng: np.random.Generator, n: int, block_len: int) -> np.ndarray:
    """Circular block bootstrap index vector of length n."""
    n_blocks = -(-n // block_len)
    starts = rng.integers(0, n, size=n_blocks)
    idx = (starts[:, None] + np.arange(block_len)[None, :]).ravel() % n
    return idx[:n]


def bootstrap_sam_test(panel_plus: RealizedPanel, panel_minus: RealizedPanel,
                       cfg: RollingConfig, n_boot: int = 500, block_len: int | None = None,
                       level: float = 0.95, seed: int = 0) -> SamSeries:
    """Percentile bootstrap band for SAM and the symmetry test per window.

    Day-blocks are resampled jointly from the paired plus/minus rows, which
    preserves both short-range dependence and the cross-panel alignment.
    The null of symmetric transmission is rejected when 0 falls outside the
    band. Windows where more than 20% of replicates fail are flagged NaN.
    """
    _check_aligned(panel_plus, panel_minus)
    if n_boot < 100:
        raise RollingError("need at least 100 bootstrap replicates")
    if not 0 < level < 1:
        raise RollingError("level must be in (0, 1)")
    if block_len is None:
        block_len = max(1, math.ceil(cfg.window ** (1.0 / 3.0)))
    if block_len < 1:
        raise RollingError("block_len must be >= 1")

    T = panel_plus.shape[0]
    starts = _window_starts(T, cfg)
    dates = tuple(panel_plus.dates[s + cfg.window - 1] for s in starts)
    sam = np.full(len(starts), np.nan)
    lower = np.full(len(starts), np.nan)
    upper = np.full(len(starts), np.nan)
    reject = np.zeros(len(starts), dtype=bool)
    alpha = (1.0 - level) / 2.0
    rng = np.random.default_rng(seed)

    for i, s in enumerate(starts):
        vp = panel_plus.values[s : s + cfg.window]
        vm = panel_minus.values[s : s + cfg.window]
        try:
            sam[i] = _sam_one_window(vp, vm, cfg)
        except (VarFitError, ValueError) as exc:
            logger.warning("SAM window ending %s failed: %s", dates[i], exc)
            continue
        reps = np.full(n_boot, np.nan)
        for b in range(n_boot):
            idx = circular_block_indices(rng, cfg.window, block_len)
            try:
                reps[b] = _sam_one_window(vp[idx], vm[idx], cfg)
            except (VarFitError, ValueError):
                pass
        ok = np.isfinite(reps)
        if ok.sum() < 0.8 * n_boot:
            logger.warning("window ending %s: %d/%d bootstrap replicates failed",
                           dates[i], n_boot - ok.sum(), n_boot)
            continue
        lower[i] = np.quantile(reps[ok], alpha)
        upper[i] = np.quantile(reps[ok], 1.0 - alpha)
        reject[i] = not (lower[i] <= 0.0 <= upper[i])

    return SamSeries(dates=dates, sam=sam, lower=lower, upper=upper, reject=reject)


@dataclass(frozen=True)
class OlsResult:
    names: tuple[str, ...]            # intercept first
    coefficients: np.ndarray
    std_errors: np.ndarray
    r_squared: float
    nobs: int

    def to_dict(self) -> dict:
        return {
            "names": list(self.names),
            "coefficients": self.coefficients.tolist(),
            "std_errors": self.std_errors.tolist(),
            "r_squared": self.r_squared,
            "nobs": self.nobs,
        }


def ols_regress(y: np.ndarray, X: np.ndarray, names=None, standardize: bool = False) -> OlsResult:
    """OLS of y on X with intercept and classical standard errors.

    With ``standardize`` the regressors are centered and scaled to unit
    variance, which makes the intercept equal the mean of y.
    """
    y = np.asarray(y, dtype=float).ravel()
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n, k = X.shape
    if y.size != n:
        raise RollingError("y and X must have the same number of rows")
    if not (np.all(np.isfinite(y)) and np.all(np.isfinite(X))):
        raise RollingError("y and X must be free of missing cells")
    if standardize:
        sd = X.std(axis=0, ddof=1)
        if np.any(sd == 0):
            raise RollingError("cannot standardize a constant regressor column")
        X = (X - X.mean(axis=0)) / sd

    Z = np.column_stack([np.ones(n), X])
    if np.linalg.matrix_rank(Z) < k + 1:
        raise RollingError("collinear regressor matrix")
    beta, *_ = np.linalg.lstsq(Z, y, rcond=None)
    resid = y - Z @ beta
    dof = n - k - 1
    if dof <= 0:
        raise RollingError("not enough observations for OLS")
    s2 = float(resid @ resid) / dof
    cov = s2 * np.linalg.inv(Z.T @ Z)
    tss = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(resid @ resid) / tss if tss > 0 else 0.0
    if names is None:
        names = tuple(f"x{i + 1}" for i in range(k))
    return OlsResult(
        names=("intercept",) + tuple(names),
        coefficients=beta,
        std_errors=np.sqrt(np.diag(cov)),
        r_squared=r2,
        nobs=n,
    )
