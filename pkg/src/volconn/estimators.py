"""Scikit-learn style estimators wrapping the connectedness pipeline.

These let the measures compose with sklearn tooling (get_params/set_params,
cloning, pipelines); the functional modules remain the primitive API.
"""

from __future__ import annotations

import datetime as dt

import numpy as np
import pandas as pd
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from volconn.connectedness import connectedness_table, gfevd
from volconn.realized import RealizedPanel
from volconn.rolling import RollingConfig, rolling_connectedness
from volconn.spectral import band_connectedness, band_fevd, frequency_response, make_bands
from volconn.varmodel import fit_var, ma_coefficients, select_lag_aic


def _as_matrix(X):
    labels = None
    if isinstance(X, pd.DataFrame):
        labels = tuple(str(c) for c in X.columns)
        X = X.to_numpy()
    elif isinstance(X, RealizedPanel):
        labels = X.assets
        X = X.values
    X = check_array(X, ensure_min_samples=2, ensure_min_features=2)
    return X, labels


class ConnectednessEstimator(BaseEstimator):
    """Total and directional volatility connectedness of a panel.

    Fit on a T x N panel of daily volatility measures; exposes the fitted
    VAR, the normalized generalized FEVD and the connectedness table.
    """

    def __init__(self, horizon=10, lag=2, select_lag=False, lag_max=5):
        self.horizon = horizon
        self.lag = lag
        self.select_lag = select_lag
        self.lag_max = lag_max

    def fit(self, X, y=None):
        X, labels = _as_matrix(X)
        p = select_lag_aic(X, self.lag_max) if self.select_lag else self.lag
        self.model_ = fit_var(X, p)
        psi = ma_coefficients(self.model_, self.horizon)
        self.fevd_ = gfevd(psi, self.model_.sigma, self.horizon, assets=labels)
        self.table_ = connectedness_table(self.fevd_)
        self.total_ = self.table_.total
        return self

    def transform(self, X=None):
        """Normalized FEVD of the fitted panel (N x N row-share matrix)."""
        check_is_fitted(self, "fevd_")
        return self.fevd_.normalized


class FrequencyConnectednessEstimator(BaseEstimator):
    """Connectedness split over day-horizon frequency bands."""

    def __init__(self, lag=2, day_ranges=((1, 5), (5, 20), (20, 300)), resolution=100):
        self.lag = lag
        self.day_ranges = day_ranges
        self.resolution = resolution

    def fit(self, X, y=None):
        X, labels = _as_matrix(X)
        self.model_ = fit_var(X, self.lag)
        bands = make_bands(self.day_ranges, self.resolution)
        psi = ma_coefficients(self.model_, self.resolution)
        grid = frequency_response(psi, self.resolution)
        self.band_fevds_ = band_fevd(grid, self.model_.sigma, bands, assets=labels)
        self.band_tables_ = {b.band.name: band_connectedness(b) for b in self.band_fevds_}
        self.band_totals_ = {name: t.total for name, t in self.band_tables_.items()}
        self.total_ = float(sum(self.band_totals_.values()))
        return self


class RollingSpilloverEstimator(BaseEstimator):
    """Rolling-window spillover series over a panel."""

    def __init__(self, window=200, horizon=10, lag=2, select_lag=False, lag_max=5,
                 step=1, day_ranges=None, resolution=100):
        self.window = window
        self.horizon = horizon
        self.lag = lag
        self.select_lag = select_lag
        self.lag_max = lag_max
        self.step = step
        self.day_ranges = day_ranges
        self.resolution = resolution

    def _config(self) -> RollingConfig:
        return RollingConfig(
            window=self.window,
            horizon=self.horizon,
            lag=self.lag,
            select_lag=self.select_lag,
            lag_max=self.lag_max,
            step=self.step,
            band_day_ranges=tuple(tuple(r) for r in self.day_ranges) if self.day_ranges else None,
            resolution=self.resolution,
        )

    def fit(self, X, y=None):
        if isinstance(X, RealizedPanel):
            panel = X
        else:
            if isinstance(X, pd.DataFrame):
                labels = tuple(str(c) for c in X.columns)
                dates = tuple(
                    d.date() if hasattr(d, "date") else dt.date.fromisoformat(str(d)) for d in X.index
                )
                values = check_array(X.to_numpy(), ensure_min_samples=2, ensure_min_features=2)
            else:
                values = check_array(np.asarray(X), ensure_min_samples=2, ensure_min_features=2)
                labels = tuple(f"A{i + 1}" for i in range(values.shape[1]))
                dates = tuple(dt.date(2000, 1, 1) + dt.timedelta(days=i) for i in range(values.shape[0]))
            panel = RealizedPanel(dates=dates, assets=labels, values=values)
        self.series_ = rolling_connectedness(panel, self._config())
        return self

    def transform(self, X=None) -> pd.DataFrame:
        check_is_fitted(self, "series_")
        return self.series_.to_frame()
