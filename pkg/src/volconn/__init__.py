"""Volatility connectedness toolkit.

Computes total, directional, asymmetric (good/bad volatility) and
frequency-band volatility connectedness among multiple assets, from raw
intraday prices or from user-supplied daily volatility panels.
"""

from volconn.connectedness import ConnectednessTable, FevdMatrix, connectedness_table, gfevd
from volconn.estimators import (
    ConnectednessEstimator,
    FrequencyConnectednessEstimator,
    RollingSpilloverEstimator,
)
from volconn.realized import DailyMeasures, RealizedPanel, build_panel, realized_measures
from volconn.spectral import BandFevd, BandSpec, band_connectedness, band_fevd, frequency_response, make_bands
from volconn.synth import DgpSpec, population_connectedness, simulate_var
from volconn.varmodel import MaCoefficients, VarModel, fit_var, ma_coefficients, select_lag_aic

__version__ = "0.1.0"

__all__ = [
    "ConnectednessEstimator",
    "ConnectednessTable",
    "DailyMeasures",
    "DgpSpec",
    "FevdMatrix",
    "FrequencyConnectednessEstimator",
    "MaCoefficients",
    "RealizedPanel",
    "RollingSpilloverEstimator",
    "BandFevd",
    "BandSpec",
    "VarModel",
    "band_connectedness",
    "band_fevd",
    "build_panel",
    "connectedness_table",
    "fit_var",
    "frequency_response",
    "gfevd",
    "ma_coefficients",
    "make_bands",
    "population_connectedness",
    "realized_measures",
    "select_lag_aic",
    "simulate_var",
]
