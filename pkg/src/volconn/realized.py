"""Daily realized variance and semivariances, and the aligned panel."""

from __future__ import annotations

import datetime as dt
import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)


class PanelError(ValueError):
    pass


@dataclass(frozen=True)
class DailyMeasures:
    """One session's realized variance and its signed decomposition.

    rv is defined as rs_minus + rs_plus so the decomposition identity is
    exact in floating point, not just up to rounding.
    """

    session_date: dt.date
    rv: float
    rs_minus: float
    rs_plus: float
    n_returns: int


def realized_measures(returns, session_date: dt.date | None = None) -> DailyMeasures:
    """Sum squared intraday returns, split by sign.

    Squared negative returns go to rs_minus, squares of returns >= 0
    (zeros included) to rs_plus.
    """
    r = np.asarray(returns, dtype=float)
    if r.ndim != 1 or r.size == 0:
        raise PanelError("returns must be a non-empty 1-D vector")
    sq = r * r
    neg = r < 0
    rs_minus = float(np.sum(sq[neg]))
    rs_plus = float(np.sum(sq[~neg]))
    return DailyMeasures(
        session_date=session_date,
        rv=rs_minus + rs_plus,
        rs_minus=rs_minus,
        rs_plus=rs_plus,
        n_returns=int(r.size),
    )


@dataclass(frozen=True)
class RealizedPanel:
    """Date-aligned T x N matrix of one realized measure across assets."""

    dates: tuple[dt.date, ...]
    assets: tuple[str, ...]
    values: np.ndarray = field(repr=False)
    transform: str = "raw"

    def __post_init__(self):
        if self.values.shape != (len(self.dates), len(self.assets)):
            raise PanelError("panel shape does not match dates/assets")
        if not np.all(np.isfinite(self.values)):
            raise PanelError("panel contains non-finite cells")

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.values, index=pd.Index(self.dates, name="date"), columns=list(self.assets))

    def window(self, start: int, stop: int) -> np.ndarray:
        return self.values[start:stop]


def build_panel(series: dict[str, list[DailyMeasures]], measure: str = "rv",
                transform: str = "raw", log_floor: float = 1e-12) -> RealizedPanel:
    """Align per-asset daily measures on the common date intersection.

    Days missing for any asset are dropped (listwise deletion keeps the VAR
    panel balanced without fabricating volatility). With transform="log",
    cells become ln(max(v, log_floor)).
    """
    if len(series) < 2:
        raise PanelError("need at least 2 assets")
    if measure not in ("rv", "rs_minus", "rs_plus"):
        raise PanelError(f"unknown measure {measure!r}")
    if transform not in ("raw", "log"):
        raise PanelError(f"unknown transform {transform!r}")
    if transform == "log" and log_floor <= 0:
        raise PanelError("log_floor must be positive")

    assets = tuple(series.keys())
    per_asset: dict[str, dict[dt.date, float]] = {}
    for name, measures in series.items():
        if not measures:
            raise PanelError(f"asset {name!r} has no measures")
        per_asset[name] = {m.session_date: getattr(m, measure) for m in measures}

    common = set(per_asset[assets[0]])
    for name in assets[1:]:
        common &= set(per_asset[name])
    if not common:
        raise PanelError("no common dates across assets")
    dates = tuple(sorted(common))

    dropped = {name: len(per_asset[name]) - len(dates) for name in assets}
    if any(dropped.values()):
        logger.info("panel alignment dropped days: %s", dropped)

    values = np.array([[per_asset[name][d] for name in assets] for d in dates], dtype=float)
    if transform == "log":
        values = np.log(np.maximum(values, log_floor))
    return RealizedPanel(dates=dates, assets=assets, values=values, transform=transform)


def write_panel(panel: RealizedPanel, path, sep: str = ",") -> None:
    """First column ISO date, one column per asset, header of asset names."""
    df = panel.to_frame()
    df.to_csv(path, sep=sep, float_format="%.12g")


def read_panel(path, sep: str = ",", transform: str = "raw") -> RealizedPanel:
    """Read a panel written by :func:`write_panel` (or user-supplied)."""
    df = pd.read_csv(path, sep=sep, index_col=0)
    if df.shape[1] < 2:
        raise PanelError("panel file must have at least 2 asset columns")
    try:
        dates = tuple(dt.date.fromisoformat(str(d)) for d in df.index)
    except ValueError as exc:
        raise PanelError(f"unparseable date in panel file: {exc}") from exc
    values = df.to_numpy(dtype=float)
    return RealizedPanel(dates=dates, assets=tuple(df.columns), values=values, transform=transform)
