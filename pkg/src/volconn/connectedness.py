"""Generalized FEVD, row normalization, and connectedness measures."""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field

import numpy as np

from volconn.varmodel import MaCoefficients


class ConnectednessError(ValueError):
    pass


@dataclass(frozen=True)
class FevdMatrix:
    """Raw and row-normalized generalized FEVD at horizon H."""

    theta: np.ndarray = field(repr=False)       # N x N, raw shares
    normalized: np.ndarray = field(repr=False)  # N x N, unit row sums
    horizon: int = 0
    assets: tuple[str, ...] = ()


@dataclass(frozen=True)
class ConnectednessTable:
    """Pairwise spillover table with directional margins, percent scale.

    ``total`` and the margins use the 1/N scaling, so FROM and TO margins
    each sum to the total.
    """

    pairwise: np.ndarray = field(repr=False)  # N x N, normalized FEVD x 100
    from_margin: np.ndarray = field(repr=False)
    to_margin: np.ndarray = field(repr=False)
    total: float = 0.0
    assets: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "assets": list(self.assets),
            "pairwise": self.pairwise.tolist(),
            "from": self.from_margin.tolist(),
            "to": self.to_margin.tolist(),
            "total": self.total,
        }

    def to_json(self, **kwargs) -> str:
        kwargs.setdefault("sort_keys", True)
        return json.dumps(self.to_dict(), **kwargs)

    def to_delimited(self, sep: str = ",", fmt: str = "%.6f") -> str:
        """Pairwise block, FROM column, TO row, grand total in the corner."""
        buf = io.StringIO()
        names = list(self.assets)
        buf.write(sep.join([""] + names + ["FROM"]) + "\n")
        for j, name in enumerate(names):
            cells = [fmt % v for v in self.pairwise[j]]
            buf.write(sep.join([name] + cells + [fmt % self.from_margin[j]]) + "\n")
        to_cells = [fmt % v for v in self.to_margin]
        buf.write(sep.join(["TO"] + to_cells + [fmt % self.total]) + "\n")
        return buf.getvalue()


def _default_assets(n: int, assets=None) -> tuple[str, ...]:
    if assets is None:
        return tuple(f"A{i + 1}" for i in range(n))
    if len(assets) != n:
        raise ConnectednessError("asset label count does not match matrix size")
    return tuple(assets)


def gfevd(psi: MaCoefficients, sigma: np.ndarray, horizon: int, assets=None) -> FevdMatrix:
    """H-step generalized forecast-error variance decomposition.

    theta[j, k] = sigma_kk^{-1} sum_h ((Psi_h Sigma)[j, k])^2
                  / sum_h ((Psi_h Sigma Psi_h')[j, j])

    Shocks are left correlated (no orthogonalization), so the result is
    invariant to variable ordering. Rows are then normalized to sum to one.
    """
    sigma = np.asarray(sigma, dtype=float)
    N = sigma.shape[0]
    if sigma.shape != (N, N):
        raise ConnectednessError("sigma must be square")
    if psi.horizon < horizon:
        raise ConnectednessError(f"need {horizon} MA terms, have {psi.horizon}")
    diag = np.diag(sigma)
    if np.any(diag <= 0):
        k = int(np.argmin(diag))
        raise ConnectednessError(f"sigma has non-positive diagonal at position {k}")

    P = psi.psi[:horizon]                      # H x N x N
    A = P @ sigma                              # H x N x N, rows j: e_j' Psi_h Sigma
    num = np.sum(A * A, axis=0) / diag[np.newaxis, :]
    den = np.sum(np.einsum("hjk,hjk->hj", A, P), axis=0)   # e_j' Psi_h Sigma Psi_h' e_j
    if np.any(den <= 0):
        j = int(np.argmin(den))
        raise ConnectednessError(f"zero forecast-error variance for variable {j}")
    theta = num / den[:, np.newaxis]

    row_sums = theta.sum(axis=1)
    if np.any(row_sums <= 0):
        j = int(np.argmin(row_sums))
        raise ConnectednessError(f"zero row sum in FEVD at row {j}")
    normalized = theta / row_sums[:, np.newaxis]
    return FevdMatrix(
        theta=theta,
        normalized=normalized,
        horizon=horizon,
        assets=_default_assets(N, assets),
    )


def table_from_normalized(normalized: np.ndarray, assets=None) -> ConnectednessTable:
    """Connectedness measures from any row-share matrix (unit row sums or not)."""
    normalized = np.asarray(normalized, dtype=float)
    N = normalized.shape[0]
    off = normalized - np.diag(np.diag(normalized))
    from_margin = 100.0 / N * off.sum(axis=1)
    to_margin = 100.0 / N * off.sum(axis=0)
    total = float(100.0 / N * off.sum())
    return ConnectednessTable(
        pairwise=normalized * 100.0,
        from_margin=from_margin,
        to_margin=to_margin,
        total=total,
        assets=_default_assets(N, assets),
    )


def connectedness_table(fevd: FevdMatrix) -> ConnectednessTable:
    """Total and directional spillovers from a normalized FEVD.

    total   = 100 * (1/N) * sum of off-diagonal shares
    FROM_j  = 100 * (1/N) * off-diagonal row sum (received by j)
    TO_j    = 100 * (1/N) * off-diagonal column sum (transmitted by j)
    """
    return table_from_normalized(fevd.normalized, fevd.assets)
