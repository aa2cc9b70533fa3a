"""Frequency-band decomposition of connectedness.

The moving-average coefficients are Fourier-transformed on a discrete grid
omega_m = 2*pi*m/H_s; per-frequency generalized decompositions are weighted
by each variable's share of spectral power at that frequency and summed over
the band's grid indices. Band matrices are normalized by the all-frequency
row sums, so band connectedness values add up to the unconditional total
computed at the same spectral resolution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from volconn.connectedness import ConnectednessTable, table_from_normalized
from volconn.varmodel import MaCoefficients


class SpectralError(ValueError):
    pass


@dataclass(frozen=True)
class FrequencyGrid:
    """DFT of the MA coefficients over H_s grid points."""

    resolution: int
    omegas: np.ndarray = field(repr=False)    # H_s
    psi_hat: np.ndarray = field(repr=False)   # H_s x N x N, complex

    @property
    def n_assets(self) -> int:
        return self.psi_hat.shape[1]


@dataclass(frozen=True)
class BandSpec:
    """A frequency band labeled by a day-horizon interval.

    Day range [lo, hi] maps to angular frequencies (pi/hi, pi/lo], capped at
    pi. ``index_set`` holds the positive-frequency grid indices m with
    omega_m inside the interval (mirror indices are handled internally).
    """

    name: str
    day_range: tuple[float, float]
    freq_interval: tuple[float, float]
    index_set: tuple[int, ...]


@dataclass(frozen=True)
class BandFevd:
    """Band-restricted generalized FEVD plus the spectral weights used."""

    band: BandSpec
    theta_d: np.ndarray = field(repr=False)        # N x N, normalized by all-band row sums
    theta_d_raw: np.ndarray = field(repr=False)    # N x N, before normalization
    weights: np.ndarray = field(repr=False)        # n_freqs_in_band x N, Gamma_j(omega)
    assets: tuple[str, ...] = ()


def frequency_response(psi: MaCoefficients, resolution: int) -> FrequencyGrid:
    """Discrete Fourier transform of the MA coefficients, entrywise.

    psi_hat(omega_m) = sum_h Psi_h exp(-2i*pi*m*h/H_s). Coefficients beyond
    the grid are truncated; shorter sequences are zero-padded.
    """
    if resolution < 4:
        raise SpectralError("resolution must be >= 4")
    coeffs = psi.psi[:resolution]
    psi_hat = np.fft.fft(coeffs, n=resolution, axis=0)
    omegas = 2.0 * np.pi * np.arange(resolution) / resolution
    return FrequencyGrid(resolution=resolution, omegas=omegas, psi_hat=psi_hat)


def power_spectrum(grid: FrequencyGrid, sigma: np.ndarray) -> np.ndarray:
    """Per-frequency power matrices psi_hat(w) Sigma psi_hat(w)*."""
    sigma = np.asarray(sigma, dtype=float)
    return np.einsum("mjk,kl,mnl->mjn", grid.psi_hat, sigma, np.conj(grid.psi_hat))


def _parse_day_ranges(day_ranges) -> list[tuple[float, float]]:
    out = []
    for lo, hi in day_ranges:
        if not (0 < lo < hi):
            raise SpectralError(f"bad day range [{lo}, {hi}]")
        out.append((float(lo), float(hi)))
    out.sort(key=lambda r: r[0])
    if out[0][0] != 1:
        raise SpectralError("day ranges must start at 1 day")
    for (lo1, hi1), (lo2, hi2) in zip(out, out[1:]):
        if not math.isclose(hi1, lo2):
            raise SpectralError(f"day ranges must be contiguous: [{lo1},{hi1}] then [{lo2},{hi2}]")
    return out


def make_bands(day_ranges, resolution: int) -> list[BandSpec]:
    """Build a disjoint partition of the positive-frequency grid from day ranges.

    omega = pi/days, so the range [lo, hi] covers (pi/hi, pi/lo], capped at
    pi. Indices slower than the longest horizon (including any leftovers the
    intervals miss at the low end) are swept into the lowest-frequency band
    so the partition always covers the grid.
    """
    ranges = _parse_day_ranges(day_ranges)
    if resolution < 4:
        raise SpectralError("resolution must be >= 4")
    m_max = resolution // 2
    omegas = 2.0 * np.pi * np.arange(m_max + 1) / resolution

    bands: list[BandSpec] = []
    assigned = np.zeros(m_max + 1, dtype=bool)
    assigned[0] = True  # omega = 0 handled below
    for lo, hi in ranges:
        a = np.pi / hi
        b = min(np.pi / lo, np.pi)
        members = [m for m in range(1, m_max + 1) if (a < omegas[m] <= b + 1e-12) and not assigned[m]]
        for m in members:
            assigned[m] = True
        bands.append(
            BandSpec(
                name=f"{lo:g}-{hi:g}",
                day_range=(lo, hi),
                freq_interval=(a, b),
                index_set=tuple(members),
            )
        )
    # leftovers below the slowest interval go to the longest-horizon band
    leftovers = tuple(m for m in range(1, m_max + 1) if not assigned[m])
    if leftovers:
        slow = bands[-1]
        bands[-1] = BandSpec(
            name=slow.name,
            day_range=slow.day_range,
            freq_interval=slow.freq_interval,
            index_set=tuple(sorted(slow.index_set + leftovers)),
        )
    covered = sorted(m for b in bands for m in b.index_set)
    if covered != list(range(1, m_max + 1)):
        raise SpectralError("bands do not partition the positive-frequency grid")
    return bands


def _full_index_sets(bands: list[BandSpec], resolution: int) -> list[list[int]]:
    """Expand positive-frequency index sets with their mirrors and omega = 0.

    The DFT of real coefficients is conjugate-symmetric, so index m and
    H_s - m carry the same power; omega = 0 joins the lowest-frequency band.
    """
    by_lowfreq = min(range(len(bands)), key=lambda i: bands[i].freq_interval[0])
    full = []
    for i, band in enumerate(bands):
        idx = set()
        for m in band.index_set:
            idx.add(m)
            mirror = resolution - m
            if mirror != m and mirror < resolution:
                idx.add(mirror)
        if i == by_lowfreq:
            idx.add(0)
        full.append(sorted(idx))
    return full


def band_fevd(grid: FrequencyGrid, sigma: np.ndarray, bands: list[BandSpec], assets=None) -> list[BandFevd]:
    """Generalized FEVD restricted to each frequency band.

    Per frequency: numerator sigma_kk^{-1} |e_j' psi_hat Sigma e_k|^2 over
    the variable's spectral power at that frequency, weighted by
    Gamma_j(omega) = power_j(omega) / total power_j. Summed over the band's
    grid (with mirror frequencies), then every band is row-normalized by the
    row sums of the all-band aggregate.
    """
    sigma = np.asarray(sigma, dtype=float)
    N = grid.n_assets
    diag = np.diag(sigma)
    if np.any(diag <= 0):
        raise SpectralError("sigma has a non-positive diagonal entry")

    Hs = grid.resolution
    A = grid.psi_hat @ sigma                                   # H_s x N x N
    power = np.einsum("mjk,mjk->mj", A, np.conj(grid.psi_hat)) # e_j' P(w) e_j
    if np.max(np.abs(power.imag)) > 1e-10 * max(1.0, np.max(np.abs(power.real))):
        raise SpectralError("spectral power has a non-negligible imaginary part")
    power = power.real                                          # H_s x N
    omega_diag = power.sum(axis=0)                              # e_j' Omega e_j
    numer = (np.abs(A) ** 2) / diag[np.newaxis, np.newaxis, :]  # H_s x N x N

    full_sets = _full_index_sets(bands, Hs)
    raw = []
    for band, idx in zip(bands, full_sets):
        if not idx:
            raw.append(np.zeros((N, N)))
            continue
        pw = power[idx]                                         # F x N
        if np.any(pw.sum(axis=0) <= 0) and np.any(omega_diag <= 0):
            j = int(np.argmin(omega_diag))
            raise SpectralError(f"zero spectral power for asset {j} in band {band.name}")
        gamma = pw / omega_diag[np.newaxis, :]                  # Gamma restricted to band
        # Gamma_j cancels the per-frequency denominator power_j(omega):
        # Gamma_j * numer / power_j = numer / Omega_jj
        theta_d = (numer[idx] / omega_diag[np.newaxis, :, np.newaxis]).sum(axis=0)
        raw.append((theta_d, gamma))

    aggregate = np.sum([t for t, _ in raw], axis=0)
    row_sums = aggregate.sum(axis=1)
    if np.any(row_sums <= 0):
        j = int(np.argmin(row_sums))
        raise SpectralError(f"zero aggregate row sum for asset {j}")

    labels = tuple(assets) if assets is not None else tuple(f"A{i + 1}" for i in range(N))
    out = []
    for band, (theta_d, gamma) in zip(bands, raw):
        out.append(
            BandFevd(
                band=band,
                theta_d=theta_d / row_sums[:, np.newaxis],
                theta_d_raw=theta_d,
                weights=gamma,
                assets=labels,
            )
        )
    return out


def band_connectedness(bfevd: BandFevd) -> ConnectednessTable:
    """Connectedness measures of one band's (all-frequency normalized) FEVD."""
    return table_from_normalized(bfevd.theta_d, bfevd.assets)


def spectral_weights(grid: FrequencyGrid, sigma: np.ndarray) -> np.ndarray:
    """Gamma_j(omega) over the full grid; each column sums to one."""
    sigma = np.asarray(sigma, dtype=float)
    A = grid.psi_hat @ sigma
    power = np.einsum("mjk,mjk->mj", A, np.conj(grid.psi_hat)).real
    return power / power.sum(axis=0, keepdims=True)
