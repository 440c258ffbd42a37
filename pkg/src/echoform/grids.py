"""Discretisation axes of the ensemble: detunings and transverse positions."""
from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

from .dynamics import TWO_PI

FWHM_TO_SIGMA = 1.0 / (2.0 * math.sqrt(2.0 * math.log(2.0)))
SPATIAL_MODES = ("gaussian", "uniform", "linear")


@dataclass(frozen=True, eq=False)
class SpectralGrid:
    detunings: np.ndarray  # rad/s
    weights: np.ndarray

    def __len__(self):
        return len(self.detunings)

    @property
    def frequencies_hz(self) -> np.ndarray:
        return self.detunings / TWO_PI


@dataclass(frozen=True, eq=False)
class SpatialProfile:
    positions: np.ndarray  # units of the Gaussian sigma
    amplitudes: np.ndarray  # relative Rabi-frequency scale G_j
    mode: str

    def __len__(self):
        return len(self.amplitudes)


def build_spectral_grid(n_points: int = 281, spacing: float = 10e3,
                        fwhm: float = 1.2e6) -> SpectralGrid:
    """Centered grid of ``n_points`` detunings ``spacing`` Hz apart.

    Weights follow a normal line shape of the given FWHM (Hz), truncated to
    the grid and normalised to sum to one.
    """
    if n_points < 1 or n_points % 2 == 0:
        raise ValueError(f"n_points must be odd and positive, got {n_points}")
    if not spacing > 0 or not fwhm > 0:
        raise ValueError("spacing and fwhm must be positive")
    half = (n_points - 1) // 2
    offsets = np.arange(-half, half + 1, dtype=float)
    freqs = spacing * offsets
    sigma = fwhm * FWHM_TO_SIGMA
    # |freqs| keeps the weights exactly mirror-symmetric.
    dens = np.exp(-0.5 * (np.abs(freqs) / sigma) ** 2)
    return SpectralGrid(TWO_PI * freqs, dens / dens.sum())


def coverage_quantile(coverage: float) -> float:
    """Half-width z such that P(|X| < z) = coverage for a standard normal."""
    if not 0.0 < coverage < 1.0:
        raise ValueError(f"coverage must lie in (0, 1), got {coverage!r}")
    return NormalDist().inv_cdf(0.5 + 0.5 * coverage)


def build_spatial_profile(mode: str = "gaussian", n_groups: int = 41,
                          coverage: float = 0.9955) -> SpatialProfile:
    if n_groups < 1:
        raise ValueError(f"n_groups must be >= 1, got {n_groups}")
    if mode == "gaussian":
        z = coverage_quantile(coverage)
        if n_groups == 1:
            x = np.zeros(1)
        else:
            x = np.linspace(-z, z, n_groups)
            x[n_groups // 2:] = -x[:(n_groups + 1) // 2][::-1]
        return SpatialProfile(x, np.exp(-0.5 * x * x), mode)
    if mode == "uniform":
        x = np.arange(n_groups, dtype=float) - 0.5 * (n_groups - 1)
        return SpatialProfile(x, np.ones(n_groups), mode)
    if mode == "linear":
        g = np.arange(1, n_groups + 1, dtype=float) / n_groups
        return SpatialProfile(g.copy(), g, mode)
    raise ValueError(f"unknown spatial mode {mode!r}; expected one of {SPATIAL_MODES}")
