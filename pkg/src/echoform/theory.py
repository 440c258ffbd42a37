"""Closed-form echo laws and the small fitting tools used to test against them."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

ALPHA = 5.0 / 8.0
# Exponent scan used by fit_sin_power; fixed so fits are reproducible.
EXPONENT_GRID = np.round(np.arange(50, 401) * 0.01, 2)


@dataclass(frozen=True)
class EmissiveWindowParams:
    alpha: float = ALPHA
    n_max: int = 4

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha!r}")


@dataclass(frozen=True)
class FitResult:
    exponent: float
    scale: float
    rms_residual: float


def emissive_window(phi_r: float,
                    params: EmissiveWindowParams = EmissiveWindowParams()) -> bool:
    """True when a rephasing area leaves the second echo emissive.

    The windows are ``2n < phi/pi < 2n + alpha`` and
    ``2(n+1) - alpha < phi/pi < 2(n+1)``, boundaries excluded.  The test is
    made on ``phi/pi`` reduced modulo 2, so it holds for every ``n``.
    """
    if phi_r < 0:
        raise ValueError(f"pulse area must be >= 0, got {phi_r!r}")
    x = math.fmod(phi_r / math.pi, 2.0)
    return 0.0 < x < params.alpha or 2.0 - params.alpha < x < 2.0


def predict_e1(phi_r):
    """First-echo amplitude, sin^2(phi/2) / 2."""
    return np.sin(np.asarray(phi_r) / 2.0) ** 2 / 2.0


def predict_e2(phi_r):
    """Second-echo amplitude; positive values are emissive."""
    half = np.asarray(phi_r) / 2.0
    return -math.sqrt(2.0) * np.sin(half) ** 2 * (0.3 - np.cos(half) ** 2)


def fit_sin_power(G, profile, area_scale: float = 1.0) -> FitResult:
    """Fit ``scale * sin(pi/2 * G * area_scale) ** k`` to an echo profile.

    The profile is normalised to its largest-magnitude entry.  For each k on
    ``EXPONENT_GRID`` the scale is solved by linear least squares; the k with
    the smallest RMS residual wins.
    """
    G = np.asarray(G, dtype=float)
    p = np.asarray(profile, dtype=float)
    if G.shape != p.shape or G.ndim != 1:
        raise ValueError("G and profile must be 1-D and the same length")
    if len(G) < 5:
        raise ValueError("need at least 5 points to fit")
    peak = p[np.argmax(np.abs(p))]
    if peak == 0 or not np.all(np.isfinite(p)):
        raise ValueError("profile is degenerate; fit undefined")
    p = p / peak
    base = np.sin(0.5 * math.pi * G * area_scale)
    best = None
    for k in EXPONENT_GRID:
        model = np.sign(base) * np.abs(base) ** k
        mm = model @ model
        if mm == 0:
            continue
        scale = (model @ p) / mm
        rms = math.sqrt(np.mean((scale * model - p) ** 2))
        if best is None or rms < best.rms_residual:
            best = FitResult(float(k), float(scale), rms)
    return best


def find_zero_crossings(f, lo: float = 0.0, hi: float = 2.0 * math.pi,
                        tol: float = 1e-9, n_scan: int = 2048) -> list:
    """Sign changes of ``f`` on ``[lo, hi]``, each refined by bisection.

    Zeros that only touch the axis (or sit at the interval ends) are not
    reported.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    xs = np.linspace(lo, hi, n_scan + 1)
    ys = [float(f(x)) for x in xs]
    roots = []
    i = 0
    while i < n_scan:
        a, b = xs[i], xs[i + 1]
        fa, fb = ys[i], ys[i + 1]
        if fa * fb < 0:
            while b - a > tol:
                m = 0.5 * (a + b)
                fm = float(f(m))
                if fm == 0:
                    a = b = m
                    break
                if (fm < 0) == (fa < 0):
                    a, fa = m, fm
                else:
                    b = m
            roots.append(float(0.5 * (a + b)))
        elif fb == 0 and 0 < i + 1 < n_scan:
            # exact zero on the scan grid: keep it if the sign really flips
            j = i + 2
            while j <= n_scan and ys[j] == 0:
                j += 1
            if j <= n_scan and fa * ys[j] < 0:
                roots.append(float(xs[i + 1]))
            i = j - 1
            continue
        i += 1
    return roots


def sign_changes(x, y) -> list:
    """Linearly interpolated sign changes of sampled data ``y(x)``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    out = []
    for i in range(len(y) - 1):
        if y[i] * y[i + 1] < 0:
            out.append(float(x[i] - y[i] * (x[i + 1] - x[i]) / (y[i + 1] - y[i])))
    return out
