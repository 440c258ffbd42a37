"""Single-atom two-level dynamics under square drive segments.

Sign convention: ``drho/dt = +i[H, rho] - 1/2 {Gamma, rho}`` with
``H = [[0, Om/2 e^{-i phi}], [Om/2 e^{i phi}, Delta]]`` (hbar = 1).  A
resonant pi/2 pulse from the ground state leaves ``Im rho12 = -1/2``; this
is the absorptive sign, and an emitting (echo) coherence has
``Im rho12 > 0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels

TWO_PI = 2.0 * math.pi
MHZ = TWO_PI * 1e6  # angular frequency of 1 MHz in rad/s
US = 1e-6


@dataclass(frozen=True)
class TwoLevelState:
    rho11: float = 1.0
    rho22: float = 0.0
    re_rho12: float = 0.0
    im_rho12: float = 0.0

    @classmethod
    def ground(cls) -> TwoLevelState:
        return cls(1.0, 0.0, 0.0, 0.0)

    @classmethod
    def from_bloch(cls, u, v, w) -> TwoLevelState:
        return cls(0.5 * (1.0 - w), 0.5 * (1.0 + w), 0.5 * u, 0.5 * v)

    def bloch(self) -> tuple[float, float, float]:
        return (2.0 * self.re_rho12, 2.0 * self.im_rho12,
                self.rho22 - self.rho11)

    @property
    def rho12(self) -> complex:
        return complex(self.re_rho12, self.im_rho12)

    @property
    def purity(self) -> float:
        return (self.rho11 ** 2 + self.rho22 ** 2
                + 2.0 * (self.re_rho12 ** 2 + self.im_rho12 ** 2))

    def matrix(self) -> np.ndarray:
        c = self.rho12
        return np.array([[self.rho11, c], [c.conjugate(), self.rho22]],
                        dtype=complex)

    def as_array(self) -> np.ndarray:
        return np.array([self.rho11, self.rho22, self.re_rho12, self.im_rho12])


@dataclass(frozen=True)
class DriveSegment:
    """Square drive: ``duration`` in s, ``rabi_frequency`` in rad/s."""

    duration: float
    rabi_frequency: float = 0.0
    phase: float = 0.0

    @property
    def area(self) -> float:
        return self.rabi_frequency * self.duration

    @classmethod
    def from_area(cls, area: float, duration: float = 0.1 * US,
                  phase: float = 0.0) -> DriveSegment:
        return cls(duration, area / duration, phase)

    @classmethod
    def from_mhz(cls, rabi_mhz: float, duration: float = 0.1 * US,
                 phase: float = 0.0) -> DriveSegment:
        return cls(duration, rabi_mhz * MHZ, phase)


@dataclass(frozen=True)
class AtomParams:
    detuning: float = 0.0  # rad/s
    gamma2: float = 0.0    # 1/s


def _check(state, seg, atom):
    values = (state.rho11, state.rho22, state.re_rho12, state.im_rho12,
              seg.duration, seg.rabi_frequency, seg.phase,
              atom.detuning, atom.gamma2)
    if not all(math.isfinite(x) for x in values):
        raise ValueError("non-finite field in state, segment or atom")
    if seg.duration < 0:
        raise ValueError(f"negative segment duration {seg.duration!r}")
    if seg.rabi_frequency < 0:
        raise ValueError(f"negative Rabi frequency {seg.rabi_frequency!r}")
    if atom.gamma2 < 0:
        raise ValueError(f"negative decay rate {atom.gamma2!r}")


def precession_axis(seg: DriveSegment, atom: AtomParams):
    om = seg.rabi_frequency
    return (-om * math.cos(seg.phase), om * math.sin(seg.phase),
            -atom.detuning)


def propagate_segment(state: TwoLevelState, seg: DriveSegment,
                      atom: AtomParams = AtomParams()) -> TwoLevelState:
    """Evolve ``state`` through one square segment.

    Without decay this is the exact generalized-Rabi rotation of the Bloch
    vector.  With ``gamma2 > 0`` the damped equations are integrated by RK4
    at a fixed substep of at most 1 ns.
    """
    _check(state, seg, atom)
    if seg.duration == 0:
        return state
    u, v, w = state.bloch()
    ax, ay, az = precession_axis(seg, atom)
    if atom.gamma2 == 0:
        u, v, w = kernels.rotate(u, v, w, ax, ay, az, seg.duration)
    else:
        u, v, w = kernels.relax_rk4(u, v, w, ax, ay, az, atom.gamma2,
                                    seg.duration,
                                    kernels.n_substeps(seg.duration))
    return TwoLevelState.from_bloch(u, v, w)


def _lindblad_rhs(rho, ham, gamma):
    comm = ham @ rho - rho @ ham
    out = 1j * comm
    # -1/2 {Gamma, rho} with Gamma = diag(0, gamma), refilled into |1>.
    out[0, 1] -= 0.5 * gamma * rho[0, 1]
    out[1, 0] -= 0.5 * gamma * rho[1, 0]
    out[1, 1] -= gamma * rho[1, 1]
    out[0, 0] += gamma * rho[1, 1]
    return out


def rk4_oracle(state: TwoLevelState, seg: DriveSegment,
               atom: AtomParams = AtomParams(),
               substep: float = 1e-9) -> TwoLevelState:
    """Classic RK4 on the 2x2 density matrix; a check on the rotation path."""
    if not substep > 0:
        raise ValueError(f"substep must be positive, got {substep!r}")
    _check(state, seg, atom)
    if seg.duration == 0:
        return state
    half = 0.5 * seg.rabi_frequency
    ham = np.array([[0.0, half * np.exp(-1j * seg.phase)],
                    [half * np.exp(1j * seg.phase), atom.detuning]])
    n = max(1, math.ceil(seg.duration / substep - 1e-9))
    h = seg.duration / n
    rho = state.matrix()
    g = atom.gamma2
    for _ in range(n):
        k1 = _lindblad_rhs(rho, ham, g)
        k2 = _lindblad_rhs(rho + 0.5 * h * k1, ham, g)
        k3 = _lindblad_rhs(rho + 0.5 * h * k2, ham, g)
        k4 = _lindblad_rhs(rho + h * k3, ham, g)
        rho = rho + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return TwoLevelState(float(rho[0, 0].real), float(rho[1, 1].real),
                         float(rho[0, 1].real), float(rho[0, 1].imag))
