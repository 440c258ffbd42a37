"""Hot loops: Bloch-vector propagation of many two-level atoms.

State is carried as the Bloch vector ``(u, v, w)`` with ``u = 2 Re rho12``,
``v = 2 Im rho12`` and ``w = rho22 - rho11``.  Under a drive of Rabi
frequency ``om`` and phase ``phi`` at detuning ``d`` the vector precesses
about ``(-om cos phi, om sin phi, -d)`` (right-handed), which is the
rotating-frame form of ``drho/dt = +i[H, rho]``.  Decay ``gamma`` empties
the upper level into the ground state and damps coherence at ``gamma/2``.

Two interchangeable implementations of :func:`evolve_groups` exist: an
explicit loop compiled with numba and a vectorised numpy version.  The
module-level ``evolve_groups`` points at whichever ``ECHOFORM_NUMBA``
selects.
"""
import math

import numpy as np

from ._backend import USE_NUMBA, njit

# Upper bound on the integration substep used when gamma > 0 (seconds).
MAX_SUBSTEP = 1e-9


def _rotate_py(u, v, w, ax, ay, az, t):
    n = math.sqrt(ax * ax + ay * ay + az * az)
    theta = n * t
    if theta == 0.0:
        return u, v, w
    kx = ax / n
    ky = ay / n
    kz = az / n
    c = math.cos(theta)
    s = math.sin(theta)
    kd = (kx * u + ky * v + kz * w) * (1.0 - c)
    cu = ky * w - kz * v
    cv = kz * u - kx * w
    cw = kx * v - ky * u
    return (u * c + cu * s + kx * kd,
            v * c + cv * s + ky * kd,
            w * c + cw * s + kz * kd)


def _deriv(u, v, w, ax, ay, az, gamma):
    du = ay * w - az * v - 0.5 * gamma * u
    dv = az * u - ax * w - 0.5 * gamma * v
    dw = ax * v - ay * u - gamma * (w + 1.0)
    return du, dv, dw


def _make_rk4(deriv):
    def relax_rk4(u, v, w, ax, ay, az, gamma, t, nsub):
        # Branch-free, so it also runs elementwise on numpy arrays.
        h = t / nsub
        for _ in range(nsub):
            k1u, k1v, k1w = deriv(u, v, w, ax, ay, az, gamma)
            k2u, k2v, k2w = deriv(u + 0.5 * h * k1u, v + 0.5 * h * k1v,
                                  w + 0.5 * h * k1w, ax, ay, az, gamma)
            k3u, k3v, k3w = deriv(u + 0.5 * h * k2u, v + 0.5 * h * k2v,
                                  w + 0.5 * h * k2w, ax, ay, az, gamma)
            k4u, k4v, k4w = deriv(u + h * k3u, v + h * k3v, w + h * k3w,
                                  ax, ay, az, gamma)
            u = u + h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u)
            v = v + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
            w = w + h / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w)
        return u, v, w
    return relax_rk4


_relax_rk4_py = _make_rk4(_deriv)


def n_substeps(t, max_substep=MAX_SUBSTEP):
    return max(1, int(math.ceil(t / max_substep - 1e-9)))


def _evolve_loop_py(dur, rabi, phase, follow, rec, n_rec,
                    detunings, weights, amps, gamma, max_substep):
    n_groups = amps.shape[0]
    n_det = detunings.shape[0]
    n_steps = dur.shape[0]
    re = np.zeros((n_groups, n_rec))
    im = np.zeros((n_groups, n_rec))
    pop = np.zeros((n_groups, n_rec))
    cph = np.cos(phase)
    sph = np.sin(phase)
    nsub = np.empty(n_steps, dtype=np.int64)
    for s in range(n_steps):
        nsub[s] = max(1, int(math.ceil(dur[s] / max_substep - 1e-9)))
    for j in range(n_groups):
        g = amps[j]
        for k in range(n_det):
            wk = weights[k]
            az = -detunings[k]
            u = 0.0
            v = 0.0
            w = -1.0
            for s in range(n_steps):
                om = rabi[s] * g if follow[s] else rabi[s]
                ax = -om * cph[s]
                ay = om * sph[s]
                if gamma == 0.0:
                    u, v, w = _rotate(u, v, w, ax, ay, az, dur[s])
                else:
                    u, v, w = _relax_rk4(u, v, w, ax, ay, az, gamma,
                                         dur[s], nsub[s])
                r = rec[s]
                if r >= 0:
                    re[j, r] += wk * 0.5 * u
                    im[j, r] += wk * 0.5 * v
                    pop[j, r] += wk * 0.5 * (w + 1.0)
    return re, im, pop


if USE_NUMBA:
    _rotate = njit(_rotate_py)
    _relax_rk4 = njit(_make_rk4(njit(_deriv)))
    _evolve_loop = njit(_evolve_loop_py)
else:
    _rotate = _rotate_py
    _relax_rk4 = _relax_rk4_py
    _evolve_loop = _evolve_loop_py


def rotate(u, v, w, ax, ay, az, t):
    """Exact precession of one Bloch vector; returns the new ``(u, v, w)``."""
    return _rotate(float(u), float(v), float(w), float(ax), float(ay),
                   float(az), float(t))


def relax_rk4(u, v, w, ax, ay, az, gamma, t, nsub):
    """RK4 integration of the damped Bloch equations over ``nsub`` substeps."""
    return _relax_rk4(float(u), float(v), float(w), float(ax), float(ay),
                      float(az), float(gamma), float(t), int(nsub))


def _rotate_arrays(u, v, w, ax, ay, az, t):
    n = np.sqrt(ax * ax + ay * ay + az * az)
    theta = n * t
    safe = np.where(n > 0.0, n, 1.0)
    kx = np.where(n > 0.0, ax / safe, 0.0)
    ky = np.where(n > 0.0, ay / safe, 0.0)
    kz = np.where(n > 0.0, az / safe, 0.0)
    c = np.cos(theta)
    s = np.sin(theta)
    kd = (kx * u + ky * v + kz * w) * (1.0 - c)
    cu = ky * w - kz * v
    cv = kz * u - kx * w
    cw = kx * v - ky * u
    return (u * c + cu * s + kx * kd,
            v * c + cv * s + ky * kd,
            w * c + cw * s + kz * kd)


def evolve_groups_numpy(dur, rabi, phase, follow, rec, n_rec,
                        detunings, weights, amps, gamma,
                        max_substep=MAX_SUBSTEP):
    """Vectorised twin of the compiled loop; same arguments and outputs."""
    n_groups = amps.shape[0]
    n_det = detunings.shape[0]
    re = np.zeros((n_groups, n_rec))
    im = np.zeros((n_groups, n_rec))
    pop = np.zeros((n_groups, n_rec))
    u = np.zeros((n_groups, n_det))
    v = np.zeros((n_groups, n_det))
    w = -np.ones((n_groups, n_det))
    az = np.broadcast_to(-detunings, (n_groups, n_det))
    g = amps[:, None]
    for s in range(dur.shape[0]):
        om = rabi[s] * g if follow[s] else np.full_like(g, rabi[s])
        ax = np.broadcast_to(-om * math.cos(phase[s]), (n_groups, n_det))
        ay = np.broadcast_to(om * math.sin(phase[s]), (n_groups, n_det))
        if gamma == 0.0:
            u, v, w = _rotate_arrays(u, v, w, ax, ay, az, dur[s])
        else:
            u, v, w = _relax_rk4_py(u, v, w, ax, ay, az, gamma, dur[s],
                                    n_substeps(dur[s], max_substep))
        r = rec[s]
        if r >= 0:
            re[:, r] = (0.5 * u * weights).sum(axis=1)
            im[:, r] = (0.5 * v * weights).sum(axis=1)
            pop[:, r] = (0.5 * (w + 1.0) * weights).sum(axis=1)
    return re, im, pop


def evolve_groups_numba(dur, rabi, phase, follow, rec, n_rec,
                        detunings, weights, amps, gamma,
                        max_substep=MAX_SUBSTEP):
    """Compiled loop (plain Python when numba is unavailable or disabled)."""
    return _evolve_loop(dur, rabi, phase, follow, rec, n_rec,
                        detunings, weights, amps, float(gamma),
                        float(max_substep))


evolve_groups = evolve_groups_numba if USE_NUMBA else evolve_groups_numpy
