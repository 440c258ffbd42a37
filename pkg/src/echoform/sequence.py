"""Pulse timelines, ensemble runs and echo read-out."""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .config import ConfigErrors, ExperimentSpec, validate_spec
from .dynamics import US, AtomParams, DriveSegment
from .grids import SpatialProfile, SpectralGrid

PS = 1e-12  # timeline quantum; all boundaries are integer picoseconds
PEAK_WINDOW = 0.3 * US


class UndefinedEfficiencyError(ZeroDivisionError):
    pass


def _ps(t: float) -> int:
    return int(round(t / PS))


@dataclass(frozen=True)
class PulseEvent:
    name: str
    start: float  # s
    segment: DriveSegment
    follows_profile: bool = True

    @property
    def end(self) -> float:
        return self.start + self.segment.duration


@dataclass(frozen=True)
class Steps:
    """A timeline flattened into piecewise-constant steps for the kernels."""

    dur: np.ndarray
    rabi: np.ndarray
    phase: np.ndarray
    follow: np.ndarray
    rec: np.ndarray  # sample index written after each step, or -1
    n_rec: int


@dataclass
class PulseTimeline:
    events: list
    total_duration: float
    sample_dt: float = 0.1 * US
    gamma2: float = 0.0

    def __post_init__(self):
        events = sorted(self.events, key=lambda e: e.start)
        for a, b in zip(events, events[1:]):
            if _ps(b.start) < _ps(a.end):
                raise ValueError(f"pulses {a.name} and {b.name} overlap")
        if not self.sample_dt > 0:
            raise ValueError("sample_dt must be positive")
        self.events = events

    @property
    def n_samples(self) -> int:
        return int(round(self.total_duration / self.sample_dt)) + 1

    def sample_times(self) -> np.ndarray:
        return np.arange(self.n_samples) * self.sample_dt

    def compile(self) -> Steps:
        dt = _ps(self.sample_dt)
        n = self.n_samples
        bounds = {k * dt for k in range(n)}
        for e in self.events:
            bounds.add(_ps(e.start))
            bounds.add(_ps(e.end))
        end = (n - 1) * dt
        bounds = sorted(b for b in bounds if 0 <= b <= end)
        dur, rabi, phase, follow, rec = [], [], [], [], []
        for a, b in zip(bounds, bounds[1:]):
            active = None
            for e in self.events:
                if _ps(e.start) <= a and b <= _ps(e.end):
                    active = e
                    break
            dur.append((b - a) * PS)
            rabi.append(active.segment.rabi_frequency if active else 0.0)
            phase.append(active.segment.phase if active else 0.0)
            follow.append(active.follows_profile if active else False)
            rec.append(b // dt if b % dt == 0 else -1)
        return Steps(np.array(dur), np.array(rabi), np.array(phase),
                     np.array(follow, dtype=np.bool_),
                     np.array(rec, dtype=np.int64), n)


def build_timeline(spec: ExperimentSpec) -> PulseTimeline:
    """Turn a validated spec into a timeline; pulse areas are peak areas."""
    errors = validate_spec(spec)
    if errors:
        raise ConfigErrors(errors, spec)
    sim = spec.simulation
    dur = sim.pulse_duration_us * US
    events = [PulseEvent(p.name, p.t_us * US,
                         DriveSegment(dur, p.area(sim.pulse_duration_us) / dur,
                                      p.phase_pi * math.pi),
                         p.follows_profile())
              for p in spec.pulses]
    dt = sim.sample_dt_us * US
    if sim.t_end_us is not None:
        t_end = sim.t_end_us * US
    else:
        t_end = default_end_time(events)
    n = math.ceil(t_end / dt - 1e-9)
    return PulseTimeline(events, n * dt, dt, sim.gamma2_per_us / US)


def default_end_time(events) -> float:
    last = max(e.end for e in events)
    if len(events) in (2, 3):
        last = max(last, _echo_times_of(events)[-1])
    return last + 1.0 * US


def _echo_times_of(events):
    t = [e.start for e in events]
    if len(t) == 2:
        return [2 * t[1] - t[0]]
    if len(t) == 3:
        e1 = 2 * t[1] - t[0]
        return [e1, 2 * t[2] - e1]
    raise ValueError(f"echo times need 2 or 3 pulses, timeline has {len(t)}")


def echo_times(timeline: PulseTimeline) -> list:
    """Analytic echo instants, measured from pulse arrival times."""
    return _echo_times_of(timeline.events)


def data_time(timeline: PulseTimeline) -> float:
    """Instant of maximum data coherence: the end of the first pulse."""
    return timeline.events[0].end


@dataclass
class GroupTrace:
    times: np.ndarray
    re_rho12: np.ndarray
    im_rho12: np.ndarray
    rho22: np.ndarray

    @property
    def purity(self) -> np.ndarray:
        r11 = 1.0 - self.rho22
        return (r11 ** 2 + self.rho22 ** 2
                + 2.0 * (self.re_rho12 ** 2 + self.im_rho12 ** 2))


def simulate_group(timeline: PulseTimeline, spatial_amplitude: float = 1.0,
                   atom: AtomParams = AtomParams()) -> GroupTrace:
    """Trajectory of a single atom sampled on the timeline grid."""
    if not 0 < spatial_amplitude <= 1:
        raise ValueError(f"spatial amplitude {spatial_amplitude!r} outside (0, 1]")
    st = timeline.compile()
    re, im, pop = kernels.evolve_groups(
        st.dur, st.rabi, st.phase, st.follow, st.rec, st.n_rec,
        np.array([float(atom.detuning)]), np.ones(1),
        np.array([float(spatial_amplitude)]), float(atom.gamma2))
    return GroupTrace(timeline.sample_times(), re[0], im[0], pop[0])


@dataclass
class EnsembleResult:
    times: np.ndarray
    per_group_im_rho12: np.ndarray  # (n_spatial, n_times)
    per_group_re_rho12: np.ndarray
    per_group_rho22: np.ndarray
    total_im_rho12: np.ndarray
    total_re_rho12: np.ndarray
    positions: np.ndarray
    amplitudes: np.ndarray

    @property
    def sample_dt(self) -> float:
        return float(self.times[1] - self.times[0]) if len(self.times) > 1 else 0.0

    def index_of(self, t: float) -> int:
        if len(self.times) == 1:
            if abs(t - self.times[0]) > PS:
                raise ValueError(f"t = {t!r} outside simulated range")
            return 0
        dt = self.sample_dt
        if t < self.times[0] - 0.5 * dt or t > self.times[-1] + 0.5 * dt:
            raise ValueError(
                f"t = {t / US:g} us outside simulated range "
                f"[0, {self.times[-1] / US:g}] us")
        return int(round(t / dt))


def worker_count(workers: Optional[int] = None) -> int:
    if workers is None:
        workers = int(os.environ.get("ECHOFORM_THREADS", "1") or 1)
    return max(1, int(workers))


def _chunks(n: int, parts: int):
    parts = min(parts, n)
    edges = np.linspace(0, n, parts + 1).round().astype(int)
    return [(a, b) for a, b in zip(edges, edges[1:]) if b > a]


def simulate_ensemble(timeline: PulseTimeline, spatial: SpatialProfile,
                      spectral: SpectralGrid,
                      workers: Optional[int] = None) -> EnsembleResult:
    """Run every (spatial, spectral) group and reduce in fixed index order.

    Spatial groups are split across ``workers`` threads; each group's
    spectral sum is computed whole inside one worker, so the result does not
    depend on the worker count.
    """
    st = timeline.compile()
    amps = np.ascontiguousarray(spatial.amplitudes, dtype=float)
    det = np.ascontiguousarray(spectral.detunings, dtype=float)
    wts = np.ascontiguousarray(spectral.weights, dtype=float)

    def run(bounds):
        a, b = bounds
        return kernels.evolve_groups(st.dur, st.rabi, st.phase, st.follow,
                                     st.rec, st.n_rec, det, wts, amps[a:b],
                                     timeline.gamma2)

    parts = _chunks(len(amps), worker_count(workers))
    if len(parts) == 1:
        pieces = [run(parts[0])]
    else:
        with ThreadPoolExecutor(max_workers=len(parts)) as pool:
            pieces = list(pool.map(run, parts))
    re = np.concatenate([p[0] for p in pieces])
    im = np.concatenate([p[1] for p in pieces])
    pop = np.concatenate([p[2] for p in pieces])
    total_im = np.zeros(st.n_rec)
    total_re = np.zeros(st.n_rec)
    for j in range(len(amps)):
        total_im += im[j]
        total_re += re[j]
    return EnsembleResult(timeline.sample_times(), im, re, pop, total_im,
                          total_re, np.asarray(spatial.positions, dtype=float),
                          amps)


def extract_amplitude(result: EnsembleResult, t: float,
                      mask: Optional[np.ndarray] = None) -> float:
    """Signed total ``Im rho12`` at the sample nearest ``t``.

    With ``mask`` only the selected spatial groups are summed.
    """
    k = result.index_of(t)
    if mask is None:
        return float(result.total_im_rho12[k])
    total = 0.0
    for j in np.flatnonzero(mask):
        total += result.per_group_im_rho12[j, k]
    return float(total)


def emissive_filter(per_group_echo) -> tuple[np.ndarray, float]:
    """Mask of strictly emissive groups and their summed coherence."""
    vals = np.asarray(per_group_echo, dtype=float)
    mask = vals > 0
    total = 0.0
    for j in np.flatnonzero(mask):
        total += vals[j]
    return mask, float(total)


def efficiency(echo_amplitude: float, data_amplitude: float) -> float:
    if data_amplitude == 0:
        raise UndefinedEfficiencyError("data amplitude is zero")
    return abs(echo_amplitude) / abs(data_amplitude)


@dataclass
class EchoReport:
    echo_times: list
    amplitudes: list
    per_group_echo: list
    emissive_mask: np.ndarray
    e2_eff: float
    data_time: float
    data_amplitude: float
    efficiency: float
    scope: str = "all"
    sample_index: list = field(default_factory=list)


def _peak_index(result, t):
    k0 = result.index_of(t)
    half = int(round(PEAK_WINDOW / result.sample_dt))
    lo, hi = max(0, k0 - half), min(len(result.times), k0 + half + 1)
    seg = np.abs(result.total_im_rho12[lo:hi])
    return lo + int(np.argmax(seg))


def analyze(result: EnsembleResult, timeline: PulseTimeline,
            scope: str = "auto", peak_search: bool = False) -> EchoReport:
    """Read echoes off an ensemble run.

    Amplitudes are taken at the analytic echo times; ``peak_search`` instead
    takes the largest ``|sum Im rho12|`` within 0.3 us, as a diagnostic.
    ``scope='auto'`` uses all groups for a two-pulse echo and the emissive
    mask for the final echo of a double-rephasing sequence.
    """
    times = echo_times(timeline)
    if scope == "auto":
        scope = "emissive" if len(timeline.events) == 3 else "all"
    if scope not in ("all", "emissive"):
        raise ValueError(f"unknown scope {scope!r}")
    idx = [(_peak_index(result, t) if peak_search else result.index_of(t))
           for t in times]
    amps = [float(result.total_im_rho12[k]) for k in idx]
    per_group = [result.per_group_im_rho12[:, k].copy() for k in idx]
    mask, e2_eff = emissive_filter(per_group[-1])
    td = data_time(timeline)
    d_amp = extract_amplitude(result, td)
    echo = e2_eff if scope == "emissive" else amps[-1]
    return EchoReport(times, amps, per_group, mask, e2_eff, td, d_amp,
                      efficiency(echo, d_amp), scope, idx)
