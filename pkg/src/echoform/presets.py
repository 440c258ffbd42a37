"""Ready-made experiments: two-pulse echoes, the linear-ramp double
rephasing sweep, and the Gaussian double-rephasing efficiency sweep."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .config import (ExperimentSpec, PulseSpec, SimulationSection,
                     SpatialSection, SweepSpec)
from .grids import build_spatial_profile, build_spectral_grid
from .sequence import (EchoReport, EnsembleResult, PulseTimeline, analyze,
                       build_timeline, simulate_ensemble, worker_count)
from .theory import (FitResult, emissive_window, fit_sin_power, predict_e1,
                     predict_e2, sign_changes)

FIG1_CASES = {
    # case: (data profile, rephasing profile)
    "d": ("gaussian", "uniform"),
    "r": ("uniform", "gaussian"),
    "dr": ("gaussian", "gaussian"),
}
FIG1_EXPONENT = {"d": 1.0, "r": 2.0, "dr": 3.0}


def fig1_spec(case: str = "d") -> ExperimentSpec:
    """Two-pulse echo: pi/2 data at 0.1 us, pi rephasing at 2.1 us."""
    if case not in FIG1_CASES:
        raise ValueError(f"unknown fig1 case {case!r}; expected d, r or dr")
    dprof, rprof = FIG1_CASES[case]
    return ExperimentSpec(
        simulation=SimulationSection(t_end_us=5.0),
        pulses=[PulseSpec("D", 0.1, area_pi=0.5, profile=dprof),
                PulseSpec("R", 2.1, area_pi=1.0, profile=rprof)])


def fig2_spec(resolution_pi: float = 1.0 / 64.0) -> ExperimentSpec:
    """Double rephasing with a linear transverse ramp of rephasing area.

    Group j sees rephasing area ``2 pi * j / n`` (one row of the sweep per
    group); the pi/2 data pulse is uniform.
    """
    n = int(round(2.0 / resolution_pi))
    return ExperimentSpec(
        simulation=SimulationSection(t_end_us=13.0),
        spatial=SpatialSection(mode="linear", n_groups=n),
        pulses=[PulseSpec("D", 0.1, area_pi=0.5, profile="uniform"),
                PulseSpec("R1", 3.1, area_pi=2.0, profile="linear"),
                PulseSpec("R2", 9.1, area_pi=2.0, profile="linear")])


def fig3_spec(peak_area_pi: float = 1.0) -> ExperimentSpec:
    """Gaussian double rephasing with a weak pi/5 data pulse."""
    return ExperimentSpec(
        simulation=SimulationSection(t_end_us=13.0),
        pulses=[PulseSpec("D", 0.1, area_pi=0.2, profile="gaussian"),
                PulseSpec("R1", 3.1, area_pi=peak_area_pi, profile="gaussian"),
                PulseSpec("R2", 9.1, area_pi=peak_area_pi, profile="gaussian")],
        sweep=SweepSpec("R.area", 0.25, 2.0, 0.25))


@dataclass
class Run:
    spec: ExperimentSpec
    timeline: PulseTimeline
    result: EnsembleResult
    report: EchoReport


def run_spec(spec: ExperimentSpec, workers: Optional[int] = None,
             peak_search: bool = False) -> Run:
    tl = build_timeline(spec)
    sp = spec.spectral
    spectral = build_spectral_grid(sp.n_groups, sp.spacing_khz * 1e3,
                                   sp.fwhm_mhz * 1e6)
    sa = spec.spatial
    spatial = build_spatial_profile(sa.mode, sa.n_groups, sa.coverage)
    result = simulate_ensemble(tl, spatial, spectral, workers)
    report = None
    if len(tl.events) in (2, 3):
        report = analyze(result, tl, peak_search=peak_search)
    return Run(spec, tl, result, report)


@dataclass
class Fig1Outcome:
    case: str
    run: Run
    fit: FitResult
    profile_rms: float  # normalised echo profile vs sin(pi/2 G)^expected

    @property
    def efficiency(self) -> float:
        return self.run.report.efficiency


def run_fig1(case: str = "d", workers: Optional[int] = None) -> Fig1Outcome:
    run = run_spec(fig1_spec(case), workers)
    G = run.result.amplitudes
    echo = run.report.per_group_echo[-1]
    fit = fit_sin_power(G, echo)
    norm = echo / echo[np.argmax(np.abs(echo))]
    law = np.sin(0.5 * math.pi * G) ** FIG1_EXPONENT[case]
    rms = float(np.sqrt(np.mean((norm - law) ** 2)))
    return Fig1Outcome(case, run, fit, rms)


@dataclass
class SweepRow:
    area_pi: float
    e1: float
    e2: float
    e2_eff: float
    eta: float

    @property
    def e1_law(self) -> float:
        return float(predict_e1(self.area_pi * math.pi))

    @property
    def e2_law(self) -> float:
        return float(predict_e2(self.area_pi * math.pi))


@dataclass
class Fig2Outcome:
    run: Run
    rows: list
    e1_rms: float
    e2_rms: float          # after scaling simulated E2 to the law at pi
    crossings_pi: list     # sign changes of simulated E2, in units of pi
    window_agreement: bool
    window_mismatches: list = field(default_factory=list)


def run_fig2(resolution_pi: float = 1.0 / 64.0,
             workers: Optional[int] = None) -> Fig2Outcome:
    spec = fig2_spec(resolution_pi)
    run = run_spec(spec, workers)
    res, rep = run.result, run.report
    phi = 2.0 * math.pi * res.amplitudes
    e1 = rep.per_group_echo[0]
    e2 = rep.per_group_echo[1]
    data = res.per_group_im_rho12[:, res.index_of(rep.data_time)]
    rows = [SweepRow(float(p / math.pi), float(a), float(b), float(max(b, 0.0)),
                     float(max(b, 0.0) / abs(d)))
            for p, a, b, d in zip(phi, e1, e2, data)]
    e1_rms = float(np.sqrt(np.mean((e1 - predict_e1(phi)) ** 2)))
    i_pi = int(np.argmin(np.abs(phi - math.pi)))
    e2n = e2 * (predict_e2(math.pi) / e2[i_pi])
    e2_rms = float(np.sqrt(np.mean((e2n - predict_e2(phi)) ** 2)))
    crossings = [c / math.pi for c in sign_changes(phi, e2)]
    mismatches = []
    for p, b in zip(phi, e2):
        x = math.fmod(p / math.pi, 2.0)
        near = min(abs(x - 0.625), abs(x - 1.375), x, 2.0 - x) < 0.05
        if not near and (b > 0) != emissive_window(p):
            mismatches.append(float(p / math.pi))
    return Fig2Outcome(run, rows, e1_rms, e2_rms, crossings,
                       not mismatches, mismatches)


def sweep_areas(from_pi: float, to_pi: float, step_pi: float) -> list:
    if not step_pi > 0 or to_pi < from_pi:
        raise ValueError(
            f"empty sweep range from {from_pi} to {to_pi} step {step_pi}")
    n = int(math.floor((to_pi - from_pi) / step_pi + 1e-9)) + 1
    return [round(from_pi + i * step_pi, 12) for i in range(n)]


def sweep_rephasing_area(spec: ExperimentSpec, from_pi: float, to_pi: float,
                         step_pi: float, workers: Optional[int] = None,
                         parameter: Optional[str] = None) -> list:
    """One ensemble run per rephasing peak area, rows in ascending area.

    Rows are independent and run concurrently on ``workers`` threads.
    """
    areas = sweep_areas(from_pi, to_pi, step_pi)
    if parameter is None:
        parameter = spec.sweep.parameter if spec.sweep else "R.area"
    targets = spec.sweep_targets(parameter)
    if not targets:
        raise ValueError(f"sweep parameter {parameter!r} names no pulse")

    def row(area):
        run = run_spec(spec.with_pulse_area(targets, area), workers=1)
        rep = run.report
        e1 = rep.amplitudes[0] if len(rep.amplitudes) > 1 else float("nan")
        return SweepRow(area, e1, rep.amplitudes[-1], rep.e2_eff,
                        rep.efficiency)

    n = min(worker_count(workers), len(areas))
    if n == 1:
        return [row(a) for a in areas]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(row, areas))


def local_maxima(values) -> list:
    """Indices of interior strict local maxima."""
    v = list(values)
    return [i for i in range(1, len(v) - 1) if v[i] > v[i - 1] and v[i] > v[i + 1]]


@dataclass
class Fig3Outcome:
    focus: Run
    rows: list
    tail_rows: list

    @property
    def etas(self) -> list:
        return [r.eta for r in self.rows]

    def eta_at(self, area_pi: float) -> float:
        for r in self.rows + self.tail_rows:
            if abs(r.area_pi - area_pi) < 1e-9:
                return r.eta
        raise KeyError(area_pi)

    @property
    def best(self) -> SweepRow:
        return max(self.rows, key=lambda r: r.eta)

    @property
    def tail_mean(self) -> float:
        return float(np.mean([r.eta for r in self.tail_rows]))

    @property
    def damped(self) -> bool:
        peaks = [self.etas[i] for i in local_maxima(self.etas)]
        return len(peaks) >= 2 and all(a > b for a, b in zip(peaks, peaks[1:]))


def run_fig3(peak_area_pi: float = 1.0, from_pi: float = 0.25,
             to_pi: float = 2.0, step_pi: float = 0.25,
             tail: tuple = (4.0, 8.0, 0.25),
             workers: Optional[int] = None) -> Fig3Outcome:
    spec = fig3_spec(peak_area_pi)
    focus = run_spec(spec, workers)
    rows = sweep_rephasing_area(spec, from_pi, to_pi, step_pi, workers)
    tail_rows = sweep_rephasing_area(spec, *tail, workers) if tail else []
    return Fig3Outcome(focus, rows, tail_rows)
