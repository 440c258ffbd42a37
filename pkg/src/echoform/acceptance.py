"""Exit criteria of the simulator, runnable from tests and ``echoform selftest``.

Each check returns a :class:`Criterion`; tolerances are fixed here.
"""
from __future__ import annotations

import io
import math
import tempfile
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from . import csvio
from .config import dump_config, parse_config
from .dynamics import (MHZ, US, AtomParams, DriveSegment, TwoLevelState,
                       propagate_segment, rk4_oracle)
from .grids import build_spatial_profile, build_spectral_grid
from .presets import fig1_spec, fig3_spec, run_fig1, run_fig2, run_fig3, run_spec
from .sequence import PulseEvent, PulseTimeline, simulate_group


@dataclass
class Criterion:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"


def fig1_case1() -> Criterion:
    o = run_fig1("d")
    ok = (abs(o.efficiency - 1.0) <= 0.02 and o.profile_rms < 0.02
          and abs(o.fit.exponent - 1.0) <= 0.1)
    return Criterion("fig1 case 1 (Gaussian D)", ok,
                     f"eta={o.efficiency:.4f} (1.00+-0.02), profile rms="
                     f"{o.profile_rms:.4f} (<0.02), k={o.fit.exponent:.2f} (1.0+-0.1)")


def fig1_case2() -> Criterion:
    o = run_fig1("r")
    ok = abs(o.fit.exponent - 2.0) <= 0.1 and 0.40 <= o.efficiency <= 0.55
    return Criterion("fig1 case 2 (Gaussian R)", ok,
                     f"k={o.fit.exponent:.2f} (2.0+-0.1), eta={o.efficiency:.4f} "
                     "([0.40, 0.55])")


def fig1_case3() -> Criterion:
    o = run_fig1("dr")
    ok = abs(o.fit.exponent - 3.0) <= 0.1 and abs(o.efficiency - 0.70) <= 0.05
    return Criterion("fig1 case 3 (Gaussian D and R)", ok,
                     f"k={o.fit.exponent:.2f} (3.0+-0.1), eta={o.efficiency:.4f} "
                     "(0.70+-0.05)")


def fig2_sweep() -> Criterion:
    o = run_fig2()
    cr = o.crossings_pi
    ok_cross = (len(cr) == 2 and abs(cr[0] - 0.63) <= 0.05
                and abs(cr[1] - 1.37) <= 0.05)
    ok = o.e1_rms < 0.02 and o.e2_rms < 0.05 and ok_cross
    cross = ", ".join(f"{c:.3f}" for c in cr)
    return Criterion("fig2 linear rephasing sweep", ok,
                     f"E1 rms={o.e1_rms:.4f} (<0.02), E2 rms={o.e2_rms:.4f} "
                     f"(<0.05), E2 sign changes at [{cross}] pi "
                     "(0.63/1.37+-0.05)")


def fig3_sweep() -> Criterion:
    o = run_fig3()
    eta_pi = o.eta_at(1.0)
    best = o.best
    tail = [r.eta for r in o.tail_rows]
    ok = (abs(eta_pi - 0.069) <= 0.02
          and abs(best.eta - 0.26) <= 0.04 and abs(best.area_pi - 0.5) < 1e-9
          and abs(o.tail_mean - 0.10) <= 0.03
          and o.damped)
    return Criterion("fig3 Gaussian double rephasing", ok,
                     f"eta(pi)={eta_pi:.4f} (0.069+-0.02), max eta={best.eta:.4f} "
                     f"at {best.area_pi:g} pi (0.26+-0.04 at 0.5 pi), "
                     f"tail mean={o.tail_mean:.4f} over 4-8 pi "
                     f"(0.10+-0.03; points {min(tail):.3f}..{max(tail):.3f}), "
                     f"damped={o.damped}")


# ---------------------------------------------------------------- properties

def _random_pure_state(rng):
    z = rng.uniform(-1.0, 1.0)
    phi = rng.uniform(0.0, 2.0 * math.pi)
    r = math.sqrt(1.0 - z * z)
    return TwoLevelState.from_bloch(r * math.cos(phi), r * math.sin(phi), z)


def prop_purity() -> Criterion:
    tl = run_spec(fig3_spec(1.0)).timeline
    worst = 0.0
    for g in (1.0, 0.61, 0.05):
        for d_mhz in (-1.4, -0.37, 0.0, 0.52, 1.4):
            tr = simulate_group(tl, g, AtomParams(d_mhz * MHZ))
            worst = max(worst, float(np.max(np.abs(tr.purity - 1.0))))
    return Criterion("property: purity conservation", worst <= 1e-9,
                     f"max |purity-1| = {worst:.2e} (<=1e-9)")


def prop_oracle(n: int = 1000, seed: int = 20170507) -> Criterion:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        st = _random_pure_state(rng)
        seg = DriveSegment(rng.uniform(1e-9, 0.2 * US),
                           rng.uniform(0.0, 10.0) * MHZ,
                           rng.uniform(0.0, 2.0 * math.pi))
        atom = AtomParams(rng.uniform(-1.4, 1.4) * MHZ)
        a = propagate_segment(st, seg, atom).as_array()
        b = rk4_oracle(st, seg, atom, 1e-9).as_array()
        worst = max(worst, float(np.max(np.abs(a - b))))
    return Criterion("property: exact propagator vs RK4 oracle", worst < 1e-6,
                     f"max deviation over {n} segments = {worst:.2e} (<1e-6)")


def prop_composition(n: int = 200, seed: int = 7) -> Criterion:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        st = _random_pure_state(rng)
        om = rng.uniform(0.0, 10.0) * MHZ
        ph = rng.uniform(0.0, 2.0 * math.pi)
        atom = AtomParams(rng.uniform(-1.4, 1.4) * MHZ)
        t1, t2 = rng.uniform(0.0, 0.2 * US, size=2)
        split = propagate_segment(propagate_segment(st, DriveSegment(t1, om, ph),
                                                    atom),
                                  DriveSegment(t2, om, ph), atom)
        whole = propagate_segment(st, DriveSegment(t1 + t2, om, ph), atom)
        worst = max(worst, float(np.max(np.abs(split.as_array()
                                               - whole.as_array()))))
    return Criterion("property: propagator composition", worst <= 1e-9,
                     f"max deviation = {worst:.2e} (<=1e-9)")


def prop_weights() -> Criterion:
    worst = 0.0
    for n, spacing, fwhm in ((281, 10e3, 1.2e6), (101, 25e3, 0.5e6),
                             (1, 10e3, 1.2e6), (401, 5e3, 3.0e6)):
        worst = max(worst, abs(build_spectral_grid(n, spacing, fwhm).weights.sum()
                               - 1.0))
    return Criterion("property: spectral weight normalisation", worst <= 1e-12,
                     f"max |sum w - 1| = {worst:.2e} (<=1e-12)")


def prop_conjugacy() -> Criterion:
    worst = 0.0
    for spec in (fig1_spec("dr"), fig3_spec(1.0), fig3_spec(0.5)):
        run = run_spec(spec)
        res = run.result
        for k in run.report.sample_index:
            re = abs(res.total_re_rho12[k])
            im = abs(res.total_im_rho12[k])
            worst = max(worst, re / im if im > 0 else re)
    return Criterion("property: detuning conjugacy (Re cancels)", worst <= 1e-9,
                     f"max |sum Re|/|sum Im| at echoes = {worst:.2e} (<=1e-9)")


def echo_pathway(area_d: float, area_r: float, n_phases: int = 4) -> complex:
    """Echo component of a resonant single atom, isolated by phase cycling.

    The echo coherence carries ``exp(+i phi_D)``, so averaging
    ``rho12 * exp(-i phi_D)`` over equally spaced data phases removes the
    free-decay and population-grating terms.
    """
    acc = 0j
    for m in range(n_phases):
        phi = 2.0 * math.pi * m / n_phases
        tl = PulseTimeline([PulseEvent("D", 0.1 * US,
                                       DriveSegment.from_area(area_d, phase=phi),
                                       False),
                            PulseEvent("R", 2.1 * US,
                                       DriveSegment.from_area(area_r), False)],
                           4.1 * US)
        tr = simulate_group(tl)
        k = len(tr.times) - 1
        acc += complex(tr.re_rho12[k], tr.im_rho12[k]) * complex(
            math.cos(phi), -math.sin(phi))
    return acc / n_phases


def prop_two_pulse_law() -> Criterion:
    worst = 0.0
    for fd in np.linspace(0.1, 0.9, 5):
        for fr in np.linspace(0.2, 1.8, 9):
            got = echo_pathway(fd * math.pi, fr * math.pi)
            want = 0.5 * math.sin(fd * math.pi) * math.sin(fr * math.pi / 2) ** 2
            worst = max(worst, abs(got - 1j * want) / want)
    return Criterion("property: single-atom two-pulse law", worst < 1e-6,
                     f"max relative error vs sin(phiD) sin^2(phiR/2)/2 = "
                     f"{worst:.2e} (<1e-6)")


def _csv_bytes(run) -> bytes:
    with tempfile.TemporaryDirectory() as tmp:
        out = []
        for name, rows in (("timeseries", csvio.timeseries_rows(run.result)),
                           ("profile", csvio.profile_rows(run.result, run.report))):
            path = Path(tmp) / f"{name}.csv"
            csvio.emit_csv(rows, name, path)
            out.append(path.read_bytes())
    return b"".join(out)


def prop_workers() -> Criterion:
    spec = fig3_spec(1.0)
    ref = None
    same = True
    for w in (1, 2, 8):
        run = run_spec(spec, workers=w)
        blob = (_csv_bytes(run), run.result.per_group_im_rho12.tobytes(),
                run.result.per_group_re_rho12.tobytes())
        if ref is None:
            ref = blob
        elif blob != ref:
            same = False
    return Criterion("property: bit-identical across 1/2/8 workers", same,
                     "CSV bytes and per-group arrays "
                     + ("identical" if same else "DIFFER"))


def corpus_files() -> list:
    root = resources.files("echoform") / "data" / "corpus"
    return sorted((p for p in root.iterdir() if p.name.endswith(".ini")),
                  key=lambda p: p.name)


def prop_roundtrip() -> Criterion:
    files = corpus_files()
    bad = []
    for f in files:
        spec = parse_config(f.read_text(encoding="utf-8"))
        text = dump_config(spec)
        again = parse_config(text)
        if again != spec or dump_config(again) != text:
            bad.append(f.name)
    ok = len(files) >= 20 and not bad
    return Criterion("property: config round-trip", ok,
                     f"{len(files) - len(bad)}/{len(files)} files identical "
                     "(corpus of >=20)" + (f"; failed: {bad}" if bad else ""))


CRITERIA = (fig1_case1, fig1_case2, fig1_case3, fig2_sweep, fig3_sweep,
            prop_purity, prop_oracle, prop_composition, prop_weights,
            prop_conjugacy, prop_two_pulse_law, prop_workers, prop_roundtrip)


def run_all(stream=None) -> list:
    results = []
    for check in CRITERIA:
        c = check()
        results.append(c)
        if stream is not None:
            print(c.line(), file=stream, flush=True)
    return results


def summary_table(results) -> str:
    buf = io.StringIO()
    width = max(len(c.name) for c in results)
    for c in results:
        buf.write(f"{c.name:<{width}}  {'PASS' if c.passed else 'FAIL'}\n")
    n_ok = sum(c.passed for c in results)
    buf.write(f"{n_ok}/{len(results)} criteria passed\n")
    return buf.getvalue()
