"""``echoform`` command line.

Exit codes: 0 success, 2 usage or config error, 3 I/O error, 4 self-test
failure.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import acceptance, csvio, presets
from ._backend import backend_name
from .config import ConfigErrors, ExperimentSpec, dump_config, load_config
from .dynamics import US
from .sequence import worker_count

EXIT_USAGE = 2
EXIT_IO = 3
EXIT_SELFTEST = 4


@dataclass
class RunManifest:
    command: str
    spec_digest: str
    outputs: list = field(default_factory=list)
    wall_seconds: float = 0.0
    workers: int = 1
    backend: str = ""


def spec_digest(spec: ExperimentSpec) -> str:
    return hashlib.sha256(dump_config(spec).encode("utf-8")).hexdigest()


class _Writer:
    def __init__(self, out: Path, argv, spec, workers):
        self.out = out
        self.started = time.perf_counter()
        self.manifest = RunManifest(" ".join(argv), spec_digest(spec),
                                    workers=workers, backend=backend_name())
        out.mkdir(parents=True, exist_ok=True)

    def csv(self, rows, schema, name=None):
        path = csvio.emit_csv(rows, schema, self.out / f"{name or schema}.csv")
        self.manifest.outputs.append(str(path))

    def run_files(self, run):
        self.csv(csvio.timeseries_rows(run.result), "timeseries")
        if run.report is not None:
            self.csv(csvio.profile_rows(run.result, run.report), "profile")

    def finish(self, summary: dict):
        path = self.out / "summary.json"
        path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
        self.manifest.outputs.append(str(path))
        self.manifest.wall_seconds = round(time.perf_counter() - self.started, 3)
        mpath = self.out / "manifest.json"
        self.manifest.outputs.append(str(mpath))
        mpath.write_text(json.dumps(asdict(self.manifest), indent=2) + "\n")
        for key, val in summary.items():
            print(f"{key}: {val}")
        print(f"wrote {len(self.manifest.outputs)} files to {self.out}")


def _report_summary(run) -> dict:
    rep = run.report
    if rep is None:
        return {}
    return {
        "echo_times_us": [round(t / US, 9) for t in rep.echo_times],
        "echo_amplitudes": rep.amplitudes,
        "data_amplitude": rep.data_amplitude,
        "e2_eff": rep.e2_eff,
        "emissive_groups": int(rep.emissive_mask.sum()),
        "efficiency": rep.efficiency,
        "efficiency_scope": rep.scope,
    }


def _sweep_summary(rows) -> dict:
    best = max(rows, key=lambda r: r.eta)
    return {"sweep_rows": len(rows),
            "sweep_max_eta": best.eta,
            "sweep_max_eta_area_pi": best.area_pi}


def cmd_run(args, argv):
    spec = load_config(args.config)
    workers = worker_count(args.threads)
    w = _Writer(Path(args.out), argv, spec, workers)
    run = presets.run_spec(spec, workers, peak_search=args.peak_search)
    w.run_files(run)
    summary = _report_summary(run)
    if spec.sweep is not None:
        sw = spec.sweep
        rows = presets.sweep_rephasing_area(spec, sw.from_pi, sw.to_pi,
                                            sw.step_pi, workers)
        w.csv(csvio.sweep_rows(rows), "sweep")
        summary.update(_sweep_summary(rows))
    w.finish(summary)


def cmd_fig1(args, argv):
    workers = worker_count(args.threads)
    spec = presets.fig1_spec(args.case)
    w = _Writer(Path(args.out), argv, spec, workers)
    o = presets.run_fig1(args.case, workers)
    w.run_files(o.run)
    summary = _report_summary(o.run)
    summary.update({"case": args.case,
                    "fitted_exponent": o.fit.exponent,
                    "fit_rms": o.fit.rms_residual,
                    "expected_exponent": presets.FIG1_EXPONENT[args.case],
                    "profile_rms_vs_law": o.profile_rms})
    w.finish(summary)


def cmd_fig2(args, argv):
    workers = worker_count(args.threads)
    spec = presets.fig2_spec(args.resolution)
    w = _Writer(Path(args.out), argv, spec, workers)
    o = presets.run_fig2(args.resolution, workers)
    w.run_files(o.run)
    w.csv(csvio.sweep_rows(o.rows), "sweep")
    w.finish({"E1_rms_vs_law": o.e1_rms,
              "E2_rms_vs_law_scaled_at_pi": o.e2_rms,
              "E2_sign_changes_pi": o.crossings_pi,
              "window_consistent": o.window_agreement,
              "window_mismatches_pi": o.window_mismatches})


def cmd_fig3(args, argv):
    workers = worker_count(args.threads)
    spec = presets.fig3_spec(args.peak_area)
    w = _Writer(Path(args.out), argv, spec, workers)
    o = presets.run_fig3(args.peak_area, tail=None, workers=workers)
    w.run_files(o.focus)
    w.csv(csvio.sweep_rows(o.rows), "sweep")
    summary = _report_summary(o.focus)
    summary["peak_area_pi"] = args.peak_area
    summary.update(_sweep_summary(o.rows))
    summary["damped_oscillation"] = o.damped
    w.finish(summary)


def cmd_sweep(args, argv):
    spec = load_config(args.config)
    workers = worker_count(args.threads)
    w = _Writer(Path(args.out), argv, spec, workers)
    rows = presets.sweep_rephasing_area(spec, args.from_pi, args.to_pi,
                                        args.step_pi, workers)
    w.csv(csvio.sweep_rows(rows), "sweep")
    w.finish(_sweep_summary(rows))


def cmd_selftest(args, argv):
    print(f"backend: {backend_name()}")
    results = acceptance.run_all(stream=sys.stdout)
    print()
    print(acceptance.summary_table(results), end="")
    if not all(c.passed for c in results):
        return EXIT_SELFTEST
    return 0


def _area(text):
    x = float(text)
    if not math.isfinite(x) or x < 0:
        raise argparse.ArgumentTypeError(f"not a non-negative area: {text}")
    return x


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("--threads", type=int, default=None,
                        help="worker threads (default: $ECHOFORM_THREADS or 1)")

    p = argparse.ArgumentParser(
        prog="echoform",
        description="Photon-echo simulations of Gaussian-beam driven ensembles.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("run", parents=[common], help="run a config file")
    s.add_argument("config")
    s.add_argument("--peak-search", action="store_true",
                   help="read echoes at the largest |signal| within 0.3 us")
    s.set_defaults(func=cmd_run)

    s = sub.add_parser("fig1", parents=[common], help="two-pulse echo cases")
    s.add_argument("--case", choices=sorted(presets.FIG1_CASES), default="d")
    s.set_defaults(func=cmd_fig1)

    s = sub.add_parser("fig2", parents=[common],
                       help="double rephasing with a linear area ramp")
    s.add_argument("--resolution", type=_area, default=1.0 / 64.0,
                   help="area step in units of pi (default 1/64)")
    s.set_defaults(func=cmd_fig2)

    s = sub.add_parser("fig3", parents=[common],
                       help="Gaussian double rephasing and efficiency sweep")
    s.add_argument("--peak-area", type=_area, default=1.0,
                   help="rephasing peak area in units of pi (default 1)")
    s.set_defaults(func=cmd_fig3)

    s = sub.add_parser("sweep", parents=[common],
                       help="sweep the rephasing peak area of a config")
    s.add_argument("--from", dest="from_pi", type=_area, required=True)
    s.add_argument("--to", dest="to_pi", type=_area, required=True)
    s.add_argument("--step", dest="step_pi", type=float, required=True)
    s.add_argument("config")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("selftest", help="run the acceptance criteria")
    s.set_defaults(func=cmd_selftest)
    return p


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "threads", None) is not None and args.threads < 1:
        parser.error("--threads must be >= 1")
    try:
        return args.func(args, ["echoform", *argv]) or 0
    except ConfigErrors as exc:
        for err in exc.errors:
            print(f"{getattr(args, 'config', '<preset>')}: {err}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"echoform: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"echoform: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
