"""CSV artifacts written by the command line tools."""
from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from .dynamics import US

SCHEMAS = {
    "timeseries": ("t_us", "sum_im_rho12", "sum_re_rho12"),
    "profile": ("j", "x_sigma", "G_j", "im_rho12_echo", "emissive"),
    "sweep": ("phi_r_over_pi", "E1_sim", "E2_sim", "E2_eff", "eta",
              "E1_eq3", "E2_eq4"),
}


def _cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    x = float(value)
    if x == 0.0:
        x = 0.0  # no "-0" in output
    if math.isnan(x):
        return "nan"
    return f"{x:.9g}"


def emit_csv(rows, schema: str, path) -> Path:
    """Write ``rows`` (sequences in schema column order) with a header."""
    if schema not in SCHEMAS:
        raise ValueError(f"unknown CSV schema {schema!r}")
    cols = SCHEMAS[schema]
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(cols)
        for row in rows:
            row = tuple(row)
            if len(row) != len(cols):
                raise ValueError(f"{schema} row has {len(row)} fields, "
                                 f"expected {len(cols)}")
            writer.writerow([_cell(v) for v in row])
    return path


def timeseries_rows(result):
    for t, im, re in zip(result.times, result.total_im_rho12,
                         result.total_re_rho12):
        yield (t / US, im, re)


def profile_rows(result, report):
    echo = report.per_group_echo[-1]
    for j, (x, g, e, m) in enumerate(zip(result.positions, result.amplitudes,
                                         echo, report.emissive_mask)):
        yield (j, x, g, e, bool(m))


def sweep_rows(rows):
    for r in rows:
        yield (r.area_pi, r.e1, r.e2, r.e2_eff, r.eta, r.e1_law, r.e2_law)
