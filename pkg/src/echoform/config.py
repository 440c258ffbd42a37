"""Experiment description files.

A config is a sectioned ``key = value`` document::

    # two-pulse echo
    [simulation]
    sample_dt_us = 0.1

    [pulse.D]
    t_us = 0.1
    area_pi = 0.5

    [pulse.R]
    t_us = 2.1
    area_pi = 1.0
    profile = uniform

Sections are ``[simulation]``, ``[spectral]``, ``[spatial]``,
``[pulse.NAME]`` (in time order) and an optional ``[sweep]``.  A pulse
without a ``profile`` key follows the beam profile of ``[spatial]``.
``#`` starts a comment.  Parsing never stops at the first problem; every malformed line
or violated constraint becomes one :class:`ConfigError`.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

from .grids import SPATIAL_MODES

_NUMBER = re.compile(r"[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?")
_INTEGER = re.compile(r"[+-]?\d+")
_SECTION = re.compile(r"\[([^\]]*)\]")
_PULSE_NAME = re.compile(r"[A-Za-z][A-Za-z0-9_]*")

ERROR_KINDS = ("unknown-section", "unknown-key", "duplicate-key",
               "bad-number", "constraint-violation")


@dataclass(frozen=True)
class ConfigError:
    line: int
    kind: str
    message: str

    def __str__(self):
        return f"line {self.line}: {self.kind}: {self.message}"


class ConfigErrors(ValueError):
    """Raised by :func:`parse_config`; carries every error and the partial spec."""

    def __init__(self, errors, spec=None):
        self.errors = list(errors)
        self.spec = spec
        super().__init__("\n".join(str(e) for e in self.errors))


@dataclass
class SimulationSection:
    sample_dt_us: float = 0.1
    pulse_duration_us: float = 0.1
    gamma2_per_us: float = 0.0
    t_end_us: Optional[float] = None


@dataclass
class SpectralSection:
    n_groups: int = 281
    spacing_khz: float = 10.0
    fwhm_mhz: float = 1.2


@dataclass
class SpatialSection:
    mode: str = "gaussian"
    n_groups: int = 41
    coverage: float = 0.9955


@dataclass
class PulseSpec:
    name: str
    t_us: Optional[float] = None
    area_pi: Optional[float] = None
    rabi_mhz: Optional[float] = None
    profile: Optional[str] = None  # None follows the spatial mode
    phase_pi: float = 0.0

    def follows_profile(self) -> bool:
        return self.profile != "uniform"

    def area(self, duration_us: float) -> float:
        """Peak pulse area in radians."""
        if self.area_pi is not None:
            return self.area_pi * math.pi
        return 2.0 * math.pi * self.rabi_mhz * duration_us


@dataclass
class SweepSpec:
    parameter: str = ""
    from_pi: Optional[float] = None
    to_pi: Optional[float] = None
    step_pi: Optional[float] = None


@dataclass
class ExperimentSpec:
    simulation: SimulationSection = field(default_factory=SimulationSection)
    spectral: SpectralSection = field(default_factory=SpectralSection)
    spatial: SpatialSection = field(default_factory=SpatialSection)
    pulses: list = field(default_factory=list)
    sweep: Optional[SweepSpec] = None
    # (section, key) -> source line, for error reporting only
    lines: dict = field(default_factory=dict, compare=False, repr=False)

    def pulse(self, name: str) -> PulseSpec:
        for p in self.pulses:
            if p.name == name:
                return p
        raise KeyError(name)

    def line_of(self, section: str, key: Optional[str] = None) -> int:
        return self.lines.get((section, key), self.lines.get((section, None), 1))

    def sweep_targets(self, parameter: Optional[str] = None) -> list:
        """Pulse names addressed by a sweep parameter such as ``R1.area``.

        ``R.area`` addresses every pulse named ``R`` followed by digits, so
        one swept area drives R1 and R2 together.
        """
        parameter = parameter if parameter is not None else self.sweep.parameter
        base, dot, attr = parameter.partition(".")
        if not dot or attr != "area" or not base:
            return []
        names = [p.name for p in self.pulses]
        if base in names:
            return [base]
        return [n for n in names
                if n.startswith(base) and n[len(base):].isdigit()]

    def with_pulse_area(self, names, area_pi: float) -> ExperimentSpec:
        pulses = [replace(p, area_pi=area_pi, rabi_mhz=None)
                  if p.name in names else replace(p) for p in self.pulses]
        return replace(self, pulses=pulses, lines=dict(self.lines))


_SCALARS = {
    "simulation": {"sample_dt_us": float, "pulse_duration_us": float,
                   "gamma2_per_us": float, "t_end_us": float},
    "spectral": {"n_groups": int, "spacing_khz": float, "fwhm_mhz": float},
    "spatial": {"mode": str, "n_groups": int, "coverage": float},
    "sweep": {"parameter": str, "from_pi": float, "to_pi": float,
              "step_pi": float},
    "pulse": {"t_us": float, "area_pi": float, "rabi_mhz": float,
              "profile": str, "phase_pi": float},
}


def _convert(raw: str, kind):
    if kind is float:
        if not _NUMBER.fullmatch(raw):
            raise ValueError
        return float(raw)
    if kind is int:
        if not _INTEGER.fullmatch(raw):
            raise ValueError
        return int(raw)
    return raw


def read_config(text: str) -> tuple[ExperimentSpec, list]:
    """Parse ``text`` into a spec plus the list of all errors found."""
    spec = ExperimentSpec()
    errors = []
    section = None        # name used for error reporting / line tracking
    target = None         # object receiving assignments
    keys = {}
    seen_sections = set()
    seen_keys = set()

    if text.startswith("\ufeff"):
        text = text[1:]
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _SECTION.fullmatch(line)
        if m:
            name = m.group(1).strip()
            section, target, keys = name, None, {}
            if name in seen_sections:
                errors.append(ConfigError(lineno, "duplicate-key",
                                          f"section [{name}] appears twice"))
                continue
            seen_sections.add(name)
            if name.startswith("pulse."):
                pname = name[len("pulse."):]
                if not _PULSE_NAME.fullmatch(pname):
                    errors.append(ConfigError(
                        lineno, "unknown-section",
                        f"bad pulse name {pname!r} in [{name}]"))
                    continue
                target = PulseSpec(pname)
                spec.pulses.append(target)
                keys = _SCALARS["pulse"]
            elif name in ("simulation", "spectral", "spatial", "sweep"):
                if name == "sweep":
                    spec.sweep = SweepSpec()
                target = getattr(spec, name)
                keys = _SCALARS[name]
            else:
                errors.append(ConfigError(lineno, "unknown-section",
                                          f"unknown section [{name}]"))
                continue
            spec.lines[(section, None)] = lineno
            continue

        key, eq, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not eq or not key:
            errors.append(ConfigError(lineno, "unknown-key",
                                      f"expected 'key = value', got {line!r}"))
            continue
        if section is None:
            errors.append(ConfigError(lineno, "unknown-section",
                                      f"key {key!r} appears before any section"))
            continue
        if target is None:
            continue  # already reported the bad section header
        if key not in keys:
            errors.append(ConfigError(lineno, "unknown-key",
                                      f"unknown key {key!r} in [{section}]"))
            continue
        if (section, key) in seen_keys:
            errors.append(ConfigError(lineno, "duplicate-key",
                                      f"key {key!r} repeated in [{section}]"))
            continue
        seen_keys.add((section, key))
        try:
            setattr(target, key, _convert(value, keys[key]))
        except ValueError:
            errors.append(ConfigError(lineno, "bad-number",
                                      f"{key} = {value!r} is not a valid number"))
            continue
        spec.lines[(section, key)] = lineno

    errors.extend(validate_spec(spec))
    errors.sort(key=lambda e: e.line)
    return spec, errors


def parse_config(text: str) -> ExperimentSpec:
    spec, errors = read_config(text)
    if errors:
        raise ConfigErrors(errors, spec)
    return spec


def load_config(path) -> ExperimentSpec:
    text = Path(path).read_text(encoding="utf-8")
    return parse_config(text)


def validate_spec(spec: ExperimentSpec) -> list:
    """Cross-field checks; returns a (possibly empty) list of errors."""
    errs = []

    def bad(section, key, msg):
        errs.append(ConfigError(spec.line_of(section, key),
                                "constraint-violation", msg))

    sim = spec.simulation
    if not sim.sample_dt_us > 0:
        bad("simulation", "sample_dt_us", "sample_dt_us must be positive")
    if not sim.pulse_duration_us > 0:
        bad("simulation", "pulse_duration_us",
            "pulse_duration_us must be positive")
    if sim.gamma2_per_us < 0:
        bad("simulation", "gamma2_per_us", "gamma2_per_us must be >= 0")

    sp = spec.spectral
    if sp.n_groups < 1 or sp.n_groups % 2 == 0:
        bad("spectral", "n_groups",
            f"spectral n_groups={sp.n_groups} must be odd and positive "
            "(grid is centered on zero detuning)")
    if not sp.spacing_khz > 0:
        bad("spectral", "spacing_khz", "spacing_khz must be positive")
    if not sp.fwhm_mhz > 0:
        bad("spectral", "fwhm_mhz", "fwhm_mhz must be positive")

    sa = spec.spatial
    if sa.mode not in SPATIAL_MODES:
        bad("spatial", "mode",
            f"mode {sa.mode!r} not one of {', '.join(SPATIAL_MODES)}")
    if sa.n_groups < 1:
        bad("spatial", "n_groups", "spatial n_groups must be >= 1")
    if not 0 < sa.coverage < 1:
        bad("spatial", "coverage", f"coverage {sa.coverage!r} outside (0, 1)")

    if not spec.pulses:
        errs.append(ConfigError(1, "constraint-violation",
                                "at least one pulse required"))
    prev = None
    for p in spec.pulses:
        sec = f"pulse.{p.name}"
        if p.t_us is None:
            bad(sec, None, f"pulse {p.name} has no t_us")
        elif p.t_us < 0:
            bad(sec, "t_us", f"pulse {p.name} starts before t = 0")
        if (p.area_pi is None) == (p.rabi_mhz is None):
            bad(sec, None,
                f"pulse {p.name} needs exactly one of area_pi / rabi_mhz")
        for key in ("area_pi", "rabi_mhz"):
            val = getattr(p, key)
            if val is not None and val < 0:
                bad(sec, key, f"pulse {p.name}: {key} must be >= 0")
        if p.profile is None:
            pass
        elif p.profile not in SPATIAL_MODES:
            bad(sec, "profile", f"pulse {p.name}: unknown profile {p.profile!r}")
        elif p.profile not in ("uniform", sa.mode):
            bad(sec, "profile",
                f"pulse {p.name}: profile {p.profile!r} does not match "
                f"spatial mode {sa.mode!r}")
        if prev is not None and p.t_us is not None and prev.t_us is not None:
            if p.t_us <= prev.t_us:
                bad(sec, "t_us",
                    f"pulse {p.name} does not start after pulse {prev.name}")
            elif p.t_us < prev.t_us + sim.pulse_duration_us - 1e-9:
                bad(sec, "t_us",
                    f"pulses {prev.name} and {p.name} overlap "
                    f"({prev.name} ends at "
                    f"{prev.t_us + sim.pulse_duration_us:g} us)")
        prev = p

    if sim.t_end_us is not None and spec.pulses:
        last = spec.pulses[-1]
        if last.t_us is not None and \
                sim.t_end_us < last.t_us + sim.pulse_duration_us - 1e-9:
            bad("simulation", "t_end_us",
                f"t_end_us ends before pulse {last.name} finishes")

    sw = spec.sweep
    if sw is not None:
        for key in ("from_pi", "to_pi", "step_pi"):
            if getattr(sw, key) is None:
                bad("sweep", None, f"sweep needs {key}")
        if sw.step_pi is not None and not sw.step_pi > 0:
            bad("sweep", "step_pi", "sweep step_pi must be positive")
        if sw.from_pi is not None and sw.to_pi is not None:
            if sw.to_pi < sw.from_pi:
                bad("sweep", "to_pi", "sweep range is empty (to_pi < from_pi)")
            if sw.from_pi < 0:
                bad("sweep", "from_pi", "sweep areas must be >= 0")
        if not spec.sweep_targets(sw.parameter):
            bad("sweep", "parameter",
                f"sweep parameter {sw.parameter!r} does not name a pulse area")
    return errs


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def dump_config(spec: ExperimentSpec) -> str:
    """Serialise ``spec`` so that ``parse_config(dump_config(s)) == s``."""
    out = []

    def section(name, obj, keys):
        out.append(f"[{name}]")
        for key in keys:
            val = getattr(obj, key)
            if val is not None:
                out.append(f"{key} = {_fmt(val)}")
        out.append("")

    section("simulation", spec.simulation,
            [f.name for f in fields(SimulationSection)])
    section("spectral", spec.spectral, [f.name for f in fields(SpectralSection)])
    section("spatial", spec.spatial, [f.name for f in fields(SpatialSection)])
    for p in spec.pulses:
        section(f"pulse.{p.name}", p,
                [f.name for f in fields(PulseSpec) if f.name != "name"])
    if spec.sweep is not None:
        section("sweep", spec.sweep, [f.name for f in fields(SweepSpec)])
    return "\n".join(out)
