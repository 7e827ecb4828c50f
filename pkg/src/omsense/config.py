"""TOML run configuration with explicit physical units.

Rates accept ``Hz``, ``kHz``, ``MHz``, ``GHz`` (multiplied by ``2 pi``),
``rad/s`` or ``Gamma`` (a multiple of the configured ``Gamma``). A bare number
is rejected for a rate unless it is zero. Angles take ``pi`` or ``rad``, powers
``W``/``mW``/``uW``, lengths ``m``/``um``/``nm``, durations
``s``/``ms``/``us``/``ns`` or ``periods`` (mechanical periods).

Example::

    [physical]
    Gamma = "100 MHz"
    kappa = "0.002 Gamma"
    omega_m = "10 kHz"
    g = "1 Hz"
    P_in = "8.06 mW"

    [sweep]
    phi = { start = "-0.03 pi", stop = "0.01 pi", points = 401 }
"""

from __future__ import annotations

import math
import re
import sys
from dataclasses import dataclass, field

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError, DomainError
from .params import TWO_PI, NanosphereParams, PhysicalParams, emitter_count, zero_point_motion

RATE_UNITS = {"hz": TWO_PI, "khz": TWO_PI * 1e3, "mhz": TWO_PI * 1e6, "ghz": TWO_PI * 1e9,
              "rad/s": 1.0}
ANGLE_UNITS = {"pi": math.pi, "rad": 1.0}
POWER_UNITS = {"w": 1.0, "mw": 1e-3, "uw": 1e-6}
LENGTH_UNITS = {"m": 1.0, "um": 1e-6, "nm": 1e-9}
TIME_UNITS = {"s": 1.0, "ms": 1e-3, "us": 1e-6, "ns": 1e-9}

PHYSICAL_RATES = ("Gamma", "kappa", "kappa1", "kappa2", "delta", "omega_m", "gamma_m", "g")
PHYSICAL_KEYS = PHYSICAL_RATES + ("phi", "P_in", "lambda_d", "I_drive")
REQUIRED_PHYSICAL = ("Gamma", "kappa", "omega_m", "g", "P_in")
SWEEP_AXES = ("phi", "delta", "power", "kappa", "g")
SENSING_KEYS = ("g1", "g2", "drop", "branch", "metric")
DYNAMICS_KEYS = ("t_end", "tol", "method", "stiffness", "gamma_m_ratio", "initial", "perturb",
                 "samples", "jump_threshold", "settle_tol", "max_periods", "axis")
NANOSPHERE_KEYS = ("N", "p_e", "Omega_c", "Delta_c", "gamma_c", "q_zpf", "density", "radius",
                   "mass")
OUTPUT_KEYS = ("format", "precision", "dir")
SECTIONS = ("physical", "sensing", "sweep", "dynamics", "nanosphere", "output")

_NUM_UNIT = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*\*?\s*(\S*)\s*$")


def locate(text, section, key):
    """1-based line where ``key`` is set inside ``[section]``, or ``None``."""
    current = None
    pat = re.compile(r"^\s*" + re.escape(key) + r"\s*=")
    for n, line in enumerate(text.splitlines(), start=1):
        m = re.match(r"^\s*\[([^\]]+)\]", line)
        if m:
            current = m.group(1).strip()
            continue
        if current == section and pat.match(line):
            return n
    return None


def split_quantity(value):
    """``(number, unit)`` from a number or a ``"<number> <unit>"`` string."""
    if isinstance(value, bool):
        raise ValueError("booleans are not quantities")
    if isinstance(value, (int, float)):
        return float(value), ""
    if not isinstance(value, str):
        raise ValueError(f"cannot read a quantity from {value!r}")
    m = _NUM_UNIT.match(value)
    if not m:
        raise ValueError(f"cannot read a quantity from {value!r}")
    return float(m.group(1)), m.group(2)


def parse_rate(value, Gamma=None):
    """Angular rate in rad/s; bare numbers are only accepted when zero."""
    x, unit = split_quantity(value)
    if unit == "":
        if x == 0:
            return 0.0
        raise ValueError(f"rate {value!r} needs a unit (Hz, kHz, MHz, GHz, rad/s or Gamma)")
    if unit == "Gamma":
        if Gamma is None:
            raise ValueError("'Gamma' cannot be used as a unit here")
        return x * Gamma
    factor = RATE_UNITS.get(unit.lower())
    if factor is None:
        raise ValueError(f"unknown rate unit {unit!r}")
    return x * factor


def _parse_with(table, default_factor, what):
    def parse(value):
        x, unit = split_quantity(value)
        if unit == "":
            return x * default_factor
        factor = table.get(unit.lower())
        if factor is None:
            raise ValueError(f"unknown {what} unit {unit!r}")
        return x * factor

    return parse


parse_angle = _parse_with(ANGLE_UNITS, 1.0, "angle")
parse_power = _parse_with(POWER_UNITS, 1.0, "power")
parse_length = _parse_with(LENGTH_UNITS, 1.0, "length")


@dataclass(frozen=True)
class SweepAxis:
    """Linear axis in internal units (rad, rad/s or W)."""

    name: str
    start: float
    stop: float
    points: int

    def values(self):
        return np.linspace(self.start, self.stop, self.points)


@dataclass
class RunConfig:
    physical: PhysicalParams
    sensing: dict
    sweeps: dict
    dynamics: dict
    nanosphere: NanosphereParams | None
    output: dict
    defaults: list = field(default_factory=list)


DEFAULT_SENSING = {"g1": TWO_PI * 1.0, "g2": TWO_PI * 3.0, "drop": 0.1, "branch": "upper",
                   "metric": "inverse"}
DEFAULT_DYNAMICS = {"t_end": None, "tol": 1e-9, "method": "DOP853", "stiffness": None,
                    "gamma_m_ratio": None, "initial": "vacuum", "perturb": 0.0, "samples": 501,
                    "jump_threshold": 0.25, "settle_tol": 1e-10, "max_periods": 1000.0,
                    "axis": "phi"}
DEFAULT_OUTPUT = {"format": "csv", "precision": 12, "dir": "."}
INITIAL_STATES = ("vacuum", "lower", "middle", "upper", "single")


class _Reader:
    """Wraps a parsed section so that every error names its key and line."""

    def __init__(self, text, section, table, allowed):
        self.text = text
        self.section = section
        self.table = table if table is not None else {}
        if not isinstance(self.table, dict):
            raise ConfigError(f"[{section}] must be a table", key=section,
                              line=locate(text, section, section))
        for key in self.table:
            if key not in allowed:
                raise ConfigError(f"unknown key in [{section}]", key=f"{section}.{key}",
                                  line=locate(text, section, key))

    def fail(self, key, msg):
        return ConfigError(msg, key=f"{self.section}.{key}", line=locate(self.text, self.section, key))

    def get(self, key, parser, default=None):
        if key not in self.table:
            return default
        try:
            return parser(self.table[key])
        except (ValueError, TypeError) as exc:
            raise self.fail(key, str(exc)) from None

    def __contains__(self, key):
        return key in self.table


def _as_int(v):
    if isinstance(v, bool) or not isinstance(v, int):
        raise ValueError(f"expected an integer, got {v!r}")
    return v


def _as_float(v):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ValueError(f"expected a number, got {v!r}")
    return float(v)


def _as_str(choices):
    def parse(v):
        if v not in choices:
            raise ValueError(f"expected one of {', '.join(choices)}, got {v!r}")
        return v

    return parse


def _parse_duration(v):
    x, unit = split_quantity(v)
    if unit == "periods":
        return ("periods", x)
    if unit == "":
        return ("s", x)
    factor = TIME_UNITS.get(unit)
    if factor is None:
        raise ValueError(f"unknown time unit {unit!r}")
    return ("s", x * factor)


def _physical(text, table, defaults):
    r = _Reader(text, "physical", table, PHYSICAL_KEYS)
    present = set(r.table)
    missing = [k for k in REQUIRED_PHYSICAL if k not in present]
    if "kappa" in missing and {"kappa1", "kappa2"} <= present:
        missing.remove("kappa")
    if "P_in" in missing and "I_drive" in present:
        missing.remove("P_in")
    if missing:
        raise ConfigError(
            "missing required keys in [physical]: " + ", ".join(missing)
            + " (required: " + ", ".join(REQUIRED_PHYSICAL) + ")",
            key="physical." + missing[0],
        )
    Gamma = r.get("Gamma", parse_rate)
    if not Gamma > 0:
        raise r.fail("Gamma", "Gamma must be positive")

    def rate(v):
        return parse_rate(v, Gamma)

    kw = {"Gamma": Gamma}
    if "kappa" in r:
        if "kappa1" in r or "kappa2" in r:
            raise r.fail("kappa", "give either kappa or kappa1/kappa2, not both")
        kw["kappa1"] = kw["kappa2"] = r.get("kappa", rate)
    else:
        kw["kappa1"] = r.get("kappa1", rate)
        kw["kappa2"] = r.get("kappa2", rate)
    for key in ("delta", "omega_m", "gamma_m", "g"):
        if key in r:
            kw[key] = r.get(key, rate)
    if "phi" in r:
        kw["phi"] = r.get("phi", parse_angle)
    if "P_in" in r:
        kw["P_in"] = r.get("P_in", parse_power)
    if "lambda_d" in r:
        kw["lambda_d"] = r.get("lambda_d", parse_length)
    if "I_drive" in r:
        kw["I_drive"] = r.get("I_drive", _as_float)
    for key in ("delta", "phi", "gamma_m", "lambda_d"):
        if key not in r:
            defaults.append(f"physical.{key}")
    try:
        return PhysicalParams(**kw)
    except (DomainError, ValueError) as exc:
        bad = next((k for k in PHYSICAL_KEYS if k in str(exc) and k in r), None)
        raise ConfigError(str(exc), key=f"physical.{bad}" if bad else "physical",
                          line=locate(text, "physical", bad) if bad else None) from None


def _sweeps(text, table, Gamma):
    r = _Reader(text, "sweep", table, SWEEP_AXES)
    parsers = {
        "phi": parse_angle,
        "delta": lambda v: parse_rate(v, Gamma),
        "kappa": lambda v: parse_rate(v, Gamma),
        "g": lambda v: parse_rate(v, Gamma),
        "power": parse_power,
    }
    out = {}
    for name, spec in r.table.items():
        if not isinstance(spec, dict) or set(spec) != {"start", "stop", "points"}:
            raise r.fail(name, "sweep axes need exactly start, stop and points")
        start = r.get(name, lambda s: parsers[name](s["start"]))
        stop = r.get(name, lambda s: parsers[name](s["stop"]))
        points = r.get(name, lambda s: _as_int(s["points"]))
        if not (math.isfinite(start) and math.isfinite(stop)):
            raise r.fail(name, "sweep range must be finite")
        if points < 2:
            raise r.fail(name, "a sweep needs at least 2 points")
        out[name] = SweepAxis(name, start, stop, points)
    return out


def _sensing(text, table, Gamma):
    r = _Reader(text, "sensing", table, SENSING_KEYS)
    out = dict(DEFAULT_SENSING)
    out["g1"] = r.get("g1", lambda v: parse_rate(v, Gamma), out["g1"])
    out["g2"] = r.get("g2", lambda v: parse_rate(v, Gamma), out["g2"])
    out["drop"] = r.get("drop", _as_float, out["drop"])
    out["branch"] = r.get("branch", _as_str(("upper", "lower")), out["branch"])
    out["metric"] = r.get("metric", _as_str(("inverse", "direct")), out["metric"])
    if out["g1"] > out["g2"]:
        raise r.fail("g1", "g1 must not exceed g2")
    if not 0 < out["drop"] < 1:
        raise r.fail("drop", "drop must lie in (0, 1)")
    return out


def _dynamics(text, table):
    r = _Reader(text, "dynamics", table, DYNAMICS_KEYS)
    out = dict(DEFAULT_DYNAMICS)
    out["t_end"] = r.get("t_end", _parse_duration, out["t_end"])
    for key in ("tol", "stiffness", "gamma_m_ratio", "perturb", "jump_threshold", "settle_tol",
                "max_periods"):
        out[key] = r.get(key, _as_float, out[key])
    out["samples"] = r.get("samples", _as_int, out["samples"])
    out["method"] = r.get("method", _as_str(("DOP853", "RK45", "Radau", "BDF", "LSODA")),
                          out["method"])
    out["initial"] = r.get("initial", _as_str(INITIAL_STATES), out["initial"])
    out["axis"] = r.get("axis", _as_str(("phi", "delta")), out["axis"])
    for key in ("tol", "settle_tol", "max_periods", "jump_threshold"):
        if not out[key] > 0:
            raise r.fail(key, f"{key} must be positive")
    if out["stiffness"] is not None and not out["stiffness"] > 0:
        raise r.fail("stiffness", "stiffness must be positive")
    if out["samples"] < 2:
        raise r.fail("samples", "need at least 2 samples")
    return out


def _nanosphere(text, table, Gamma):
    if table is None:
        return None
    r = _Reader(text, "nanosphere", table, NANOSPHERE_KEYS)
    rate = lambda v: parse_rate(v, Gamma)  # noqa: E731
    N = r.get("N", _as_int)
    if N is None:
        density = r.get("density", _as_float)
        radius = r.get("radius", parse_length)
        if density is None or radius is None:
            raise r.fail("N", "give N or both density and radius")
        N = emitter_count(density, radius)
    q_zpf = r.get("q_zpf", parse_length)
    mass = r.get("mass", _as_float)
    if q_zpf is None and mass is None:
        raise r.fail("q_zpf", "give q_zpf or the mass (kg)")
    kw = {}
    for key, parser in (("p_e", _as_float), ("Omega_c", rate), ("Delta_c", rate),
                        ("gamma_c", _as_float)):
        val = r.get(key, parser)
        if val is None:
            raise r.fail(key, f"missing required key {key}")
        kw[key] = val
    return {"N": N, "q_zpf": q_zpf, "mass": mass, **kw}


def _output(text, table):
    r = _Reader(text, "output", table, OUTPUT_KEYS)
    out = dict(DEFAULT_OUTPUT)
    out["format"] = r.get("format", _as_str(("csv", "json")), out["format"])
    out["precision"] = r.get("precision", _as_int, out["precision"])
    out["dir"] = r.get("dir", str, out["dir"])
    if not 1 <= out["precision"] <= 17:
        raise r.fail("precision", "precision must lie in [1, 17]")
    return out


def parse_config(text: str) -> RunConfig:
    """Parse and validate a TOML run configuration.

    Raises
    ------
    ConfigError
        Naming the offending key and, when it can be found, its line.
    """
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ConfigError(f"malformed TOML: {exc}", line=int(m.group(1)) if m else None) from None
    for key in data:
        if key not in SECTIONS:
            line = next((n for n, s in enumerate(text.splitlines(), 1)
                         if re.match(r"^\s*\[?\s*" + re.escape(key) + r"\b", s)), None)
            raise ConfigError("unknown section or top-level key", key=key, line=line)
    if "physical" not in data:
        raise ConfigError("missing [physical] section; required keys: "
                          + ", ".join(REQUIRED_PHYSICAL), key="physical")
    defaults = []
    physical = _physical(text, data["physical"], defaults)
    Gamma = physical.Gamma
    for name in ("sensing", "dynamics", "output"):
        if name not in data:
            defaults.append(name)
    nano = _nanosphere(text, data.get("nanosphere"), Gamma)
    nanosphere = None
    if nano is not None:
        q_zpf = nano["q_zpf"]
        try:
            if q_zpf is None:
                q_zpf = zero_point_motion(nano["mass"], physical.omega_m)
            nanosphere = NanosphereParams(nano["N"], nano["p_e"], nano["Omega_c"], nano["Delta_c"],
                                          nano["gamma_c"], q_zpf)
        except DomainError as exc:
            raise ConfigError(str(exc), key="nanosphere") from None
    return RunConfig(
        physical=physical,
        sensing=_sensing(text, data.get("sensing"), Gamma),
        sweeps=_sweeps(text, data.get("sweep"), Gamma),
        dynamics=_dynamics(text, data.get("dynamics")),
        nanosphere=nanosphere,
        output=_output(text, data.get("output")),
        defaults=defaults,
    )


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


__all__ = [
    "RunConfig",
    "SweepAxis",
    "parse_config",
    "load_config",
    "parse_rate",
    "parse_angle",
    "parse_power",
    "parse_length",
    "split_quantity",
]
