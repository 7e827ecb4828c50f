"""Command-line entry point: ``omsense <subcommand> [--config run.toml] [--out DIR]``.

Every subcommand writes one data file (``<subcommand>.csv`` or ``.json``) and a
``<subcommand>.meta.json`` sidecar holding the full parameter set, the grid,
the keys that fell back to defaults, the package version and a timestamp. The
data file itself is a pure function of the configuration.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
from datetime import datetime, timezone

import numpy as np

from . import __version__, dynamics, sensing, spectrum, steadystate
from .config import (
    DEFAULT_DYNAMICS,
    DEFAULT_OUTPUT,
    DEFAULT_SENSING,
    RunConfig,
    SweepAxis,
    load_config,
    parse_angle,
    parse_rate,
)
from .errors import ConfigError, NoPhysicalSolutionError, UndefinedBandwidthError
from .params import TWO_PI, PhysicalParams, at_stiffness, nanosphere_coupling, paper_params

SUBCOMMANDS = ("eigen", "coeffs", "steady", "region-map", "response", "dynamics", "hysteresis",
               "sense-map", "sense-cut", "nanosphere-g")

DEFAULT_POINTS = 401


class Table:
    """Column-oriented output with names and units."""

    def __init__(self, columns):
        self.columns = list(columns)  # (name, unit)
        self.rows = []
        self.summary = {}

    def add(self, *values):
        if len(values) != len(self.columns):
            raise ValueError("row length does not match the columns")
        self.rows.append(values)


def _fmt(v, prec):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    v = float(v)
    if math.isnan(v):
        return "nan"
    return f"{v:.{prec}g}"


def _jsonable(v, prec):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, str):
        return v
    v = float(v)
    return None if not math.isfinite(v) else float(f"{v:.{prec}g}")


def write_table(table: Table, path, fmt, prec):
    if fmt == "csv":
        header = ",".join(f"{n} [{u}]" for n, u in table.columns)
        lines = ["# " + header]
        lines += [",".join(_fmt(v, prec) for v in row) for row in table.rows]
        text = "\n".join(lines) + "\n"
    else:
        doc = {
            "columns": [n for n, _ in table.columns],
            "units": [u for _, u in table.columns],
            "rows": [[_jsonable(v, prec) for v in row] for row in table.rows],
        }
        text = json.dumps(doc, indent=1, sort_keys=False) + "\n"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def params_dict(p: PhysicalParams):
    d = dataclasses.asdict(p)
    d["derived"] = {
        "chi": p.chi,
        "I": p.intensity,
        "Omega": p.Omega,
        "omega_d": p.omega_d,
        "drive_t": p.intensity * p.chi / p.Gamma**3,
    }
    return d


def _axis(cfg: RunConfig, name, default):
    if name in cfg.sweeps:
        return cfg.sweeps[name]
    return default


def _default_phi_axis():
    return SweepAxis("phi", -0.03 * math.pi, 0.01 * math.pi, DEFAULT_POINTS)


def _default_delta_axis(p):
    return SweepAxis("delta", -0.2 * p.Gamma, 0.2 * p.Gamma, DEFAULT_POINTS)


def _dimless(name, value, p):
    """Dimensionless companion of a swept value and its unit label."""
    if name == "phi":
        return value / math.pi, "pi"
    if name in ("delta", "kappa", "g"):
        return value / p.Gamma, "Gamma"
    if name == "power":
        return value * 1e3, "mW"
    raise ValueError(name)


def _axis_unit(name):
    return {"phi": "rad", "delta": "rad/s", "kappa": "rad/s", "g": "rad/s", "power": "W"}[name]


def _set(p: PhysicalParams, name, value):
    key = {"power": "P_in"}.get(name, name)
    return p.with_(**{key: float(value)})


def cmd_eigen(cfg, args):
    p = cfg.physical
    phis = _axis(cfg, "phi", None)
    phi_vals = phis.values() if phis is not None else np.array([p.phi])
    dax = _axis(cfg, "delta", SweepAxis("delta", -2.0 * p.Gamma, 2.0 * p.Gamma, DEFAULT_POINTS))
    deltas = dax.values()
    G = p.Gamma
    t = Table([("phi", "rad"), ("phi_over_pi", "1"), ("delta", "rad/s"), ("delta_over_Gamma", "1"),
               ("re_lambda_plus", "Gamma"), ("im_lambda_plus", "Gamma"),
               ("re_lambda_minus", "Gamma"), ("im_lambda_minus", "Gamma")])
    for ph in phi_vals:
        lp, lm, _, _ = spectrum.closed_form_eigenvalues(deltas, p.kappa, ph, G)
        for dl, a, b in zip(deltas, lp, lm):
            t.add(ph, ph / math.pi, dl, dl / G, a.real / G, a.imag / G, b.real / G, b.imag / G)
    eps = spectrum.ep_locate(p.with_(phi=float(phi_vals[0])), (deltas[0], deltas[-1]))
    t.summary["exceptional_points_over_Gamma"] = [e / G for e in eps]
    return t, {"phi": _axis_meta(phis) if phis is not None else float(p.phi), "delta": _axis_meta(dax)}


def _grid(cfg, p):
    return _axis(cfg, "phi", _default_phi_axis()), _axis(cfg, "delta", _default_delta_axis(p))


def cmd_coeffs(cfg, args):
    p = cfg.physical
    G = p.Gamma
    pax, dax = _grid(cfg, p)
    phis, deltas = pax.values(), dax.values()
    P, D = np.meshgrid(phis, deltas / G, indexing="ij")
    a, b = steadystate.reduced_coefficients(D, p.kappa / G, P)
    t = Table([("phi", "rad"), ("phi_over_pi", "1"), ("delta", "rad/s"), ("delta_over_Gamma", "1"),
               ("A", "rad/s"), ("A_over_Gamma", "1"), ("B", "rad^2/s^2"), ("B_over_Gamma2", "1"),
               ("A2_minus_3B_over_Gamma2", "1"), ("beta_minus", "1"), ("beta_plus", "1")])
    for i, ph in enumerate(phis):
        for j, dl in enumerate(deltas):
            c = steadystate.coefficients(p.with_(phi=float(ph), delta=float(dl)))
            tp = steadystate.turning_points(c) if c.chi > 0 else None
            lo, hi = tp if tp is not None else (float("nan"), float("nan"))
            t.add(ph, ph / math.pi, dl, dl / G, a[i, j] * G, a[i, j], b[i, j] * G * G, b[i, j],
                  a[i, j] ** 2 - 3 * b[i, j], lo, hi)
    return t, {"phi": _axis_meta(pax), "delta": _axis_meta(dax)}


def cmd_steady(cfg, args):
    p = cfg.physical
    c = steadystate.coefficients(p)
    roots = steadystate.solve_intensity(c)
    t = Table([("index", "1"), ("beta", "1"), ("x", "1"), ("re_alpha1", "1"), ("im_alpha1", "1"),
               ("re_alpha2", "1"), ("im_alpha2", "1"), ("q", "1"), ("p", "1"),
               ("dI_dbeta", "s^-2"), ("stable", "bool"), ("branch", "-")])
    for i, s in enumerate(roots):
        slope = 3 * c.chi**2 * s.beta**2 + 2 * c.chi * c.A * s.beta + c.B
        t.add(i, s.beta, c.chi * s.beta / p.Gamma, s.alpha1.real, s.alpha1.imag, s.alpha2.real,
              s.alpha2.imag, s.q, s.p, slope, s.stable, s.branch)
    t.summary["A"] = c.A
    t.summary["B"] = c.B
    tp = steadystate.turning_points(c) if c.chi > 0 else None
    t.summary["turning_points"] = list(tp) if tp else None
    return t, {}


def cmd_region_map(cfg, args):
    p = cfg.physical
    G = p.Gamma
    pax, dax = _grid(cfg, p)
    res = steadystate.bistable_region_map(p, pax.values(), dax.values())
    cls, count = res.values["class"], res.values["count"]
    t = Table([("phi", "rad"), ("phi_over_pi", "1"), ("delta", "rad/s"), ("delta_over_Gamma", "1"),
               ("coupling_over_Gamma", "1"), ("count", "1"), ("class", "-")])
    for i, ph in enumerate(res.phi):
        for j, dl in enumerate(res.delta):
            t.add(ph, ph / math.pi, dl, dl / G, 0.5 * math.sin(ph), count[i, j],
                  steadystate.REGION_LABELS[int(cls[i, j])])
    bist = cls == steadystate.BISTABLE
    if bist.any():
        ii, jj = np.nonzero(bist)
        t.summary["bistable_phi_over_pi"] = [float(res.phi[ii].min() / math.pi),
                                             float(res.phi[ii].max() / math.pi)]
        t.summary["bistable_delta_over_Gamma"] = [float(res.delta[jj].min() / G),
                                                  float(res.delta[jj].max() / G)]
    t.summary["bistable_cells"] = int(bist.sum())
    return t, {"phi": _axis_meta(pax), "delta": _axis_meta(dax)}


def _couplings(cfg, args):
    if args.couplings == "pair":
        return [cfg.sensing["g1"], cfg.sensing["g2"]]
    return [cfg.physical.g]


def cmd_response(cfg, args):
    p = cfg.physical
    name = args.axis or next(iter(cfg.sweeps), "phi")
    ax = _axis(cfg, name, _default_phi_axis() if name == "phi" else None)
    if ax is None:
        raise ConfigError(f"no [sweep] entry for axis {name!r}", key=f"sweep.{name}")
    t = Table([(name, _axis_unit(name)), (f"{name}_dimless", _dimless(name, 1.0, p)[1]),
               ("g", "rad/s"), ("count", "1"), ("beta_lower", "1"), ("beta_middle", "1"),
               ("beta_upper", "1"), ("stable_lower", "bool"), ("stable_middle", "bool"),
               ("stable_upper", "bool"), ("status", "-")])
    nan = float("nan")
    for g in _couplings(cfg, args):
        for v in ax.values():
            q = _set(p.with_(g=g), name, v)
            try:
                roots = steadystate.solve_intensity(steadystate.coefficients(q))
                status = "ok"
            except NoPhysicalSolutionError:
                roots, status = [], "no-solution"
            betas = [r.beta for r in roots]
            flags = [r.stable for r in roots]
            if len(roots) == 1:
                betas, flags = [betas[0], nan, nan], [flags[0], False, False]
            elif len(roots) == 0:
                betas, flags = [nan] * 3, [False] * 3
            t.add(v, _dimless(name, v, p)[0], g, len(roots), *betas, *flags, status)
    return t, {name: _axis_meta(ax)}


def _dyn_params(cfg):
    p = cfg.physical
    d = cfg.dynamics
    if d["stiffness"] is not None:
        p = at_stiffness(p, d["stiffness"], d["gamma_m_ratio"])
    elif d["gamma_m_ratio"] is not None:
        p = p.with_(gamma_m=d["gamma_m_ratio"] * p.omega_m)
    return p


def _initial_state(p, which, perturb):
    if which == "vacuum":
        return dynamics.MeanFieldState.vacuum()
    roots = dynamics.steady_states(p)
    tags = [s.branch for s in steadystate.solve_intensity(steadystate.coefficients(p))]
    if which not in tags:
        raise ConfigError(f"no {which!r} steady state at this operating point",
                          key="dynamics.initial")
    s = roots[tags.index(which)]
    return dynamics.MeanFieldState.from_vector(s.to_vector() * (1.0 + perturb))


def cmd_dynamics(cfg, args):
    p = _dyn_params(cfg)
    d = cfg.dynamics
    kind, val = d["t_end"] if d["t_end"] is not None else ("periods", 50.0)
    t_end = val * TWO_PI / p.omega_m if kind == "periods" else val
    s0 = _initial_state(p, d["initial"], d["perturb"])
    traj = dynamics.integrate(s0, p, t_end, d["tol"], method=d["method"], n_samples=d["samples"])
    t = Table([("t", "s"), ("t_Gamma", "1"), ("re_alpha1", "1"), ("im_alpha1", "1"), ("beta", "1"),
               ("q", "1"), ("p", "1")])
    for ti, y in zip(traj.t, traj.states):
        t.add(ti, ti * p.Gamma, y[0], y[1], y[0] ** 2 + y[1] ** 2, y[4], y[5])
    t.summary["t_end"] = t_end
    return t, {"t": {"start": 0.0, "stop": t_end, "points": d["samples"]},
               "dynamics_params": params_dict(p)}


def cmd_hysteresis(cfg, args):
    p = _dyn_params(cfg)
    d = cfg.dynamics
    name = d["axis"]
    ax = _axis(cfg, name, SweepAxis("phi", 0.0, -0.02 * math.pi, 41) if name == "phi" else None)
    if ax is None:
        raise ConfigError("no [sweep] entry for the hysteresis axis", key=f"sweep.{name}")
    fwd = ax.values()
    path = np.concatenate([fwd, fwd[-2::-1]])
    trace = dynamics.hysteresis_sweep(p, name, path, jump_threshold=d["jump_threshold"],
                                      tol=d["settle_tol"], max_periods=d["max_periods"])
    t = Table([("step", "1"), ("leg", "1"), (name, _axis_unit(name)),
               (f"{name}_dimless", _dimless(name, 1.0, p)[1]), ("beta", "1"), ("branch", "-"),
               ("jump", "bool")])
    for i, (v, b, tag, jmp, leg) in enumerate(zip(trace.values, trace.beta, trace.branch,
                                                   trace.jump, trace.leg)):
        t.add(i, leg, v, _dimless(name, v, p)[0], b, tag, jmp)
    t.summary["loop_area"] = trace.loop_area
    t.summary["jumps"] = [float(x) for x in trace.jump_locations()]
    return t, {name: _axis_meta(ax), "dynamics_params": params_dict(p)}


def _sense_columns():
    return [("beta_g1", "1"), ("beta_g2", "1"), ("eta", "1"), ("eta_inv", "1"),
            ("region", "-"), ("status", "-")]


def cmd_sense_map(cfg, args):
    p = cfg.physical
    G = p.Gamma
    s = cfg.sensing
    pax, dax = _grid(cfg, p)
    res = sensing.sensitivity_map(p, pax.values(), dax.values(), s["g1"], s["g2"],
                                  branch=s["branch"], threads=args.threads)
    v = res.values
    t = Table([("phi", "rad"), ("phi_over_pi", "1"), ("delta", "rad/s"), ("delta_over_Gamma", "1")]
              + _sense_columns())
    for i, ph in enumerate(res.phi):
        for j, dl in enumerate(res.delta):
            eta = v["eta"][i, j]
            t.add(ph, ph / math.pi, dl, dl / G, v["beta_g1"][i, j], v["beta_g2"][i, j], eta,
                  1.0 / eta, sensing.REGION_NAMES[int(v["region"][i, j])],
                  "ok" if v["status"][i, j] == 0 else "no-solution")
    eta = v["eta"]
    if np.any(np.isfinite(eta)):
        i, j = np.unravel_index(np.nanargmax(eta), eta.shape)
        t.summary["eta_max"] = float(eta[i, j])
        t.summary["eta_max_at"] = {"phi_over_pi": float(res.phi[i] / math.pi),
                                   "delta_over_Gamma": float(res.delta[j] / G)}
        t.summary["eta_inv_max"] = float(np.nanmax(1.0 / eta))
    folds = {}
    for label, g in (("g1", s["g1"]), ("g2", s["g2"])):
        locs = steadystate.fold_locations(p.with_(g=g), "phi", pax.start, pax.stop)
        folds[label] = [v_ / math.pi for v_, _, _ in locs]
    t.summary["fold_phases_over_pi"] = folds
    return t, {"phi": _axis_meta(pax), "delta": _axis_meta(dax)}


def cmd_sense_cut(cfg, args):
    p = cfg.physical
    s = cfg.sensing
    name = args.axis or ("delta" if "delta" in cfg.sweeps and "phi" not in cfg.sweeps else "phi")
    if name not in ("phi", "delta"):
        raise ConfigError("sense-cut runs along phi or delta", key="axis")
    default = _default_phi_axis() if name == "phi" else _default_delta_axis(p)
    ax = _axis(cfg, name, default)
    t = Table([(name, _axis_unit(name)), (f"{name}_dimless", _dimless(name, 1.0, p)[1])]
              + _sense_columns() + [("reported", "1")])
    for v in ax.values():
        q = _set(p, name, v)
        try:
            pt = sensing.sensitivity(q, s["g1"], s["g2"], branch=s["branch"])
            t.add(v, _dimless(name, v, p)[0], pt.beta_g1, pt.beta_g2, pt.eta, pt.eta_inv,
                  pt.region, "ok", pt.reported)
        except NoPhysicalSolutionError:
            nan = float("nan")
            t.add(v, _dimless(name, v, p)[0], nan, nan, nan, nan, "none", "no-solution", nan)
    etas = np.array([row[4] for row in t.rows], dtype=float)
    if np.any(np.isfinite(etas)):
        t.summary["eta_max"] = float(np.nanmax(etas))
        t.summary["eta_inv_max"] = float(np.nanmax(1.0 / etas))
    if name == "delta":
        rng = (ax.start, ax.stop)
        opt = sensing.optimal_detuning(p, s["g1"], s["g2"], rng)
        t.summary["delta_opt_over_Gamma"] = opt.delta / p.Gamma
        t.summary["delta_opt_degenerate"] = opt.degenerate
        try:
            bw = sensing.bandwidth_window(p, s["g1"], s["g2"], s["drop"], delta_range=rng,
                                          metric=s["metric"])
            t.summary["bandwidth_over_Gamma"] = bw.width / p.Gamma
            t.summary["bandwidth_clipped"] = bw.clipped
        except UndefinedBandwidthError as exc:
            t.summary["bandwidth_over_Gamma"] = None
            t.summary["bandwidth_error"] = str(exc)
    return t, {name: _axis_meta(ax)}


def cmd_nanosphere_g(cfg, args):
    n = cfg.nanosphere
    if n is None:
        raise ConfigError("the nanosphere-g subcommand needs a [nanosphere] section", key="nanosphere")
    g = nanosphere_coupling(n)
    chi = g * g / cfg.physical.omega_m
    t = Table([("N", "1"), ("p_e", "1"), ("g", "rad/s"), ("g_over_2pi", "Hz"), ("chi", "rad/s"),
               ("q_zpf", "m")])
    t.add(n.N, n.p_e, g, g / TWO_PI, chi, n.q_zpf)
    return t, {"nanosphere": dataclasses.asdict(n)}


HANDLERS = {
    "eigen": cmd_eigen,
    "coeffs": cmd_coeffs,
    "steady": cmd_steady,
    "region-map": cmd_region_map,
    "response": cmd_response,
    "dynamics": cmd_dynamics,
    "hysteresis": cmd_hysteresis,
    "sense-map": cmd_sense_map,
    "sense-cut": cmd_sense_cut,
    "nanosphere-g": cmd_nanosphere_g,
}


def _axis_meta(ax):
    if ax is None:
        return None
    return {"start": ax.start, "stop": ax.stop, "points": ax.points}


def default_config() -> RunConfig:
    """Built-in operating point used when no ``--config`` is given."""
    return RunConfig(
        physical=paper_params(),
        sensing=dict(DEFAULT_SENSING),
        sweeps={},
        dynamics=dict(DEFAULT_DYNAMICS),
        nanosphere=None,
        output=dict(DEFAULT_OUTPUT),
        defaults=["all"],
    )


def _parse_grid(text):
    parts = text.lower().split("x")
    try:
        nums = [int(v) for v in parts]
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must look like 401 or 401x201, got {text!r}")
    if len(nums) not in (1, 2) or min(nums) < 2:
        raise argparse.ArgumentTypeError("grid sizes must be at least 2")
    return nums if len(nums) == 2 else nums * 2


def apply_overrides(cfg: RunConfig, args) -> RunConfig:
    p = cfg.physical
    if args.phi is not None:
        try:
            p = p.with_(phi=parse_angle(args.phi))
        except ValueError as exc:
            raise ConfigError(f"--phi: {exc}") from None
    cfg.physical = p
    if args.delta_range is not None:
        try:
            lo, hi = (parse_rate(v.strip(), p.Gamma) for v in args.delta_range.split(":"))
        except ValueError as exc:
            raise ConfigError(f"--delta-range: {exc} (use START:STOP with units)") from None
        pts = cfg.sweeps["delta"].points if "delta" in cfg.sweeps else DEFAULT_POINTS
        cfg.sweeps["delta"] = SweepAxis("delta", lo, hi, pts)
    if args.grid is not None:
        nphi, ndelta = args.grid
        pax = cfg.sweeps.get("phi", _default_phi_axis())
        dax = cfg.sweeps.get("delta", _default_delta_axis(p))
        cfg.sweeps["phi"] = dataclasses.replace(pax, points=nphi)
        cfg.sweeps["delta"] = dataclasses.replace(dax, points=ndelta)
    if args.format is not None:
        cfg.output["format"] = args.format
    return cfg


def build_parser():
    ap = argparse.ArgumentParser(
        prog="omsense",
        description="Steady states, dynamics and coupling sensitivity of two "
                    "waveguide-coupled optomechanical cavities.",
    )
    ap.add_argument("subcommand", choices=SUBCOMMANDS)
    ap.add_argument("--config", help="TOML run configuration")
    ap.add_argument("--out", help="output directory (default: [output] dir or .)")
    ap.add_argument("--threads", type=int, default=None,
                    help="worker threads for grid maps (default: $OMSENSE_THREADS or 1)")
    ap.add_argument("--format", choices=("csv", "json"), default=None)
    ap.add_argument("--phi", help="override the phase deviation, e.g. '-0.008 pi'")
    ap.add_argument("--delta-range", help="override the detuning sweep, e.g. '-0.2Gamma:0.2Gamma'")
    ap.add_argument("--grid", type=_parse_grid, help="grid points, NPHI or NPHIxNDELTA")
    ap.add_argument("--axis", choices=("phi", "delta", "power", "kappa", "g"),
                    help="sweep axis for response and sense-cut")
    ap.add_argument("--couplings", choices=("single", "pair"), default="pair",
                    help="response: use physical g only, or the sensing pair g1, g2")
    return ap


def run(argv=None):
    """Parse ``argv``, run one subcommand and return the process exit status."""
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else default_config()
        cfg = apply_overrides(cfg, args)
        table, grid = HANDLERS[args.subcommand](cfg, args)
    except ConfigError as exc:
        print(f"omsense: configuration error: {exc}", file=sys.stderr)
        return 2
    except (ArithmeticError, RuntimeError, ValueError) as exc:
        print(f"omsense: {args.subcommand} failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1

    out_dir = args.out or cfg.output["dir"]
    os.makedirs(out_dir, exist_ok=True)
    fmt = cfg.output["format"]
    stem = os.path.join(out_dir, args.subcommand)
    data_path = f"{stem}.{fmt}"
    write_table(table, data_path, fmt, cfg.output["precision"])
    meta = {
        "subcommand": args.subcommand,
        "version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "config": os.path.abspath(args.config) if args.config else None,
        "params": params_dict(cfg.physical),
        "sensing": cfg.sensing,
        "dynamics": {k: v for k, v in cfg.dynamics.items()},
        "grid": grid,
        "defaults": cfg.defaults,
        "summary": table.summary,
        "data": os.path.basename(data_path),
        "columns": [{"name": n, "unit": u} for n, u in table.columns],
    }
    with open(f"{stem}.meta.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, default=_json_default)
        fh.write("\n")
    print(data_path)
    return 0


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o).__name__)


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
