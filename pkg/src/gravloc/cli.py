"""Command-line front end.

Subcommands: scales, sn-ground, evolve, sweep. Every run resolves its
configuration as: command-line flags, then a JSON file given with --config,
then built-in defaults. Typed errors exit with the code attached to their
class (see ``gravloc.errors``); success is 0, usage errors are 2.

Unit modes
  --units natural  inputs and outputs in internal units with hbar = G = 1
                   (abstract by default; --mass-scale alone gives hbar = G = 1
                   at that mass scale, --mass-scale with --length-scale gives
                   hbar = 1 and the derived G)
  --units si       inputs in kg, m, s; outputs in SI. Internally the run is
                   rescaled to the body's own mass and length.
"""

import argparse
import csv
import io
import json
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import density as dens
from . import master_evolution as me
from . import potential as pot
from . import sn_solver as sn
from .errors import GravlocError, NoDecoherence
from .units import UnitSystem, convert

SWEEP_PARAMETERS = ("M", "R", "a", "sigma", "separation", "gamma")
SWEEP_OUTPUTS = ("omega", "width", "tau", "tau_general", "heat", "Gtilde")

_PROFILE_DIMS = {"M": "mass", "m": "mass", "R": "length", "a": "length", "sigma": "length"}


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.12g}"
    return str(x)


def _load_json(text):
    """A JSON literal or the path of a JSON file."""
    if text is None:
        return None
    if isinstance(text, dict):
        return text
    stripped = text.strip()
    if stripped.startswith("{") or stripped.startswith("["):
        return json.loads(stripped)
    return json.loads(Path(text).read_text(encoding="utf-8"))


# ---------------------------------------------------------------------------
# unit handling


def _user_units(opts):
    if opts["units"] == "si":
        return UnitSystem.si()
    ms, ls = opts.get("mass_scale"), opts.get("length_scale")
    if ms is not None and ls is not None:
        return UnitSystem.from_scales(ms, ls)
    if ls is not None:
        raise ValueError("--length-scale needs --mass-scale")
    return UnitSystem.natural(ms)


class _Frame:
    """Maps user-unit inputs to the internal unit system and results back."""

    def __init__(self, user, internal, si_mode):
        self.user, self.internal, self.si_mode = user, internal, si_mode

    def inward(self, value, quantity):
        return convert(self.internal, value, quantity) if self.si_mode else value

    def outward(self, value, quantity):
        if value is None or not self.si_mode:
            return value
        return convert(self.internal, value, quantity, to="si")


def _frame_for(opts, mass, length):
    user = _user_units(opts)
    if opts["units"] != "si":
        return _Frame(user, user, False)
    if length and length > 0:
        internal = UnitSystem.from_scales(mass, length)
    else:
        internal = UnitSystem.natural(mass)
    return _Frame(user, internal, True)


def _profile_length(obj, smear):
    for key in ("R", "sigma", "a"):
        if obj.get(key):
            return float(obj[key])
    return smear


def _resolve_profile(obj, smear, frame):
    obj = dict(obj)
    for key, q in _PROFILE_DIMS.items():
        if obj.get(key) is not None:
            obj[key] = frame.inward(float(obj[key]), q)
    f = dens.MassDensityProfile.from_json(obj)
    if smear is not None:
        f = dens.smooth(f, frame.inward(float(smear), "length"))
    return f


def _resolve_kernel(obj, frame):
    if obj is None:
        return pot.PairPotentialKernel.newtonian(frame.internal.G)
    kind = obj.get("kind", "newtonian")
    if kind == "newtonian":
        G = obj.get("G")
        G = frame.internal.G if G is None else frame.inward(float(G), "G")
        return pot.PairPotentialKernel.newtonian(G)
    return pot.PairPotentialKernel.csl(frame.inward(float(obj["gamma"]), "csl_gamma"))


def _setup(opts, profile_obj):
    mass = float(profile_obj["M"])
    frame = _frame_for(opts, mass, _profile_length(profile_obj, opts.get("smear")))
    f = _resolve_profile(profile_obj, opts.get("smear"), frame)
    kernel = _resolve_kernel(_load_json(opts.get("kernel")), frame)
    return frame, f, kernel


# ---------------------------------------------------------------------------
# output


def _config_lines(opts, command):
    clean = {k: v for k, v in sorted(opts.items()) if v is not None and k != "func"}
    return [f"gravloc {command}", "config " + json.dumps(clean, sort_keys=True, default=str)]


def _emit(text, out):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _csv_text(header_lines, columns, rows):
    buf = io.StringIO()
    for line in header_lines:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _json_text(obj):
    return json.dumps(obj, sort_keys=True, indent=2, default=_json_default) + "\n"


def _json_default(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not serialisable: {type(x)!r}")


# ---------------------------------------------------------------------------
# scales


def scales_report(opts):
    """The scale report as a dict in user units."""
    profile_obj = _load_json(opts["profile"])
    frame, f, kernel = _setup(opts, profile_obj)
    seps = [frame.inward(float(d), "length") for d in opts.get("separations") or ()]
    rep = pot.scale_report(f, kernel, frame.internal, seps)
    out = {"units": frame.user.to_dict(), "profile": profile_obj, "smear": opts.get("smear")}
    out["kernel"] = _load_json(opts.get("kernel")) or {"kind": "newtonian", "G": frame.user.G}
    for key, q in (("U0", "energy"), ("omega_G_sq", "frequency_sq"), ("width", "length"),
                   ("heating_rate", "power"), ("generator_heating_rate", "power")):
        if key in rep:
            out[key] = frame.outward(rep[key], q)
    if "Gtilde" in rep:
        out["Gtilde"] = frame.outward(rep["Gtilde"], "G")
    out["tau_at"] = [
        {
            "d": frame.outward(row["d"], "length"),
            "tau": frame.outward(row.get("tau"), "time"),
            "tau_general": frame.outward(row.get("tau_general"), "time"),
        }
        for row in rep["tau_at"]
    ]
    return out


def cmd_scales(opts):
    rep = scales_report(opts)
    if opts["format"] == "json":
        _emit(_json_text(rep), opts.get("out"))
        return 0
    rows = [(k, rep[k]) for k in ("U0", "omega_G_sq", "width", "heating_rate", "generator_heating_rate", "Gtilde")
            if k in rep]
    for row in rep["tau_at"]:
        rows.append((f"tau(d={_fmt(row['d'])})", row["tau"]))
        rows.append((f"tau_general(d={_fmt(row['d'])})", row["tau_general"]))
    _emit(_csv_text(_config_lines(opts, "scales"), ["quantity", "value"], rows), opts.get("out"))
    return 0


# ---------------------------------------------------------------------------
# sn-ground


def cmd_sn_ground(opts):
    profile_obj = _load_json(opts["profile"])
    frame, f, kernel = _setup(opts, profile_obj)
    grid = None
    if opts.get("r_max") is not None or opts.get("n") is not None:
        default = sn.default_grid(f, kernel, frame.internal)
        r_max = default.r_max if opts.get("r_max") is None else frame.inward(float(opts["r_max"]), "length")
        grid = sn.RadialGrid(r_max, int(opts.get("n") or default.n))
    psi, report = sn.ground_state(f, kernel, frame.internal, grid, tol=opts.get("tol") or 1e-10)
    rep = {
        "energy": frame.outward(report.energy, "energy"),
        "width": frame.outward(report.width, "length"),
        "iterations": report.iterations,
        "residual": report.residual,
        "functional_energy": frame.outward(report.functional_energy, "energy"),
        "rms_per_axis": frame.outward(psi.rms_per_axis, "length"),
    }
    out = opts.get("out")
    if out:
        header = _config_lines(opts, "sn-ground") + ["report " + json.dumps(rep, sort_keys=True)]
        r = [frame.outward(x, "length") for x in psi.grid]
        u = [frame.outward(x, "wavefunction_radial") for x in psi.values]
        p2 = [frame.outward(x, "probability_density") for x in psi.density]
        Path(out).write_text(_csv_text(header, ["r", "u", "|psi|^2"], zip(r, u, p2)), encoding="utf-8")
        report_path = Path(out).with_suffix(".json") if Path(out).suffix == ".csv" else Path(str(out) + ".json")
        report_path.write_text(_json_text(rep), encoding="utf-8")
    sys.stdout.write(_json_text(rep) if opts["format"] == "json" else
                     _csv_text(_config_lines(opts, "sn-ground"), ["quantity", "value"], rep.items()))
    return 0


# ---------------------------------------------------------------------------
# evolve


def evolve_run(opts):
    state = dict(_load_json(opts["state"]))
    mass = float(state["M"])
    width = float(state["width"])
    profile_obj = _load_json(opts.get("profile")) or {"kind": "uniform_ball", "M": mass, "R": 1.0}
    frame = _frame_for(opts, mass, _profile_length(profile_obj, opts.get("smear")))
    f = _resolve_profile(profile_obj, opts.get("smear"), frame)
    kernel = _resolve_kernel(_load_json(opts.get("kernel")), frame)
    for key in ("separation", "width", "span", "centre"):
        if key in state:
            state[key] = frame.inward(float(state[key]), "length")
    state["M"] = frame.inward(mass, "mass")
    if "momentum" in state:
        state["momentum"] = frame.inward(float(state["momentum"]), "hbar") / frame.inward(1.0, "length")
    rho0 = me.DensityMatrixGrid.from_json(state)
    t_final = frame.inward(float(opts["t_final"]), "time")
    dt = frame.inward(float(opts["dt"]), "time")
    final, obs = me.evolve(
        rho0, kernel, f, t_final, dt, use_harmonic=not opts.get("general"), kinetic=not opts.get("no_kinetic"),
        units=frame.internal, n_samples=int(opts.get("samples") or 51), verify_step=bool(opts.get("verify_step")),
    )
    rate = obs.fitted_rate / frame.internal.time_scale if frame.si_mode else obs.fitted_rate
    summary = {"fitted_rate": rate,
               "fit_r_squared": obs.fit_r_squared, "final_purity": float(obs.purity[-1]),
               "min_eigenvalue": float(np.nanmin(obs.min_eigenvalue)) if np.any(np.isfinite(obs.min_eigenvalue)) else None,
               "step_halving_change": obs.step_halving_change}
    try:
        fit = me.decoherence_time_fit(obs)
        summary["tau"] = frame.outward(fit.tau, "time")
        summary["e_folds"] = fit.e_folds
    except GravlocError as exc:
        summary["tau"] = None
        summary["tau_note"] = str(exc)
    if not opts.get("no_kinetic"):
        summary["energy_slope_per_axis"] = frame.outward(me.energy_gain_measure(obs), "power")
    return frame, final, obs, summary


def cmd_evolve(opts):
    frame, final, obs, summary = evolve_run(opts)
    if opts.get("rho_out"):
        path = opts["rho_out"]
        if str(path).endswith(".csv"):
            final.to_csv(path)
        else:
            final.save_npz(path)
    if opts["format"] == "json":
        _emit(_json_text(summary), opts.get("out"))
        return 0
    t = [frame.outward(x, "time") for x in obs.times]
    E = [frame.outward(x, "energy") for x in obs.energy]
    header = _config_lines(opts, "evolve") + ["summary " + json.dumps(summary, sort_keys=True)]
    rows = zip(t, obs.offdiag_abs, E, obs.coherence, obs.trace, obs.purity)
    _emit(_csv_text(header, ["t", "offdiag_abs", "energy", "coherence", "trace", "purity"], rows), opts.get("out"))
    return 0


# ---------------------------------------------------------------------------
# sweep


def sweep_values(spec):
    values = spec["values"]
    if isinstance(values, dict):
        lo, hi, count = float(values["min"]), float(values["max"]), int(values["count"])
        values = list(np.geomspace(lo, hi, count)) if count > 1 else [lo]
    values = [float(v) for v in values]
    if not values or any(not v > 0 for v in values) or any(b <= a for a, b in zip(values, values[1:])):
        raise ValueError("sweep values must be non-empty, strictly positive and ascending")
    return values


def _sweep_row(opts, spec, value):
    fixed = dict(spec.get("fixed", {}))
    param = spec["parameter"]
    fixed[param] = value
    kind = fixed.get("kind")
    if kind is None:
        kind = "atomic" if "sigma" in fixed else ("smeared_ball" if "a" in fixed else "uniform_ball")
    profile_obj = {k: fixed[k] for k in ("M", "R", "a", "sigma", "N", "m") if k in fixed}
    profile_obj["kind"] = kind
    smear = None
    if kind == "point" and "a" in profile_obj:
        smear = profile_obj.pop("a")
    kernel_obj = {"kind": "csl", "gamma": fixed["gamma"]} if "gamma" in fixed else fixed.get("kernel")
    row_opts = dict(opts, smear=smear, kernel=kernel_obj)
    frame, f, kernel = _setup(row_opts, profile_obj)
    out = {}
    wanted = spec.get("outputs", ["omega", "width", "tau", "heat"])
    newton = kernel.kind is pot.KernelKind.NEWTONIAN
    om2 = pot.harmonic_expansion(kernel, f).omega_G_sq if newton and any(
        w in wanted for w in ("omega", "width", "tau")) else None
    d = frame.inward(float(fixed["separation"]), "length") if "separation" in fixed else None
    for name in wanted:
        if name == "omega":
            out[name] = frame.outward(om2, "frequency_sq")
        elif name == "width":
            out[name] = frame.outward(pot.localisation_width(f.M, om2, frame.internal), "length")
        elif name in ("tau", "tau_general"):
            if d is None:
                raise ValueError("tau needs a separation in the fixed fields")
            if name == "tau" and newton:
                tau = pot.decoherence_time_harmonic(f.M, om2, d, frame.internal)
            else:
                try:
                    tau = pot.decoherence_time_general(kernel, f, f, 0.0, d, frame.internal)
                except NoDecoherence:
                    tau = math.inf
            out[name] = frame.outward(tau, "time")
        elif name == "heat":
            out[name] = frame.outward(pot.heating_rate(f, frame.internal, G=kernel.G if newton else None), "power")
        elif name == "Gtilde":
            bulk = dens.uniform_ball(f.M, f.R)
            out[name] = frame.outward(pot.effective_newton_constant(f, bulk, kernel.G), "G")
        else:
            raise ValueError(f"unknown output {name!r}")
    return out


def sweep_table(opts):
    spec = _load_json(opts["spec"])
    if spec["parameter"] not in SWEEP_PARAMETERS:
        raise ValueError(f"sweep parameter must be one of {SWEEP_PARAMETERS}")
    outputs = spec.get("outputs", ["omega", "width", "tau", "heat"])
    bad = [o for o in outputs if o not in SWEEP_OUTPUTS]
    if bad:
        raise ValueError(f"unknown outputs {bad}")
    rows = []
    for value in sweep_values(spec):
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", pot.HarmonicRegimeWarning)
                res = _sweep_row(opts, spec, value)
            rows.append([value] + [res[o] for o in outputs] + [""])
        except (GravlocError, ValueError, ArithmeticError) as exc:
            rows.append([value] + [None] * len(outputs) + [f"{type(exc).__name__}: {exc}"])
    return spec, [spec["parameter"]] + list(outputs) + ["error"], rows


def cmd_sweep(opts):
    spec, columns, rows = sweep_table(opts)
    if opts["format"] == "json":
        _emit(_json_text({"columns": columns, "rows": rows}), opts.get("out"))
        return 0
    header = _config_lines(opts, "sweep") + ["sweep " + json.dumps(spec, sort_keys=True)]
    _emit(_csv_text(header, columns, rows), opts.get("out"))
    return 0


# ---------------------------------------------------------------------------
# argument parsing

_DEFAULTS = {"units": "natural", "format": "csv"}


def _common(p):
    p.add_argument("--config", help="JSON file of option values (flags take precedence)")
    p.add_argument("--units", choices=("si", "natural"), default=None, help="unit mode (default natural)")
    p.add_argument("--mass-scale", type=float, default=None, help="natural mode: SI mass of the unit")
    p.add_argument("--length-scale", type=float, default=None, help="natural mode: SI length of the unit")
    p.add_argument("--kernel", default=None, help='kernel JSON or file, e.g. {"kind": "newtonian", "G": 1}')
    p.add_argument("--smear", type=float, default=None, help="Gaussian smearing length a applied to the profile")
    p.add_argument("--out", default=None, help="output path (default stdout)")
    p.add_argument("--format", choices=("csv", "json"), default=None, help="output format (default csv)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="gravloc",
        description="Gravity-related localisation and decoherence scales.",
        epilog="Option precedence: command-line flags, then --config JSON, then defaults. "
        "Exit codes: 0 success, 2 usage, otherwise the code of the typed error raised.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("scales", help="closed-form scale report for one body")
    _common(p)
    p.add_argument("--profile", default=None, help='profile JSON or file, e.g. {"kind": "uniform_ball", "M": 1, "R": 1}')
    p.add_argument("--separation", dest="separations", type=float, action="append", default=None,
                   help="separation for the decoherence-time table (repeatable)")
    p.set_defaults(func=cmd_scales)

    p = sub.add_parser("sn-ground", help="Schroedinger-Newton ground state")
    _common(p)
    p.add_argument("--profile", default=None)
    p.add_argument("--r-max", type=float, default=None)
    p.add_argument("--n", type=int, default=None, help="radial grid points")
    p.add_argument("--tol", type=float, default=None)
    p.set_defaults(func=cmd_sn_ground)

    p = sub.add_parser("evolve", help="master-equation evolution of a density matrix")
    _common(p)
    p.add_argument("--state", default=None, help='initial state JSON, e.g. {"type": "cat", "separation": 1, "width": 0.1, "M": 1}')
    p.add_argument("--profile", default=None, help="body profile entering the generator (default unit-radius ball)")
    p.add_argument("--t-final", type=float, default=None)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--general", action="store_const", const=True, default=None,
                   help="use the full pair-interaction generator instead of the harmonic form")
    p.add_argument("--no-kinetic", action="store_const", const=True, default=None, help="damping only")
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--verify-step", action="store_const", const=True, default=None,
                   help="rerun at dt/2 and reject the run if the fitted rate moves by 0.5%% or more")
    p.add_argument("--rho-out", default=None, help="final density matrix (.npz, or .csv)")
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("sweep", help="parameter sweep table")
    _common(p)
    p.add_argument("--spec", default=None, help="sweep JSON or file")
    p.set_defaults(func=cmd_sweep)
    return parser


_REQUIRED = {"scales": ("profile",), "sn-ground": ("profile",), "evolve": ("state", "t_final", "dt"),
             "sweep": ("spec",)}


def resolve_options(args):
    opts = dict(_DEFAULTS)
    if args.config:
        cfg = _load_json(args.config)
        opts.update({k.replace("-", "_"): v for k, v in cfg.items()})
    opts.update({k: v for k, v in vars(args).items() if v is not None})
    opts.pop("config", None)
    return opts


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    opts = resolve_options(args)
    missing = [k for k in _REQUIRED[args.command] if opts.get(k) is None]
    if missing:
        parser.error(f"{args.command}: missing " + ", ".join("--" + k.replace("_", "-") for k in missing))
    func = opts.pop("func")
    try:
        return func(opts)
    except GravlocError as exc:
        msg = f"error: {type(exc).__name__}: {exc}"
        if type(exc).__name__ == "DivergentSelfEnergy":
            msg += " (point masses need a resolution cutoff: pass --smear <a>, e.g. --smear 1e-7 in SI for a = 1e-5 cm)"
        if type(exc).__name__ == "NoBoundState":
            msg += " (the body is a free particle)"
        print(msg, file=sys.stderr)
        return exc.exit_code
    except (ValueError, KeyError, json.JSONDecodeError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
