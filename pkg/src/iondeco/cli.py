"""Command-line front end.

Subcommands: rates | simulate | trajectories | fit | design | sweep.
All frequency I/O uses the 2*pi x kHz convention; conversion to rad/s
happens once, in the configuration layer.  Every command is deterministic
given (config, seed) and emits a provenance header (tool version, config
hash, seed).

Exit codes: 0 success, 2 config error, 3 numerical failure, 4 infeasible
design.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import __version__
from .config import RunConfig
from .design import DesignTarget, design_decoherence, verify_design
from .dynamics import integrate, integrate_adiabatic
from .errors import (
    ConfigError,
    DegenerateRates,
    InfeasibleDesign,
    IondecoError,
    OscillationUnresolved,
    OutOfRange,
    RegimeViolation,
    StiffnessFailure,
)
from .fitting import effective_from_fit, fit_nutation
from .model import TWO_PI_KHZ, effective_rates
from .protocol import accumulate, run_trajectory, write_curve_csv, write_trajectories

_NUMERICAL_ERRORS = (
    StiffnessFailure,
    RegimeViolation,
    OscillationUnresolved,
    OutOfRange,
    DegenerateRates,
)

_OVERRIDES = {
    "i0": ("physical.i0", float),
    "alpha_deg": ("physical.alpha_deg", float),
    "b_field_2pikhz": ("physical.b_field_2pikhz", float),
    "omega_2pikhz": ("physical.omega_mw_2pikhz", float),
    "detuning_2pikhz": ("physical.delta_laser_2pikhz", float),
    "dt_us": ("protocol.dt_us", float),
    "nmax": ("protocol.n_max", int),
    "ntraj": ("protocol.n_trajectories", int),
    "seed": ("protocol.seed", int),
}


def _add_common(parser):
    parser.add_argument("--config", help="YAML run configuration")
    parser.add_argument("--out", help="output path (default: stdout)")
    parser.add_argument("--format", choices=["csv", "json"], default=None)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--i0", type=float)
    parser.add_argument("--alpha-deg", type=float)
    parser.add_argument("--b-field-2pikhz", type=float)
    parser.add_argument("--omega-2pikhz", type=float)
    parser.add_argument("--detuning-2pikhz", type=float)
    parser.add_argument("--dt-us", type=float)
    parser.add_argument("--nmax", type=int)
    parser.add_argument("--ntraj", type=int)


def _build_config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    for attr, (path, cast) in _OVERRIDES.items():
        value = getattr(args, attr, None)
        if value is not None:
            cfg.set_path(path, cast(value))
    return cfg


def _provenance(cfg: RunConfig) -> list[str]:
    return [
        f"iondeco {__version__}",
        f"config_hash={cfg.hash()}",
        f"seed={cfg.data['protocol']['seed']}",
    ]


def _emit(text: str, out: str | None):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json_dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------


def cmd_rates(args) -> int:
    cfg = _build_config(args)
    params = cfg.physical_params()
    rates = cfg.rates()
    eff = effective_rates(params, rates)
    doc = {
        "provenance": {
            "tool": f"iondeco {__version__}",
            "config_hash": cfg.hash(),
            "seed": cfg.data["protocol"]["seed"],
        },
        "units": "2pi_kHz unless noted",
        "rates": {
            "r1_2pikhz": rates.r1 / TWO_PI_KHZ,
            "r2_2pikhz": rates.r2 / TWO_PI_KHZ,
            "p3_mean_m_minus1_0_plus1": list(rates.p3_mean),
        },
        "effective": {
            "gamma_2pikhz": eff.gamma_eff / TWO_PI_KHZ,
            "Gamma_2pikhz": None if eff.Gamma_eff is None else eff.Gamma_eff / TWO_PI_KHZ,
            "p1_inf": eff.p1_inf,
        },
    }
    _emit(_json_dump(doc), args.out)
    return 0


def _simulate_series(cfg: RunConfig):
    params = cfg.physical_params()
    rates = cfg.rates()
    proto = cfg.protocol_config()
    integ = cfg.integrator_config()
    t_grid = np.arange(proto.n_max + 1) * proto.dt_unit
    run = integrate_adiabatic if cfg.model_variant() == "adiabatic" else integrate
    series = run(cfg.initial_state(), params, rates, integ, t_grid)
    return params, series


def _series_rows(params, series) -> list[str]:
    rows = []
    for i in range(1, len(series.t)):
        u, v, n0, n1, n2, n3 = series.y[i]
        tau = series.t[i]
        rows.append(
            f"{params.omega_mw * tau:.12g},{tau:.12g},{n1 + n2:.12g},"
            f"{n0:.12g},{n1:.12g},{n2:.12g},{n3:.12g}"
        )
    return rows


def cmd_simulate(args) -> int:
    cfg = _build_config(args)
    params, series = _simulate_series(cfg)
    lines = [f"# {p}" for p in _provenance(cfg)]
    lines.append(f"# dt_us={cfg.data['protocol']['dt_us']!r}")
    lines.append("theta_rad,tau_s,p1,n0,n1,n2,n3")
    lines += _series_rows(params, series)
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def cmd_trajectories(args) -> int:
    cfg = _build_config(args)
    params = cfg.physical_params()
    rates = cfg.rates()
    proto = cfg.protocol_config()
    integ = cfg.integrator_config()
    records = [
        run_trajectory(params, rates, proto, k, integ, cfg.model_variant())
        for k in range(proto.n_trajectories)
    ]
    curve = accumulate(records)
    base = args.out or "trajectories"
    write_trajectories(f"{base}.traj.txt", records)
    prov = _provenance(cfg) + [f"dt_us={cfg.data['protocol']['dt_us']!r}"]
    write_curve_csv(f"{base}.curve.csv", curve, provenance=prov)
    print(f"wrote {base}.traj.txt and {base}.curve.csv", file=sys.stderr)
    return 0


def read_curve_file(path):
    """Read a curve CSV (simulate or accumulated format).

    Returns (tau, p1, sigma): sigma is derived from the Wilson bounds of
    accumulated curves and None for deterministic curves.
    """
    header = {}
    rows = []
    columns = None
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line.lstrip("# ")
                if "=" in body:
                    key, _, val = body.partition("=")
                    header[key.strip()] = val.strip().strip("'\"")
                continue
            if columns is None:
                columns = line.split(",")
                continue
            rows.append([float(x) for x in line.split(",")])
    if columns is None or not rows:
        raise ConfigError(f"no data rows in {path}")
    data = {c: np.array([r[i] for r in rows]) for i, c in enumerate(columns)}
    if "tau_s" in data:
        tau = data["tau_s"]
    elif "N" in data and "dt_us" in header:
        tau = data["N"] * float(header["dt_us"]) * 1e-6
    else:
        raise ConfigError(f"{path}: no time axis (need tau_s column or dt_us header)")
    if "p1" in data:
        return tau, data["p1"], None
    if "p1_mean" in data:
        sigma = None
        if "ci_low" in data and "ci_high" in data:
            sigma = np.maximum((data["ci_high"] - data["ci_low"]) / (2 * 1.96), 1e-3)
        return tau, data["p1_mean"], sigma
    raise ConfigError(f"{path}: no P1 column found")


def cmd_fit(args) -> int:
    tau, p1, sigma = read_curve_file(args.curve)
    fit = fit_nutation(tau, p1, sigma=sigma)
    doc = {
        "provenance": {"tool": f"iondeco {__version__}", "input": args.curve},
        "units": "2pi_kHz",
        "omega": fit.omega_fit / TWO_PI_KHZ,
        "lambda": fit.lambda_fit / TWO_PI_KHZ,
        "p_inf": fit.p_inf_fit,
        "amplitude": fit.amplitude,
        "phase": fit.phase,
        "residual_rms": fit.residual_rms,
        "converged": fit.converged,
        "iterations": fit.iterations,
    }
    omega_mw = (args.omega_2pikhz or fit.omega_fit / TWO_PI_KHZ) * TWO_PI_KHZ
    try:
        eff = effective_from_fit(fit, omega_mw)
        ratio = None
        if eff.Gamma_eff is not None:
            ratio = omega_mw**2 / (eff.Gamma_eff * eff.gamma_eff)
        doc["derived"] = {
            "gamma": eff.gamma_eff / TWO_PI_KHZ,
            "Gamma": None if eff.Gamma_eff is None else eff.Gamma_eff / TWO_PI_KHZ,
            "r2_over_r1": ratio,
        }
    except (OutOfRange, DegenerateRates) as exc:
        doc["derived"] = {"error": str(exc)}
    _emit(_json_dump(doc), args.out)
    return 0


def cmd_design(args) -> int:
    cfg = _build_config(args)
    params = cfg.physical_params()
    target = DesignTarget(
        gamma_target=args.target_gamma_2pikhz * TWO_PI_KHZ,
        Gamma_target=args.target_big_gamma_2pikhz * TWO_PI_KHZ,
        i0_bounds=(0.0, args.i0_max),
        b_bounds=(0.0, args.b_max_2pikhz * TWO_PI_KHZ),
        optimize_b=args.optimize_b,
    )
    try:
        knobs = design_decoherence(target, params)
    except InfeasibleDesign as exc:
        doc = {
            "infeasible": True,
            "binding_constraint": exc.constraint,
            "message": str(exc),
        }
        _emit(_json_dump(doc), args.out)
        return 4
    report = verify_design(target, params, knobs)
    doc = {
        "provenance": {
            "tool": f"iondeco {__version__}",
            "config_hash": cfg.hash(),
        },
        "knobs": {
            "i0": knobs[0],
            "alpha_deg": math.degrees(knobs[1]),
            "b_field_2pikhz": knobs[2] / TWO_PI_KHZ,
        },
        "verification": {
            "achieved_gamma_2pikhz": report["achieved_gamma"] / TWO_PI_KHZ,
            "achieved_Gamma_2pikhz": report["achieved_Gamma"] / TWO_PI_KHZ,
            "rel_err_gamma": report["rel_err_gamma"],
            "rel_err_Gamma": report["rel_err_Gamma"],
            "within_tol": report["within_tol"],
        },
    }
    _emit(_json_dump(doc), args.out)
    return 0


def cmd_sweep(args) -> int:
    cfg = _build_config(args)
    path, _, valspec = args.axis.partition("=")
    values = sorted(float(v) for v in valspec.split(",") if v.strip())
    lines = [f"# {p}" for p in _provenance(cfg)]
    lines.append(f"# axis={path}")
    lines.append("axis_value,theta_rad,tau_s,p1,n0,n1,n2,n3")
    if not values:
        lines.append("# empty axis: config echo follows")
        lines += [f"# {line}" for line in cfg.serialize().splitlines()]
        _emit("\n".join(lines) + "\n", args.out)
        return 0
    for value in values:
        cfg.set_path(path, value)
        params, series = _simulate_series(cfg)
        lines += [f"{value:.12g},{row}" for row in _series_rows(params, series)]
    _emit("\n".join(lines) + "\n", args.out)
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="iondeco",
        description="Designed light-induced decoherence on a hyperfine qubit",
    )
    parser.add_argument("--version", action="version", version=f"iondeco {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rates", help="closed-form scattering and effective rates")
    _add_common(p)
    p.set_defaults(func=cmd_rates)

    p = sub.add_parser("simulate", help="deterministic P1(theta) curve")
    _add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("trajectories", help="Monte Carlo measurement protocol")
    _add_common(p)
    p.set_defaults(func=cmd_trajectories)

    p = sub.add_parser("fit", help="fit a damped nutation curve")
    p.add_argument("curve", help="curve CSV (simulate or accumulated format)")
    p.add_argument("--out")
    p.add_argument("--omega-2pikhz", type=float,
                   help="microwave Rabi frequency for the Gamma derivation "
                        "(default: fitted omega)")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("design", help="invert targets (gamma, Gamma) to knobs")
    _add_common(p)
    p.add_argument("--target-gamma-2pikhz", type=float, required=True)
    p.add_argument("--target-big-gamma-2pikhz", type=float, required=True)
    p.add_argument("--i0-max", type=float, default=0.1)
    p.add_argument("--optimize-b", action="store_true")
    p.add_argument("--b-max-2pikhz", type=float, default=0.0)
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("sweep", help="repeat simulate over a knob grid")
    _add_common(p)
    p.add_argument("--axis", required=True,
                   help="dotted config key and values, e.g. "
                        "'rates.r2_2pikhz=0.5,2.2,13.6,54.4'")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        loc = f" (at {exc.location})" if exc.location else ""
        print(f"config error: {exc}{loc}", file=sys.stderr)
        return 2
    except _NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except InfeasibleDesign as exc:
        print(f"infeasible design ({exc.constraint}): {exc}", file=sys.stderr)
        return 4
    except IondecoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
