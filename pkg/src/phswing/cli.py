"""Command-line entry point.

Subcommands: simulate, verify-oracles, fit-manual, fit-fbssm, import-ur,
compare-coeffs, stationarity. Exit codes: 0 success, 1 validation error,
2 numerical failure; errors go to stderr with an `E:<code>:` prefix.
"""

from __future__ import annotations

import argparse
import os
import sys
import warnings

import numpy as np

from . import coefficients as coef
from . import manual_fit, oracles
from .dataio import derive_uh, export_plot_data, load_trace, resample
from .errors import CflError, ConfigError, NumericsError
from .fbssm import SweepConfig, fbssm_run
from .params import ModelParams, preset as params_preset
from .psd import Grid, gaussian_bump
from .simulator import ControlSignal, RunConfig, simulate

_FMT = "%.17g"

# run-level keys allowed in a config file alongside the model parameters
_RUN_KEYS = {
    "tau", "t_end", "n_x", "L", "n_paths", "seed", "record_every",
    "u_h", "u_r", "dosing_until", "f0", "f0_center", "f0_width", "f0_mass",
}
_RUN_DEFAULTS = {
    "tau": 0.01, "t_end": 1.0, "n_x": 64, "L": 10.0, "n_paths": 1,
    "seed": 0, "record_every": 1, "u_h": 0.0, "u_r": 0.0,
    "dosing_until": None, "f0": "zero", "f0_center": 3.0, "f0_width": 0.8,
    "f0_mass": 1.0,
}


def parse_config(path):
    """Split a flat config file into model parameters and run settings."""
    if not os.path.isfile(path):
        raise ConfigError(f"config file not found: {path}", code="CONFIG_NOT_FOUND")
    with open(path) as fh:
        text = fh.read()
    params = ModelParams.from_config(text, extra_ok=_RUN_KEYS)
    run = dict(_RUN_DEFAULTS)
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line or "=" not in line:
            continue
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _RUN_KEYS:
            continue
        if key == "f0":
            if value not in ("zero", "gaussian"):
                raise ConfigError(f"line {lineno}: f0 must be zero or gaussian")
            run[key] = value
        elif key in ("n_x", "n_paths", "seed", "record_every"):
            run[key] = int(float(value))
        else:
            run[key] = float(value)
    return params, run


def build_run(params, run, args=None, controls=None) -> RunConfig:
    grid = Grid.create(run["tau"], run["t_end"], L=run["L"], n_x=run["n_x"])
    n_paths = run["n_paths"]
    seed = run["seed"]
    if args is not None:
        if getattr(args, "paths", None) is not None:
            n_paths = args.paths
        if getattr(args, "seed", None) is not None:
            seed = args.seed
    if controls is None:
        controls = ControlSignal.constant(
            grid, u_h=run["u_h"], u_r=run["u_r"],
            dosing_until=run["dosing_until"])
    f0 = None
    if run["f0"] == "gaussian":
        f0 = gaussian_bump(grid, run["f0_center"], run["f0_width"], run["f0_mass"])
    return RunConfig(params=params, grid=grid, controls=controls,
                     n_paths=n_paths, seed=seed,
                     record_every=run["record_every"], f0=f0)


def _write(path, text):
    with open(path, "w") as fh:
        fh.write(text)


def _ensure_out(args):
    out = args.out or "."
    os.makedirs(out, exist_ok=True)
    return out


def _write_ensemble(ens, out, figures=False, trace=None):
    _write(os.path.join(out, "summary.csv"), ens.summary_csv())
    _write(os.path.join(out, "trajectory_path0.csv"), ens.trajectory_csv(0))
    s = ens.summary()
    _write(os.path.join(out, "overlay.csv"),
           export_plot_data(s["t"], s["Q_mean"], s["Q_q05"], s["Q_q95"], trace))
    if figures:
        from . import report
        report.render_trajectory_figure(ens, out)
        report.render_overlay_figure(ens, trace, out)
        report.render_psd_figure(ens, out)


# -- subcommands -----------------------------------------------------------

def cmd_simulate(args):
    params, run = parse_config(args.config)
    cfg = build_run(params, run, args)
    ens = simulate(cfg, workers=args.workers)
    out = _ensure_out(args)
    _write_ensemble(ens, out, figures=args.figures)
    print(f"simulated {cfg.n_paths} path(s), {cfg.grid.n_t} steps -> {out}")
    return 0


def cmd_verify_oracles(args):
    checks = oracle_battery(seed=args.seed if args.seed is not None else 0)
    ok = True
    for name, passed, detail in checks:
        print(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")
        ok = ok and passed
    return 0 if ok else 1


def cmd_fit_manual(args):
    if args.data is None:
        raise ConfigError("fit-manual needs --data")
    trace = load_trace(args.data, experiment_id=args.experiment)
    kappa = manual_fit.preset(args.experiment)
    u_h = derive_uh(trace, smoothing_window=args.smooth_window,
                    raw_diff=args.raw_diff)
    u_r = manual_fit.manual_ur(u_h, kappa)
    out = _ensure_out(args)
    path = os.path.join(out, "manual_ur.csv")
    with open(path, "w") as fh:
        fh.write("t,U_H,U_r,dosing\n")
        for t, uh, ur in zip(trace.t, u_h, u_r):
            fh.write(f"{t:.17g},{uh:.17g},{ur:.17g},0\n")
    print(f"manual design law (experiment {args.experiment}) -> {path}")
    return 0


def cmd_fit_fbssm(args):
    if args.data is None:
        raise ConfigError("fit-fbssm needs --data")
    params, run = parse_config(args.config)
    grid = Grid.create(run["tau"], run["t_end"], L=run["L"], n_x=run["n_x"])
    trace = load_trace(args.data)
    res_trace = resample(trace, grid)
    u_h = np.gradient(res_trace.pH, grid.t)
    q_bar = res_trace.ca_ise
    dosing = (grid.t <= run["dosing_until"]) if run["dosing_until"] is not None \
        else np.zeros(grid.n_t + 1, dtype=bool)
    sweep = SweepConfig(
        max_iters=args.iters, n_paths=args.paths or run["n_paths"],
        seed=args.seed if args.seed is not None else run["seed"],
        full_adjoint=args.full_adjoint, tol_j=args.tol_j)
    f0 = gaussian_bump(grid, run["f0_center"], run["f0_width"], run["f0_mass"]) \
        if run["f0"] == "gaussian" else None
    result = fbssm_run(q_bar, u_h, dosing, params, grid, sweep, f0=f0)
    out = _ensure_out(args)
    controls = ControlSignal(u_h, result.u_r, dosing,
                             u_min=-max(1.0, np.max(np.abs(u_h))),
                             u_max=max(1.0, np.max(np.abs(u_h))))
    controls.to_csv(os.path.join(out, "fitted_controls.csv"), grid)
    _write(os.path.join(out, "cost_history.csv"),
           "iter,J\n" + "".join(f"{k},{_FMT % j}\n"
                                for k, j in enumerate(result.j_history)))
    _write_ensemble(result.ensemble, out, figures=args.figures, trace=trace)
    if args.figures:
        from . import report
        report.render_control_figure(grid.t, u_h, result.u_r, out)
        report.render_cost_figure(result.j_history, out)
    print(f"fbssm: {len(result.j_history)} iterations, "
          f"final J = {result.j_history[-1]:.6g} -> {out}")
    return 0


def cmd_import_ur(args):
    if args.data is None:
        raise ConfigError("import-ur needs --data")
    params, run = parse_config(args.config)
    grid = Grid.create(run["tau"], run["t_end"], L=run["L"], n_x=run["n_x"])
    if not os.path.isfile(args.data):
        raise ConfigError(f"control file not found: {args.data}",
                          code="DATA_NOT_FOUND")
    t_in, sig = ControlSignal.from_csv(args.data, u_min=-1e9, u_max=1e9)
    t_grid = grid.t
    if len(t_in) == len(t_grid) and np.allclose(t_in, t_grid, atol=1e-12):
        controls = sig
    else:
        if t_grid[0] < t_in[0] - 1e-12 or t_grid[-1] > t_in[-1] + 1e-12:
            raise ConfigError("imported U_r does not span the run grid")
        warnings.warn("imported control grid differs from run grid; resampling",
                      RuntimeWarning)
        nearest = np.clip(np.searchsorted(t_in, t_grid), 0, len(t_in) - 1)
        controls = ControlSignal(
            np.interp(t_grid, t_in, sig.u_h), np.interp(t_grid, t_in, sig.u_r),
            sig.dosing[nearest], u_min=-1e9, u_max=1e9)
    cfg = build_run(params, run, args, controls=controls)
    ens = simulate(cfg, workers=args.workers)
    out = _ensure_out(args)
    _write_ensemble(ens, out, figures=args.figures)
    print(f"imported U_r from {args.data}; simulated -> {out}")
    return 0


def cmd_compare_coeffs(args):
    params = params_preset(args.preset)
    if args.config:
        params, _ = parse_config(args.config)
    h = np.linspace(2.0, 13.0, 221)
    p_simpl = coef.carbonate_ion(h, params)
    p_ref = coef.carbonate_ion_reference(h, params)
    cs_simpl = coef.c_sat(h, params)
    cs_ref = coef.c_sat_reference(h, params)
    out = _ensure_out(args)
    path = os.path.join(out, "coefficient_comparison.csv")
    with open(path, "w") as fh:
        fh.write("H,P_simplified,P_reference,C_sat_simplified,C_sat_reference\n")
        for k in range(len(h)):
            fh.write(",".join(_FMT % v for v in
                              (h[k], p_simpl[k], p_ref[k], cs_simpl[k], cs_ref[k])) + "\n")
    print(f"coefficient comparison -> {path}")
    return 0


def cmd_stationarity(args):
    from .simulator import stationarity_experiment
    params, run = parse_config(args.config)
    cfg = build_run(params, run, args)
    diag = stationarity_experiment(cfg)
    out = _ensure_out(args)
    path = os.path.join(out, "stationarity.csv")
    keys = list(diag)
    with open(path, "w") as fh:
        fh.write(",".join(keys) + "\n")
        fh.write(",".join(_FMT % diag[k] for k in keys) + "\n")
    for k in keys:
        print(f"{k} = {diag[k]:.6g}")
    return 0


# -- oracle battery --------------------------------------------------------

def oracle_battery(seed: int = 0):
    """Independent closed-form checks of the numerical kernels.

    Returns a list of (name, passed, detail) tuples.
    """
    from .psd import moment, psd_step
    checks = []

    # transport order vs. the shifted-density formula; coefficients sampled
    # at step midpoints so the coefficient quadrature does not cap the order
    a_fun = lambda t: 0.35 + 0.1 * np.sin(t)
    n_fun = lambda t: 0.2 * np.cos(t)
    f0 = lambda x: np.exp(-0.5 * ((x - 4.0) / 0.7) ** 2)
    errs = []
    n_x_list = (64, 128, 256)
    for n_x in n_x_list:
        grid = Grid.create(tau=2.0 / (4 * n_x), t_end=2.0, L=10.0, n_x=n_x)
        f = f0(grid.x)
        f[0] = 0.0
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            for j in range(grid.n_t):
                t_mid = grid.t[j] + 0.5 * grid.tau
                f = psd_step(f, a_fun(t_mid), n_fun(t_mid), grid)
        exact = oracles.semigroup_psd(f0, a_fun(grid.t), n_fun(grid.t),
                                      grid.t, grid.x)
        errs.append(float(np.max(np.abs(f - exact))))
    order = float(-np.polyfit(np.log(n_x_list), np.log(errs), 1)[0])
    checks.append(("transport-semigroup order", order >= 1.8,
                   f"measured order {order:.2f} (errors {errs})"))

    # moment closed form, constant coefficients
    grid = Grid.create(tau=0.002, t_end=1.5, L=12.0, n_x=480)
    a_const, n_const = 0.4, 0.3
    f = gaussian_bump(grid, center=3.0, width=0.6)
    f[0] = 0.0
    ups0 = [moment(f, n, grid) for n in range(3)]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        for j in range(grid.n_t):
            f = psd_step(f, a_const, n_const, grid)
    worst = 0.0
    for n in range(3):
        exact = oracles.closed_form_moments(
            ups0[:n + 1], np.full(grid.n_t + 1, a_const),
            np.full(grid.n_t + 1, n_const), grid.t)[-1]
        worst = max(worst, abs(moment(f, n, grid) - exact) / abs(exact))
    checks.append(("moment closed form", worst < 0.01,
                   f"worst relative error {worst:.2e}"))

    # EM convergence orders on the exact linear-SDE problem
    s_ord, w_ord, _, _ = oracles.em_gbm_orders(
        1.0, theta=0.8, sigma=0.5, t_end=1.0, n_paths=20000, seed=seed)
    ok = abs(s_ord - 0.5) <= 0.1 and abs(w_ord - 1.0) <= 0.2
    checks.append(("EM strong/weak order", ok,
                   f"strong {s_ord:.2f} (target 0.5+-0.1), weak {w_ord:.2f} (target 1.0+-0.2)"))

    # propagator moment identities at 1e4 paths
    n_paths, n_steps, t_end, theta, sigma = 10000, 64, 1.0, 0.6, 0.4
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed + 1)))
    t_gridv = np.linspace(0.0, t_end, n_steps + 1)
    dw = np.sqrt(t_end / n_steps) * rng.standard_normal((n_steps, n_paths))
    psi = oracles.gbm_propagator(theta, sigma, t_gridv, dw=dw)
    ok = True
    details = []
    for label, sample, exact in (
            ("mean", psi, oracles.gbm_mean(theta, t_gridv)),
            ("second moment", psi ** 2,
             oracles.gbm_moment_2p(theta, sigma, t_gridv, p=1))):
        se = float(np.std(sample, ddof=1) / np.sqrt(n_paths))
        dev = abs(float(np.mean(sample)) - exact)
        ok = ok and dev <= 3 * se
        details.append(f"{label} |dev| {dev:.2e} vs 3SE {3 * se:.2e}")
    checks.append(("propagator moment identities", ok, "; ".join(details)))
    return checks


# -- argument parsing ------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="phswing",
        description="Semi-batch precipitation simulator and inverse-design tool")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required,
                       help="flat key=value config file")
        p.add_argument("--data", help="input data CSV")
        p.add_argument("--out", help="output directory (created if absent)")
        p.add_argument("--seed", type=int, help="RNG seed override")
        p.add_argument("--paths", type=int, help="ensemble size override")
        p.add_argument("--workers", type=int, default=1,
                       help="worker threads for the ensemble")
        p.add_argument("--figures", action="store_true",
                       help="render PNG figures next to the CSV outputs")

    p = sub.add_parser("simulate", help="run the forward model")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify-oracles",
                       help="run the closed-form verification battery")
    p.add_argument("--seed", type=int, help="RNG seed override")
    p.set_defaults(func=cmd_verify_oracles)

    p = sub.add_parser("fit-manual", help="apply the hand-tuned design law")
    common(p, config_required=False)
    p.add_argument("--experiment", type=int, required=True,
                   help="experiment id (1-4) selecting the preset constants")
    p.add_argument("--raw-diff", action="store_true",
                   help="use raw pH differences instead of rates")
    p.add_argument("--smooth-window", type=int, default=1,
                   help="moving-average window for the derived input")
    p.set_defaults(func=cmd_fit_manual)

    p = sub.add_parser("fit-fbssm", help="adjoint-sweep recovery of U_r")
    common(p)
    p.add_argument("--iters", type=int, default=200, help="sweep iterations")
    p.add_argument("--tol-j", type=float, default=0.0,
                   help="relative cost-improvement stopping tolerance")
    p.add_argument("--full-adjoint", action="store_true",
                   help="integrate the full adjoint system (verification)")
    p.set_defaults(func=cmd_fit_fbssm)

    p = sub.add_parser("import-ur",
                       help="simulate with an externally produced U_r signal")
    common(p)
    p.set_defaults(func=cmd_import_ur)

    p = sub.add_parser("compare-coeffs",
                       help="export simplified vs reference chemistry curves")
    common(p, config_required=False)
    p.add_argument("--preset", choices=("table", "inline"), default="table",
                   help="parameter preset when no config is given")
    p.set_defaults(func=cmd_compare_coeffs)

    p = sub.add_parser("stationarity", help="long-run decay diagnostics")
    common(p)
    p.set_defaults(func=cmd_stationarity)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        code = getattr(exc, "code", "CONFIG")
        print(f"E:{code}: {exc}", file=sys.stderr)
        return 1
    except CflError as exc:
        print(f"E:CFL: {exc}", file=sys.stderr)
        return 2
    except NumericsError as exc:
        print(f"E:NUMERICS: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
