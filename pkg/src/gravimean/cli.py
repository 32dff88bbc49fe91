"""Command-line front end.

Subcommands:

  criteria      check the classical-apparatus conditions for a config
  evolve        run one deterministic evolution (analytic or grid engine)
  compare       run both engines and report their disagreement
  born-mc       Monte Carlo outcome statistics over the diverting force
  two-detector  joint outcome tables for two back-to-back runs

Exit codes: 0 success, 1 bad usage or config, 2 criteria not satisfied,
3 numerical failure (norm drift or probability reaching the grid edge).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .analytic import (common_center_initial_condition, equilibrium_splitting,
                       smooth_initial_condition, trajectory)
from .grid import GridSpec, GridState, NumericalError, init_gaussian
from .grid import evolve as evolve_grid
from .io import (ConfigError, LoadedConfig, TrajectoryTable, emit_trajectory,
                 load_config, write_manifest)
from .montecarlo import MC_GRID, run_ensemble, two_detector_table
from .units import classicality_report

THREAD_CAP_ENV = "GRAVIMEAN_THREADS"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gravimean",
        description="Two-branch wave packets under self-consistent harmonic "
                    "self-gravity, plus measurement statistics.")
    parser.add_argument("--version", action="version",
                        version=f"gravimean {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_crit = sub.add_parser("criteria",
                            help="evaluate the classical-apparatus conditions")
    p_crit.add_argument("--config", required=True)
    p_crit.set_defaults(func=cmd_criteria)

    p_ev = sub.add_parser("evolve", help="run one deterministic evolution")
    p_ev.add_argument("--config", required=True)
    p_ev.add_argument("--mode", choices=("analytic", "grid"), default=None,
                      help="engine; defaults to the config's engine key, "
                           "then analytic")
    p_ev.add_argument("--t-max", type=float, required=True,
                      help="duration in units of 1/omega")
    p_ev.add_argument("--dt-sample", type=float, default=0.1,
                      help="analytic-mode output spacing")
    _add_grid_args(p_ev)
    _add_ic_args(p_ev)
    p_ev.add_argument("--out", required=True, help="output CSV path")
    p_ev.set_defaults(func=cmd_evolve)

    p_cmp = sub.add_parser("compare",
                           help="grid vs analytic discrepancy report")
    p_cmp.add_argument("--config", required=True)
    p_cmp.add_argument("--t-max", type=float, required=True)
    _add_grid_args(p_cmp)
    _add_ic_args(p_cmp)
    p_cmp.add_argument("--out", default=None, help="also write the JSON here")
    p_cmp.set_defaults(func=cmd_compare)

    p_mc = sub.add_parser("born-mc",
                          help="outcome frequencies over the diverting force")
    p_mc.add_argument("--config", required=True)
    p_mc.add_argument("--engine", choices=("analytic", "grid"), default=None)
    p_mc.add_argument("--trials", type=int, required=True)
    p_mc.add_argument("--seed", type=int, default=0)
    p_mc.add_argument("--workers", type=int, default=1)
    p_mc.add_argument("--out", default=None, help="also write the JSON here")
    p_mc.set_defaults(func=cmd_born_mc)

    p_td = sub.add_parser("two-detector",
                          help="joint outcome tables for two detectors")
    p_td.add_argument("--p", type=float, required=True)
    p_td.set_defaults(func=cmd_two_detector)

    return parser


def _add_grid_args(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--grid-n", type=int, default=None,
                     help="grid points (power of two)")
    sub.add_argument("--grid-l", type=float, default=None,
                     help="half length of the box in packet widths")
    sub.add_argument("--dt", type=float, default=None, help="grid time step")
    sub.add_argument("--sample-every", type=int, default=None,
                     help="record every k-th grid step")


def _add_ic_args(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--ic", choices=("smooth", "common"), default="smooth",
                     help="smooth: branches at their equilibrium offsets; "
                          "common: both branches at the same center")
    sub.add_argument("--xbar0", type=float, default=0.0)
    sub.add_argument("--vbar0", type=float, default=0.0)


def _command_line(argv) -> list:
    return ["gravimean"] + list(argv if argv is not None else sys.argv[1:])


def _grid_from_args(loaded: LoadedConfig, args) -> tuple[GridSpec, int]:
    spec = GridSpec(
        half_length=args.grid_l if args.grid_l is not None else loaded.grid.half_length,
        n=args.grid_n if args.grid_n is not None else loaded.grid.n,
        dt=args.dt if args.dt is not None else loaded.grid.dt)
    sample_every = (args.sample_every if args.sample_every is not None
                    else loaded.sample_every)
    if sample_every < 1:
        raise ConfigError(f"sample-every: must be >= 1, got {sample_every}")
    return spec, sample_every


def _worker_cap(requested: int) -> int:
    raw = os.environ.get(THREAD_CAP_ENV)
    if raw is None:
        return requested
    try:
        cap = int(raw)
    except ValueError:
        raise ConfigError(f"{THREAD_CAP_ENV}: expected an integer, got {raw!r}")
    if cap < 1:
        raise ConfigError(f"{THREAD_CAP_ENV}: must be >= 1, got {cap}")
    return min(requested, cap)


def _grid_initial_state(loaded: LoadedConfig, args,
                        spec: GridSpec) -> GridState:
    p = loaded.measurement.p
    if args.ic == "smooth":
        d_plus, d_minus, _ = equilibrium_splitting(
            p, loaded.f_meas_dimensionless)
    else:
        d_plus = d_minus = 0.0
    psi_plus = init_gaussian(spec, args.xbar0 + d_plus, velocity=args.vbar0)
    psi_minus = init_gaussian(spec, args.xbar0 + d_minus, velocity=args.vbar0)
    return GridState(psi_plus=psi_plus, psi_minus=psi_minus, p=p)


def _analytic_initial_state(loaded: LoadedConfig, args):
    p = loaded.measurement.p
    if args.ic == "smooth":
        return smooth_initial_condition(p, loaded.f_meas_dimensionless,
                                        xbar0=args.xbar0, vbar0=args.vbar0)
    return common_center_initial_condition(p, xbar0=args.xbar0,
                                           vbar0=args.vbar0)


def _sample_times(t_max: float, dt_sample: float) -> np.ndarray:
    if t_max <= 0.0:
        raise ConfigError(f"t-max: must be > 0, got {t_max!r}")
    if dt_sample <= 0.0:
        raise ConfigError(f"dt-sample: must be > 0, got {dt_sample!r}")
    n = int(math.floor(t_max / dt_sample + 1e-9))
    times = np.arange(n + 1) * dt_sample
    if times[-1] < t_max * (1.0 - 1e-12):
        times = np.append(times, t_max)
    return times


def cmd_criteria(args, argv=None) -> int:
    loaded = load_config(args.config)
    report = classicality_report(loaded.apparatus, loaded.measurement)
    print(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    return 0 if report.all_ok else 2


def _run_grid(loaded: LoadedConfig, args):
    spec, sample_every = _grid_from_args(loaded, args)
    state = _grid_initial_state(loaded, args, spec)
    return evolve_grid(state, loaded.f_meas_dimensionless,
                       loaded.f_div_dimensionless(), args.t_max, spec,
                       sample_every=sample_every) + (spec,)


def cmd_evolve(args, argv=None) -> int:
    loaded = load_config(args.config)
    mode = args.mode or loaded.engine or "analytic"
    if mode == "analytic":
        times = _sample_times(args.t_max, args.dt_sample)
        state = _analytic_initial_state(loaded, args)
        traj = trajectory(state, loaded.f_meas_dimensionless,
                          loaded.f_div_dimensionless(), times,
                          gamma=loaded.gamma)
        table = TrajectoryTable.from_analytic(traj)
    else:
        if loaded.gamma != 0.0:
            raise ConfigError("gamma: the grid engine has no damping; "
                              "use the analytic engine for gamma > 0")
        if args.t_max <= 0.0:
            raise ConfigError(f"t-max: must be > 0, got {args.t_max!r}")
        traj, _final, _spec = _run_grid(loaded, args)
        table = TrajectoryTable.from_grid(traj)
    emit_trajectory(table, args.out)
    write_manifest([args.out], _command_line(argv), loaded.resolved,
                   loaded.scales)
    return 0


def cmd_compare(args, argv=None) -> int:
    loaded = load_config(args.config)
    if loaded.gamma != 0.0:
        raise ConfigError("gamma: compare runs the grid engine, which has "
                          "no damping; set gamma to 0")
    if args.t_max <= 0.0:
        raise ConfigError(f"t-max: must be > 0, got {args.t_max!r}")
    grid_traj, _final, spec = _run_grid(loaded, args)
    state = _analytic_initial_state(loaded, args)
    exact = trajectory(state, loaded.f_meas_dimensionless,
                       loaded.f_div_dimensionless(), grid_traj.t)
    report = {
        "t_max": args.t_max,
        "n_samples": int(len(grid_traj.t)),
        "grid": {"n": spec.n, "l": spec.half_length, "dt": spec.dt},
        "max_abs_diff": {
            "xbar": float(np.max(np.abs(grid_traj.xbar - exact["xbar"]))),
            "x_plus": float(np.max(np.abs(grid_traj.x_plus - exact["x_plus"]))),
            "x_minus": float(np.max(np.abs(grid_traj.x_minus - exact["x_minus"]))),
        },
    }
    text = json.dumps(report, indent=2, sort_keys=True)
    print(text)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
        write_manifest([args.out], _command_line(argv), loaded.resolved,
                       loaded.scales)
    return 0


def cmd_born_mc(args, argv=None) -> int:
    loaded = load_config(args.config)
    engine = args.engine or loaded.engine or "analytic"
    workers = _worker_cap(args.workers)
    grid_spec = loaded.grid if loaded.grid_explicit else MC_GRID
    summary = run_ensemble(loaded.measurement, engine, args.trials, args.seed,
                           workers=workers, scales=loaded.scales,
                           grid=grid_spec)
    text = json.dumps(summary.to_dict(), indent=2, sort_keys=True)
    print(text)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
        write_manifest([args.out], _command_line(argv), loaded.resolved,
                       loaded.scales, master_seed=args.seed)
    return 0


def cmd_two_detector(args, argv=None) -> int:
    table = two_detector_table(args.p)
    print(json.dumps(table.to_dict(), indent=2, sort_keys=True))
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        return args.func(args, argv)
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
