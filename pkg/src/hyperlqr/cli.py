"""Command-line front end.

Subcommands:

    simulate   run the configured controller end to end, write artifacts
    riccati    synthesize the time-varying LQR kernels only, write gains
               and per-level diagnostics without simulating
    goursat    solve the backstepping kernel system only, write the
               numeric and explicit-series gain traces side by side
    sweep      run the scenario under the open-loop adjoint sweep
    compare    run two configs on the same plant and print the ranking

Exit codes: 0 success, 2 configuration or CFL error, 3 solver
non-convergence, 4 numerical blow-up.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .backstepping import explicit_gain_traces, solve_goursat
from .config import ScenarioConfig, load_config, with_overrides
from .errors import BlowUpError, CFLError, ConfigError, ConvergenceError
from .riccati import SingularConstraintError, solve_riccati
from .runner import (
    build_params,
    build_weights,
    compare_controllers,
    resolve_output_dir,
    resolve_time_grid,
    run_scenario,
    write_csv,
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hyperlqr",
        description="Boundary-controlled 2x2 hyperbolic system simulator "
        "and controller synthesis toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="scenario config JSON")
    common.add_argument("--out", default=None, help="output directory override")
    common.add_argument("--n-cells", type=int, default=None, help="grid override")
    common.add_argument("--cfl", type=float, default=None,
                        help="CFL override (clears a pinned step count)")
    common.add_argument("--t-final", type=float, default=None, help="horizon override")
    common.add_argument("--controller", default=None,
                        help="controller override (simulate only)")
    common.add_argument("--snapshot-stride", type=int, default=None,
                        help="write every k-th field snapshot")
    common.add_argument("--quiet", action="store_true", help="suppress summary output")

    sub.add_parser("simulate", parents=[common],
                   help="run the configured controller and persist artifacts")
    sub.add_parser("riccati", parents=[common],
                   help="synthesize LQR kernels and write gains/diagnostics")
    sub.add_parser("goursat", parents=[common],
                   help="solve the backstepping kernels and write gain traces")
    sub.add_parser("sweep", parents=[common],
                   help="run the open-loop adjoint-sweep controller")
    cmp_parser = sub.add_parser("compare", parents=[common],
                                help="run two configs on one plant and rank them")
    cmp_parser.add_argument("--config2", required=True, help="second scenario config")
    return parser


def _load(args) -> ScenarioConfig:
    config = load_config(args.config)
    return with_overrides(
        config,
        n_cells=args.n_cells,
        cfl=args.cfl,
        t_final=args.t_final,
        controller=args.controller if args.command == "simulate" else None,
        snapshot_stride=args.snapshot_stride,
    )


def _say(args, text: str) -> None:
    if not args.quiet:
        print(text)


def _run_and_report(args, config) -> int:
    artifacts = run_scenario(config, args.out)
    _say(args, f"[{args.command}] controller={config.controller} "
               f"n_cells={config.n_cells} n_steps={len(artifacts.times) - 1}")
    _say(args, f"[{args.command}] J={artifacts.total_cost:.6e} "
               f"(running {artifacts.running_cost:.6e}, "
               f"terminal {artifacts.terminal_cost:.6e})")
    _say(args, f"[{args.command}] |u(T)|={artifacts.norm_u[-1]:.6e} "
               f"|v(T)|={artifacts.norm_v[-1]:.6e} "
               f"max|U|={np.max(np.abs(artifacts.control)):.6e}")
    _say(args, f"[{args.command}] artifacts -> {artifacts.directory}")
    return 0


def _cmd_riccati(args, config) -> int:
    config = with_overrides(config, controller="lqr")
    params = build_params(config)
    weights = build_weights(config)
    time_grid = resolve_time_grid(config)
    solution = solve_riccati(params, weights, time_grid)
    directory = resolve_output_dir(config, args.out)
    directory.mkdir(parents=True, exist_ok=True)

    grid = config.grid
    times = np.asarray(time_grid.times)
    y_header = ["t"] + [f"y{i}" for i in range(grid.n_nodes)]
    write_csv(directory / "gain_rows.csv", y_header,
               ([times[n], *solution.gain_rows[n]]
                for n in range(time_grid.n_steps + 1)))
    write_csv(directory / "riccati_diag.csv",
               ["t", "constraint_residual", "outflow_bc_residual"],
               ([times[n], solution.constraint_residual[n],
                 solution.outflow_bc_residual[n]]
                for n in range(time_grid.n_steps + 1)))
    report = {
        "n_steps": time_grid.n_steps,
        "dt": time_grid.dt,
        "max_constraint_residual": solution.max_constraint_residual,
        "max_outflow_bc_residual": solution.max_outflow_bc_residual,
    }
    (directory / "riccati_summary.json").write_text(
        json.dumps(report, indent=2, sort_keys=True) + "\n")
    _say(args, f"[riccati] n_steps={time_grid.n_steps} "
               f"max_constraint_residual={solution.max_constraint_residual:.6e} "
               f"max_outflow_bc_residual={solution.max_outflow_bc_residual:.6e}")
    _say(args, f"[riccati] artifacts -> {directory}")
    return 0


def _cmd_goursat(args, config) -> int:
    params = build_params(config)
    grid = config.grid
    kernels = solve_goursat(params, grid)
    numeric = kernels.traces()
    series = explicit_gain_traces(grid)
    directory = resolve_output_dir(config, args.out)
    directory.mkdir(parents=True, exist_ok=True)

    y = np.asarray(grid.nodes)
    write_csv(directory / "kernel_traces.csv",
               ["y", "kvu_goursat", "kvv_goursat", "kvu_explicit", "kvv_explicit"],
               ([y[j], numeric.kvu_trace[j], numeric.kvv_trace[j],
                 series.kvu_trace[j], series.kvv_trace[j]]
                for j in range(grid.n_nodes)))
    report = {
        "iterations": kernels.iterations,
        "final_change": kernels.history[-1] if kernels.history else 0.0,
        "kvu_diagonal_value": float(numeric.kvu_trace[-1]),
        "kvu_at_origin": float(numeric.kvu_trace[0]),
    }
    (directory / "goursat_summary.json").write_text(
        json.dumps(report, indent=2, sort_keys=True) + "\n")
    _say(args, f"[goursat] iterations={kernels.iterations} "
               f"K_vu(1,1)={numeric.kvu_trace[-1]:.6e} "
               f"K_vu(1,0)={numeric.kvu_trace[0]:.6e}")
    _say(args, f"[goursat] artifacts -> {directory}")
    return 0


def _cmd_compare(args, config_a) -> int:
    config_b = load_config(args.config2)
    config_b = with_overrides(
        config_b,
        n_cells=args.n_cells,
        cfl=args.cfl,
        t_final=args.t_final,
        snapshot_stride=args.snapshot_stride,
    )
    comparison = compare_controllers(config_a, config_b, args.out)
    for line in comparison.ranking_lines():
        _say(args, f"[compare] {line}")
    _say(args, f"[compare] table -> {comparison.table_path}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _load(args)
        if args.command == "simulate":
            return _run_and_report(args, config)
        if args.command == "riccati":
            return _cmd_riccati(args, config)
        if args.command == "goursat":
            return _cmd_goursat(args, config)
        if args.command == "sweep":
            return _run_and_report(args, with_overrides(config, controller="open_loop_sweep"))
        return _cmd_compare(args, config)
    except (ConfigError, CFLError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ConvergenceError, SingularConstraintError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except BlowUpError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
