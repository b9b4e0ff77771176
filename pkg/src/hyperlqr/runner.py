"""Scenario orchestration: synthesize a controller, simulate, persist artifacts.

A run turns one ScenarioConfig into a directory of flat artifacts:

    u.csv, v.csv        field snapshots, header t,x0,x1,...
    signals.csv         per-level t,U,norm_u,norm_v,running_cost
    gain_rows.csv       feedback rows -(eps2/R) P2(1, y, t) (LQR runs)
    riccati_diag.csv    per-level kernel-tie and outflow residuals (lqr runs)
    summary.json        costs, norms, solver reports, runtimes

CSV numbers are written with repr-faithful %.17g formatting and no locale
dependence, so identical configs reproduce byte-identical CSVs; wall-clock
runtimes live only in summary.json.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .adjoint import SweepOptions, forward_backward_sweep
from .backstepping import explicit_gain_traces, solve_goursat
from .config import ScenarioConfig, config_to_dict
from .cost import CostWeights, running_cost_series, terminal_cost, total_cost
from .errors import ConfigError
from .grids import Grid1D, TimeGrid
from .riccati import solve_riccati, solve_steady_state
from .system import OpenLoopLaw, SystemParams, ZeroLaw, simulate, steps_for_cfl


def build_params(config: ScenarioConfig) -> SystemParams:
    grid = config.grid
    return SystemParams(
        eps1=config.eps1,
        eps2=config.eps2,
        c1=config.c1.sample(grid),
        c2=config.c2.sample(grid),
        q=config.q,
    )


def build_weights(config: ScenarioConfig) -> CostWeights:
    grid = config.grid
    return CostWeights(
        Q1=config.Q1.sample(grid),
        Q2=config.Q2.sample(grid),
        R=config.R,
        Pf1=config.Pf1.sample(grid),
        Pf2=config.Pf2.sample(grid),
    )


def resolve_time_grid(config: ScenarioConfig) -> TimeGrid:
    """Pin the step count: explicit n_steps wins, otherwise the CFL rule.

    The time-varying Riccati march shares the simulation time grid and its
    2-D transport stencil is stable only up to dt = dx/(2 max eps), so the
    lqr controller halves the step implied by the 1-D bound.
    """
    if config.n_steps is not None:
        return TimeGrid(t_final=config.t_final, n_steps=config.n_steps)
    speed = max(config.eps1, config.eps2)
    if config.controller == "lqr":
        speed = 2.0 * speed
    n_steps = steps_for_cfl(config.t_final, config.grid, speed, config.cfl)
    return TimeGrid(t_final=config.t_final, n_steps=n_steps)


@dataclass(frozen=True)
class RunArtifacts:
    """Everything a finished run left on disk, plus in-memory series."""

    directory: Path
    u_path: Path
    v_path: Path
    signals_path: Path
    summary_path: Path
    gain_rows_path: Path | None
    riccati_diag_path: Path | None
    total_cost: float
    running_cost: float
    terminal_cost: float
    times: np.ndarray = field(repr=False)
    control: np.ndarray = field(repr=False)
    norm_u: np.ndarray = field(repr=False)
    norm_v: np.ndarray = field(repr=False)
    running_series: np.ndarray = field(repr=False)
    reports: dict = field(repr=False)

    def __post_init__(self) -> None:
        for name in ("u_path", "v_path", "signals_path", "summary_path",
                     "gain_rows_path", "riccati_diag_path"):
            path = getattr(self, name)
            if path is not None and not Path(path).is_file():
                raise FileNotFoundError(f"run artifact {name} missing: {path}")
        for name in ("times", "control", "norm_u", "norm_v", "running_series"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)


def resolve_output_dir(config: ScenarioConfig, out_dir=None) -> Path:
    """--out wins, then the config's directory, then $HYPERLQR_OUT, then ./runs.

    The two fallback roots get a per-controller subdirectory so different
    runs do not overwrite each other.
    """
    if out_dir is not None:
        return Path(out_dir)
    if config.output_dir is not None:
        return Path(config.output_dir)
    root = Path(os.environ.get("HYPERLQR_OUT", "runs"))
    return root / config.controller


def write_csv(path: Path, header: list[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(f"{float(x):.17g}" for x in row))
    path.write_text("\n".join(lines) + "\n")


def _snapshot_levels(n_steps: int, stride: int) -> list[int]:
    levels = list(range(0, n_steps + 1, stride))
    if levels[-1] != n_steps:
        levels.append(n_steps)
    return levels


def run_scenario(config: ScenarioConfig, out_dir=None) -> RunArtifacts:
    """Execute one scenario end to end and persist its artifacts.

    Builds the grids, samples coefficient fields and weight kernels,
    synthesizes the configured controller (running whichever solver that
    takes: Riccati march, steady-state march, Goursat kernels, or the
    open-loop sweep), marches the plant, and writes the artifact files
    described in the module docstring.

    Parameters
    ----------
    config : ScenarioConfig
        Validated scenario description.
    out_dir : path-like, optional
        Output directory override; see resolve_output_dir for precedence.

    Returns
    -------
    RunArtifacts
        Paths of the written files plus cost/norm series; every referenced
        file exists when this returns.

    Raises
    ------
    ConfigError, CFLError, ConvergenceError, BlowUpError
        Propagated from validation and the underlying solvers.
    """
    t_start = time.perf_counter()
    grid = config.grid
    params = build_params(config)
    weights = build_weights(config)
    time_grid = resolve_time_grid(config)
    u0 = config.u0.sample(grid)
    v0 = config.v0.sample(grid)

    directory = resolve_output_dir(config, out_dir)
    directory.mkdir(parents=True, exist_ok=True)

    reports: dict = {}
    riccati_solution = None
    steady_solution = None
    t_synth = time.perf_counter()
    if config.controller == "none":
        law = ZeroLaw()
    elif config.controller == "lqr":
        riccati_solution = solve_riccati(params, weights, time_grid)
        law = riccati_solution.gain_law()
        reports["riccati"] = {
            "max_constraint_residual": riccati_solution.max_constraint_residual,
            "max_outflow_bc_residual": riccati_solution.max_outflow_bc_residual,
        }
    elif config.controller == "lqr_steady":
        steady_solution = solve_steady_state(params, weights, cfl=config.cfl or 0.9)
        law = steady_solution.gain_law(time_grid.n_steps)
        reports["riccati_steady"] = {
            "iterations": steady_solution.iterations,
            "residual": steady_solution.residual,
            "constraint_residual": steady_solution.constraint_residual,
            "outflow_bc_residual": steady_solution.outflow_bc_residual,
        }
    elif config.controller == "backstepping_explicit":
        law = explicit_gain_traces(grid).feedback_law()
    elif config.controller == "backstepping_goursat":
        kernels = solve_goursat(params, grid)
        law = kernels.traces().feedback_law()
        reports["goursat"] = {
            "iterations": kernels.iterations,
            "final_change": kernels.history[-1] if kernels.history else 0.0,
        }
    else:
        signal, _, sweep_report = forward_backward_sweep(
            params, u0, v0, weights, time_grid, SweepOptions(method="newton")
        )
        law = OpenLoopLaw(signal)
        reports["sweep"] = {
            "iterations": sweep_report.iterations,
            "converged": sweep_report.converged,
            "final_gradient_norm": sweep_report.final_gradient_norm,
            "final_gradient_max": sweep_report.final_gradient_max,
        }
    synth_seconds = time.perf_counter() - t_synth

    t_sim = time.perf_counter()
    traj = simulate(params, u0, v0, law, time_grid)
    sim_seconds = time.perf_counter() - t_sim

    tau = np.asarray(grid.quad_weights)
    u = np.asarray(traj.u, dtype=float)
    v = np.asarray(traj.v, dtype=float)
    control = np.asarray(traj.control.values, dtype=float)
    times = np.asarray(time_grid.times)
    norm_u = np.sqrt((u * u) @ tau)
    norm_v = np.sqrt((v * v) @ tau)
    running = np.asarray(running_cost_series(traj, weights), dtype=float)
    total = total_cost(traj, weights)
    terminal = terminal_cost(traj.u_field(time_grid.n_steps),
                             traj.v_field(time_grid.n_steps), weights)

    levels = _snapshot_levels(time_grid.n_steps, config.snapshot_stride)
    x_header = ["t"] + [f"x{i}" for i in range(grid.n_nodes)]
    u_path = directory / "u.csv"
    v_path = directory / "v.csv"
    write_csv(u_path, x_header, ([times[n], *u[n]] for n in levels))
    write_csv(v_path, x_header, ([times[n], *v[n]] for n in levels))

    signals_path = directory / "signals.csv"
    write_csv(
        signals_path,
        ["t", "U", "norm_u", "norm_v", "running_cost"],
        ([times[n], control[n], norm_u[n], norm_v[n], running[n]]
         for n in range(time_grid.n_steps + 1)),
    )

    gain_rows_path = None
    riccati_diag_path = None
    if riccati_solution is not None or steady_solution is not None:
        gain_rows_path = directory / "gain_rows.csv"
        y_header = ["t"] + [f"y{i}" for i in range(grid.n_nodes)]
        if riccati_solution is not None:
            rows = riccati_solution.gain_rows
        else:
            rows = np.tile(steady_solution.gain_row, (time_grid.n_steps + 1, 1))
        write_csv(gain_rows_path, y_header,
                   ([times[n], *rows[n]] for n in range(time_grid.n_steps + 1)))
    if riccati_solution is not None:
        riccati_diag_path = directory / "riccati_diag.csv"
        write_csv(
            riccati_diag_path,
            ["t", "constraint_residual", "outflow_bc_residual"],
            ([times[n],
              riccati_solution.constraint_residual[n],
              riccati_solution.outflow_bc_residual[n]]
             for n in range(time_grid.n_steps + 1)),
        )

    summary_path = directory / "summary.json"
    summary = {
        "config": config_to_dict(config),
        "controller": config.controller,
        "time_grid": {"t_final": time_grid.t_final, "n_steps": time_grid.n_steps,
                      "dt": time_grid.dt},
        "costs": {"total": total, "running": total - terminal, "terminal": terminal},
        "norms": {
            "initial_u": float(norm_u[0]),
            "initial_v": float(norm_v[0]),
            "final_u": float(norm_u[-1]),
            "final_v": float(norm_v[-1]),
        },
        "max_abs_control": float(np.max(np.abs(control))),
        "reports": reports,
        "runtimes": {
            "synthesis_s": synth_seconds,
            "simulate_s": sim_seconds,
            "total_s": time.perf_counter() - t_start,
        },
    }
    summary_path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")

    return RunArtifacts(
        directory=directory,
        u_path=u_path,
        v_path=v_path,
        signals_path=signals_path,
        summary_path=summary_path,
        gain_rows_path=gain_rows_path,
        riccati_diag_path=riccati_diag_path,
        total_cost=total,
        running_cost=total - terminal,
        terminal_cost=terminal,
        times=times,
        control=control,
        norm_u=norm_u,
        norm_v=norm_v,
        running_series=running,
        reports=reports,
    )


_PLANT_FIELDS = ("eps1", "eps2", "q", "c1", "c2", "n_cells", "t_final", "u0", "v0")


@dataclass(frozen=True)
class ControllerComparison:
    """Two runs of the same plant under different controllers, aligned in time."""

    run_a: RunArtifacts
    run_b: RunArtifacts
    label_a: str
    label_b: str
    table_path: Path

    def ranking_lines(self) -> list[str]:
        fu_a, fu_b = float(self.run_a.norm_u[-1]), float(self.run_b.norm_u[-1])
        ja, jb = self.run_a.total_cost, self.run_b.total_cost
        by_err = self.label_a if fu_a <= fu_b else self.label_b
        by_cost = self.label_a if ja <= jb else self.label_b
        return [
            f"final tracking error |u(T)|: {self.label_a} {fu_a:.6e}, "
            f"{self.label_b} {fu_b:.6e} -> {by_err}",
            f"total cost: {self.label_a} {ja:.6e}, {self.label_b} {jb:.6e} -> {by_cost}",
        ]


def _cumulative_cost(times: np.ndarray, running: np.ndarray) -> np.ndarray:
    dt = np.diff(times)
    segments = 0.5 * dt * (running[1:] + running[:-1])
    return np.concatenate([[0.0], np.cumsum(segments)])


def compare_controllers(
    config_a: ScenarioConfig, config_b: ScenarioConfig, out_dir=None
) -> ControllerComparison:
    """Run two controllers on the same plant and emit an aligned table.

    Both configs must describe the identical plant, grid, horizon, and
    initial data; only the controller (and cost weights) may differ. The
    runs land in subdirectories a_<controller> and b_<controller> of the
    comparison directory, and comparison.csv holds aligned time series of
    the control signals, state norms, and cumulative running costs.
    """
    mismatched = [f for f in _PLANT_FIELDS if getattr(config_a, f) != getattr(config_b, f)]
    if mismatched:
        raise ConfigError(f"configs disagree on plant data: {mismatched}")
    tg_a = resolve_time_grid(config_a)
    tg_b = resolve_time_grid(config_b)
    if tg_a != tg_b:
        raise ConfigError(
            "configs resolve to different time grids "
            f"({tg_a.n_steps} vs {tg_b.n_steps} steps); pin n_steps to align them"
        )

    if out_dir is not None:
        base = Path(out_dir)
    elif config_a.output_dir is not None:
        base = Path(config_a.output_dir)
    else:
        root = Path(os.environ.get("HYPERLQR_OUT", "runs"))
        base = root / f"compare_{config_a.controller}_vs_{config_b.controller}"
    base.mkdir(parents=True, exist_ok=True)
    label_a = f"a:{config_a.controller}"
    label_b = f"b:{config_b.controller}"
    run_a = run_scenario(config_a, base / f"a_{config_a.controller}")
    run_b = run_scenario(config_b, base / f"b_{config_b.controller}")

    cum_a = _cumulative_cost(run_a.times, run_a.running_series)
    cum_b = _cumulative_cost(run_b.times, run_b.running_series)
    table_path = base / "comparison.csv"
    write_csv(
        table_path,
        ["t", "U_a", "U_b", "norm_u_a", "norm_u_b", "norm_v_a", "norm_v_b",
         "cum_cost_a", "cum_cost_b"],
        ([run_a.times[n], run_a.control[n], run_b.control[n],
          run_a.norm_u[n], run_b.norm_u[n], run_a.norm_v[n], run_b.norm_v[n],
          cum_a[n], cum_b[n]]
         for n in range(len(run_a.times))),
    )
    return ControllerComparison(
        run_a=run_a, run_b=run_b, label_a=label_a, label_b=label_b, table_path=table_path
    )
