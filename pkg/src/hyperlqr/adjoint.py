"""Co-state solve and open-loop optimization by forward/backward sweeps.

The co-state pair (lambda1, lambda2) runs backward from final-time conditions
given by the terminal weight operators and transports against the state:
in reversed time lambda1 carries information leftward (boundary value zero at
x = 1) and lambda2 rightward (its x = 0 value slaved to lambda1 through the
reflection coefficient). The reduced cost gradient with respect to the
boundary control is R U(t) + eps2 lambda2(1, t).

The backward march is built as the exact transpose of the forward upwind
step combined with the trapezoid cost quadrature, so the reported gradient
differentiates the discrete total cost to round-off rather than to O(dx).
Boundary traces are reported through the continuous boundary identities,
which keeps the co-state fields consistent approximations of the backward
transport equations. The few stencil details that differ from a naive
discretization of those equations (source time levels, boundary rows) are
all O(dx) perturbations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Optional

import numpy as np

from .cost import CostWeights, total_cost
from .grids import Field, Grid1D, TimeGrid, require_same_grid
from .system import ControlSignal, OpenLoopLaw, SystemParams, Trajectory, simulate


@dataclass(frozen=True)
class CostateTrajectory:
    """Backward sensitivity fields lambda1[n, i], lambda2[n, i].

    Rows produced by solve_costates satisfy lambda1[n, -1] = 0 and
    lambda2[n, 0] = q (eps1/eps2) lambda1[n, 0] exactly at every level;
    kernel-reconstructed rows satisfy them only as well as the kernel
    boundary conditions hold.
    """

    grid: Grid1D
    time_grid: TimeGrid
    lambda1: np.ndarray = dc_field(repr=False)
    lambda2: np.ndarray = dc_field(repr=False)

    def __post_init__(self) -> None:
        shape = (self.time_grid.n_steps + 1, self.grid.n_nodes)
        for name in ("lambda1", "lambda2"):
            raw = np.asarray(getattr(self, name))
            arr = np.array(raw, dtype=np.longdouble if raw.dtype == np.longdouble else float)
            if arr.shape != shape:
                raise ValueError(f"{name} must have shape {shape}, got {arr.shape}")
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    def lambda1_field(self, n: int) -> Field:
        return Field(self.grid, self.lambda1[n])

    def lambda2_field(self, n: int) -> Field:
        return Field(self.grid, self.lambda2[n])


def solve_costates(traj: Trajectory, weights: CostWeights) -> CostateTrajectory:
    """Integrate the co-state system backward along a stored trajectory.

    Parameters
    ----------
    traj : Trajectory
        Forward state history driving the source terms.
    weights : CostWeights
        Cost operators; Q1/Q2 feed the backward sources, Pf1/Pf2 set the
        final-time rows.

    Returns
    -------
    CostateTrajectory
        lambda1, lambda2 on the trajectory's grids.
    """
    params = traj.params
    grid = params.grid
    require_same_grid(weights.Q1, params.c1)
    tg = traj.time_grid
    nt = tg.n_steps
    dt = tg.dt
    tau = grid.quad_weights
    wt = tg.quad_weights
    nu1 = params.eps1 * dt / grid.dx
    nu2 = params.eps2 * dt / grid.dx
    c1 = params.c1.values
    c2 = params.c2.values
    q = params.q

    # Source rows w_n * tau (.) (Q tau u^n), all levels at once.
    q1_src = wt[:, None] * (tau[None, :] * ((traj.u * tau[None, :]) @ weights.Q1.values.T))
    q2_src = wt[:, None] * (tau[None, :] * ((traj.v * tau[None, :]) @ weights.Q2.values.T))

    out_t = np.result_type(traj.u, traj.v)
    lam1 = np.empty((nt + 1, grid.n_nodes), dtype=out_t)
    lam2 = np.empty((nt + 1, grid.n_nodes), dtype=out_t)

    ubar = tau * ((traj.u[nt] * tau) @ weights.Pf1.values.T) + q1_src[nt]
    vbar = tau * ((traj.v[nt] * tau) @ weights.Pf2.values.T) + q2_src[nt]

    for n in range(nt, -1, -1):
        if n < nt:
            ub_next, vb_next = ubar, vbar
            ubar = np.zeros(grid.n_nodes, dtype=out_t)
            vbar = np.zeros(grid.n_nodes, dtype=out_t)
            ubar[1:] += (1.0 - nu1) * ub_next[1:]
            ubar[:-1] += nu1 * ub_next[1:]
            vbar[1:] += dt * c1[1:] * ub_next[1:]
            vbar[:-1] += (1.0 - nu2) * vb_next[:-1]
            vbar[1:] += nu2 * vb_next[:-1]
            ubar[:-1] += dt * c2[:-1] * vb_next[:-1]
            ubar += q1_src[n]
            vbar += q2_src[n]
        pickup = vbar[-1]
        vbar[-1] = 0.0
        vbar[0] += q * ubar[0]
        ubar[0] = 0.0

        lam1[n] = ubar / tau
        lam2[n] = vbar / tau
        lam1[n, -1] = 0.0
        lam2[n, -1] = pickup / (params.eps2 * wt[n])
        lam1[n, 0] = params.eps2 / (q * params.eps1) * lam2[n, 0]

    return CostateTrajectory(grid=grid, time_grid=tg, lambda1=lam1, lambda2=lam2)


def control_gradient(
    traj: Trajectory, costates: CostateTrajectory, weights: CostWeights
) -> ControlSignal:
    """Reduced gradient g(t_n) = R U(t_n) + eps2 lambda2(1, t_n)."""
    if costates.time_grid != traj.time_grid:
        raise ValueError("trajectory and co-states live on different time grids")
    g = weights.R * traj.control.values + traj.params.eps2 * costates.lambda2[:, -1]
    return ControlSignal(traj.time_grid, g)


@dataclass(frozen=True)
class SweepOptions:
    max_iter: int = 500
    tol: float = 1e-6
    step_size: float = 1.0
    armijo_factor: float = 1e-4
    max_halvings: int = 30
    initial: Optional[ControlSignal] = None
    method: str = "conjugate"
    restart_every: int = 50

    def __post_init__(self) -> None:
        if self.method not in ("conjugate", "descent", "newton"):
            raise ValueError(
                f"method must be 'conjugate', 'descent', or 'newton', got {self.method!r}"
            )


@dataclass(frozen=True)
class SweepReport:
    iterations: int
    converged: bool
    cost_history: tuple
    final_gradient_norm: float
    final_gradient_max: float
    line_search_failed: bool


def forward_backward_sweep(
    params: SystemParams,
    u0: Field,
    v0: Field,
    weights: CostWeights,
    time_grid: TimeGrid,
    opts: SweepOptions | None = None,
) -> tuple[ControlSignal, Trajectory, SweepReport]:
    """Minimize the cost over the open-loop control by line-searched descent.

    Each iteration simulates forward, solves the co-states backward, forms
    the reduced gradient g = R U + eps2 lambda2(1, .), and updates U along a
    descent direction. Three direction policies are available: "descent" is
    steepest descent, "conjugate" (the default) mixes in the previous
    direction with a Polak-Ribiere weight and restarts every restart_every
    iterations, and "newton" exploits that the gradient map is affine in U
    by assembling the full reduced Hessian from one probe gradient per time
    sample, then taking direct linear-solve steps; badly conditioned
    problems stall far from stationarity under the first-order policies but
    reach the floating-point floor under "newton". The trial step comes from
    a one-probe parabola fit along the direction, exact here because the
    cost is quadratic in U, and Armijo backtracking guards every step, so
    the recorded cost history never increases.

    Parameters
    ----------
    params : SystemParams
        Plant to control.
    u0, v0 : Field
        Initial state.
    weights : CostWeights
        Cost description defining total_cost and the co-state sources.
    time_grid : TimeGrid
        Simulation levels; the control is one sample per level.
    opts : SweepOptions, optional
        Iteration limits, tolerance on the time-weighted L2 norm of the
        gradient, line-search controls, optional initial control, and the
        direction policy.

    Returns
    -------
    control : ControlSignal
        The final iterate.
    trajectory : Trajectory
        Forward pass under the returned control.
    report : SweepReport
        Iteration count, convergence flag, cost history, and the final
        gradient norms; converged is False when max_iter runs out or the
        line search cannot find descent within max_halvings halvings.
    """
    opts = opts or SweepOptions()
    nt = time_grid.n_steps
    wt = time_grid.quad_weights
    if opts.initial is not None:
        if opts.initial.time_grid != time_grid:
            raise ValueError("initial control must live on the sweep time grid")
        U = opts.initial.values.copy()
    else:
        U = np.zeros(nt + 1)

    def run(control_values: np.ndarray) -> tuple[Trajectory, float]:
        law = OpenLoopLaw(ControlSignal(time_grid, control_values))
        t = simulate(params, u0, v0, law, time_grid)
        return t, total_cost(t, weights)

    def grad_of(t: Trajectory) -> np.ndarray:
        return control_gradient(t, solve_costates(t, weights), weights).values

    cost_history: list[float] = []
    converged = False
    line_search_failed = False
    alpha_next = opts.step_size
    iterations = 0

    traj, J = run(U)
    cost_history.append(J)
    g = grad_of(traj)
    gnorm2 = float(np.dot(wt, g * g))
    direction = -g

    if opts.method == "newton":
        return _newton_sweep(params, u0, v0, weights, time_grid, opts, U, cost_history)

    for it in range(1, opts.max_iter + 1):
        if np.sqrt(gnorm2) <= opts.tol:
            converged = True
            break
        iterations = it

        slope = float(np.dot(wt, g * direction))
        if slope >= 0.0:
            direction = -g
            slope = -gnorm2
        if slope == 0.0:
            converged = True
            break

        # One probe fixes the parabola along the direction exactly.
        alpha0 = alpha_next
        probe = run(U + alpha0 * direction)
        curvature = 2.0 * (probe[1] - J - alpha0 * slope) / alpha0**2
        alpha = -slope / curvature if curvature > 0.0 else 2.0 * alpha0
        if not alpha > 0.0:
            alpha = alpha0

        accepted = False
        for _ in range(opts.max_halvings + 1):
            traj_try, J_try = probe if alpha == alpha0 else run(U + alpha * direction)
            if J_try <= J + opts.armijo_factor * alpha * slope:
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            line_search_failed = True
            break

        U = U + alpha * direction
        alpha_next = alpha if alpha > 0.0 else opts.step_size
        traj, J = traj_try, J_try
        cost_history.append(J)
        g_new = grad_of(traj)
        gnorm2_new = float(np.dot(wt, g_new * g_new))
        if opts.method == "conjugate" and it % opts.restart_every != 0:
            beta = max(0.0, float(np.dot(wt, g_new * (g_new - g))) / gnorm2)
            direction = -g_new + beta * direction
        else:
            direction = -g_new
        g, gnorm2 = g_new, gnorm2_new

    report = SweepReport(
        iterations=iterations,
        converged=converged,
        cost_history=tuple(cost_history),
        final_gradient_norm=float(np.sqrt(gnorm2)),
        final_gradient_max=float(np.max(np.abs(g))),
        line_search_failed=line_search_failed,
    )
    return ControlSignal(time_grid, U), traj, report


def _newton_sweep(
    params: SystemParams,
    u0: Field,
    v0: Field,
    weights: CostWeights,
    time_grid: TimeGrid,
    opts: SweepOptions,
    U: np.ndarray,
    cost_history: list,
) -> tuple[ControlSignal, Trajectory, SweepReport]:
    """Probe-built Newton iteration on the reduced gradient.

    The reduced gradient is affine in the control, so finite-difference
    probes recover exact Hessian columns; large probe amplitudes cost no
    truncation error and shrink the relative rounding noise per column.

    The stationarity residual R U + eps2 lambda2(1, .) cancels two large
    terms, and rounding seeded anywhere in the state/co-state recursions is
    amplified by the plant's growth rate, so on stiff problems it cannot be
    driven to small values in double precision. Three measures keep it
    resolvable: states, co-states, and the control iterate are propagated in
    80-bit extended precision; the probed Hessian is kept in extended
    precision; and each Newton solve wraps iterative refinement around a
    double-precision eigenfactorization used as preconditioner (its spectrum
    clamped below at R, which the exact operator dominates). Steps are
    accepted on strict decrease of the gradient norm, because near the
    optimum the cost is flat to machine resolution and an Armijo test on it
    cannot see descent. The returned control and trajectory carry the
    extended-precision values.
    """
    nt = time_grid.n_steps
    wt = time_grid.quad_weights
    hp = np.longdouble
    grid = u0.grid
    params_hp = SystemParams(
        eps1=params.eps1,
        eps2=params.eps2,
        c1=Field(grid, params.c1.values.astype(hp)),
        c2=Field(grid, params.c2.values.astype(hp)),
        q=params.q,
    )
    u0_hp = Field(grid, u0.values.astype(hp))
    v0_hp = Field(grid, v0.values.astype(hp))

    def run_hp(control_values: np.ndarray) -> tuple[Trajectory, float]:
        law = OpenLoopLaw(ControlSignal(time_grid, control_values))
        t = simulate(params_hp, u0_hp, v0_hp, law, time_grid)
        return t, total_cost(t, weights)

    def grad_of(t: Trajectory) -> np.ndarray:
        return control_gradient(t, solve_costates(t, weights), weights).values

    U = U.astype(hp)
    traj, J = run_hp(U)
    g = grad_of(traj)
    gnorm2 = float(np.dot(wt, g * g))
    converged = False
    line_search_failed = False
    iterations = 0

    if np.sqrt(gnorm2) > opts.tol:
        scale = 1e4
        m = nt + 1
        cols = np.empty((m, m), dtype=hp)
        for k in range(m):
            e = np.zeros(m, dtype=hp)
            e[k] = scale
            tk, _ = run_hp(U + e)
            cols[:, k] = (grad_of(tk) - g) / hp(scale)
        sqrtw = np.sqrt(wt)
        sym = (sqrtw[:, None].astype(hp) * cols) / sqrtw[None, :]
        sym = 0.5 * (sym + sym.T)
        eigvals, eigvecs = np.linalg.eigh(np.asarray(sym, dtype=float))
        floor = weights.R if math.isfinite(weights.R) else float(eigvals.max()) * 1e-15
        eigclamped = np.maximum(eigvals, floor)

        def solve_newton(rhs: np.ndarray) -> np.ndarray:
            z = np.zeros(m, dtype=hp)
            for _ in range(20):
                r = np.asarray(rhs - sym @ z, dtype=float)
                z = z + (eigvecs @ ((eigvecs.T @ r) / eigclamped)).astype(hp)
            return z

        for it in range(1, opts.max_iter + 1):
            if np.sqrt(gnorm2) <= opts.tol:
                converged = True
                break
            iterations = it
            direction = solve_newton(-(sqrtw * g)) / sqrtw
            alpha = 1.0
            accepted = False
            for _ in range(opts.max_halvings + 1):
                U_try = U + alpha * direction
                traj_try, J_try = run_hp(U_try)
                g_try = grad_of(traj_try)
                gnorm2_try = float(np.dot(wt, g_try * g_try))
                if gnorm2_try < gnorm2:
                    accepted = True
                    break
                alpha *= 0.5
            if not accepted:
                line_search_failed = True
                break
            U, traj, J = U_try, traj_try, J_try
            if J < cost_history[-1]:
                cost_history.append(J)
            g, gnorm2 = g_try, gnorm2_try
    else:
        converged = True

    report = SweepReport(
        iterations=iterations,
        converged=converged,
        cost_history=tuple(cost_history),
        final_gradient_norm=float(np.sqrt(gnorm2)),
        final_gradient_max=float(np.max(np.abs(g))),
        line_search_failed=line_search_failed,
    )
    return ControlSignal(time_grid, U), traj, report
