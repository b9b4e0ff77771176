"""Backward kernel Riccati march yielding the boundary LQR feedback.

The co-states of the quadratic control problem are represented through
time-varying integral kernels,

    lambda1(x, t) = int_0^1 P1(x, y, t) u(y, t) dy
    lambda2(x, t) = int_0^1 P2(x, y, t) v(y, t) dy

which turns the optimal boundary value U(t) = -(eps2/R) lambda2(1, t) into a
state feedback with gain row -(eps2/R) P2(1, ., t). The kernels obey
transport equations on the unit square with a rank-one quadratic term,

    -P2_t = -(eps2^2/R) P2(x, 1, t) P2(1, y, t) - eps2 (P2_x + P2_y) + Q2
    -P1_t =  eps1 (P1_x + P1_y) + Q1

marched backward from P1 = Pf1, P2 = Pf2 at the final time with zero values
on the characteristic inflow edges (x = 0 and y = 0 for P2, x = 1 and y = 1
for P1). The derivation also asks for the pointwise tie
c1(x) P1 + c2(x) P2 = 0 and for zeros on P1's outflow edges; generic final
data contradict both, so the march does not enforce them and instead reports
their violation per time slice as diagnostics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .adjoint import CostateTrajectory
from .cost import CostWeights
from .errors import BlowUpError, CFLError, ConvergenceError
from .grids import Field, Grid1D, GridMismatchError, Kernel2D, TimeGrid, require_same_grid
from .system import LqrGainLaw, SystemParams, Trajectory


class SingularConstraintError(ValueError):
    """The algebraic kernel tie cannot be inverted where c1 vanishes."""


def check_kernel_cfl(params: SystemParams, grid: Grid1D, time_grid: TimeGrid) -> None:
    """Stability bound for the diagonal kernel transport, dt (eps_x + eps_y) <= dx."""
    speed = max(params.eps1, params.eps2)
    ratio = 2.0 * speed * time_grid.dt / grid.dx
    if ratio > 1.0 + 1e-12:
        raise CFLError(
            f"2*dt*max(eps1,eps2)/dx = {ratio:.6f} > 1; the kernel march advects "
            "along the diagonal and needs half the time step of the state solver"
        )


def _step_back_p2(a: np.ndarray, nu2: float, dt: float, q2: np.ndarray, quad_coef: float) -> np.ndarray:
    b = a.copy()
    b[1:, :] -= nu2 * (a[1:, :] - a[:-1, :])
    b[:, 1:] -= nu2 * (a[:, 1:] - a[:, :-1])
    b += dt * q2
    if quad_coef != 0.0:
        b -= dt * quad_coef * np.outer(a[:, -1], a[-1, :])
    b[0, :] = 0.0
    b[:, 0] = 0.0
    return b


def _step_back_p1(a: np.ndarray, nu1: float, dt: float, q1: np.ndarray) -> np.ndarray:
    b = a.copy()
    b[:-1, :] += nu1 * (a[1:, :] - a[:-1, :])
    b[:, :-1] += nu1 * (a[:, 1:] - a[:, :-1])
    b += dt * q1
    b[-1, :] = 0.0
    b[:, -1] = 0.0
    return b


def _quad_coef(params: SystemParams, weights: CostWeights) -> float:
    return 0.0 if math.isinf(weights.R) else params.eps2**2 / weights.R


def _gain_factor(params: SystemParams, weights: CostWeights) -> float:
    return 0.0 if math.isinf(weights.R) else params.eps2 / weights.R


def _diagnostics(params: SystemParams, p1: np.ndarray, p2: np.ndarray):
    c1 = params.c1.values[None, :, None]
    c2 = params.c2.values[None, :, None]
    constraint = np.abs(c1 * p1 + c2 * p2).max(axis=(1, 2))
    outflow = np.maximum(
        np.abs(p1[:, 0, :]).max(axis=1), np.abs(p1[:, :, 0]).max(axis=1)
    )
    return constraint, outflow


@dataclass(frozen=True)
class RiccatiSolution:
    """Backward-marched kernel slices and the feedback they induce.

    p1[n, i, j] and p2[n, i, j] hold P1(x_i, y_j, t_n) and P2(x_i, y_j, t_n)
    with the forward time index n; slice n = n_steps is the sampled final
    kernel, untouched. gain_rows[n] = -(eps2/R) P2(1, ., t_n).
    constraint_residual[n] = max |c1 P1 + c2 P2| and outflow_bc_residual[n] =
    max(|P1(0, ., t_n)|, |P1(., 0, t_n)|) track the unenforced conditions.
    Storage is (n_steps + 1) * n_nodes^2 floats per kernel.
    """

    params: SystemParams
    weights: CostWeights
    time_grid: TimeGrid
    p1: np.ndarray = field(repr=False)
    p2: np.ndarray = field(repr=False)
    gain_rows: np.ndarray = field(repr=False)
    constraint_residual: np.ndarray = field(repr=False)
    outflow_bc_residual: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        for name in ("p1", "p2", "gain_rows", "constraint_residual", "outflow_bc_residual"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def grid(self) -> Grid1D:
        return self.params.grid

    def p1_kernel(self, n: int) -> Kernel2D:
        return Kernel2D(self.grid, self.p1[n])

    def p2_kernel(self, n: int) -> Kernel2D:
        return Kernel2D(self.grid, self.p2[n])

    def gain_law(self) -> LqrGainLaw:
        return LqrGainLaw(self.gain_rows)

    @property
    def max_constraint_residual(self) -> float:
        return float(self.constraint_residual.max())

    @property
    def max_outflow_bc_residual(self) -> float:
        return float(self.outflow_bc_residual.max())


def solve_riccati(
    params: SystemParams,
    weights: CostWeights,
    time_grid: TimeGrid,
    blowup_threshold: float = 1e8,
) -> RiccatiSolution:
    """March the kernel Riccati equations backward from the final-time data.

    Both kernels are advanced with first-order upwind differences along their
    characteristic directions: P2 moves toward growing (x, y) and takes
    backward differences with zero inflow at x = 0 and y = 0, P1 moves toward
    shrinking (x, y) and takes forward differences with zero inflow at x = 1
    and y = 1. The rank-one quadratic term is evaluated explicitly from the
    already-known later-time slice.

    Parameters
    ----------
    params : SystemParams
        Plant description; c1, c2 enter only the reported tie residual.
    weights : CostWeights
        Running and final weight kernels and the control penalty R. R may be
        math.inf, which drops the quadratic term and zeroes the gain.
    time_grid : TimeGrid
        Levels shared with the state trajectory the feedback will act on.
    blowup_threshold : float, optional
        Raise once max |P2| exceeds this during the march.

    Returns
    -------
    RiccatiSolution
        Kernel slices at every level, feedback gain rows, and per-slice
        residuals of the unenforced algebraic tie and outflow conditions.

    Raises
    ------
    CFLError
        If dt violates the diagonal-transport stability bound.
    BlowUpError
        If the quadratic term drives the kernel past blowup_threshold.
    """
    grid = require_same_grid(params.c1, weights.Q1)
    check_kernel_cfl(params, grid, time_grid)
    nt = time_grid.n_steps
    dt = time_grid.dt
    nu1 = params.eps1 * dt / grid.dx
    nu2 = params.eps2 * dt / grid.dx
    q1 = weights.Q1.values
    q2 = weights.Q2.values
    quad_coef = _quad_coef(params, weights)

    n = grid.n_nodes
    p1 = np.empty((nt + 1, n, n))
    p2 = np.empty((nt + 1, n, n))
    p1[nt] = weights.Pf1.values
    p2[nt] = weights.Pf2.values
    for m in range(nt, 0, -1):
        p2[m - 1] = _step_back_p2(p2[m], nu2, dt, q2, quad_coef)
        p1[m - 1] = _step_back_p1(p1[m], nu1, dt, q1)
        peak = float(np.abs(p2[m - 1]).max())
        if not math.isfinite(peak) or peak > blowup_threshold:
            raise BlowUpError(
                f"kernel march reached max |P2| = {peak:.3e} at t = {time_grid.times[m - 1]:.6g}",
                step=m - 1,
                time=float(time_grid.times[m - 1]),
            )

    gain_rows = -_gain_factor(params, weights) * p2[:, -1, :]
    constraint, outflow = _diagnostics(params, p1, p2)
    return RiccatiSolution(
        params=params,
        weights=weights,
        time_grid=time_grid,
        p1=p1,
        p2=p2,
        gain_rows=gain_rows,
        constraint_residual=constraint,
        outflow_bc_residual=outflow,
    )


@dataclass(frozen=True)
class SteadyRiccatiSolution:
    """Fixed point of the kernel march and the time-invariant feedback row."""

    params: SystemParams
    weights: CostWeights
    p1: np.ndarray = field(repr=False)
    p2: np.ndarray = field(repr=False)
    gain_row: np.ndarray = field(repr=False)
    iterations: int = 0
    residual: float = math.nan
    constraint_residual: float = math.nan
    outflow_bc_residual: float = math.nan

    def __post_init__(self) -> None:
        for name in ("p1", "p2", "gain_row"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def grid(self) -> Grid1D:
        return self.params.grid

    def p1_kernel(self) -> Kernel2D:
        return Kernel2D(self.grid, self.p1)

    def p2_kernel(self) -> Kernel2D:
        return Kernel2D(self.grid, self.p2)

    def gain_law(self, n_steps: int) -> LqrGainLaw:
        return LqrGainLaw.constant(self.gain_row, n_steps)


def solve_steady_state(
    params: SystemParams,
    weights: CostWeights,
    cfl: float = 0.9,
    tol: float = 1e-9,
    max_iter: int = 50000,
    blowup_threshold: float = 1e8,
) -> SteadyRiccatiSolution:
    """Pseudo-time march to the stationary kernel equations.

    Applies the same backward update as solve_riccati, starting from zero
    kernels, until the per-step change stalls below tol; the fixed point then
    satisfies the upwind discretization of

        -(eps2^2/R) P2(x, 1) P2(1, y) - eps2 (P2_x + P2_y) + Q2 = 0
        eps1 (P1_x + P1_y) + Q1 = 0

    with zero inflow values. Pass R = math.inf to drop the quadratic term,
    leaving pure transport balances of the running weights. The reported
    residual is max |update| / dt, the sup norm of the discrete stationary
    equations at the returned iterate. Raises ConvergenceError (with the
    residual history attached) if max_iter passes without reaching tol.
    """
    grid = require_same_grid(params.c1, weights.Q1)
    dt = cfl * grid.dx / (2.0 * max(params.eps1, params.eps2))
    nu1 = params.eps1 * dt / grid.dx
    nu2 = params.eps2 * dt / grid.dx
    q1 = weights.Q1.values
    q2 = weights.Q2.values
    quad_coef = _quad_coef(params, weights)

    n = grid.n_nodes
    p1 = np.zeros((n, n))
    p2 = np.zeros((n, n))
    history = []
    converged = False
    for iteration in range(1, max_iter + 1):
        p2_next = _step_back_p2(p2, nu2, dt, q2, quad_coef)
        p1_next = _step_back_p1(p1, nu1, dt, q1)
        residual = (
            max(float(np.abs(p2_next - p2).max()), float(np.abs(p1_next - p1).max()))
            / dt
        )
        history.append(residual)
        p1, p2 = p1_next, p2_next
        peak = float(np.abs(p2).max())
        if not math.isfinite(peak) or peak > blowup_threshold:
            raise BlowUpError(
                f"steady kernel march reached max |P2| = {peak:.3e} at iteration {iteration}",
                step=iteration,
                time=iteration * dt,
            )
        if residual <= tol:
            converged = True
            break
    if not converged:
        raise ConvergenceError(
            f"steady kernel march stalled at residual {history[-1]:.3e} > {tol:g} "
            f"after {max_iter} iterations",
            history=history,
        )

    constraint, outflow = _diagnostics(params, p1[None], p2[None])
    return SteadyRiccatiSolution(
        params=params,
        weights=weights,
        p1=p1,
        p2=p2,
        gain_row=-_gain_factor(params, weights) * p2[-1, :],
        iterations=iteration,
        residual=history[-1],
        constraint_residual=float(constraint[0]),
        outflow_bc_residual=float(outflow[0]),
    )


def derive_p1_from_constraint(p2: Kernel2D, c1: Field, c2: Field) -> Kernel2D:
    """Resolve the algebraic tie c1(x) P1 + c2(x) P2 = 0 for P1, row by row."""
    grid = require_same_grid(p2, c1, c2)
    singular = np.flatnonzero(c1.values == 0.0)
    if singular.size:
        i = int(singular[0])
        raise SingularConstraintError(
            f"c1 vanishes at node {i} (x = {grid.nodes[i]:.6g}), so the tie "
            "c1 P1 + c2 P2 = 0 does not determine P1 there"
        )
    return Kernel2D(grid, -(c2.values / c1.values)[:, None] * p2.values)


def reconstruct_costates(solution: RiccatiSolution, traj: Trajectory) -> CostateTrajectory:
    """Evaluate lambda1 = P1(u), lambda2 = P2(v) along a stored trajectory.

    Applies each time slice of the marched kernels to the matching state row
    by trapezoid quadrature. Useful for checking the kernel representation
    against co-states integrated directly by the adjoint solver.
    """
    grid = require_same_grid(solution.params.c1, traj.params.c1)
    if traj.time_grid != solution.time_grid:
        raise GridMismatchError(
            f"trajectory levels {traj.time_grid} differ from kernel levels "
            f"{solution.time_grid}"
        )
    tau = grid.quad_weights
    lam1 = np.einsum("nij,j,nj->ni", solution.p1, tau, traj.u)
    lam2 = np.einsum("nij,j,nj->ni", solution.p2, tau, traj.v)
    return CostateTrajectory(grid=grid, time_grid=traj.time_grid, lambda1=lam1, lambda2=lam2)
