"""Explicit upwind simulation of the boundary-controlled 2x2 hyperbolic system.

State (u, v) on [0, 1] obeys

    u_t = -eps1 u_x + c1(x) v        u(0, t) = q v(0, t)
    v_t = +eps2 v_x + c2(x) u        v(1, t) = U(t)

so u carries information rightward and v leftward. The boundary value U(t)
is the control input; it may come from a stored open-loop signal or be
evaluated from the current state through a feedback law.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import BlowUpError, CFLError
from .grids import Field, Grid1D, GridMismatchError, TimeGrid, require_same_grid


@dataclass(frozen=True)
class SystemParams:
    """Plant description: transport speeds, couplings, and boundary reflection.

    c1 and c2 are nodal fields on the simulation grid. The reflection
    coefficient q ties the left boundary values of u and v together and
    must be nonzero.
    """

    eps1: float
    eps2: float
    c1: Field
    c2: Field
    q: float

    def __post_init__(self) -> None:
        if not (self.eps1 > 0.0 and self.eps2 > 0.0):
            raise ValueError(
                f"transport speeds must be positive, got eps1={self.eps1}, eps2={self.eps2}"
            )
        if self.q == 0.0:
            raise ValueError("boundary reflection coefficient q must be nonzero")
        require_same_grid(self.c1, self.c2)

    @property
    def grid(self) -> Grid1D:
        return self.c1.grid


@dataclass(frozen=True)
class ControlSignal:
    """Boundary control sampled on the levels of a TimeGrid."""

    time_grid: TimeGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        raw = np.asarray(self.values)
        arr = np.array(raw, dtype=np.longdouble if raw.dtype == np.longdouble else float)
        if arr.shape != (self.time_grid.n_steps + 1,):
            raise ValueError(
                f"control needs {self.time_grid.n_steps + 1} samples, got {arr.shape}"
            )
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @classmethod
    def zeros(cls, time_grid: TimeGrid) -> "ControlSignal":
        return cls(time_grid, np.zeros(time_grid.n_steps + 1))


@dataclass(frozen=True)
class ZeroLaw:
    """U(t) = 0."""


@dataclass(frozen=True)
class OpenLoopLaw:
    """Replay a stored control signal."""

    signal: ControlSignal


@dataclass(frozen=True)
class LqrGainLaw:
    """Time-indexed feedback rows g(y, t_n); U = <g(., t_n), v> by quadrature.

    gain_rows[n, j] already carries the full feedback scaling, i.e. the
    rows of -(eps2/R) P2(1, y, t_n) for a Riccati-kernel law.
    """

    gain_rows: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        arr = np.array(self.gain_rows, dtype=float)
        if arr.ndim != 2:
            raise ValueError("gain_rows must be a 2-D (time x node) array")
        arr.flags.writeable = False
        object.__setattr__(self, "gain_rows", arr)

    @classmethod
    def constant(cls, row: np.ndarray, n_steps: int) -> "LqrGainLaw":
        """Broadcast a single time-invariant gain row over all time levels."""
        return cls(np.tile(np.asarray(row, dtype=float), (n_steps + 1, 1)))


@dataclass(frozen=True)
class BacksteppingLaw:
    """U = <kvu_trace, u> + <kvv_trace, v> with kernel traces at x = 1."""

    kvu_trace: Field
    kvv_trace: Field

    def __post_init__(self) -> None:
        require_same_grid(self.kvu_trace, self.kvv_trace)


FeedbackLaw = Union[ZeroLaw, OpenLoopLaw, LqrGainLaw, BacksteppingLaw]


@dataclass(frozen=True)
class Trajectory:
    """Simulated state history: u[n, i] = u(x_i, t_n), plus the applied control.

    Stored rows satisfy the boundary identities u[n, 0] = q v[n, 0] and
    v[n, -1] = control.values[n] at every level, including n = 0 where the
    initial data are overwritten to match.
    """

    params: SystemParams
    time_grid: TimeGrid
    u: np.ndarray = field(repr=False)
    v: np.ndarray = field(repr=False)
    control: ControlSignal

    def __post_init__(self) -> None:
        shape = (self.time_grid.n_steps + 1, self.params.grid.n_nodes)
        for name in ("u", "v"):
            raw = np.asarray(getattr(self, name))
            arr = np.array(raw, dtype=np.longdouble if raw.dtype == np.longdouble else float)
            if arr.shape != shape:
                raise ValueError(f"{name} must have shape {shape}, got {arr.shape}")
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    def u_field(self, n: int) -> Field:
        return Field(self.params.grid, self.u[n])

    def v_field(self, n: int) -> Field:
        return Field(self.params.grid, self.v[n])


def _evaluate_rows(law: FeedbackLaw, u_row, v_row, step: int, weights):
    # Returns a numpy scalar in the law/state dtype; coercing to Python float
    # here would silently quantize extended-precision controls.
    if isinstance(law, ZeroLaw):
        return 0.0
    if isinstance(law, OpenLoopLaw):
        return law.signal.values[step]
    if isinstance(law, LqrGainLaw):
        return np.dot(weights, law.gain_rows[step] * v_row)
    if isinstance(law, BacksteppingLaw):
        return np.dot(weights, law.kvu_trace.values * u_row) + np.dot(
            weights, law.kvv_trace.values * v_row
        )
    raise TypeError(f"unknown feedback law: {law!r}")


def evaluate_feedback(law: FeedbackLaw, u: Field, v: Field, step: int) -> float:
    """Evaluate the boundary control a law produces for state (u, v) at a level.

    For time-indexed laws, step selects the gain row / stored sample and must
    lie within the law's time range.
    """
    grid = require_same_grid(u, v)
    if isinstance(law, OpenLoopLaw) and not 0 <= step <= law.signal.time_grid.n_steps:
        raise IndexError(f"step {step} outside stored control range")
    if isinstance(law, LqrGainLaw):
        if not 0 <= step < law.gain_rows.shape[0]:
            raise IndexError(f"step {step} outside gain row range")
        if law.gain_rows.shape[1] != grid.n_nodes:
            raise GridMismatchError(
                f"gain rows have {law.gain_rows.shape[1]} nodes "
                f"but the grid has {grid.n_nodes}"
            )
    if isinstance(law, BacksteppingLaw):
        require_same_grid(law.kvu_trace, u)
    return _evaluate_rows(law, u.values, v.values, step, grid.quad_weights)


def check_cfl(params: SystemParams, grid: Grid1D, time_grid: TimeGrid) -> None:
    ratio = time_grid.dt * max(params.eps1, params.eps2) / grid.dx
    if ratio > 1.0 + 1e-12:
        raise CFLError(
            f"dt*max(eps1,eps2)/dx = {ratio:.6f} > 1; reduce dt or coarsen the grid"
        )


def steps_for_cfl(t_final: float, grid: Grid1D, max_speed: float, cfl: float) -> int:
    """Smallest step count whose dt satisfies dt <= cfl * dx / max_speed."""
    if not 0.0 < cfl <= 1.0:
        raise ValueError(f"cfl must lie in (0, 1], got {cfl}")
    target = cfl * grid.dx / max_speed
    return max(1, int(np.ceil(t_final / target - 1e-12)))


def simulate(
    params: SystemParams,
    u0: Field,
    v0: Field,
    law: FeedbackLaw,
    time_grid: TimeGrid,
) -> Trajectory:
    """March the coupled transport system with first-order upwind differences.

    u uses backward differences (rightward transport), v forward differences
    (leftward transport); the coupling terms are taken explicitly at the old
    level. The control for the new level is evaluated from the state at the
    beginning of the step, with the law's time index at the new level, and
    imposed on v at x = 1; the left boundary of u is then slaved to v.
    Raises CFLError before marching if dt is too large and BlowUpError if
    the state stops being finite.

    Returns the full trajectory with the applied control attached.
    """
    grid = require_same_grid(u0, v0, params.c1)
    check_cfl(params, grid, time_grid)
    if isinstance(law, OpenLoopLaw) and law.signal.time_grid != time_grid:
        raise ValueError("open-loop signal must live on the simulation time grid")
    if isinstance(law, LqrGainLaw):
        if law.gain_rows.shape != (time_grid.n_steps + 1, grid.n_nodes):
            raise ValueError(
                f"gain rows must have shape {(time_grid.n_steps + 1, grid.n_nodes)}, "
                f"got {law.gain_rows.shape}"
            )

    nt = time_grid.n_steps
    dt = time_grid.dt
    nu1 = params.eps1 * dt / grid.dx
    nu2 = params.eps2 * dt / grid.dx
    c1 = params.c1.values
    c2 = params.c2.values
    w = grid.quad_weights

    state_t = np.result_type(u0.values, v0.values, c1, c2)
    u = np.empty((nt + 1, grid.n_nodes), dtype=state_t)
    v = np.empty((nt + 1, grid.n_nodes), dtype=state_t)
    applied = np.empty(nt + 1, dtype=state_t)

    u[0] = u0.values
    v[0] = v0.values
    applied[0] = _evaluate_rows(law, u[0], v[0], 0, w)
    v[0, -1] = applied[0]
    u[0, 0] = params.q * v[0, 0]

    for n in range(nt):
        un, vn = u[n], v[n]
        u_new = u[n + 1]
        v_new = v[n + 1]
        u_new[1:] = un[1:] - nu1 * (un[1:] - un[:-1]) + dt * c1[1:] * vn[1:]
        v_new[:-1] = vn[:-1] + nu2 * (vn[1:] - vn[:-1]) + dt * c2[:-1] * un[:-1]
        applied[n + 1] = _evaluate_rows(law, un, vn, n + 1, w)
        v_new[-1] = applied[n + 1]
        u_new[0] = params.q * v_new[0]
        if not (np.isfinite(u_new).all() and np.isfinite(v_new).all()):
            raise BlowUpError(
                f"non-finite state at step {n + 1} (t = {time_grid.times[n + 1]:.6g})",
                step=n + 1,
                time=float(time_grid.times[n + 1]),
            )

    control = ControlSignal(time_grid, applied)
    return Trajectory(params=params, time_grid=time_grid, u=u, v=v, control=control)
