"""Quadratic cost functional for trajectories of the boundary-controlled system.

The running integrand is (1/2)[<u, Q1(u)> + <v, Q2(v)> + R U^2] and the
terminal payoff is (1/2)[<u(T), Pf1(u(T))> + <v(T), Pf2(v(T))>], with all
state weights given as integral-operator kernels on the simulation grid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grids import Field, Kernel2D, apply_operator, inner_product, require_same_grid
from .system import Trajectory


@dataclass(frozen=True)
class CostWeights:
    """Weight kernels Q1, Q2, Pf1, Pf2 and the scalar control penalty R > 0."""

    Q1: Kernel2D
    Q2: Kernel2D
    R: float
    Pf1: Kernel2D
    Pf2: Kernel2D

    def __post_init__(self) -> None:
        if not self.R > 0.0:
            raise ValueError(f"control penalty R must be positive, got {self.R}")
        require_same_grid(self.Q1, self.Q2, self.Pf1, self.Pf2)

    @property
    def grid(self):
        return self.Q1.grid


def running_cost(u: Field, v: Field, control_value: float, weights: CostWeights) -> float:
    """Instantaneous cost density (1/2)[<u,Q1 u> + <v,Q2 v> + R U^2]."""
    require_same_grid(u, v, weights.Q1)
    penalty = 0.0 if control_value == 0.0 else weights.R * control_value**2
    return 0.5 * (
        inner_product(u, apply_operator(weights.Q1, u))
        + inner_product(v, apply_operator(weights.Q2, v))
        + penalty
    )


def terminal_cost(u_final: Field, v_final: Field, weights: CostWeights) -> float:
    return 0.5 * (
        inner_product(u_final, apply_operator(weights.Pf1, u_final))
        + inner_product(v_final, apply_operator(weights.Pf2, v_final))
    )


def running_cost_series(traj: Trajectory, weights: CostWeights) -> np.ndarray:
    """Running cost at every stored time level."""
    require_same_grid(weights.Q1, traj.params.c1)
    grid = traj.params.grid
    w = grid.quad_weights
    uq = traj.u * w[None, :]
    vq = traj.v * w[None, :]
    quad_u = np.einsum("ni,ni->n", uq, traj.u @ (weights.Q1.values * w[None, :]).T)
    quad_v = np.einsum("ni,ni->n", vq, traj.v @ (weights.Q2.values * w[None, :]).T)
    ctrl = traj.control.values
    penalty = np.zeros_like(ctrl)
    nonzero = ctrl != 0.0
    penalty[nonzero] = weights.R * ctrl[nonzero] ** 2
    return 0.5 * (quad_u + quad_v + penalty)


def total_cost(traj: Trajectory, weights: CostWeights) -> float:
    """Trapezoid-in-time integral of the running cost plus the terminal payoff."""
    series = running_cost_series(traj, weights)
    wt = traj.time_grid.quad_weights
    nt = traj.time_grid.n_steps
    return float(np.dot(wt, series)) + terminal_cost(
        traj.u_field(nt), traj.v_field(nt), weights
    )
