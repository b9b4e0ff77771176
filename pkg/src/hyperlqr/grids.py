"""Uniform node-centered grids, scalar fields, and integral-operator kernels.

Everything downstream (transport solvers, cost functionals, kernel equations)
works on the unit interval with both endpoints as grid nodes and composite
trapezoid quadrature on those nodes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np


class GridMismatchError(ValueError):
    """Raised when two objects that must share a grid do not."""


def _frozen_array(values, shape: tuple[int, ...]) -> np.ndarray:
    # longdouble passes through untouched, everything else lands in float64
    dtype = np.longdouble if np.asarray(values).dtype == np.longdouble else float
    arr = np.array(values, dtype=dtype)
    if arr.shape != shape:
        raise ValueError(f"expected array of shape {shape}, got {arr.shape}")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid on [0, 1] with n_cells + 1 nodes including both endpoints."""

    n_cells: int

    def __post_init__(self) -> None:
        if self.n_cells < 1:
            raise ValueError(f"n_cells must be >= 1, got {self.n_cells}")

    @property
    def n_nodes(self) -> int:
        return self.n_cells + 1

    @property
    def dx(self) -> float:
        return 1.0 / self.n_cells

    @cached_property
    def nodes(self) -> np.ndarray:
        x = np.linspace(0.0, 1.0, self.n_nodes)
        x.flags.writeable = False
        return x

    @cached_property
    def quad_weights(self) -> np.ndarray:
        """Composite trapezoid weights: dx at interior nodes, dx/2 at endpoints."""
        w = np.full(self.n_nodes, self.dx)
        w[0] = w[-1] = 0.5 * self.dx
        w.flags.writeable = False
        return w


@dataclass(frozen=True)
class TimeGrid:
    """Uniform time grid on [0, t_final] with n_steps + 1 levels."""

    t_final: float
    n_steps: int

    def __post_init__(self) -> None:
        if not self.t_final > 0.0:
            raise ValueError(f"t_final must be positive, got {self.t_final}")
        if self.n_steps < 1:
            raise ValueError(f"n_steps must be >= 1, got {self.n_steps}")

    @property
    def dt(self) -> float:
        return self.t_final / self.n_steps

    @cached_property
    def times(self) -> np.ndarray:
        t = np.linspace(0.0, self.t_final, self.n_steps + 1)
        t.flags.writeable = False
        return t

    @cached_property
    def quad_weights(self) -> np.ndarray:
        """Trapezoid weights in time: dt at interior levels, dt/2 at the ends."""
        w = np.full(self.n_steps + 1, self.dt)
        w[0] = w[-1] = 0.5 * self.dt
        w.flags.writeable = False
        return w


@dataclass(frozen=True)
class Field:
    """Scalar nodal field on a Grid1D. Values are immutable after construction."""

    grid: Grid1D
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "values", _frozen_array(self.values, (self.grid.n_nodes,))
        )

    @classmethod
    def from_function(cls, grid: Grid1D, fn: Callable) -> "Field":
        vals = np.broadcast_to(np.asarray(fn(grid.nodes), dtype=float), (grid.n_nodes,))
        return cls(grid, vals)

    @classmethod
    def zeros(cls, grid: Grid1D) -> "Field":
        return cls(grid, np.zeros(grid.n_nodes))


@dataclass(frozen=True)
class Kernel2D:
    """Nodal samples of a kernel A(x, y) on the tensor grid of a Grid1D.

    Row index is x, column index is y, so values[i, j] = A(x_i, y_j).
    """

    grid: Grid1D
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        n = self.grid.n_nodes
        object.__setattr__(self, "values", _frozen_array(self.values, (n, n)))

    @classmethod
    def zeros(cls, grid: Grid1D) -> "Kernel2D":
        n = grid.n_nodes
        return cls(grid, np.zeros((n, n)))


def require_same_grid(*objs) -> Grid1D:
    grids = {o.grid for o in objs}
    if len(grids) != 1:
        raise GridMismatchError(f"objects live on different grids: {grids}")
    return next(iter(grids))


def sample_kernel(fn: Callable, grid: Grid1D) -> Kernel2D:
    """Sample fn(x, y) on the tensor product of grid nodes."""
    X, Y = np.meshgrid(grid.nodes, grid.nodes, indexing="ij")
    n = grid.n_nodes
    vals = np.broadcast_to(np.asarray(fn(X, Y), dtype=float), (n, n))
    return Kernel2D(grid, vals)


def inner_product(f: Field, g: Field) -> float:
    """Trapezoid approximation of the L2 inner product of two nodal fields."""
    grid = require_same_grid(f, g)
    return float(np.dot(grid.quad_weights, f.values * g.values))


def field_norm(f: Field) -> float:
    """Trapezoid L2 norm of a nodal field."""
    return float(np.sqrt(max(inner_product(f, f), 0.0)))


def apply_operator(kernel: Kernel2D, f: Field) -> Field:
    """Apply the integral operator A(f)(x) = int_0^1 A(x, y) f(y) dy.

    The y-integral is evaluated with the grid's trapezoid weights, so the
    result is exact for kernels and fields that the quadrature integrates
    exactly and second-order accurate for smooth data.
    """
    grid = require_same_grid(kernel, f)
    out = kernel.values @ (grid.quad_weights * f.values)
    return Field(grid, out)


def kernel_min_rayleigh(kernel: Kernel2D) -> float:
    """Smallest Rayleigh quotient <f, A(f)> / <f, f> over nodal fields.

    Diagnostic for positive semidefiniteness of a symmetric weight kernel
    under the grid quadrature. Uses the symmetric part of the discretized
    quadratic form.
    """
    w = kernel.grid.quad_weights
    s = np.sqrt(w)
    m = s[:, None] * kernel.values * s[None, :]
    m = 0.5 * (m + m.T)
    return float(np.linalg.eigvalsh(m)[0])
