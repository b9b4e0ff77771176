import math

import numpy as np
import pytest

from hyperlqr import (
    BlowUpError,
    CFLError,
    ControlSignal,
    ConvergenceError,
    CostWeights,
    Field,
    Grid1D,
    GridMismatchError,
    Kernel2D,
    OpenLoopLaw,
    SingularConstraintError,
    SystemParams,
    TimeGrid,
    derive_p1_from_constraint,
    reconstruct_costates,
    sample_kernel,
    simulate,
    solve_riccati,
    solve_steady_state,
)


def make_setup(n_cells=8, r=1.0):
    grid = Grid1D(n_cells)
    params = SystemParams(
        eps1=1.0,
        eps2=2.0,
        c1=Field(grid, np.full(grid.n_nodes, 1.0)),
        c2=Field(grid, np.full(grid.n_nodes, 2.0)),
        q=1.0,
    )

    def sines(a):
        return sample_kernel(lambda x, y: a * np.sin(np.pi * x) * np.sin(np.pi * y), grid)

    weights = CostWeights(Q1=sines(3.0), Q2=sines(4.0), R=r, Pf1=sines(1.0), Pf2=sines(2.0))
    return grid, params, weights


def reference_step_back(p2, p1, params, weights, grid, dt):
    # independent scalar re-implementation of one backward kernel step
    n = grid.n_nodes
    dx = grid.dx
    nu1 = params.eps1 * dt / dx
    nu2 = params.eps2 * dt / dx
    q1 = weights.Q1.values
    q2 = weights.Q2.values
    coef = 0.0 if math.isinf(weights.R) else params.eps2**2 / weights.R
    new2 = np.empty_like(p2)
    new1 = np.empty_like(p1)
    for i in range(n):
        for j in range(n):
            val = p2[i, j]
            if i > 0:
                val -= nu2 * (p2[i, j] - p2[i - 1, j])
            if j > 0:
                val -= nu2 * (p2[i, j] - p2[i, j - 1])
            val += dt * q2[i, j]
            val -= dt * coef * p2[i, -1] * p2[-1, j]
            new2[i, j] = 0.0 if (i == 0 or j == 0) else val
    for i in range(n):
        for j in range(n):
            val = p1[i, j]
            if i < n - 1:
                val += nu1 * (p1[i + 1, j] - p1[i, j])
            if j < n - 1:
                val += nu1 * (p1[i, j + 1] - p1[i, j])
            val += dt * q1[i, j]
            new1[i, j] = 0.0 if (i == n - 1 or j == n - 1) else val
    return new2, new1


def test_single_backward_step_matches_hand_stencil():
    grid, params, weights = make_setup(n_cells=6)
    tg = TimeGrid(t_final=0.02, n_steps=1)
    solution = solve_riccati(params, weights, tg)
    ref2, ref1 = reference_step_back(
        weights.Pf2.values, weights.Pf1.values, params, weights, grid, tg.dt
    )
    np.testing.assert_allclose(solution.p2[0], ref2, rtol=1e-13, atol=1e-15)
    np.testing.assert_allclose(solution.p1[0], ref1, rtol=1e-13, atol=1e-15)


def test_final_slice_is_untouched_final_data():
    grid, params, weights = make_setup()
    tg = TimeGrid(t_final=0.1, n_steps=4)
    solution = solve_riccati(params, weights, tg)
    np.testing.assert_array_equal(solution.p1[-1], weights.Pf1.values)
    np.testing.assert_array_equal(solution.p2[-1], weights.Pf2.values)


def test_inflow_edges_zero_at_all_slices():
    grid, params, weights = make_setup()
    tg = TimeGrid(t_final=0.1, n_steps=4)
    solution = solve_riccati(params, weights, tg)
    np.testing.assert_array_equal(solution.p2[:, 0, :], 0.0)
    np.testing.assert_array_equal(solution.p2[:, :, 0], 0.0)
    np.testing.assert_array_equal(solution.p1[:-1, -1, :], 0.0)
    np.testing.assert_array_equal(solution.p1[:-1, :, -1], 0.0)


def test_gain_rows_are_scaled_boundary_trace():
    grid, params, weights = make_setup(r=2.0)
    tg = TimeGrid(t_final=0.1, n_steps=4)
    solution = solve_riccati(params, weights, tg)
    expected = -(params.eps2 / weights.R) * solution.p2[:, -1, :]
    np.testing.assert_array_equal(solution.gain_rows, expected)
    law = solution.gain_law()
    assert law.gain_rows.shape == (tg.n_steps + 1, grid.n_nodes)


def test_zero_weights_keep_kernel_zero():
    grid, params, weights = make_setup()
    zero = Kernel2D.zeros(grid)
    w0 = CostWeights(Q1=weights.Q1, Q2=zero, R=weights.R, Pf1=weights.Pf1, Pf2=zero)
    tg = TimeGrid(t_final=0.1, n_steps=4)
    solution = solve_riccati(params, w0, tg)
    assert not solution.p2.any()
    assert not solution.gain_rows.any()


def test_kernel_cfl_guard():
    grid, params, weights = make_setup()
    # dt = 0.1 > dx / (2 eps2) = 0.125 / 4
    with pytest.raises(CFLError):
        solve_riccati(params, weights, TimeGrid(t_final=1.0, n_steps=10))


def test_kernel_blow_up_guard():
    grid, params, weights = make_setup()
    tg = TimeGrid(t_final=0.1, n_steps=4)
    with pytest.raises(BlowUpError):
        solve_riccati(params, weights, tg, blowup_threshold=1e-6)


def test_steady_state_transport_balance_at_infinite_r():
    # with R = inf the stationary kernels integrate the running weights
    # along the diagonal characteristics: P2 = Q2 min(x,y)/eps2 and
    # P1 = Q1 min(1-x,1-y)/eps1 for constant weights, and the gain is zero
    errors = []
    for n_cells in (20, 40, 80):
        grid = Grid1D(n_cells)
        params = SystemParams(
            eps1=1.0,
            eps2=2.0,
            c1=Field(grid, np.full(grid.n_nodes, 1.0)),
            c2=Field(grid, np.full(grid.n_nodes, 1.0)),
            q=1.0,
        )
        n = grid.n_nodes
        weights = CostWeights(
            Q1=Kernel2D(grid, np.full((n, n), 6.0)),
            Q2=Kernel2D(grid, np.full((n, n), 20.0)),
            R=math.inf,
            Pf1=Kernel2D.zeros(grid),
            Pf2=Kernel2D.zeros(grid),
        )
        solution = solve_steady_state(params, weights, tol=1e-12)
        X, Y = np.meshgrid(grid.nodes, grid.nodes, indexing="ij")
        exact_p2 = 20.0 * np.minimum(X, Y) / params.eps2
        exact_p1 = 6.0 * np.minimum(1.0 - X, 1.0 - Y) / params.eps1
        assert not solution.gain_row.any()
        err = np.abs(solution.p2 - exact_p2)
        errors.append(float(err.max()))
        if n_cells == 80:
            # upwind smearing is confined to the diagonal kink
            far = np.abs(X - Y) >= 0.25
            assert err[far].max() < 0.05
            assert np.abs(solution.p1 - exact_p1)[far].max() < 0.05
    assert errors[0] > errors[1] > errors[2]


def test_steady_state_convergence_error_carries_history():
    grid, params, weights = make_setup()
    with pytest.raises(ConvergenceError) as err:
        solve_steady_state(params, weights, max_iter=3, tol=1e-14)
    assert len(err.value.history) == 3


def test_derive_p1_from_constraint_row_formula():
    grid, params, weights = make_setup()
    p1 = derive_p1_from_constraint(weights.Pf2, params.c1, params.c2)
    expected = -(params.c2.values[:, None] / params.c1.values[:, None]) * weights.Pf2.values
    np.testing.assert_allclose(p1.values, expected, rtol=1e-13)


def test_derive_p1_singular_where_c1_vanishes():
    grid, params, weights = make_setup()
    c1 = Field(grid, np.linspace(-1.0, 1.0, grid.n_nodes))
    with pytest.raises(SingularConstraintError):
        derive_p1_from_constraint(weights.Pf2, c1, params.c2)


def test_reconstruct_costates_definition_and_grid_guard():
    grid, params, weights = make_setup()
    tg = TimeGrid(t_final=0.1, n_steps=4)
    solution = solve_riccati(params, weights, tg)
    rng = np.random.default_rng(2)
    signal = ControlSignal(tg, rng.normal(size=tg.n_steps + 1))
    traj = simulate(
        params,
        Field(grid, rng.normal(size=grid.n_nodes)),
        Field(grid, rng.normal(size=grid.n_nodes)),
        OpenLoopLaw(signal),
        tg,
    )
    costates = reconstruct_costates(solution, traj)
    tau = grid.quad_weights
    for n in (0, 2, 4):
        np.testing.assert_allclose(
            costates.lambda2[n], solution.p2[n] @ (tau * traj.v[n]), rtol=1e-12
        )
        np.testing.assert_allclose(
            costates.lambda1[n], solution.p1[n] @ (tau * traj.u[n]), rtol=1e-12
        )
    other = simulate(
        params,
        Field.zeros(grid),
        Field.zeros(grid),
        OpenLoopLaw(ControlSignal(TimeGrid(0.1, 8), np.zeros(9))),
        TimeGrid(0.1, 8),
    )
    with pytest.raises(GridMismatchError):
        reconstruct_costates(solution, other)
