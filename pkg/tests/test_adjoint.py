import numpy as np
import pytest

from hyperlqr import (
    ControlSignal,
    CostWeights,
    Field,
    Grid1D,
    OpenLoopLaw,
    SweepOptions,
    SystemParams,
    TimeGrid,
    control_gradient,
    forward_backward_sweep,
    sample_kernel,
    simulate,
    solve_costates,
    total_cost,
)


def make_problem(n_cells=16, n_steps=24, t_final=0.4):
    grid = Grid1D(n_cells)
    params = SystemParams(
        eps1=1.0,
        eps2=1.0,
        c1=Field(grid, np.full(grid.n_nodes, 2.0)),
        c2=Field(grid, np.full(grid.n_nodes, 3.0)),
        q=1.0,
    )

    def sines(a):
        return sample_kernel(lambda x, y: a * np.sin(np.pi * x) * np.sin(np.pi * y), grid)

    weights = CostWeights(Q1=sines(4.0), Q2=sines(6.0), R=1.0, Pf1=sines(1.0), Pf2=sines(2.0))
    tg = TimeGrid(t_final=t_final, n_steps=n_steps)
    u0 = Field.from_function(grid, lambda x: np.sin(np.pi * x))
    v0 = Field.from_function(grid, lambda x: np.sin(np.pi * x))
    return params, weights, tg, u0, v0


def run_with(params, u0, v0, tg, control_values):
    signal = ControlSignal(tg, control_values)
    return simulate(params, u0, v0, OpenLoopLaw(signal), tg)


def test_costate_boundary_identities():
    params, weights, tg, u0, v0 = make_problem()
    rng = np.random.default_rng(5)
    traj = run_with(params, u0, v0, tg, rng.normal(size=tg.n_steps + 1))
    costates = solve_costates(traj, weights)
    np.testing.assert_array_equal(costates.lambda1[:, -1], 0.0)
    np.testing.assert_allclose(
        costates.lambda1[:, 0],
        params.eps2 / (params.q * params.eps1) * costates.lambda2[:, 0],
        rtol=1e-12,
        atol=1e-15,
    )


def test_gradient_matches_finite_differences():
    # the reduced gradient is the exact derivative of the discrete cost
    params, weights, tg, u0, v0 = make_problem()
    rng = np.random.default_rng(12)
    base = 0.4 * np.sin(np.linspace(0.0, 3.0, tg.n_steps + 1))
    traj = run_with(params, u0, v0, tg, base)
    g = control_gradient(traj, solve_costates(traj, weights), weights)
    wt = tg.quad_weights
    h = 1e-6
    for _ in range(6):
        direction = rng.normal(size=tg.n_steps + 1)
        plus = total_cost(run_with(params, u0, v0, tg, base + h * direction), weights)
        minus = total_cost(run_with(params, u0, v0, tg, base - h * direction), weights)
        fd = (plus - minus) / (2.0 * h)
        analytic = float(np.dot(wt, g.values * direction))
        assert analytic == pytest.approx(fd, rel=1e-6, abs=1e-10)


def test_gradient_requires_matching_time_grids():
    params, weights, tg, u0, v0 = make_problem()
    traj = run_with(params, u0, v0, tg, np.zeros(tg.n_steps + 1))
    other = run_with(params, u0, v0, TimeGrid(tg.t_final, tg.n_steps * 2),
                     np.zeros(2 * tg.n_steps + 1))
    costates = solve_costates(other, weights)
    with pytest.raises(ValueError):
        control_gradient(traj, costates, weights)


def test_descent_sweep_decreases_cost_monotonically():
    params, weights, tg, u0, v0 = make_problem()
    _, _, report = forward_backward_sweep(
        params, u0, v0, weights, tg, SweepOptions(max_iter=15, method="descent")
    )
    costs = np.asarray(report.cost_history, dtype=float)
    assert costs.size >= 2
    assert np.all(np.diff(costs) <= 1e-12)


def test_newton_sweep_reaches_stationarity():
    params, weights, tg, u0, v0 = make_problem()
    control, traj, report = forward_backward_sweep(
        params, u0, v0, weights, tg, SweepOptions(method="newton", tol=1e-10)
    )
    assert report.converged
    assert report.final_gradient_max <= 1e-8
    # the recomputed certificate from the returned artifacts agrees
    g = control_gradient(traj, solve_costates(traj, weights), weights)
    assert float(np.max(np.abs(g.values))) <= 1e-8
    np.testing.assert_allclose(
        np.asarray(control.values, dtype=float),
        np.asarray(traj.control.values, dtype=float),
        rtol=0.0,
        atol=0.0,
    )


def test_newton_minimum_beats_perturbations():
    # the discrete problem is strictly convex, so the converged control
    # must undercut every perturbed control
    params, weights, tg, u0, v0 = make_problem(n_cells=10, n_steps=14, t_final=0.3)
    control, traj, _ = forward_backward_sweep(
        params, u0, v0, weights, tg, SweepOptions(method="newton", tol=1e-10)
    )
    j_star = total_cost(traj, weights)
    rng = np.random.default_rng(9)
    base = np.asarray(control.values, dtype=float)
    for scale in (1e-3, 0.1, 10.0):
        perturbed = base + scale * rng.normal(size=base.size)
        j_other = total_cost(run_with(params, u0, v0, tg, perturbed), weights)
        assert j_star <= j_other + 1e-12


def test_invalid_sweep_method_rejected():
    with pytest.raises(ValueError):
        SweepOptions(method="bogus")
