"""Boundary-controlled 2x2 linear hyperbolic systems: simulation and control.

The package simulates

    u_t = -eps1 u_x + c1(x) v        u(0, t) = q v(0, t)
    v_t =  eps2 v_x + c2(x) u        v(1, t) = U(t)

on x in [0, 1] with an upwind finite-volume march, and synthesizes the
boundary control U three ways: an open-loop forward-backward adjoint
sweep, LQR feedback from differential Riccati kernel equations, and
backstepping feedback from Goursat kernels.
"""

from .adjoint import (
    CostateTrajectory,
    SweepOptions,
    SweepReport,
    control_gradient,
    forward_backward_sweep,
    solve_costates,
)
from .backstepping import (
    BacksteppingGains,
    GoursatKernels,
    backstepping_control_signal,
    bessel_i,
    explicit_gain_traces,
    solve_goursat,
)
from .config import (
    CONTROLLERS,
    KernelSpec,
    ScenarioConfig,
    ShapeSpec,
    case1_config,
    config_from_dict,
    config_to_dict,
    load_config,
    save_config,
    with_overrides,
)
from .cost import (
    CostWeights,
    running_cost,
    running_cost_series,
    terminal_cost,
    total_cost,
)
from .errors import BlowUpError, CFLError, ConfigError, ConvergenceError
from .grids import (
    Field,
    Grid1D,
    GridMismatchError,
    Kernel2D,
    TimeGrid,
    apply_operator,
    field_norm,
    inner_product,
    kernel_min_rayleigh,
    require_same_grid,
    sample_kernel,
)
from .riccati import (
    RiccatiSolution,
    SingularConstraintError,
    SteadyRiccatiSolution,
    derive_p1_from_constraint,
    reconstruct_costates,
    solve_riccati,
    solve_steady_state,
)
from .runner import (
    ControllerComparison,
    RunArtifacts,
    compare_controllers,
    run_scenario,
)
from .system import (
    BacksteppingLaw,
    ControlSignal,
    LqrGainLaw,
    OpenLoopLaw,
    SystemParams,
    Trajectory,
    ZeroLaw,
    evaluate_feedback,
    simulate,
    steps_for_cfl,
)

__all__ = [
    "BacksteppingGains",
    "BacksteppingLaw",
    "BlowUpError",
    "CFLError",
    "CONTROLLERS",
    "ConfigError",
    "ControlSignal",
    "ControllerComparison",
    "ConvergenceError",
    "CostWeights",
    "CostateTrajectory",
    "Field",
    "GoursatKernels",
    "Grid1D",
    "GridMismatchError",
    "Kernel2D",
    "KernelSpec",
    "LqrGainLaw",
    "OpenLoopLaw",
    "RiccatiSolution",
    "RunArtifacts",
    "ScenarioConfig",
    "ShapeSpec",
    "SingularConstraintError",
    "SteadyRiccatiSolution",
    "SweepOptions",
    "SweepReport",
    "SystemParams",
    "TimeGrid",
    "Trajectory",
    "ZeroLaw",
    "apply_operator",
    "backstepping_control_signal",
    "bessel_i",
    "case1_config",
    "compare_controllers",
    "config_from_dict",
    "config_to_dict",
    "control_gradient",
    "derive_p1_from_constraint",
    "evaluate_feedback",
    "explicit_gain_traces",
    "field_norm",
    "forward_backward_sweep",
    "inner_product",
    "kernel_min_rayleigh",
    "load_config",
    "reconstruct_costates",
    "require_same_grid",
    "run_scenario",
    "running_cost",
    "running_cost_series",
    "sample_kernel",
    "save_config",
    "simulate",
    "solve_costates",
    "solve_goursat",
    "solve_riccati",
    "solve_steady_state",
    "steps_for_cfl",
    "terminal_cost",
    "total_cost",
    "with_overrides",
]
