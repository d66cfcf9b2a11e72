"""Constrained optimal stopping of a two-regime switching GBM.

Closed-form threshold solver, numerical verifier, exact event-driven Monte
Carlo, and symmetric-regime asymptotic limits.
"""

from .asymptotics import (
    AsymptoticResult,
    SingleDiffusionParams,
    closed_form_exponents,
    convergence_table,
    limit_value_functions,
    threshold_eta_limit,
    threshold_lambda0_limit,
)
from .errors import (
    AssumptionViolated,
    AssumptionWarning,
    BracketFailure,
    DegeneratePayoff,
    DomainError,
    NonPositiveParameter,
    NonPositiveThreshold,
    ParamsFileError,
    RegimeStopError,
    SingularDenominator,
)
from .model import (
    ModelParams,
    dump_params_text,
    linearized_payoff,
    load_params_file,
    parse_params_text,
    payoff,
    perpetuity_value,
    validate,
)
from .roots import (
    QuadraticRoots,
    RootSet,
    quadratic_roots,
    quartic_branch_roots,
    solve_roots,
)
from .simulate import (
    McEstimate,
    PathRecord,
    SimConfig,
    estimate_perpetuity,
    estimate_value,
    exp_horizon_closed_form,
    exp_horizon_identity,
    path_events,
    run_paths,
    simulate_path,
)
from .solver import (
    ParticularSolution,
    PqOctet,
    ValueFunction,
    ViSolution,
    boundary_coefficients,
    eval_piece,
    eval_value,
    ode_residual,
    optimal_threshold,
    particular_solution,
    pq_octet,
    solution_at_threshold,
    solve,
)
from .verify import (
    BoundaryReport,
    SweepConfig,
    SweepResult,
    check_boundary_conditions,
    pasting_check,
    remark_sweep,
    sweep_parameter_sets,
)

__version__ = "0.1.0"
