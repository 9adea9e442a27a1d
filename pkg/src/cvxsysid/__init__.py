"""Identification of nonlinear recurrent dynamics via a convex program.

Simulates the recursion x_t = grad f(A x_{t-1} + B u_{t-1}), recovers the
parameter block [A | B / beta] exactly through a convex program, and
verifies the supporting theory numerically at desk scale.
"""

from .dynamics import (
    RestartDecomposition,
    RestartedTrajectory,
    Trajectory,
    deviation_check,
    gram_matrix,
    gram_min_eig,
    restart_decomposition,
    restarted_family,
    restarted_trajectory,
    simulate,
)
from .estimator import (
    ConjugateRecurrenceRegressor,
    ConvexRecurrenceRegressor,
    SolverConfig,
    SolverRun,
    agm_solve,
    conjugate_ls_solve,
    objective_and_grad,
    relative_error,
    split_coefficients,
)
from .exceptions import (
    ConfigError,
    CvxsysidError,
    InfeasibleBoundError,
    RankDeficientGramError,
    UnsupportedPotentialError,
)
from .experiments import (
    ExperimentConfig,
    ExperimentResult,
    apply_profile,
    grid_configs,
    nearest_rank_quantile,
    run_experiment,
    run_grid,
    write_results,
)
from .models import (
    DistributionConstants,
    InputModel,
    SystemParams,
    cubed_gaussian_model,
    default_beta,
    distribution_constants,
    gaussian_model,
    haar_orthogonal,
    input_model_from_spec,
    sample_inputs,
    sample_system,
)
from .potentials import (
    ConvexPotential,
    RegularityReport,
    conjugate_grad,
    from_spec,
    grad_eval,
    leaky_relu,
    local_map,
    param_relu,
    quadratic,
    to_spec,
    verify_regularity,
)
from .theory import (
    TheoryReport,
    coherence_report,
    column_deleted_min_eigs,
    contraction_factor,
    horizon_bound,
    input_norm_quantile_probe,
    small_ball_probe,
    small_ball_threshold,
    stride_bound,
    theory_report,
)

__version__ = "0.1.0"
