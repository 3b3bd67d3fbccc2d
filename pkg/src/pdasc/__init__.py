"""Primal-dual active set solver with continuation for l1-regularized least squares."""

from .baselines import IstaConfig, ista_solve, l0_bruteforce, oracle_ls_on_support
from .bench import (
    ExperimentSpec,
    MetricsRow,
    add_noise,
    compute_metrics,
    gen_sensing_matrix,
    gen_sparse_signal,
    make_instance,
    run_experiment,
    run_replication,
)
from .continuation import (
    ContinuationConfig,
    SolutionPath,
    bic_score,
    debias,
    dp_check,
    lambda_grid,
    mdp_check,
    pdasc_solve,
    select_solution,
)
from .exceptions import RankDeficient, SelectionFailed, Unsupported
from .kkt import ActiveSets, PrimalDualState, active_sets_from, kkt_residual, objective, soft_threshold
from .operators import (
    CholeskyFactor,
    DenseOperator,
    PartialDCTOperator,
    RestrictedSolver,
    SensingOperator,
    chol_update_downdate,
    cholesky_factor,
    gram_restricted,
    rip_constant_bruteforce,
    solve_restricted,
)
from .pdas import PdasStatus, pdas_solve, pdas_step

__version__ = "0.1.0"

__all__ = [
    "IstaConfig",
    "ista_solve",
    "l0_bruteforce",
    "oracle_ls_on_support",
    "ExperimentSpec",
    "MetricsRow",
    "add_noise",
    "compute_metrics",
    "gen_sensing_matrix",
    "gen_sparse_signal",
    "make_instance",
    "run_replication",
    "run_experiment",
    "ContinuationConfig",
    "SolutionPath",
    "bic_score",
    "debias",
    "dp_check",
    "lambda_grid",
    "mdp_check",
    "pdasc_solve",
    "select_solution",
    "RankDeficient",
    "SelectionFailed",
    "Unsupported",
    "ActiveSets",
    "PrimalDualState",
    "active_sets_from",
    "kkt_residual",
    "objective",
    "soft_threshold",
    "CholeskyFactor",
    "DenseOperator",
    "PartialDCTOperator",
    "RestrictedSolver",
    "SensingOperator",
    "chol_update_downdate",
    "cholesky_factor",
    "gram_restricted",
    "rip_constant_bruteforce",
    "solve_restricted",
    "PdasStatus",
    "pdas_solve",
    "pdas_step",
]
