"""Sparse covariance, precision, correlation, and Cholesky-factor estimation
by penalized Gaussian likelihood, with rate-verification tooling."""

from .cholesky import (MCDPair, estimate_cholesky_ls, estimate_cholesky_ml,
                       estimate_cholesky_nl, mcd)
from .errors import (DataFormatError, DegenerateColumn, DimensionMismatch,
                     NonConvergence, NotPositiveDefinite, SparseCovError)
from .estimators import (TARGETS, EstimationResult, EstimatorConfig, estimate,
                         estimate_correlation, estimate_covariance,
                         estimate_inverse_correlation, estimate_precision,
                         support_pairs)
from .linalg import (cholesky_factor, frobenius_norm, is_positive_definite,
                     log_det, operator_norm, sample_covariance, spd_inverse,
                     symmetrize, to_correlation)
from .penalties import (FAMILIES, SCAD_DEFAULT_A, Penalty, format_penalty,
                        parse_penalty, penalty_derivative, penalty_value)
from .simulation import (CellReport, RateExperiment, RateReport, Truth,
                         TruthSpec, error_metrics, gen_truth, parse_truth,
                         run_rate_experiment, sample_gaussian, support_metrics)
from .solvers import (SolverOptions, covariance_objective, glasso_objective,
                      glasso_weighted, lasso_weighted,
                      prox_covariance_weighted, soft_threshold)
from .tuning import (LambdaTableRow, SelectionResult, bic_for, bic_score,
                     default_grid, select_lambda)

__version__ = "0.1.0"

__all__ = [
    "CellReport", "DataFormatError", "DegenerateColumn", "DimensionMismatch",
    "EstimationResult", "EstimatorConfig", "FAMILIES", "LambdaTableRow",
    "MCDPair", "NonConvergence", "NotPositiveDefinite", "Penalty",
    "RateExperiment", "RateReport", "SCAD_DEFAULT_A", "SelectionResult",
    "SolverOptions", "SparseCovError", "TARGETS", "Truth", "TruthSpec",
    "bic_for", "bic_score", "cholesky_factor", "covariance_objective",
    "default_grid", "error_metrics", "estimate", "estimate_cholesky_ls",
    "estimate_cholesky_ml", "estimate_cholesky_nl", "estimate_correlation",
    "estimate_covariance", "estimate_inverse_correlation",
    "estimate_precision", "format_penalty", "frobenius_norm", "gen_truth",
    "glasso_objective", "glasso_weighted", "is_positive_definite",
    "lasso_weighted", "log_det", "mcd", "operator_norm", "parse_penalty",
    "parse_truth", "penalty_derivative", "penalty_value",
    "prox_covariance_weighted", "run_rate_experiment", "sample_covariance",
    "sample_gaussian", "select_lambda", "soft_threshold", "spd_inverse",
    "support_metrics", "support_pairs", "symmetrize", "to_correlation",
]
