"""Penalized estimators for precision, covariance, and correlation matrices.

Every estimator minimizes a Gaussian quasi-likelihood plus an entrywise
penalty on the off-diagonal, handling concave penalties (SCAD, hard) by
local linear approximation (LLA): the penalty is linearized at the current
iterate, giving a weighted-L1 problem for one of the solvers in
:mod:`sparsecov.solvers`, and the weights are refreshed ``lla_iters`` times.
The linearization starts from the zero matrix, so the first iterate is
always the plain L1 solution and subsequent iterates can only lower the
true penalized objective (each subproblem is warm-started at the previous
iterate).  The recorded ``objective_trace`` is therefore nonincreasing.

Targets
-------
``precision``
    ``tr(S Omega) - log det Omega + penalty`` via the graphical lasso.
``covariance``
    ``tr(S Sigma^{-1}) + log det Sigma + penalty`` via proximal gradient.
``inverse-correlation``
    The precision objective applied to the sample correlation matrix;
    reports the companion precision estimate rescaled by the sample scales.
``correlation``
    The covariance objective on the sample correlation with the diagonal
    pinned to one; reports the companion covariance estimate.

The Cholesky-factor targets (``cholesky-ml``, ``cholesky-ls``,
``cholesky-nl``) live in :mod:`sparsecov.cholesky`; :func:`estimate`
dispatches to them as well.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import NonConvergence, NotPositiveDefinite
from .linalg import is_positive_definite, log_det, symmetrize, to_correlation
from .penalties import Penalty, penalty_derivative, penalty_value
from .solvers import SolverOptions, glasso_weighted, prox_covariance_weighted

TARGETS = (
    "precision",
    "covariance",
    "correlation",
    "inverse-correlation",
    "cholesky-ml",
    "cholesky-ls",
    "cholesky-nl",
)

#: Entries with magnitude at most ``SUPPORT_TOL_SCALE * max|estimate|``
#: count as zero when reporting support (guards float dust only; the
#: coordinate-descent paths produce exact zeros).
SUPPORT_TOL_SCALE = 1e-8


@dataclass(frozen=True)
class EstimatorConfig:
    """Everything needed to run one estimator."""

    penalty: Penalty
    target: str = "precision"
    lla_iters: int = 3
    solver: SolverOptions = field(default_factory=SolverOptions)
    init: np.ndarray | None = None

    def __post_init__(self):
        if self.target not in TARGETS:
            raise ValueError(f"unknown target {self.target!r}; expected one of {TARGETS}")
        if self.lla_iters < 1:
            raise ValueError(f"lla_iters must be >= 1, got {self.lla_iters!r}")


@dataclass
class EstimationResult:
    """Output of an estimator.

    ``estimate`` is the matrix on the target's own scale; ``companion``
    (when present) is the same fit mapped back through the sample scales
    (e.g. the precision estimate implied by an inverse-correlation fit).
    For Cholesky targets ``T`` (and ``D`` for the ML variant) carry the
    factor itself, and ``support`` indexes the strictly-lower entries of
    ``T`` rather than the matrix off-diagonal.
    """

    target: str
    estimate: np.ndarray
    support: list
    objective_trace: list
    converged: bool
    sweeps_used: int
    lam: float
    penalty: Penalty
    companion: np.ndarray | None = None
    T: np.ndarray | None = None
    D: np.ndarray | None = None

    @property
    def p(self):
        return int(self.estimate.shape[0])


def support_pairs(M, lower=False):
    """Index pairs of entries exceeding the float-dust threshold.

    With ``lower=False`` returns strictly-upper pairs ``(i, j)``, ``i < j``
    of a symmetric matrix; with ``lower=True`` the strictly-lower pairs of
    a triangular factor.
    """
    M = np.asarray(M)
    tol = SUPPORT_TOL_SCALE * (np.abs(M).max() if M.size else 0.0)
    keep = np.abs(M) > tol
    pairs = []
    p = M.shape[0]
    for i in range(p):
        if lower:
            for j in range(i):
                if keep[i, j]:
                    pairs.append((i, j))
        else:
            for j in range(i + 1, p):
                if keep[i, j]:
                    pairs.append((i, j))
    return pairs


def lla_weights(pen, current):
    """Per-entry L1 weights ``p'(|current_ij|)`` with a zero diagonal.

    Feeding the zero matrix gives the uniform first-round weights
    ``p'(0)`` (``lam`` for L1/SCAD, ``2 lam`` for hard), which makes the
    first LLA iterate the plain L1 solution at that level.
    """
    current = np.asarray(current, dtype=float)
    W = penalty_derivative(pen, np.abs(current))
    W = np.asarray(W, dtype=float).copy()
    np.fill_diagonal(W, 0.0)
    return W


def _offdiag_penalty(pen, M):
    vals = penalty_value(pen, M)
    return float(vals.sum() - np.diag(vals).sum())


def objective_precision(S, pen, Omega):
    """True penalized objective ``tr(S Omega) - log det Omega + sum p(|omega_ij|)``."""
    return float(np.sum(S * Omega)) - log_det(Omega) + _offdiag_penalty(pen, Omega)


def objective_covariance(S, pen, Sigma):
    """True penalized objective ``tr(S Sigma^{-1}) + log det Sigma + sum p(|sigma_ij|)``."""
    from .linalg import spd_inverse

    return float(np.sum(S * spd_inverse(Sigma))) + log_det(Sigma) + _offdiag_penalty(pen, Sigma)


def _lla_loop(pen, lla_iters, shape, solve_fn, objective_fn, warm0=None):
    """Shared LLA driver.

    ``solve_fn(W, warm) -> (estimate, sweeps)`` solves the weighted-L1
    subproblem; ``objective_fn`` evaluates the true penalized objective.
    Returns ``(estimate, trace, sweeps, converged)``; ``converged`` is
    False when a subproblem hit its sweep cap (the partial iterate is
    still returned).
    """
    ref = np.zeros(shape)
    warm = warm0
    trace = []
    est = None
    sweeps = 0
    prev_W = None
    for _ in range(lla_iters):
        Wk = lla_weights(pen, ref)
        if prev_W is not None and np.array_equal(Wk, prev_W):
            break  # weights are a fixed point (e.g. L1): nothing to refine
        try:
            new_est, sw = solve_fn(Wk, warm)
        except NonConvergence as exc:
            partial = exc.result[0] if isinstance(exc.result, tuple) else exc.result
            if partial is not None:
                est = partial
                sweeps += exc.result[1] if isinstance(exc.result, tuple) else 0
            return est, trace, sweeps, False
        sweeps += sw
        q = objective_fn(new_est)
        if trace and q > trace[-1]:
            break  # float-resolution guard; previous iterate is already optimal
        est = new_est
        trace.append(q)
        ref = est
        warm = est
        prev_W = Wk
    return est, trace, sweeps, True


def _require_lambda(cfg):
    if cfg.penalty.lam is None:
        raise ValueError("estimator config has no lambda set on its penalty")
    return float(cfg.penalty.lam)


def _finish(target, est, trace, sweeps, converged, cfg, companion=None, T=None, D=None,
            support=None):
    result = EstimationResult(
        target=target,
        estimate=est,
        support=support if support is not None else support_pairs(est),
        objective_trace=trace,
        converged=converged,
        sweeps_used=sweeps,
        lam=float(cfg.penalty.lam),
        penalty=cfg.penalty,
        companion=companion,
        T=T,
        D=D,
    )
    if not converged:
        raise NonConvergence(
            f"{target} estimator did not converge within the sweep budget",
            result=result,
        )
    return result


def estimate_precision(S, cfg):
    """Sparse precision-matrix estimate by penalized likelihood.

    Requires ``cfg.penalty.lam > 0`` when ``S`` is singular; at ``lam = 0``
    (and PD ``S``) the result is exactly ``S^{-1}``.
    """
    S = symmetrize(S)
    _require_lambda(cfg)
    pen = cfg.penalty

    def solve(Wk, warm):
        return glasso_weighted(S, Wk, cfg.solver, init=warm)

    est, trace, sweeps, conv = _lla_loop(
        pen, cfg.lla_iters, S.shape, solve, lambda M: objective_precision(S, pen, M),
        warm0=cfg.init,
    )
    return _finish("precision", est, trace, sweeps, conv, cfg)


def estimate_covariance(S, cfg):
    """Sparse covariance-matrix estimate by penalized likelihood."""
    S = symmetrize(S)
    _require_lambda(cfg)
    pen = cfg.penalty
    default_init = np.diag(np.diag(S)).copy()

    def solve(Wk, warm):
        init = warm if warm is not None else default_init
        return prox_covariance_weighted(S, Wk, init, cfg.solver)

    est, trace, sweeps, conv = _lla_loop(
        pen, cfg.lla_iters, S.shape, solve, lambda M: objective_covariance(S, pen, M),
        warm0=cfg.init,
    )
    return _finish("covariance", est, trace, sweeps, conv, cfg)


def estimate_inverse_correlation(S, cfg):
    """Sparse inverse-correlation estimate.

    Runs the precision objective on the sample correlation matrix, which
    frees the fit from the p sample variances: the diagonal is pinned to
    its known scale and the companion precision estimate
    ``W^{-1} Psi W^{-1}`` shares the support of the estimate exactly.
    Scale changes of the data leave the estimate invariant.
    """
    S = symmetrize(S)
    _require_lambda(cfg)
    pen = cfg.penalty
    Gamma, w = to_correlation(S)

    def solve(Wk, warm):
        return glasso_weighted(Gamma, Wk, cfg.solver, init=warm)

    est, trace, sweeps, conv = _lla_loop(
        pen, cfg.lla_iters, Gamma.shape, solve, lambda M: objective_precision(Gamma, pen, M),
        warm0=cfg.init,
    )
    companion = est / np.outer(w, w) if est is not None else None
    return _finish("inverse-correlation", est, trace, sweeps, conv, cfg, companion=companion)


def estimate_correlation(S, cfg):
    """Sparse correlation-matrix estimate (unit diagonal, exactly)."""
    S = symmetrize(S)
    _require_lambda(cfg)
    pen = cfg.penalty
    Gamma, w = to_correlation(S)
    if is_positive_definite(Gamma):
        default_init = Gamma.copy()
    else:
        # singular sample correlation (e.g. p > n): blend toward the
        # identity, which preserves the unit diagonal and is always PD
        default_init = 0.9 * Gamma + 0.1 * np.eye(Gamma.shape[0])

    def solve(Wk, warm):
        init = warm if warm is not None else default_init
        return prox_covariance_weighted(Gamma, Wk, init, cfg.solver, pin_diagonal=True)

    est, trace, sweeps, conv = _lla_loop(
        pen, cfg.lla_iters, Gamma.shape, solve, lambda M: objective_covariance(Gamma, pen, M),
        warm0=cfg.init,
    )
    companion = est * np.outer(w, w) if est is not None else None
    return _finish("correlation", est, trace, sweeps, conv, cfg, companion=companion)


_MATRIX_ESTIMATORS = {
    "precision": estimate_precision,
    "covariance": estimate_covariance,
    "correlation": estimate_correlation,
    "inverse-correlation": estimate_inverse_correlation,
}


def estimate(S, cfg):
    """Dispatch to the estimator named by ``cfg.target``."""
    if cfg.target in _MATRIX_ESTIMATORS:
        return _MATRIX_ESTIMATORS[cfg.target](S, cfg)
    from . import cholesky

    return {
        "cholesky-ml": cholesky.estimate_cholesky_ml,
        "cholesky-ls": cholesky.estimate_cholesky_ls,
        "cholesky-nl": cholesky.estimate_cholesky_nl,
    }[cfg.target](S, cfg)
