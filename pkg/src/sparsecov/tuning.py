"""BIC-based selection of the penalty level.

The information criterion is the Gaussian deviance of the fitted model plus
a ``log(n)`` charge per free parameter,

    ``bic = n * (tr(S Omega) - log det Omega) + log(n) * df``,

with ``df = p`` diagonal entries plus the number of nonzero off-diagonal
entries in the strictly-upper triangle (for factor targets: the
strictly-lower triangle of the factor).  Correlation-scale targets measure
their deviance against the sample correlation matrix; covariance-scale
targets enter through their implied precision.

:func:`select_lambda` walks a descending grid, warm-starting each fit from
the previous one, and keeps the BIC minimizer (ties go to the larger, i.e.
sparser, lambda level).  Non-converged grid points are recorded in the
table but excluded from the minimization.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import NonConvergence
from .estimators import estimate
from .linalg import log_det, sample_covariance, spd_inverse, to_correlation

_TIE_TOL = 1e-9

#: Default multiplier range for :func:`default_grid`, spanning
#: ``[0.1, 10] * sqrt(log(p) / n)`` on a logarithmic scale.
GRID_C_RANGE = (0.1, 10.0)
GRID_SIZE = 20


def bic_score(S, omega, n):
    """BIC of a precision-scale estimate ``omega`` against sample covariance ``S``.

    ``n * (tr(S omega) - log det omega) + log(n) * df`` with
    ``df = p + #{nonzero strictly-upper off-diagonal entries}``.
    """
    S = np.asarray(S, dtype=float)
    omega = np.asarray(omega, dtype=float)
    p = omega.shape[0]
    dev = float(np.sum(S * omega)) - log_det(omega)
    nnz = int(np.count_nonzero(np.triu(omega, 1)))
    return float(n) * dev + math.log(n) * (p + nnz)


def default_grid(p, n, size=GRID_SIZE, c_range=GRID_C_RANGE):
    """Log-spaced lambda grid ``c * sqrt(log(p) / n)``, ``c`` in ``c_range``."""
    scale = math.sqrt(math.log(max(p, 2)) / n)
    lo, hi = c_range
    return tuple(float(c) * scale for c in np.geomspace(lo, hi, size))


def _deviance(S, result):
    """Gaussian deviance matched to the target's own likelihood."""
    tgt = result.target
    if tgt in ("precision", "cholesky-ml", "cholesky-ls"):
        M = result.estimate
        return float(np.sum(S * M)) - log_det(M)
    if tgt in ("inverse-correlation", "cholesky-nl"):
        Gamma, _ = to_correlation(S)
        M = result.T.T @ result.T if tgt == "cholesky-nl" else result.estimate
        return float(np.sum(Gamma * M)) - log_det(M)
    if tgt == "covariance":
        return float(np.sum(S * spd_inverse(result.estimate))) + log_det(result.estimate)
    if tgt == "correlation":
        Gamma, _ = to_correlation(S)
        return float(np.sum(Gamma * spd_inverse(result.estimate))) + log_det(result.estimate)
    raise ValueError(f"no deviance defined for target {tgt!r}")


def bic_for(S, result, n):
    """BIC of any :class:`~sparsecov.estimators.EstimationResult`."""
    df = result.p + len(result.support)
    return float(n) * _deviance(S, result) + math.log(n) * df


@dataclass(frozen=True)
class LambdaTableRow:
    lam: float
    bic: float
    support_size: int
    objective: float
    converged: bool


@dataclass
class SelectionResult:
    best_lambda: float
    best_result: object
    table: list


def select_lambda(M, n=None, cfg=None, grid=None, warm_start=True):
    """Fit along a lambda grid and pick the BIC minimizer.

    ``M`` is either a square sample covariance or a rectangular data table
    (rows = observations), in which case the covariance is built here and
    ``n`` may be omitted.  The grid is traversed in descending order with
    warm starts (for the matrix-scale targets; disable with
    ``warm_start=False`` to make grid points independent) so each fit is
    cheap; the returned table is sorted ascending.  Ties within ``1e-9``
    resolve to the larger lambda.

    Raises ``ValueError`` if every grid point fails to converge.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise ValueError(f"expected a data table or covariance matrix, got shape {M.shape}")
    if M.shape[0] != M.shape[1]:
        if n is None:
            n = M.shape[0]
        S = sample_covariance(M)
    else:
        if n is None:
            raise ValueError("n is required when passing a covariance matrix")
        S = M
    if cfg is None:
        raise ValueError("an estimator configuration is required")
    if grid is None:
        grid = default_grid(S.shape[0], n)
    grid = sorted({float(g) for g in grid}, reverse=True)
    if not grid:
        raise ValueError("empty lambda grid")
    warmable = warm_start and cfg.target in (
        "precision", "covariance", "correlation", "inverse-correlation")
    warm = None
    rows = []
    best = None  # (bic, lam, result)
    for lam in grid:
        cfg_k = replace(cfg, penalty=cfg.penalty.with_lambda(lam),
                        init=warm if warmable else None)
        try:
            result = estimate(S, cfg_k)
        except NonConvergence as exc:
            partial = getattr(exc, "result", None)
            size = len(partial.support) if partial is not None else 0
            rows.append(LambdaTableRow(lam, float("nan"), size, float("nan"), False))
            continue
        bic = bic_for(S, result, n)
        rows.append(LambdaTableRow(
            lam, bic, len(result.support), result.objective_trace[-1], True,
        ))
        if warmable:
            warm = result.estimate
        if best is None or bic < best[0] - _TIE_TOL:
            best = (bic, lam, result)
    if best is None:
        raise ValueError("no lambda in the grid produced a converged fit")
    rows.sort(key=lambda r: r.lam)
    return SelectionResult(best_lambda=best[1], best_result=best[2], table=rows)
