"""Weighted-L1 solvers.

Two workhorses live here, both taking a full matrix of per-entry weights so
that concave penalties can be handled by reweighted L1:

* :func:`glasso_weighted` -- precision-scale graphical lasso,
  ``tr(S Omega) - log det Omega + sum_{i != j} W_ij |Omega_ij|``,
  solved by block coordinate descent over columns (each column a weighted
  lasso on a (p-1)-dimensional Gram subproblem) while maintaining the
  running inverse.  The column update used here minimizes the primal
  objective exactly over one row/column, so the objective is nonincreasing
  across sweeps.
* :func:`prox_covariance_weighted` -- covariance-scale proximal gradient,
  ``tr(S Sigma^{-1}) + log det Sigma + sum_{i != j} W_ij |Sigma_ij|``,
  with entrywise soft-thresholding of the off-diagonal and backtracking
  that only accepts positive definite, objective-decreasing steps.

Both stop when the mean absolute parameter change per sweep drops to
``tol * mean |off-diagonal of S|`` (and, for the graphical lasso, the KKT
residual is small), and raise :class:`~sparsecov.errors.NonConvergence`
with the partial iterate attached once ``max_sweeps`` is exhausted.
"""

from dataclasses import dataclass

import numpy as np

from ._kernels import lasso_gram_cd, pglasso_sweep
from .errors import DimensionMismatch, NonConvergence, NotPositiveDefinite
from .linalg import cholesky_factor, log_det, spd_inverse, symmetrize

_INNER_CAP = 2000
_DIVERGENCE_FACTOR = 1e12


@dataclass(frozen=True)
class SolverOptions:
    """Knobs shared by the iterative solvers."""

    tol: float = 1e-6
    max_sweeps: int = 500
    pd_backtrack: float = 0.5

    def __post_init__(self):
        if not self.tol > 0.0:
            raise ValueError(f"tol must be positive, got {self.tol!r}")
        if self.max_sweeps < 1:
            raise ValueError(f"max_sweeps must be >= 1, got {self.max_sweeps!r}")
        if not 0.0 < self.pd_backtrack < 1.0:
            raise ValueError(f"pd_backtrack must lie in (0, 1), got {self.pd_backtrack!r}")


def soft_threshold(x, t):
    """Entrywise soft threshold ``sign(x) * (|x| - t)_+`` (exact zeros)."""
    x = np.asarray(x, dtype=float)
    out = np.sign(x) * np.maximum(np.abs(x) - t, 0.0)
    if np.ndim(x) == 0:
        return float(out)
    return out


def _check_weights(W, p, name="weights"):
    W = np.asarray(W, dtype=float)
    if W.shape != (p, p):
        raise DimensionMismatch(f"{name} must have shape ({p}, {p}), got {W.shape}")
    if np.any(W < 0.0):
        raise ValueError(f"{name} must be nonnegative")
    if np.abs(W - W.T).max() > 0:
        W = (W + W.T) / 2.0
    W = W.copy()
    np.fill_diagonal(W, 0.0)
    return W


def _offdiag_mean_abs(S):
    p = S.shape[0]
    if p < 2:
        return 0.0
    off = np.abs(S).sum() - np.abs(np.diag(S)).sum()
    return off / (p * (p - 1))


def lasso_weighted(G, b, w, opts=None, beta0=None):
    """Minimize ``0.5 beta'G beta - b'beta + sum_j w_j |beta_j|``.

    ``G`` must be symmetric positive semidefinite with positive diagonal
    entries wherever the coordinate is active.  Coordinates are updated
    cyclically by exact scalar minimization (soft thresholding), starting
    from ``beta0`` when given.
    """
    opts = opts or SolverOptions()
    G = symmetrize(G)
    p = G.shape[0]
    b = np.asarray(b, dtype=float)
    w = np.asarray(w, dtype=float)
    if b.shape != (p,) or w.shape != (p,):
        raise DimensionMismatch(f"b and w must have shape ({p},), got {b.shape} and {w.shape}")
    if np.any(w < 0.0):
        raise ValueError("weights must be nonnegative")
    beta = np.zeros(p) if beta0 is None else np.asarray(beta0, dtype=float).copy()
    if beta.shape != (p,):
        raise DimensionMismatch(f"beta0 must have shape ({p},)")
    sweeps, converged = lasso_gram_cd(
        np.ascontiguousarray(G), np.ascontiguousarray(b), np.ascontiguousarray(w),
        beta, opts.tol, opts.max_sweeps,
    )
    if not converged:
        raise NonConvergence(
            f"lasso coordinate descent did not converge in {opts.max_sweeps} sweeps",
            result=beta,
        )
    return beta


def _offdiag_l1(W, M):
    pen = W * np.abs(M)
    return float(pen.sum() - np.diag(pen).sum())


def glasso_objective(S, W, Omega):
    """``tr(S Omega) - log det Omega + sum_{i != j} W_ij |Omega_ij|``."""
    return float(np.sum(S * Omega)) - log_det(Omega) + _offdiag_l1(W, Omega)


def _kkt_residual(S, W, Omega, Oinv):
    R = S - Oinv
    nz = Omega != 0.0
    viol_nz = np.abs(R + W * np.sign(Omega))
    viol_z = np.maximum(np.abs(R) - W, 0.0)
    viol = np.where(nz, viol_nz, viol_z)
    np.fill_diagonal(viol, np.abs(np.diag(R)))
    return float(viol.max())


def glasso_weighted(S, W, opts=None, init=None):
    """Weighted graphical lasso on the precision scale.

    Parameters
    ----------
    S : (p, p) array
        Sample covariance (symmetric, positive diagonal).  May be singular
        as long as enough off-diagonal weights are positive to keep the
        problem bounded; the fully unpenalized problem requires ``S``
        positive definite.
    W : (p, p) array
        Nonnegative symmetric weight matrix; the diagonal is ignored
        (diagonal entries are never penalized).
    init : (p, p) array, optional
        Positive definite warm start.

    Returns
    -------
    (Omega, sweeps) : the estimate (exact zeros where soft thresholding
    produced them) and the number of full column sweeps used.
    """
    opts = opts or SolverOptions()
    S = symmetrize(S)
    p = S.shape[0]
    if np.any(np.diag(S) <= 0.0):
        raise NotPositiveDefinite("sample covariance must have a positive diagonal")
    W = _check_weights(W, p, "penalty weights")
    if p == 1:
        return np.array([[1.0 / S[0, 0]]]), 0

    off = ~np.eye(p, dtype=bool)
    if not np.any(W[off] > 0.0):
        # unpenalized: the minimizer is S^{-1}; NotPositiveDefinite propagates
        try:
            return spd_inverse(S), 0
        except NotPositiveDefinite:
            raise NotPositiveDefinite(
                "singular sample covariance requires positive off-diagonal weights"
            ) from None

    if init is not None:
        Omega = symmetrize(init)
        if Omega.shape != (p, p):
            raise DimensionMismatch(f"init must have shape ({p}, {p}), got {Omega.shape}")
        cholesky_factor(Omega)  # raises if the warm start is not PD
        Sig = spd_inverse(Omega)
    else:
        Omega = np.diag(1.0 / np.diag(S)).copy()
        Sig = np.diag(np.diag(S)).copy()

    S = np.ascontiguousarray(S)
    Wc = np.ascontiguousarray(W)
    Omega = np.ascontiguousarray(Omega)
    Sig = np.ascontiguousarray(Sig)

    change_thresh = opts.tol * _offdiag_mean_abs(S)
    kkt_thresh = 10.0 * opts.tol * max(1.0, float(np.abs(S).max()))
    inner_tol = min(opts.tol, 1e-7)
    scale0 = float(np.abs(Omega).max())

    for sweep in range(1, opts.max_sweeps + 1):
        total_change, _, _ = pglasso_sweep(S, Wc, Omega, Sig, inner_tol, _INNER_CAP)
        if not np.isfinite(total_change) or np.abs(Omega).max() > _DIVERGENCE_FACTOR * (scale0 + 1.0):
            raise NonConvergence(
                "graphical lasso iterates diverged (is the penalized problem bounded?)",
                result=(Omega, sweep),
            )
        # refresh the running inverse from scratch: bounds drift, feeds the KKT check
        Sig = np.ascontiguousarray(spd_inverse(Omega))
        mean_change = total_change / (p * p)
        if mean_change <= change_thresh and _kkt_residual(S, Wc, Omega, Sig) <= kkt_thresh:
            return Omega, sweep
    raise NonConvergence(
        f"graphical lasso did not converge in {opts.max_sweeps} sweeps",
        result=(Omega, opts.max_sweeps),
    )


def covariance_objective(S, W, Sigma, inv=None):
    """``tr(S Sigma^{-1}) + log det Sigma + sum_{i != j} W_ij |Sigma_ij|``."""
    if inv is None:
        inv = spd_inverse(Sigma)
    return float(np.sum(S * inv)) + log_det(Sigma) + _offdiag_l1(W, Sigma)


def prox_covariance_weighted(S, W, init, opts=None, pin_diagonal=False):
    """Weighted covariance-scale solver by proximal gradient.

    The smooth part ``tr(S Sigma^{-1}) + log det Sigma`` has gradient
    ``Sigma^{-1} - Sigma^{-1} S Sigma^{-1}``; each step soft-thresholds the
    off-diagonal of the gradient step and keeps halving the step size until
    the candidate is positive definite *and* lowers the full objective.
    With ``pin_diagonal=True`` the diagonal of ``init`` is never touched
    (correlation-scale estimation).

    Returns ``(Sigma, iterations)``.
    """
    opts = opts or SolverOptions()
    S = symmetrize(S)
    p = S.shape[0]
    W = _check_weights(W, p, "penalty weights")
    Sigma = symmetrize(init)
    if Sigma.shape != (p, p):
        raise DimensionMismatch(f"init must have shape ({p}, {p}), got {Sigma.shape}")
    cholesky_factor(Sigma)  # the start must be PD

    off = ~np.eye(p, dtype=bool)
    if p > 1 and not np.any(W[off] > 0.0) and not pin_diagonal:
        try:
            cholesky_factor(S)
            return S.copy(), 0
        except NotPositiveDefinite:
            raise NotPositiveDefinite(
                "unpenalized covariance estimation requires a positive definite S"
            ) from None

    change_thresh = opts.tol * _offdiag_mean_abs(S)
    inv = spd_inverse(Sigma)
    obj = covariance_objective(S, W, Sigma, inv)

    for it in range(1, opts.max_sweeps + 1):
        grad = inv - inv @ S @ inv
        grad = (grad + grad.T) / 2.0
        gnorm = np.sqrt(np.sum(grad * grad))
        step = 1.0 / max(gnorm, 1e-300)
        step = min(step, 1e12)
        accepted = None
        for _ in range(200):
            cand = Sigma - step * grad
            cand = (cand + cand.T) / 2.0
            offpart = soft_threshold(cand, step * W)
            cand = np.where(off, offpart, cand)
            if pin_diagonal:
                np.fill_diagonal(cand, np.diag(Sigma))
            try:
                cand_inv = spd_inverse(cand)
            except NotPositiveDefinite:
                step *= opts.pd_backtrack
                continue
            cand_obj = covariance_objective(S, W, cand, cand_inv)
            if cand_obj < obj:
                accepted = (cand, cand_inv, cand_obj)
                break
            step *= opts.pd_backtrack
        if accepted is None:
            # no PD descent step exists at float resolution: stationary point
            return Sigma, it - 1
        cand, cand_inv, new_obj = accepted
        rel_obj_drop = (obj - new_obj) / max(1.0, abs(obj))
        if rel_obj_drop <= 1e-14:
            # the step gains nothing beyond float dust: stay put
            return Sigma, it - 1
        mean_change = float(np.abs(cand - Sigma).mean())
        Sigma, inv, obj = cand, cand_inv, new_obj
        if mean_change <= change_thresh:
            return Sigma, it
    raise NonConvergence(
        f"proximal gradient did not converge in {opts.max_sweeps} iterations",
        result=(Sigma, opts.max_sweeps),
    )
