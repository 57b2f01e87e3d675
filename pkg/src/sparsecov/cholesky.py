"""Penalized estimation of sparse Cholesky factors.

The modified Cholesky decomposition writes ``T Sigma T' = D`` with ``T``
unit lower triangular and ``D`` positive diagonal: row ``i`` of ``-T``
holds the coefficients of regressing variable ``i`` on its predecessors,
so for ordered data (longitudinal studies) zeros in ``T`` are meaningful.
Three penalized variants are provided, each with the strictly-lower
entries of ``T`` penalized through the usual LLA reweighting:

* ``cholesky-ml``: the Gaussian likelihood ``tr(T' D^{-1} T S) + log|D|``,
  minimized by alternating a closed-form ``D`` update (``d_i = (T S T')_ii``,
  first applied with ``T = I``) with weighted-lasso row updates of ``T``.
* ``cholesky-ls``: the least-squares surrogate ``tr(T' T S)``; rows are
  independent weighted lassos.
* ``cholesky-nl``: the likelihood on the sample correlation scale,
  ``tr(T' T Gamma) - 2 log|T|`` with a free positive diagonal; each row
  interleaves coordinate descent on its off-diagonal entries with the
  closed-form positive root for its diagonal, and the precision estimate
  is rescaled back through the sample scales, ``W^{-1} T'T W^{-1}``.
"""

from typing import NamedTuple

import numpy as np
from scipy.linalg import solve_triangular

from ._kernels import lasso_gram_cd, nl_row_cd
from .estimators import _finish, _require_lambda, lla_weights, support_pairs
from .linalg import cholesky_factor, symmetrize, to_correlation
from .penalties import penalty_value

_ALTERNATION_CAP = 50
_ALTERNATION_TOL = 1e-6


class MCDPair(NamedTuple):
    """Unit lower-triangular ``T`` and innovation variances ``d`` with ``T Sigma T' = diag(d)``."""

    T: np.ndarray
    d: np.ndarray


def mcd(Sigma):
    """Modified Cholesky decomposition of a positive definite matrix.

    Computed from the ordinary Cholesky factor ``Sigma = L L'``: with
    ``L = Lu diag(sqrt(d))`` for unit lower ``Lu``, ``T = Lu^{-1}`` and
    ``d_i`` are the successive regression residual variances.
    """
    Sigma = symmetrize(Sigma)
    L = cholesky_factor(Sigma)
    diag = np.diag(L).copy()
    d = diag**2
    Lu = L / diag[np.newaxis, :]
    T = solve_triangular(Lu, np.eye(Lu.shape[0]), lower=True, unit_diagonal=True,
                         check_finite=False)
    T = np.tril(T)
    np.fill_diagonal(T, 1.0)
    return MCDPair(T=T, d=d)


def _lower_penalty(pen, T):
    vals = penalty_value(pen, np.tril(T, -1))
    return float(np.tril(vals, -1).sum())


def objective_ml(S, pen, T, d):
    """``tr(T' D^{-1} T S) + log|D| + 2 sum_{i>j} p(|t_ij|)``."""
    TST = T @ S @ T.T
    return float(np.sum(np.diag(TST) / d) + np.sum(np.log(d))) + 2.0 * _lower_penalty(pen, T)


def objective_ls(S, pen, T):
    """``tr(T' T S) + 2 sum_{i>j} p(|t_ij|)``."""
    return float(np.sum((T @ S) * T)) + 2.0 * _lower_penalty(pen, T)


def objective_nl(Gamma, pen, T):
    """``tr(T' T Gamma) - 2 log|T| + 2 sum_{i>j} p(|t_ij|)``."""
    return (
        float(np.sum((T @ Gamma) * T))
        - 2.0 * float(np.sum(np.log(np.diag(T))))
        + 2.0 * _lower_penalty(pen, T)
    )


def _row_weights(pen, T, i):
    return lla_weights(pen, T)[i, :i].copy()


def _solve_rows_ls_like(S, weights_fn, T, tol, inner_cap):
    """Weighted-lasso update of every strictly-lower row of ``T`` in place.

    Row ``i`` minimizes ``x' G x + 2 b'x + 2 sum w|x|`` with
    ``G = S[:i, :i]`` and ``b = S[:i, i]`` (scaled by the caller through
    ``weights_fn`` when a variance divisor applies).  Returns total inner
    sweeps and a convergence flag.
    """
    p = S.shape[0]
    sweeps = 0
    ok = True
    for i in range(1, p):
        G, b, w = weights_fn(i)
        beta = T[i, :i].copy()
        sw, conv = lasso_gram_cd(G, b, w, beta, tol, inner_cap)
        sweeps += sw
        ok = ok and conv
        T[i, :i] = beta
    return sweeps, ok


def estimate_cholesky_ml(S, cfg):
    """Penalized maximum-likelihood Cholesky factor (returns ``T``, ``D`` and ``Omega``)."""
    S = symmetrize(S)
    lam = _require_lambda(cfg)
    pen = cfg.penalty
    p = S.shape[0]
    opts = cfg.solver

    if lam == 0.0:
        T, d = mcd(S)  # exact unpenalized optimum (raises if S is singular)
        Omega = T.T @ (T / d[:, np.newaxis])
        Omega = (Omega + Omega.T) / 2.0
        return _finish(
            "cholesky-ml", Omega, [objective_ml(S, pen, T, d)], 0, True, cfg,
            T=T, D=d.copy(), support=support_pairs(T, lower=True),
        )

    Sc = np.ascontiguousarray(S)
    T = np.eye(p)
    d = np.diag(S).copy()
    trace = []
    total_sweeps = 0
    converged = True
    inner_tol = min(opts.tol, 1e-8)
    prev_W = None

    for _ in range(cfg.lla_iters):
        Wk = lla_weights(pen, T)
        if prev_W is not None and np.array_equal(Wk, prev_W):
            break
        prev_W = Wk
        q_prev = None
        ok_all = True
        for _ in range(_ALTERNATION_CAP):
            d = np.maximum(np.diag(T @ Sc @ T.T).copy(), 1e-12 * np.max(np.diag(Sc)))

            def row_problem(i):
                G = np.ascontiguousarray(Sc[:i, :i] / d[i])
                b = np.ascontiguousarray(-Sc[:i, i] / d[i])
                return G, b, np.ascontiguousarray(Wk[i, :i])

            sw, ok = _solve_rows_ls_like(Sc, row_problem, T, inner_tol, opts.max_sweeps)
            total_sweeps += sw
            ok_all = ok_all and ok
            q = objective_ml(Sc, pen, T, d)
            if q_prev is not None and abs(q_prev - q) <= _ALTERNATION_TOL * max(1.0, abs(q)):
                break
            q_prev = q
        else:
            converged = False
        converged = converged and ok_all
        q = objective_ml(Sc, pen, T, d)
        if trace and q > trace[-1]:
            break
        trace.append(q)
        if not converged:
            break

    Omega = T.T @ (T / d[:, np.newaxis])
    Omega = (Omega + Omega.T) / 2.0
    return _finish(
        "cholesky-ml", Omega, trace, total_sweeps, converged, cfg,
        T=T, D=d.copy(), support=support_pairs(T, lower=True),
    )


def estimate_cholesky_ls(S, cfg):
    """Penalized least-squares Cholesky factor (rows decouple; no ``D``)."""
    S = symmetrize(S)
    lam = _require_lambda(cfg)
    pen = cfg.penalty
    p = S.shape[0]
    opts = cfg.solver

    if lam == 0.0:
        T, _ = mcd(S)
        Omega = T.T @ T
        return _finish(
            "cholesky-ls", (Omega + Omega.T) / 2.0, [objective_ls(S, pen, T)], 0, True, cfg,
            T=T, support=support_pairs(T, lower=True),
        )

    Sc = np.ascontiguousarray(S)
    T = np.eye(p)
    trace = []
    total_sweeps = 0
    converged = True
    inner_tol = min(opts.tol, 1e-8)
    prev_W = None

    for _ in range(cfg.lla_iters):
        Wk = lla_weights(pen, T)
        if prev_W is not None and np.array_equal(Wk, prev_W):
            break
        prev_W = Wk

        def row_problem(i):
            return (
                np.ascontiguousarray(Sc[:i, :i]),
                np.ascontiguousarray(-Sc[:i, i]),
                np.ascontiguousarray(Wk[i, :i]),
            )

        sw, ok = _solve_rows_ls_like(Sc, row_problem, T, inner_tol, opts.max_sweeps)
        total_sweeps += sw
        q = objective_ls(Sc, pen, T)
        if trace and q > trace[-1]:
            break
        trace.append(q)
        if not ok:
            converged = False
            break

    Omega = T.T @ T
    return _finish(
        "cholesky-ls", (Omega + Omega.T) / 2.0, trace, total_sweeps, converged, cfg,
        T=T, support=support_pairs(T, lower=True),
    )


def estimate_cholesky_nl(S, cfg):
    """Penalized correlation-scale likelihood factor with free diagonal.

    The factor is fit to the sample correlation matrix; the implied
    precision estimate is mapped back through the sample scales,
    ``Omega = W^{-1} T'T W^{-1}``, so at ``lam = 0`` it reproduces
    ``S^{-1}`` exactly.
    """
    S = symmetrize(S)
    lam = _require_lambda(cfg)
    pen = cfg.penalty
    p = S.shape[0]
    opts = cfg.solver
    Gamma, w = to_correlation(S)

    if lam == 0.0:
        L = cholesky_factor(Gamma)
        T = solve_triangular(L, np.eye(p), lower=True, check_finite=False)
        T = np.tril(T)
        Omega = (T.T @ T) / np.outer(w, w)
        return _finish(
            "cholesky-nl", (Omega + Omega.T) / 2.0, [objective_nl(Gamma, pen, T)], 0, True,
            cfg, T=T, support=support_pairs(T, lower=True),
        )

    Gc = np.ascontiguousarray(Gamma)
    T = np.eye(p)
    trace = []
    total_sweeps = 0
    converged = True
    inner_tol = min(opts.tol, 1e-8)
    prev_W = None

    for _ in range(cfg.lla_iters):
        Wk = lla_weights(pen, T)
        if prev_W is not None and np.array_equal(Wk, prev_W):
            break
        prev_W = Wk
        ok_all = True
        # row 0 has no free off-diagonal entries: d = 1/sqrt(g_00) = 1
        T[0, 0] = 1.0 / np.sqrt(Gc[0, 0])
        for i in range(1, p):
            x = T[i, :i].copy()
            d, sw, conv = nl_row_cd(
                np.ascontiguousarray(Gc[:i, :i]),
                np.ascontiguousarray(Gc[:i, i]),
                float(Gc[i, i]),
                np.ascontiguousarray(Wk[i, :i]),
                x, float(T[i, i]), inner_tol, opts.max_sweeps,
            )
            total_sweeps += sw
            ok_all = ok_all and conv
            T[i, :i] = x
            T[i, i] = d
        q = objective_nl(Gc, pen, T)
        if trace and q > trace[-1]:
            break
        trace.append(q)
        if not ok_all:
            converged = False
            break

    Omega = (T.T @ T) / np.outer(w, w)
    return _finish(
        "cholesky-nl", (Omega + Omega.T) / 2.0, trace, total_sweeps, converged, cfg,
        T=T, support=support_pairs(T, lower=True),
    )
