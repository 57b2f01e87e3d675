"""Jitted coordinate-descent kernels.

Everything here is written as plain loops over float64 arrays so numba can
compile it; if numba is unavailable the same code runs (slowly) in pure
Python.  No kernel raises: they report sweep counts / convergence flags and
leave error handling to the wrappers in :mod:`sparsecov.solvers`.
"""

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover - exercised only without numba
    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]):
            return args[0]

        def wrap(func):
            return func

        return wrap


@njit(cache=True)
def soft_threshold_scalar(x, t):
    if x > t:
        return x - t
    if x < -t:
        return x + t
    return 0.0


@njit(cache=True)
def lasso_gram_cd(G, b, w, beta, tol, max_sweeps):
    """Cyclic coordinate descent for ``0.5 b'Gb - b'beta + sum w|beta|``.

    ``beta`` is updated in place (its incoming value is the warm start).
    Returns ``(sweeps_used, converged)``.
    """
    p = G.shape[0]
    if p == 0:
        return 0, True
    # running gradient of the quadratic part: Gb = G @ beta
    Gb = np.zeros(p)
    for j in range(p):
        if beta[j] != 0.0:
            for k in range(p):
                Gb[k] += G[k, j] * beta[j]
    for sweep in range(max_sweeps):
        max_delta = 0.0
        max_beta = 1.0
        for j in range(p):
            gjj = G[j, j]
            if gjj <= 0.0:
                continue
            rho = b[j] - (Gb[j] - gjj * beta[j])
            new = soft_threshold_scalar(rho, w[j]) / gjj
            delta = new - beta[j]
            if delta != 0.0:
                for k in range(p):
                    Gb[k] += G[k, j] * delta
                beta[j] = new
                if abs(delta) > max_delta:
                    max_delta = abs(delta)
            if abs(beta[j]) > max_beta:
                max_beta = abs(beta[j])
        if max_delta <= tol * max_beta:
            return sweep + 1, True
    return max_sweeps, False


@njit(cache=True)
def pglasso_sweep(S, P, Omega, Sig, inner_tol, inner_cap):
    """One full column sweep of the primal weighted graphical lasso.

    Minimizes ``tr(S Omega) - log det Omega + sum_{i != j} P_ij |Omega_ij|``
    by exact block minimization over one column/row of ``Omega`` at a time
    (the running inverse ``Sig = Omega^{-1}`` is maintained in place, which
    keeps every block subproblem a positive-definite quadratic).  Each block
    update can only lower the objective, so sweeps are monotone.

    Returns ``(sum_abs_change, inner_sweeps, ok)``; ``ok`` is False when a
    column subproblem hit ``inner_cap``.
    """
    p = S.shape[0]
    m = p - 1
    V = np.empty((m, m))
    bvec = np.empty(m)
    wvec = np.empty(m)
    beta = np.empty(m)
    u = np.empty(m)
    total_change = 0.0
    inner_sweeps = 0
    ok = True
    for idx in range(p):
        s22 = S[idx, idx]
        # V = inverse of Omega with row/col idx removed, from the running Sig
        sig22 = Sig[idx, idx]
        a = 0
        for i in range(p):
            if i == idx:
                continue
            bvec[a] = -S[i, idx] / s22
            wvec[a] = P[i, idx] / s22
            beta[a] = Omega[i, idx]
            bcol = 0
            for j in range(p):
                if j == idx:
                    continue
                V[a, bcol] = Sig[i, j] - Sig[i, idx] * Sig[j, idx] / sig22
                bcol += 1
            a += 1
        sw, conv = lasso_gram_cd(V, bvec, wvec, beta, inner_tol, inner_cap)
        inner_sweeps += sw
        if not conv:
            ok = False
        # u = V beta, q = beta' V beta
        q = 0.0
        for i in range(m):
            acc = 0.0
            for j in range(m):
                acc += V[i, j] * beta[j]
            u[i] = acc
            q += acc * beta[i]
        om22 = q + 1.0 / s22
        total_change += abs(om22 - Omega[idx, idx])
        Omega[idx, idx] = om22
        a = 0
        for i in range(p):
            if i == idx:
                continue
            total_change += abs(beta[a] - Omega[i, idx])
            Omega[i, idx] = beta[a]
            Omega[idx, i] = beta[a]
            a += 1
        # refresh Sig = Omega^{-1} blocks (Schur complement is exactly 1/s22)
        Sig[idx, idx] = s22
        a = 0
        for i in range(p):
            if i == idx:
                continue
            Sig[i, idx] = -s22 * u[a]
            Sig[idx, i] = -s22 * u[a]
            a += 1
        a = 0
        for i in range(p):
            if i == idx:
                continue
            bcol = 0
            for j in range(p):
                if j == idx:
                    continue
                V[a, bcol] += s22 * u[a] * u[bcol]
                Sig[i, j] = V[a, bcol]
                bcol += 1
            a += 1
    return total_change, inner_sweeps, ok


@njit(cache=True)
def nl_row_cd(G11, g12, g22, w, x, d_init, tol, max_sweeps):
    """Coordinate descent for one row of the normal-likelihood factor problem.

    Minimizes ``[x; d]' G [x; d] - 2 log d + 2 sum w|x|`` over the free row
    entries ``x`` and the positive diagonal ``d``, with the diagonal update
    interleaved after each full pass over ``x``.  The diagonal minimizer of
    ``g22 d^2 + 2 c d - 2 log d`` (``c = g12'x``) is the positive root
    ``d = (-c + sqrt(c^2 + 4 g22)) / (2 g22)``.

    Returns ``(d, sweeps_used, converged)``; ``x`` is updated in place.
    """
    m = x.shape[0]
    d = d_init
    Gx = np.zeros(m)
    for j in range(m):
        if x[j] != 0.0:
            for k in range(m):
                Gx[k] += G11[k, j] * x[j]
    for sweep in range(max_sweeps):
        max_delta = 0.0
        scale = max(1.0, abs(d))
        for j in range(m):
            gjj = G11[j, j]
            if gjj <= 0.0:
                continue
            rho = -(Gx[j] - gjj * x[j] + d * g12[j])
            new = soft_threshold_scalar(rho, w[j]) / gjj
            delta = new - x[j]
            if delta != 0.0:
                for k in range(m):
                    Gx[k] += G11[k, j] * delta
                x[j] = new
                if abs(delta) > max_delta:
                    max_delta = abs(delta)
            if abs(x[j]) > scale:
                scale = abs(x[j])
        c = 0.0
        for j in range(m):
            c += g12[j] * x[j]
        d_new = (-c + np.sqrt(c * c + 4.0 * g22)) / (2.0 * g22)
        if abs(d_new - d) > max_delta:
            max_delta = abs(d_new - d)
        d = d_new
        if max_delta <= tol * scale:
            return d, sweep + 1, True
    return d, max_sweeps, False


@njit(cache=True)
def cholesky_lower(A, pd_floor):
    """Lower Cholesky factor with an explicit pivot floor.

    Returns ``(L, ok)``; ``ok`` is False as soon as a pivot falls at or
    below ``pd_floor`` (the caller raises).
    """
    p = A.shape[0]
    L = np.zeros((p, p))
    for i in range(p):
        for j in range(i + 1):
            acc = A[i, j]
            for k in range(j):
                acc -= L[i, k] * L[j, k]
            if i == j:
                if acc <= pd_floor:
                    return L, False
                L[i, j] = np.sqrt(acc)
            else:
                L[i, j] = acc / L[j, j]
    return L, True
