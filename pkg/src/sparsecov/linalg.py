"""Dense symmetric-matrix primitives shared by the estimators.

All routines work on plain float64 ``numpy`` arrays.  Matrices that are
required to be symmetric are validated (and gently repaired) through
:func:`symmetrize`; positive definiteness is always established through an
explicit Cholesky factorization with a pivot floor rather than trusting the
caller.
"""

import warnings

import numpy as np
from scipy.linalg import solve_triangular

from ._kernels import cholesky_lower
from .errors import DegenerateColumn, DimensionMismatch, NonConvergence, NotPositiveDefinite

#: Relative pivot floor for Cholesky: pivots at or below
#: ``PD_FLOOR_SCALE * max(diag)`` fail the factorization.
PD_FLOOR_SCALE = 1e-12

#: Relative tolerance of the power iteration inside :func:`operator_norm`.
OP_NORM_TOL = 1e-10

_ASYMMETRY_WARN = 1e-8


def _as_square(A, name="matrix"):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {A.shape}")
    return A


def symmetrize(A):
    """Return ``(A + A.T) / 2``, warning when the repair is not innocuous.

    A warning is emitted when the relative asymmetry ``max|A - A.T| /
    max|A|`` exceeds ``1e-8``; below that the averaging only removes float
    dust from otherwise-symmetric computations.
    """
    A = _as_square(A)
    scale = np.abs(A).max()
    if scale > 0:
        asym = np.abs(A - A.T).max() / scale
        if asym > _ASYMMETRY_WARN:
            warnings.warn(
                f"symmetrizing a matrix with relative asymmetry {asym:.3e}",
                stacklevel=2,
            )
    return (A + A.T) / 2.0


def cholesky_factor(A):
    """Lower Cholesky factor of a symmetric positive definite matrix.

    Parameters
    ----------
    A : (p, p) array
        Symmetric matrix.

    Returns
    -------
    L : (p, p) array
        Lower triangular with positive diagonal, ``L @ L.T == A``.

    Raises
    ------
    NotPositiveDefinite
        If any pivot falls at or below ``1e-12 * max(diag(A))``.
    """
    A = _as_square(A)
    if A.shape[0] == 0:
        return np.zeros((0, 0))
    diag_max = float(np.max(np.diag(A))) if A.shape[0] else 0.0
    floor = PD_FLOOR_SCALE * max(diag_max, 0.0)
    L, ok = cholesky_lower(np.ascontiguousarray(A), floor)
    if not ok:
        raise NotPositiveDefinite(
            f"matrix of dimension {A.shape[0]} is not positive definite "
            f"(pivot <= {floor:.3e})"
        )
    return L


def is_positive_definite(A):
    """True when :func:`cholesky_factor` succeeds on ``A``."""
    try:
        cholesky_factor(A)
    except NotPositiveDefinite:
        return False
    return True


def log_det(A):
    """Log-determinant of a symmetric positive definite matrix.

    Computed as ``2 * sum(log(diag(L)))`` from the Cholesky factor, which
    avoids overflow in the determinant itself.
    """
    L = cholesky_factor(A)
    return 2.0 * float(np.sum(np.log(np.diag(L))))


def spd_inverse(A):
    """Inverse of a symmetric positive definite matrix via its Cholesky factor."""
    L = cholesky_factor(A)
    p = L.shape[0]
    if p == 0:
        return np.zeros((0, 0))
    Linv = solve_triangular(L, np.eye(p), lower=True, check_finite=False)
    inv = Linv.T @ Linv
    return (inv + inv.T) / 2.0


def frobenius_norm(A):
    """Frobenius norm ``sqrt(sum of squared entries)``."""
    A = np.asarray(A, dtype=float)
    return float(np.sqrt(np.sum(A * A)))


def operator_norm(A, tol=OP_NORM_TOL, max_iters=None):
    """Largest singular value, by block power iteration on ``A.T @ A``.

    A small orthonormal block (four vectors) is iterated under the Gram
    matrix and the top Ritz value extracted each pass.  For a symmetric
    matrix the Ritz residual certifies the eigenvalue error, so the
    iteration stops once ``||B v - theta v|| <= tol * theta``; the block
    keeps this fast even when the leading singular values are clustered,
    which is exactly where a single power vector stalls.  If the top of
    the spectrum is clustered more tightly than the tolerance itself, the
    residual can never certify; the iteration then stops once the estimate
    is stationary across passes, with accuracy limited by the cluster
    width rather than ``tol``.

    Parameters
    ----------
    A : (m, n) array
    tol : float, optional
        Relative tolerance on the estimate (default ``1e-10``).
    max_iters : int, optional
        Iteration cap; default ``max(10 * max(m, n), 40)``.

    Raises
    ------
    NonConvergence
        If the cap is reached before the residual certifies the estimate.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise DimensionMismatch(f"operator_norm expects a matrix, got shape {A.shape}")
    if A.size == 0:
        return 0.0
    scale = np.abs(A).max()
    if scale == 0.0:
        return 0.0
    if max_iters is None:
        max_iters = max(10 * max(A.shape), 40)
    if A.shape[0] < A.shape[1]:
        A = A.T  # the Gram matrix of the wider orientation is smaller
    n = A.shape[1]
    As = A / scale  # guard the explicit Gram product against overflow
    B = As.T @ As
    B = (B + B.T) / 2.0
    b = min(n, 4)
    rng = np.random.default_rng(np.random.SeedSequence((0x5EED, n)))
    V = np.linalg.qr(rng.standard_normal((n, b)))[0]
    theta_prev = None
    stable = 0
    for it in range(max_iters):
        W = B @ V
        H = V.T @ W
        vals, vecs = np.linalg.eigh((H + H.T) / 2.0)
        theta = float(vals[-1])
        y = vecs[:, -1]
        resid = float(np.linalg.norm(W @ y - theta * (V @ y)))
        if theta > 0.0 and resid <= tol * theta:
            return float(np.sqrt(theta)) * scale
        if theta_prev is not None and theta > 0.0 and abs(theta - theta_prev) <= tol * theta:
            stable += 1
            if it >= 3 and stable >= 2:
                return float(np.sqrt(theta)) * scale
        else:
            stable = 0
        theta_prev = theta
        V = np.linalg.qr(W)[0]
    raise NonConvergence(
        f"power iteration did not stabilize to {tol:.1e} in {max_iters} iterations"
    )


def sample_covariance(Y, center=True):
    """Sample covariance of observation rows with divisor ``n``.

    Parameters
    ----------
    Y : (n, p) array
        One observation per row, ``n >= 2``.
    center : bool, optional
        Subtract column means first (default).  With ``center=False`` the
        raw second-moment matrix ``Y.T @ Y / n`` is returned, which matches
        a known-zero-mean model.

    Returns
    -------
    S : (p, p) array, exactly symmetric.
    """
    Y = np.asarray(Y, dtype=float)
    if Y.ndim != 2:
        raise DimensionMismatch(f"data must be two-dimensional, got shape {Y.shape}")
    n = Y.shape[0]
    if n < 2:
        raise ValueError(f"need at least 2 observations, got {n}")
    if center:
        Y = Y - Y.mean(axis=0)
    S = Y.T @ Y / n
    return (S + S.T) / 2.0


def to_correlation(S):
    """Scale a covariance matrix to correlation form.

    Returns ``(Gamma, w)`` where ``w = sqrt(diag(S))`` and
    ``Gamma = diag(1/w) @ S @ diag(1/w)`` with the diagonal pinned to
    exactly 1.

    Raises
    ------
    DegenerateColumn
        If any diagonal entry of ``S`` is not strictly positive.
    """
    S = _as_square(S)
    d = np.diag(S).copy()
    bad = np.where(d <= 0.0)[0]
    if bad.size:
        raise DegenerateColumn(
            f"variable {int(bad[0])} has non-positive variance {d[bad[0]]!r}"
        )
    w = np.sqrt(d)
    Gamma = S / np.outer(w, w)
    Gamma = (Gamma + Gamma.T) / 2.0
    np.fill_diagonal(Gamma, 1.0)
    return Gamma, w
