"""Monte Carlo harness for convergence-rate and support-recovery studies.

A :class:`RateExperiment` sweeps a grid of ``(n, p)`` cells, samples
``replicates`` Gaussian datasets per cell from a synthetic truth, fits the
configured estimator, and aggregates squared Frobenius / operator errors
and support-recovery rates per cell.  The headline statistic is the
least-squares slope of ``log(mean squared Frobenius error)`` against
``log((p + s) * log(p) / n)`` across cells, which should sit near one when
the estimator attains the expected rate.

Determinism: every replicate draws from ``SeedSequence((seed, n, p, rep))``
so results are bit-identical for a given experiment seed regardless of
worker count or scheduling, and identical data are produced for different
estimator configurations run over the same cells (which is what makes
matched-path comparisons fair).  Non-converged replicates are dropped from
the averages and surface in the per-cell ``failures`` count.
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .errors import DimensionMismatch, NonConvergence, NotPositiveDefinite
from .estimators import SUPPORT_TOL_SCALE, estimate
from .linalg import (cholesky_factor, frobenius_norm, operator_norm,
                     sample_covariance, to_correlation)
from .tuning import select_lambda

TRUTH_KINDS = ("tridiagonal-precision", "sparse-random-precision", "ar1-covariance")

LAMBDA_RULES = ("oracle", "fixed", "bic")


@dataclass(frozen=True)
class TruthSpec:
    """Parameters of a synthetic truth.

    ``kind`` selects the generator:

    * ``tridiagonal-precision``: ``Omega = I + offdiag`` on the first
      sub/super diagonals (requires ``|offdiag| < 0.5`` for positive
      definiteness by diagonal dominance).
    * ``sparse-random-precision``: strictly-upper entries are ``+/-
      magnitude`` with probability ``density`` (seeded), mirrored, and the
      diagonal is set to one plus the absolute row sums, which guarantees
      positive definiteness.
    * ``ar1-covariance``: ``Sigma_ij = phi^|i-j|``; the precision matrix is
      the exact tridiagonal closed form (so its zeros are exact).

    ``unit_diagonal=True`` rescales the truth to correlation scale
    (``Sigma`` gets a unit diagonal); the support is unchanged because
    diagonal scaling preserves the zero pattern exactly.
    """

    kind: str
    p: int
    seed: int = 0
    offdiag: float = 0.4
    density: float = 0.02
    magnitude: float = 0.3
    phi: float = 0.5
    unit_diagonal: bool = False

    def __post_init__(self):
        if self.kind not in TRUTH_KINDS:
            raise ValueError(f"unknown truth kind {self.kind!r}; expected one of {TRUTH_KINDS}")
        if self.p < 2:
            raise ValueError(f"truth requires p >= 2, got {self.p!r}")


@dataclass
class Truth:
    Sigma: np.ndarray
    Omega: np.ndarray
    support: list
    eig_lo: float
    eig_hi: float


def parse_truth(text, p, seed=0, unit_diagonal=False):
    """Parse CLI-style truth strings: ``tridiag:0.4``, ``sparse:0.02:0.3``, ``ar1:0.5``."""
    parts = str(text).strip().lower().split(":")
    kinds = {"tridiag": "tridiagonal-precision", "sparse": "sparse-random-precision",
             "ar1": "ar1-covariance"}
    if not parts or parts[0] not in kinds:
        raise ValueError(
            f"cannot parse truth {text!r}; expected tridiag:OFFDIAG, "
            "sparse:DENSITY:MAGNITUDE, or ar1:PHI"
        )
    kind = kinds[parts[0]]
    try:
        args = [float(x) for x in parts[1:]]
    except ValueError:
        raise ValueError(f"cannot parse truth {text!r}: non-numeric parameter") from None
    kw = {}
    if kind == "tridiagonal-precision":
        if len(args) > 1:
            raise ValueError(f"tridiag takes one parameter, got {text!r}")
        if args:
            kw["offdiag"] = args[0]
    elif kind == "sparse-random-precision":
        if len(args) > 2:
            raise ValueError(f"sparse takes two parameters, got {text!r}")
        if len(args) >= 1:
            kw["density"] = args[0]
        if len(args) == 2:
            kw["magnitude"] = args[1]
    else:
        if len(args) > 1:
            raise ValueError(f"ar1 takes one parameter, got {text!r}")
        if args:
            kw["phi"] = args[0]
    return TruthSpec(kind=kind, p=p, seed=seed, unit_diagonal=unit_diagonal, **kw)


def _ar1_precision(p, phi):
    """Exact tridiagonal inverse of the AR(1) correlation matrix."""
    Omega = np.zeros((p, p))
    if phi == 0.0:
        return np.eye(p)
    c = 1.0 / (1.0 - phi * phi)
    np.fill_diagonal(Omega, (1.0 + phi * phi) * c)
    Omega[0, 0] = c
    Omega[p - 1, p - 1] = c
    idx = np.arange(p - 1)
    Omega[idx, idx + 1] = -phi * c
    Omega[idx + 1, idx] = -phi * c
    return Omega


def gen_truth(spec):
    """Instantiate a :class:`TruthSpec` into matrices, support, and eigen bounds."""
    p = spec.p
    if spec.kind == "tridiagonal-precision":
        Omega = np.eye(p)
        idx = np.arange(p - 1)
        Omega[idx, idx + 1] = spec.offdiag
        Omega[idx + 1, idx] = spec.offdiag
        L = cholesky_factor(Omega)  # raises NotPositiveDefinite when |offdiag| too big
        from scipy.linalg import solve_triangular

        Linv = solve_triangular(L, np.eye(p), lower=True, check_finite=False)
        Sigma = Linv.T @ Linv
        Sigma = (Sigma + Sigma.T) / 2.0
        support = [(i, i + 1) for i in range(p - 1)] if spec.offdiag != 0.0 else []
    elif spec.kind == "sparse-random-precision":
        rng = np.random.default_rng(np.random.SeedSequence((spec.seed, p)))
        upper = rng.random((p, p)) < spec.density
        upper = np.triu(upper, 1)
        signs = np.where(rng.random((p, p)) < 0.5, -1.0, 1.0)
        Omega = np.where(upper, spec.magnitude * signs, 0.0)
        Omega = Omega + Omega.T
        np.fill_diagonal(Omega, 1.0 + np.abs(Omega).sum(axis=1))
        from .linalg import spd_inverse

        Sigma = spd_inverse(Omega)
        support = [(i, j) for i, j in zip(*np.nonzero(upper))]
        support = [(int(i), int(j)) for i, j in support]
    else:  # ar1-covariance
        idx = np.arange(p)
        Sigma = spec.phi ** np.abs(np.subtract.outer(idx, idx))
        Omega = _ar1_precision(p, spec.phi)
        support = [(i, i + 1) for i in range(p - 1)] if spec.phi != 0.0 else []

    if spec.unit_diagonal:
        d = np.sqrt(np.diag(Sigma))
        Sigma = Sigma / np.outer(d, d)
        np.fill_diagonal(Sigma, 1.0)
        Omega = Omega * np.outer(d, d)
    eig_hi = operator_norm(Sigma)
    eig_lo = 1.0 / operator_norm(Omega)
    return Truth(Sigma=Sigma, Omega=Omega, support=support, eig_lo=eig_lo, eig_hi=eig_hi)


def sample_gaussian(Sigma, n, seed):
    """Draw ``n`` rows from ``N(0, Sigma)`` deterministically from ``seed``."""
    L = cholesky_factor(Sigma)
    rng = np.random.default_rng(seed)
    Z = rng.standard_normal((n, Sigma.shape[0]))
    return Z @ L.T


def replicate_seed(seed, n, p, rep):
    """The per-replicate seed: a `SeedSequence` keyed by (seed, n, p, rep)."""
    return np.random.SeedSequence((int(seed), int(n), int(p), int(rep)))


def error_metrics(estimate, truth):
    """Squared Frobenius and squared operator norm of the difference."""
    diff = np.asarray(estimate, dtype=float) - np.asarray(truth, dtype=float)
    return frobenius_norm(diff) ** 2, operator_norm(diff) ** 2


def support_metrics(truth_support, estimate, support_tol=None):
    """(true-zero rate, true-nonzero rate) of an estimate's off-diagonal support.

    True-zero recovery is the fraction of truth-zero off-diagonal pairs whose
    estimated magnitude is at most ``support_tol``; true-nonzero recovery is
    the fraction of truth-nonzero pairs above it.  A rate over an empty class
    (no true zeros, or no true nonzeros) is 1.0 — nothing there to miss.
    ``support_tol`` defaults to the same relative threshold used for reported
    supports.
    """
    M = np.asarray(estimate, dtype=float)
    p = M.shape[0]
    truth = {(min(int(i), int(j)), max(int(i), int(j))) for i, j in truth_support}
    if any(i < 0 or j >= p for i, j in truth):
        raise DimensionMismatch("truth support indices exceed estimate dimension")
    if support_tol is None:
        support_tol = SUPPORT_TOL_SCALE * float(np.abs(M).max())
    mask = np.zeros((p, p), dtype=bool)
    for i, j in truth:
        mask[i, j] = True
    iu = np.triu_indices(p, 1)
    t = mask[iu]
    e = np.abs(M[iu]) > support_tol
    n_nonzero = int(t.sum())
    n_zero = t.size - n_nonzero
    tz = 1.0 if n_zero == 0 else float((~t & ~e).sum()) / n_zero
    tn = 1.0 if n_nonzero == 0 else float((t & e).sum()) / n_nonzero
    return tz, tn


@dataclass(frozen=True)
class RateExperiment:
    """A full rate-verification study over an ``(n, p)`` grid."""

    truth: TruthSpec
    n_values: tuple
    p_values: tuple
    replicates: int
    config: object  # EstimatorConfig; penalty.lam may be unset under oracle/bic rules
    seed: int = 0
    lambda_rule: str = "oracle"
    oracle_c: float = 1.0
    grid: tuple | None = None
    center: bool = False

    def __post_init__(self):
        if self.lambda_rule not in LAMBDA_RULES:
            raise ValueError(f"unknown lambda rule {self.lambda_rule!r}; expected {LAMBDA_RULES}")
        if self.replicates < 1:
            raise ValueError("need at least one replicate")


@dataclass(frozen=True)
class CellReport:
    n: int
    p: int
    s: int
    mean_sq_frobenius: float
    sd_sq_frobenius: float
    mean_sq_operator: float
    sd_sq_operator: float
    true_zero_rate: float
    true_nonzero_rate: float
    failures: int
    replicates_used: int


@dataclass
class RateReport:
    cells: list
    slope: float
    slope_stderr: float
    x_definition: str = "log((p + s) * log(p) / n)"


def _truth_target_matrix(truth, target):
    """The matrix on the estimator's own scale that the estimate should approach."""
    if target in ("precision", "cholesky-ml", "cholesky-ls", "cholesky-nl"):
        return truth.Omega
    if target == "covariance":
        return truth.Sigma
    if target == "correlation":
        return to_correlation(truth.Sigma)[0]
    if target == "inverse-correlation":
        w = np.sqrt(np.diag(truth.Sigma))
        return truth.Omega * np.outer(w, w)
    raise ValueError(f"no truth scale for target {target!r}")


def _oracle_lambda(c, n, p):
    return float(c) * math.sqrt(math.log(max(p, 2)) / n)


def _run_replicate(exp, n, p, rep, estimator_override=None):
    truth = gen_truth(replace(exp.truth, p=p))
    Y = sample_gaussian(truth.Sigma, n, replicate_seed(exp.seed, n, p, rep))
    S = sample_covariance(Y, center=exp.center)
    target_truth = _truth_target_matrix(truth, exp.config.target)
    try:
        if exp.lambda_rule == "bic":
            sel = select_lambda(S, n, exp.config, grid=exp.grid)
            result = sel.best_result
        else:
            if exp.lambda_rule == "oracle":
                lam = _oracle_lambda(exp.oracle_c, n, p)
            else:
                lam = exp.config.penalty.lam
                if lam is None:
                    raise ValueError("fixed lambda rule requires penalty.lam")
            cfg = replace(exp.config, penalty=exp.config.penalty.with_lambda(lam))
            if estimator_override is not None:
                est_matrix = estimator_override(S, cfg)
                sq_frob, sq_op = error_metrics(est_matrix, target_truth)
                tz, tn = support_metrics(truth.support, est_matrix)
                return (n, p, rep), (sq_frob, sq_op, tz, tn)
            result = estimate(S, cfg)
    except (NonConvergence, NotPositiveDefinite, ValueError):
        return (n, p, rep), None
    sq_frob, sq_op = error_metrics(result.estimate, target_truth)
    tz, tn = support_metrics(truth.support, result.estimate)
    return (n, p, rep), (sq_frob, sq_op, tz, tn)


def _fit_slope(xs, ys):
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if len(xs) < 2 or np.ptp(xs) == 0.0:
        return float("nan"), float("nan")
    X = np.column_stack([np.ones_like(xs), xs])
    coef, *_ = np.linalg.lstsq(X, ys, rcond=None)
    resid = ys - X @ coef
    dof = max(len(xs) - 2, 1)
    s2 = float(resid @ resid) / dof
    sxx = float(np.sum((xs - xs.mean()) ** 2))
    return float(coef[1]), math.sqrt(s2 / sxx)


def run_rate_experiment(exp, workers=1, estimator_override=None):
    """Execute the experiment and aggregate per-cell statistics.

    ``workers > 1`` fans replicates out to a process pool; results are
    reduced in sorted key order so the report is identical regardless of
    worker count.  ``estimator_override`` (a callable ``(S, cfg) ->
    matrix``) replaces the estimator for harness testing and forces
    serial execution.
    """
    tasks = [
        (n, p, rep)
        for p in exp.p_values
        for n in exp.n_values
        for rep in range(exp.replicates)
    ]
    results = {}
    if workers > 1 and estimator_override is None:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for key, metrics in pool.map(
                _run_replicate_star, [(exp, n, p, rep) for n, p, rep in tasks],
                chunksize=max(1, len(tasks) // (4 * workers)),
            ):
                results[key] = metrics
    else:
        for n, p, rep in tasks:
            key, metrics = _run_replicate(exp, n, p, rep, estimator_override)
            results[key] = metrics

    cells = []
    xs, ys = [], []
    for p in sorted(set(exp.p_values)):
        truth = gen_truth(replace(exp.truth, p=p))
        s = len(truth.support)
        for n in sorted(set(exp.n_values)):
            rows = [results[(n, p, rep)] for rep in range(exp.replicates)]
            good = np.array([r for r in rows if r is not None], dtype=float)
            failures = sum(1 for r in rows if r is None)
            used = len(good)
            if used == 0:
                cells.append(CellReport(n, p, s, float("nan"), float("nan"), float("nan"),
                                        float("nan"), float("nan"), float("nan"),
                                        failures, 0))
                continue
            mean = good.mean(axis=0)
            sd = good.std(axis=0, ddof=1) if used > 1 else np.zeros(4)
            cells.append(CellReport(
                n=n, p=p, s=s,
                mean_sq_frobenius=float(mean[0]), sd_sq_frobenius=float(sd[0]),
                mean_sq_operator=float(mean[1]), sd_sq_operator=float(sd[1]),
                true_zero_rate=float(mean[2]), true_nonzero_rate=float(mean[3]),
                failures=failures, replicates_used=used,
            ))
            if mean[0] > 0.0:
                xs.append(math.log((p + s) * math.log(max(p, 2)) / n))
                ys.append(math.log(mean[0]))
    slope, stderr = _fit_slope(xs, ys)
    return RateReport(cells=cells, slope=slope, slope_stderr=stderr)


def _run_replicate_star(args):
    return _run_replicate(*args)
