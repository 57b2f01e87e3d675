import math

import numpy as np
import pytest

from sparsecov.errors import NotPositiveDefinite
from sparsecov.estimators import EstimatorConfig, estimate
from sparsecov.linalg import sample_covariance
from sparsecov.penalties import Penalty
from sparsecov.solvers import SolverOptions
from sparsecov.tuning import (SelectionResult, bic_for, bic_score,
                              default_grid, select_lambda)

from oracles import random_spd


def cfg_for(target="precision", family="l1", **kw):
    return EstimatorConfig(penalty=Penalty(family), target=target,
                           solver=SolverOptions(tol=1e-8), **kw)


# ---------------------------------------------------------------------------
# the score itself


def test_bic_score_identity():
    p, n = 4, 100
    got = bic_score(np.eye(p), np.eye(p), n)
    assert got == pytest.approx(n * p + math.log(n) * p, rel=1e-14)
    assert got == pytest.approx(418.42068074395235, abs=1e-10)


def test_bic_df_counts_upper_pairs():
    # p=3 with two symmetric nonzero pairs: df = 3 + 2 = 5
    omega = np.eye(3)
    omega[0, 1] = omega[1, 0] = 0.2
    omega[1, 2] = omega[2, 1] = -0.1
    n = 50
    S = np.eye(3)
    dev = np.sum(S * omega) - np.linalg.slogdet(omega)[1]
    assert bic_score(S, omega, n) == pytest.approx(n * dev + math.log(n) * 5.0, rel=1e-12)


def test_bic_penalizes_spurious_pair(rng):
    # a nonzero pair whose likelihood gain is below log(n) must raise BIC
    S = np.eye(4)
    base = np.eye(4)
    spur = base.copy()
    spur[2, 3] = spur[3, 2] = 1e-6
    n = 100
    assert bic_score(S, spur, n) > bic_score(S, base, n)


def test_bic_rejects_indefinite():
    with pytest.raises(NotPositiveDefinite):
        bic_score(np.eye(2), np.array([[1.0, 2.0], [2.0, 1.0]]), 10)


def test_bic_for_matches_bic_score_on_precision(rng):
    S = random_spd(rng, 4)
    res = estimate(S, EstimatorConfig(penalty=Penalty("l1", 0.1), target="precision"))
    assert bic_for(S, res, 80) == pytest.approx(bic_score(S, res.estimate, 80), rel=1e-12)


# ---------------------------------------------------------------------------
# grid mechanics


def test_default_grid_shape():
    g = default_grid(10, 200)
    assert len(g) == 20
    assert all(b > a for a, b in zip(g, g[1:]))
    scale = math.sqrt(math.log(10) / 200)
    assert g[0] == pytest.approx(0.1 * scale)
    assert g[-1] == pytest.approx(10.0 * scale)


def test_singleton_grid_returns_it(rng):
    S = random_spd(rng, 4)
    sel = select_lambda(S, n=60, cfg=cfg_for(), grid=[0.17])
    assert sel.best_lambda == 0.17
    assert len(sel.table) == 1 and sel.table[0].lam == 0.17


def test_ties_break_to_larger_lambda():
    # S = I: every lambda > 0 gives the same (identity) fit and BIC
    S = np.eye(5)
    sel = select_lambda(S, n=100, cfg=cfg_for(), grid=[0.2, 0.4, 0.8])
    assert sel.best_lambda == 0.8
    bics = [r.bic for r in sel.table]
    assert max(bics) - min(bics) <= 1e-9


def test_table_sorted_ascending_and_support_monotone(rng):
    Sigma = random_spd(rng, 8)
    Y = rng.multivariate_normal(np.zeros(8), Sigma, size=150)
    S = sample_covariance(Y)
    sel = select_lambda(S, n=150, cfg=cfg_for(), grid=np.geomspace(0.01, 1.0, 12))
    lams = [r.lam for r in sel.table]
    assert lams == sorted(lams)
    sizes = [r.support_size for r in sel.table if r.converged]
    # L1 support shrinks as lambda grows
    assert all(b <= a for a, b in zip(sizes, sizes[1:]))
    assert all(r.converged for r in sel.table)


def test_identity_truth_selects_empty_support():
    hits = 0
    reps = 20
    for rep in range(reps):
        rng = np.random.default_rng(913 + rep)
        Y = rng.standard_normal((200, 10))
        sel = select_lambda(Y, cfg=cfg_for())
        if len(sel.best_result.support) == 0:
            hits += 1
    assert hits >= 0.9 * reps


def test_data_table_and_covariance_agree(rng):
    Y = rng.standard_normal((120, 6))
    S = sample_covariance(Y)
    a = select_lambda(Y, cfg=cfg_for(), grid=[0.05, 0.1, 0.2])
    b = select_lambda(S, n=120, cfg=cfg_for(), grid=[0.05, 0.1, 0.2])
    assert a.best_lambda == b.best_lambda
    assert np.array_equal(a.best_result.estimate, b.best_result.estimate)
    for ra, rb in zip(a.table, b.table):
        assert ra == rb


def test_cold_start_same_winner(rng):
    Sigma = random_spd(rng, 6)
    Y = rng.multivariate_normal(np.zeros(6), Sigma, size=100)
    grid = np.geomspace(0.02, 0.5, 8)
    warm = select_lambda(Y, cfg=cfg_for(), grid=grid)
    cold = select_lambda(Y, cfg=cfg_for(), grid=grid, warm_start=False)
    assert warm.best_lambda == cold.best_lambda


def test_select_lambda_works_for_factor_targets(rng):
    Y = rng.standard_normal((80, 5))
    sel = select_lambda(Y, cfg=cfg_for(target="cholesky-ls"),
                        grid=[0.05, 0.1, 0.3])
    assert isinstance(sel, SelectionResult)
    assert sel.best_result.T is not None


def test_select_lambda_validation(rng):
    S = random_spd(rng, 3)
    with pytest.raises(ValueError):
        select_lambda(S, cfg=cfg_for(), grid=[0.1])  # square S without n
    with pytest.raises(ValueError):
        select_lambda(S, n=50, cfg=None, grid=[0.1])
    with pytest.raises(ValueError):
        select_lambda(S, n=50, cfg=cfg_for(), grid=[])
    with pytest.raises(ValueError):
        select_lambda(np.zeros(3), n=50, cfg=cfg_for(), grid=[0.1])
