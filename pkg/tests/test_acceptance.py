"""End-to-end acceptance checks at desk scale.

Each test pins a user-facing guarantee: unpenalized fits reduce to the
classical closed forms, the iterative solvers agree with slow dense
oracles, objective traces never increase, support recovery and error
rates behave as the penalized theory predicts on synthetic truths, and
the whole stack is deterministic.  Runtime budgets are asserted so the
suite stays cheap enough to run on every change.
"""

import math
import time
from dataclasses import replace

import numpy as np
import pytest

from sparsecov.cholesky import estimate_cholesky_ls, estimate_cholesky_ml, estimate_cholesky_nl, mcd
from sparsecov.errors import NonConvergence
from sparsecov.estimators import EstimatorConfig, estimate, estimate_covariance, estimate_precision
from sparsecov.linalg import frobenius_norm, is_positive_definite, operator_norm, sample_covariance
from sparsecov.penalties import Penalty, penalty_derivative, penalty_value
from sparsecov.simulation import (
    RateExperiment,
    TruthSpec,
    gen_truth,
    replicate_seed,
    run_rate_experiment,
    sample_gaussian,
)
from sparsecov.solvers import (
    SolverOptions,
    glasso_objective,
    glasso_weighted,
    prox_covariance_weighted,
)
from sparsecov.tuning import select_lambda

from oracles import (
    covariance_objective_dense,
    numeric_antiderivative,
    offdiag_weight_matrix,
    prox_covariance_oracle,
    prox_glasso_oracle,
    random_spd,
)

MATRIX_TARGETS = ("precision", "covariance", "correlation", "inverse-correlation")
ALL_TARGETS = MATRIX_TARGETS + ("cholesky-ml", "cholesky-ls", "cholesky-nl")


def _rel_frob(A, B):
    return frobenius_norm(A - B) / frobenius_norm(B)


def _offdiag_support_size(M):
    p = M.shape[0]
    return int(((M != 0) & ~np.eye(p, dtype=bool)).sum()) // 2


def test_unpenalized_estimates_invert_the_input():
    start = time.monotonic()
    rng = np.random.default_rng(101)
    pen = Penalty("l1", 0.0)
    for _ in range(20):
        p = int(rng.integers(2, 11))
        S = random_spd(rng, p)
        cfg = EstimatorConfig(penalty=pen, target="precision")
        omega = estimate_precision(S, cfg).estimate
        assert _rel_frob(omega, np.linalg.inv(S)) <= 1e-6
        cfg = EstimatorConfig(penalty=pen, target="covariance")
        sigma = estimate_covariance(S, cfg).estimate
        assert _rel_frob(sigma, S) <= 1e-6
    assert time.monotonic() - start < 5.0


def test_small_problem_objectives_match_dense_oracle():
    start = time.monotonic()
    rng = np.random.default_rng(202)
    for p in (2, 3):
        for lam in (0.1, 0.3):
            for _ in range(5):
                S = random_spd(rng, p)
                W = np.full((p, p), lam)
                np.fill_diagonal(W, 0.0)

                omega, _ = glasso_weighted(S, W)
                got = glasso_objective(S, W, omega)
                _, want = prox_glasso_oracle(S, W)
                assert got <= want + 1e-4

                init = np.diag(np.diag(S)).astype(float)
                sigma, _ = prox_covariance_weighted(S, W, init)
                got = covariance_objective_dense(S, W, sigma)
                _, want = prox_covariance_oracle(S, W)
                assert got <= want + 1e-4
    assert time.monotonic() - start < 30.0


def test_lla_traces_never_increase():
    start = time.monotonic()
    rng = np.random.default_rng(303)
    instances = 0
    for family in ("l1", "scad", "hard"):
        for target in ALL_TARGETS:
            for _ in range(10):
                p = int(rng.integers(4, 9))
                S = sample_covariance(rng.standard_normal((5 * p, p)) @ random_spd(rng, p))
                lam = float(rng.uniform(0.1, 0.4))
                cfg = EstimatorConfig(penalty=Penalty(family, lam), target=target)
                try:
                    trace = estimate(S, cfg).objective_trace
                except NonConvergence as exc:
                    trace = exc.result.objective_trace
                assert all(b <= a + 1e-10 for a, b in zip(trace, trace[1:]))
                instances += 1
    assert instances == 210
    assert time.monotonic() - start < 120.0


def test_bic_selected_scad_recovers_tridiagonal_support():
    start = time.monotonic()
    p, n = 30, 400
    # BIC arbitrates within the lambda window where support recovery is
    # attainable at this scale; smaller lambdas fit better yet keep noise.
    grid = tuple(np.geomspace(2.0, 8.0, 8) * math.sqrt(math.log(p) / n))
    exp = RateExperiment(
        truth=TruthSpec("tridiagonal-precision", p=p, offdiag=0.4),
        n_values=(n,), p_values=(p,), replicates=50,
        config=EstimatorConfig(penalty=Penalty("scad"), target="precision"),
        seed=11, lambda_rule="bic", grid=grid,
    )
    cell = run_rate_experiment(exp).cells[0]
    assert cell.failures == 0
    assert cell.true_zero_rate >= 0.95
    assert cell.true_nonzero_rate >= 0.90
    assert time.monotonic() - start < 300.0


def test_error_rate_scales_with_sample_size():
    start = time.monotonic()
    n_values = (100, 200, 400, 800)
    exp = RateExperiment(
        truth=TruthSpec("tridiagonal-precision", p=50, offdiag=0.4),
        n_values=n_values, p_values=(50,), replicates=30,
        config=EstimatorConfig(penalty=Penalty("l1"), target="precision"),
        seed=23, lambda_rule="oracle", oracle_c=0.5,
    )
    report = run_rate_experiment(exp)
    assert all(cell.failures == 0 for cell in report.cells)
    errs = [cell.mean_sq_frobenius for cell in report.cells]
    slope = np.polyfit(np.log(n_values), np.log(errs), 1)[0]
    assert -1.25 <= slope <= -0.75
    assert time.monotonic() - start < 600.0


def test_concave_penalty_gives_sparser_less_biased_fits():
    start = time.monotonic()
    p, n = 110, 109
    scale = math.sqrt(math.log(p) / n)
    # Fine grid: the per-family BIC optima sit one to three steps apart,
    # which a coarse grid would snap into the same bin.
    grid = tuple(np.geomspace(0.45, 1.5, 40) * scale)
    truth = gen_truth(TruthSpec("sparse-random-precision", p=p, density=0.01,
                                magnitude=4.0, seed=7))
    mask = (truth.Omega != 0) & ~np.eye(p, dtype=bool)

    wins_support = wins_bias = 0
    reps = 25
    for rep in range(reps):
        X = sample_gaussian(truth.Sigma, n, replicate_seed(31, n, p, rep))
        S = sample_covariance(X)
        stats = {}
        for family in ("scad", "l1"):
            cfg = EstimatorConfig(penalty=Penalty(family), target="precision")
            est = select_lambda(S, n=n, cfg=cfg, grid=grid).best_result.estimate
            mae = float(np.abs(est[mask] - truth.Omega[mask]).mean())
            stats[family] = (_offdiag_support_size(est), mae)
        wins_support += stats["scad"][0] < stats["l1"][0]
        wins_bias += stats["scad"][1] < stats["l1"][1]
    assert wins_support >= 0.8 * reps
    assert wins_bias >= 0.8 * reps
    assert time.monotonic() - start < 600.0


def test_correlation_scale_fit_beats_precision_scale():
    start = time.monotonic()
    variants = [
        TruthSpec("sparse-random-precision", p=2, density=0.02, magnitude=0.3,
                  seed=7, unit_diagonal=True),
        TruthSpec("sparse-random-precision", p=2, density=0.02, magnitude=0.4,
                  seed=11, unit_diagonal=True),
        TruthSpec("sparse-random-precision", p=2, density=0.01, magnitude=0.3,
                  seed=13, unit_diagonal=True),
        TruthSpec("sparse-random-precision", p=2, density=0.03, magnitude=0.3,
                  seed=17, unit_diagonal=True),
    ]
    cells = [(40, 80), (40, 160), (60, 90), (60, 180), (80, 120)]

    wins = 0
    for spec in variants:
        for p, n in cells:
            errs = {}
            for target in ("precision", "inverse-correlation"):
                exp = RateExperiment(
                    truth=replace(spec, p=p),
                    n_values=(n,), p_values=(p,), replicates=10,
                    config=EstimatorConfig(penalty=Penalty("l1"), target=target),
                    seed=41, lambda_rule="oracle", oracle_c=1.0,
                )
                cell = run_rate_experiment(exp).cells[0]
                assert cell.failures == 0
                errs[target] = cell.mean_sq_frobenius
            wins += errs["inverse-correlation"] < errs["precision"]
    assert wins >= 14
    assert time.monotonic() - start < 300.0


def test_unpenalized_factor_estimates_match_closed_forms():
    start = time.monotonic()
    rng = np.random.default_rng(808)
    pen = Penalty("l1", 0.0)
    for _ in range(20):
        p = int(rng.integers(2, 11))
        S = random_spd(rng, p)
        inv = np.linalg.inv(S)
        ml = estimate_cholesky_ml(S, EstimatorConfig(penalty=pen, target="cholesky-ml"))
        assert _rel_frob(ml.estimate, inv) <= 1e-5
        nl = estimate_cholesky_nl(S, EstimatorConfig(penalty=pen, target="cholesky-nl"))
        assert _rel_frob(nl.estimate, inv) <= 1e-5
        ls = estimate_cholesky_ls(S, EstimatorConfig(penalty=pen, target="cholesky-ls"))
        assert np.max(np.abs(ls.T - mcd(S).T)) <= 1e-8
    assert time.monotonic() - start < 10.0


def test_norm_inequalities_hold_in_bulk():
    rng = np.random.default_rng(909)
    for _ in range(1000):
        p = int(rng.integers(1, 9))
        A = rng.standard_normal((p, p)) * rng.uniform(0.1, 5.0)
        B = rng.standard_normal((p, p)) * rng.uniform(0.1, 5.0)
        op_a = operator_norm(A)
        slack = 1e-10 * max(1.0, op_a)
        assert frobenius_norm(A @ B) <= op_a * frobenius_norm(B) + slack
        smin = float(np.linalg.svd(A, compute_uv=False)[-1])
        assert smin * frobenius_norm(B) <= frobenius_norm(A @ B) + slack
        assert np.max(np.abs(A)) <= op_a + slack
        sym = (A + A.T) / 2.0
        op_sym = operator_norm(sym)
        fro_sym = frobenius_norm(sym)
        assert op_sym <= fro_sym + slack
        assert fro_sym <= math.sqrt(p) * op_sym + slack


def test_penalty_derivative_integrates_to_value():
    for family in ("l1", "scad", "hard"):
        for lam in (0.4, 1.0):
            pen = Penalty(family, lam)
            for theta in (0.2 * lam, lam, 2.5 * lam, 5.0 * lam):
                want = penalty_value(pen, theta)
                got = numeric_antiderivative(lambda t: penalty_derivative(pen, t), theta)
                assert got == pytest.approx(want, rel=1e-5, abs=1e-12)


def test_every_estimator_returns_positive_definite():
    rng = np.random.default_rng(911)
    for _ in range(4):
        p = int(rng.integers(4, 9))
        S = sample_covariance(rng.standard_normal((6 * p, p)) @ random_spd(rng, p))
        for family in ("l1", "scad"):
            for target in ALL_TARGETS:
                cfg = EstimatorConfig(penalty=Penalty(family, 0.25), target=target)
                try:
                    res = estimate(S, cfg)
                except NonConvergence as exc:
                    res = exc.result
                assert is_positive_definite(res.estimate)
                if res.companion is not None:
                    assert is_positive_definite(res.companion)


def test_matrix_estimates_are_permutation_equivariant():
    rng = np.random.default_rng(912)
    for _ in range(5):
        p = int(rng.integers(4, 9))
        S = sample_covariance(rng.standard_normal((6 * p, p)) @ random_spd(rng, p))
        perm = rng.permutation(p)
        P = np.eye(p)[perm]
        for target in MATRIX_TARGETS:
            # Tight solves: the subproblem solutions are unique, so the two
            # routings agree up to solver accuracy; loose tolerances let
            # near-threshold entries land on different sides of zero.
            cfg = EstimatorConfig(penalty=Penalty("scad", 0.3), target=target,
                                  solver=SolverOptions(tol=1e-11, max_sweeps=500000))
            direct = estimate(P @ S @ P.T, cfg).estimate
            routed = P @ estimate(S, cfg).estimate @ P.T
            np.testing.assert_array_equal(direct == 0, routed == 0)
            np.testing.assert_allclose(direct, routed, atol=1e-4)


def test_seeded_runs_are_bit_reproducible():
    exp = RateExperiment(
        truth=TruthSpec("tridiagonal-precision", p=8, offdiag=0.4),
        n_values=(50, 100), p_values=(8,), replicates=4,
        config=EstimatorConfig(penalty=Penalty("scad"), target="precision"),
        seed=71, lambda_rule="oracle", oracle_c=1.0,
    )
    first = run_rate_experiment(exp)
    second = run_rate_experiment(exp)
    assert first == second

    rng = np.random.default_rng(713)
    S = random_spd(rng, 6)
    cfg = EstimatorConfig(penalty=Penalty("hard", 0.3), target="covariance")
    a = estimate(S, cfg)
    b = estimate(S, cfg)
    assert np.array_equal(a.estimate, b.estimate)
    assert a.objective_trace == b.objective_trace
