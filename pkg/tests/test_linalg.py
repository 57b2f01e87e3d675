import numpy as np
import pytest

from sparsecov.errors import (DegenerateColumn, DimensionMismatch,
                              NotPositiveDefinite)
from sparsecov.linalg import (cholesky_factor, frobenius_norm,
                              is_positive_definite, log_det, operator_norm,
                              sample_covariance, spd_inverse, symmetrize,
                              to_correlation)

from oracles import random_spd


def test_cholesky_factor_known_2x2():
    A = np.array([[4.0, 2.0], [2.0, 3.0]])
    L = cholesky_factor(A)
    assert np.allclose(L, [[2.0, 0.0], [1.0, np.sqrt(2.0)]])


def test_cholesky_factor_reconstructs(rng):
    for _ in range(100):
        p = int(rng.integers(1, 12))
        A = random_spd(rng, p)
        L = cholesky_factor(A)
        assert np.tril(L, -1).shape == L.shape  # lower triangular
        assert np.allclose(np.triu(L, 1), 0.0)
        err = frobenius_norm(L @ L.T - A)
        assert err <= 1e-10 * frobenius_norm(A)


def test_cholesky_factor_rejects_indefinite():
    with pytest.raises(NotPositiveDefinite):
        cholesky_factor(np.array([[1.0, 2.0], [2.0, 1.0]]))
    with pytest.raises(NotPositiveDefinite):
        cholesky_factor(-np.eye(3))


def test_cholesky_pivot_floor_is_scale_relative():
    # pivot threshold is 1e-12 * max diagonal entry
    assert is_positive_definite(np.diag([1.0, 1e-11]))
    assert not is_positive_definite(np.diag([1.0, 1e-13]))
    # same matrix scaled up: still rejected (relative floor)
    assert not is_positive_definite(np.diag([1e6, 1e-7]))


def test_log_det_matches_slogdet(rng):
    for _ in range(50):
        A = random_spd(rng, int(rng.integers(1, 10)))
        assert log_det(A) == pytest.approx(np.linalg.slogdet(A)[1], rel=1e-10, abs=1e-10)


def test_spd_inverse_matches_inv(rng):
    for _ in range(50):
        A = random_spd(rng, int(rng.integers(1, 10)))
        Ainv = spd_inverse(A)
        assert np.allclose(Ainv, np.linalg.inv(A), rtol=1e-8, atol=1e-10)
        assert np.array_equal(Ainv, Ainv.T)


def test_operator_norm_examples():
    assert operator_norm(np.diag([-3.0, 2.0])) == pytest.approx(3.0, rel=1e-9)
    assert operator_norm(np.array([[0.0, 1.0], [0.0, 0.0]])) == pytest.approx(1.0, rel=1e-9)
    assert operator_norm(np.eye(6)) == pytest.approx(1.0, rel=1e-9)
    assert operator_norm(np.zeros((4, 4))) == 0.0


def test_operator_norm_matches_svd(rng):
    for _ in range(200):
        m = int(rng.integers(1, 25))
        n = int(rng.integers(1, 25))
        A = rng.standard_normal((m, n))
        want = np.linalg.svd(A, compute_uv=False)[0]
        assert operator_norm(A) == pytest.approx(want, rel=1e-8)


def test_operator_norm_rejects_vectors():
    with pytest.raises(DimensionMismatch):
        operator_norm(np.ones(5))


def test_frobenius_norm():
    assert frobenius_norm(np.eye(7)) == pytest.approx(np.sqrt(7.0))
    A = np.arange(6.0).reshape(2, 3)
    assert frobenius_norm(A) == pytest.approx(np.linalg.norm(A))


def test_norm_inequalities(rng):
    # submultiplicativity, the lower bound through the smallest singular
    # value, entrywise domination, and the Frobenius sandwich
    for _ in range(150):
        p = int(rng.integers(1, 10))
        A = rng.standard_normal((p, p))
        B = rng.standard_normal((p, p))
        nA, nB_F, nAB_F = operator_norm(A), frobenius_norm(B), frobenius_norm(A @ B)
        assert nAB_F <= nA * nB_F + 1e-10
        smin = np.linalg.svd(A, compute_uv=False)[-1]
        assert smin * nB_F <= nAB_F + 1e-10
        assert np.abs(A).max() <= nA + 1e-10
        Sym = (A + A.T) / 2.0
        nS, nS_F = operator_norm(Sym), frobenius_norm(Sym)
        assert nS <= nS_F + 1e-10
        assert nS_F <= np.sqrt(p) * nS + 1e-10


def test_symmetrize_averages_and_warns():
    A = np.array([[1.0, 2.0], [1.0, 1.0]])
    with pytest.warns(UserWarning):
        out = symmetrize(A)
    assert np.allclose(out, [[1.0, 1.5], [1.5, 1.0]])
    # sub-threshold asymmetry: silent
    B = np.array([[1.0, 1.0 + 1e-12], [1.0, 1.0]])
    out = symmetrize(B)
    assert np.array_equal(out, out.T)


def test_sample_covariance_divisor_is_n():
    Y = np.array([[1.0, 0.0], [-1.0, 0.0]])
    S = sample_covariance(Y)  # centered; divisor n = 2
    assert np.allclose(S, [[1.0, 0.0], [0.0, 0.0]])
    S0 = sample_covariance(Y, center=False)
    assert np.allclose(S0, [[1.0, 0.0], [0.0, 0.0]])


def test_sample_covariance_matches_definition(rng):
    Y = rng.standard_normal((40, 5))
    S = sample_covariance(Y)
    Yc = Y - Y.mean(axis=0)
    assert np.allclose(S, Yc.T @ Yc / 40.0)
    with pytest.raises(ValueError):
        sample_covariance(Y[:1])


def test_to_correlation_pins_diagonal(rng):
    S = random_spd(rng, 6) * 3.0
    Gamma, w = to_correlation(S)
    assert np.array_equal(np.diag(Gamma), np.ones(6))
    assert np.allclose(Gamma, S / np.outer(w, w))
    assert np.allclose(w, np.sqrt(np.diag(S)))


def test_to_correlation_degenerate_diagonal():
    S = np.diag([1.0, 0.0])
    with pytest.raises(DegenerateColumn):
        to_correlation(S)
