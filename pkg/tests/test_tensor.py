"""Tensor algebra against brute-force loop oracles."""

import numpy as np
import pytest

from mlsm import (CenteringOps, Tensor3, kron_rightmul, refold, tucker_linpred,
                  two_sided_center, unfold)
from mlsm.errors import DimensionError

RNG = np.random.default_rng(20240817)


def unfold_oracle(X, mode):
    d1, d2, d3 = X.dims
    if mode == 1:
        M = np.zeros((d1, d2 * d3))
        for i1 in range(d1):
            for i2 in range(d2):
                for i3 in range(d3):
                    M[i1, i2 + d2 * i3] = X.values[i1, i2, i3]
    else:
        M = np.zeros((d2, d1 * d3))
        for i1 in range(d1):
            for i2 in range(d2):
                for i3 in range(d3):
                    M[i2, i1 + d1 * i3] = X.values[i1, i2, i3]
    return M


def test_unfold_index_convention():
    X = Tensor3(RNG.standard_normal((4, 5, 6)))
    # entry (2,3,4) in 1-based notation -> (1,2,3) 0-based
    assert unfold(X, 1)[1, 2 + 5 * 3] == X.values[1, 2, 3]
    assert unfold(X, 2)[2, 1 + 4 * 3] == X.values[1, 2, 3]


def test_unfold_zero_tensor():
    X = Tensor3(np.zeros((3, 4, 2)))
    assert unfold(X, 1).shape == (3, 8)
    assert unfold(X, 2).shape == (4, 6)
    assert not unfold(X, 1).any()


@pytest.mark.parametrize("mode", [1, 2])
def test_unfold_matches_loop_oracle(mode):
    X = Tensor3(RNG.standard_normal((3, 4, 2)))
    assert np.array_equal(unfold(X, mode), unfold_oracle(X, mode))


@pytest.mark.parametrize("mode", [1, 2])
def test_refold_round_trip_exact(mode):
    X = Tensor3(RNG.standard_normal((5, 3, 4)))
    assert refold(unfold(X, mode), mode, X.dims) == X


def test_refold_degenerate_dims():
    X = Tensor3(np.full((1, 1, 1), 7.0))
    assert refold(unfold(X, 1), 1, (1, 1, 1)) == X


def test_refold_shape_mismatch():
    with pytest.raises(DimensionError):
        refold(np.zeros((3, 5)), 1, (3, 2, 2))


def test_tucker_linpred_zero_and_constant():
    n, T, k = 4, 3, 1
    S0 = Tensor3(np.zeros((k, k, T)))
    zero = np.zeros((n, T))
    out = tucker_linpred(S0, np.ones((n, k)), np.ones((n, k)), zero, zero)
    assert not out.values.any()
    Sc = Tensor3(np.full((k, k, T), 2.5))
    out = tucker_linpred(Sc, np.ones((n, k)), np.ones((n, k)), zero, zero)
    assert np.allclose(out.values, 2.5, atol=0)


def test_tucker_linpred_matches_triple_loop():
    n, T, k = 5, 3, 2
    S = Tensor3(RNG.standard_normal((k, k, T)))
    Theta = RNG.standard_normal((n, k))
    Phi = RNG.standard_normal((n, k))
    alpha = RNG.standard_normal((n, T))
    beta = RNG.standard_normal((n, T))
    out = tucker_linpred(S, Theta, Phi, alpha, beta)
    for i in range(n):
        for j in range(n):
            for t in range(T):
                want = Theta[i] @ S.values[:, :, t] @ Phi[j] + beta[i, t] + alpha[j, t]
                assert abs(out.values[i, j, t] - want) < 1e-12


def test_kron_rightmul_identity_and_single_layer():
    n, T, k = 4, 3, 2
    V = RNG.standard_normal((n * T, k))
    out = kron_rightmul(V, np.eye(n))
    # I_T kron I_n is the identity, so this is plain V'
    assert np.allclose(out, V.T, atol=1e-14)
    V1 = RNG.standard_normal((n, k))
    B = RNG.standard_normal((n, 2))
    assert np.allclose(kron_rightmul(V1, B), V1.T @ B, atol=1e-14)


def test_kron_rightmul_matches_dense_kron():
    n, T, k, p = 4, 3, 2, 2
    V = RNG.standard_normal((n * T, k))
    B = RNG.standard_normal((n, p))
    dense = V.T @ np.kron(np.eye(T), B)
    assert np.max(np.abs(kron_rightmul(V, B) - dense)) < 1e-12


def test_two_sided_center_annihilates_intercepts():
    n, T = 5, 3
    ops = CenteringOps(n, T)
    v = RNG.standard_normal(n * T)
    assert np.max(np.abs(two_sided_center(np.outer(np.ones(n), v), ops))) < 1e-10
    beta = RNG.standard_normal((n, T))
    M = beta @ np.kron(np.eye(T), np.ones((n, 1))).T
    assert np.max(np.abs(two_sided_center(M, ops))) < 1e-10


def test_two_sided_center_matches_dense():
    n, T = 5, 3
    ops = CenteringOps(n, T)
    M = RNG.standard_normal((n, n * T))
    Jn = np.eye(n) - np.ones((n, n)) / n
    JnT = np.kron(np.eye(T), Jn)
    dense = Jn @ M @ JnT.T
    out = two_sided_center(M, ops)
    assert np.max(np.abs(out - dense)) < 1e-12
    # idempotent
    assert np.max(np.abs(two_sided_center(out, ops) - out)) < 1e-12


def test_tensor_immutable():
    X = Tensor3(np.zeros((2, 2, 2)))
    with pytest.raises(ValueError):
        X.values[0, 0, 0] = 1.0
