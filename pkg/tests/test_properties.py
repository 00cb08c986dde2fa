"""Property-based invariants over random shapes and values."""

import numpy as np
from hypothesis import given, settings, strategies as st

from mlsm import CenteringOps, Tensor3, refold, two_sided_center, unfold

dims = st.tuples(st.integers(1, 6), st.integers(1, 6), st.integers(1, 5))


def _tensor(d, seed):
    rng = np.random.default_rng(seed)
    return Tensor3(rng.standard_normal(d))


@settings(max_examples=50, deadline=None)
@given(d=dims, seed=st.integers(0, 2**32 - 1), mode=st.sampled_from([1, 2]))
def test_unfold_refold_identity(d, seed, mode):
    X = _tensor(d, seed)
    assert refold(unfold(X, mode), mode, d) == X


@settings(max_examples=50, deadline=None)
@given(d=dims, seed=st.integers(0, 2**32 - 1))
def test_unfold_preserves_multiset_of_entries(d, seed):
    X = _tensor(d, seed)
    for mode in (1, 2):
        assert np.allclose(np.sort(unfold(X, mode), axis=None),
                           np.sort(X.values, axis=None), atol=0)


@settings(max_examples=50, deadline=None)
@given(n=st.integers(2, 8), T=st.integers(1, 5), seed=st.integers(0, 2**32 - 1))
def test_centering_idempotent_and_contractive(n, T, seed):
    rng = np.random.default_rng(seed)
    M = rng.standard_normal((n, n * T))
    ops = CenteringOps(n, T)
    C1 = two_sided_center(M, ops)
    C2 = two_sided_center(C1, ops)
    assert np.max(np.abs(C2 - C1)) < 1e-12
    # projection never increases the Frobenius norm
    assert np.linalg.norm(C1) <= np.linalg.norm(M) + 1e-12


@settings(max_examples=50, deadline=None)
@given(n=st.integers(2, 8), T=st.integers(1, 5), seed=st.integers(0, 2**32 - 1))
def test_centered_rows_and_blocks_sum_to_zero(n, T, seed):
    rng = np.random.default_rng(seed)
    C = two_sided_center(rng.standard_normal((n, n * T)), CenteringOps(n, T))
    assert np.max(np.abs(C.sum(axis=0))) < 1e-10
    blocks = C.reshape(n, T, n)
    assert np.max(np.abs(blocks.sum(axis=2))) < 1e-10
