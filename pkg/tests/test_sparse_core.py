import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from lair.sparse_core import (as_csr, check_csr, dense_solve, extract_cf_blocks,
                              read_matrix_market, spmm, spmv, transpose,
                              write_matrix_market)
from lair.strength_split import CfSplitting

from conftest import random_sparse


def test_spmv_small_cases():
    np.testing.assert_array_equal(spmv(as_csr(np.eye(3)), [1, 2, 3]), [1, 2, 3])
    A = as_csr([[2, -1], [-1, 2]])
    np.testing.assert_array_equal(spmv(A, [1, 1]), [1, 1])


def test_spmv_against_dense():
    A = random_sparse(50, density=0.1, seed=3)
    x = np.random.default_rng(0).standard_normal(50)
    assert np.abs(spmv(A, x) - A.toarray() @ x).max() < 1e-13


def test_spmv_dimension_mismatch():
    with pytest.raises(ValueError):
        spmv(as_csr(np.eye(3)), np.ones(4))


def test_spmm_identity_is_bit_identical():
    A = as_csr(random_sparse(12, seed=1))
    C = spmm(A, sp.identity(12))
    assert (C != A).nnz == 0
    np.testing.assert_array_equal(C.indices, A.indices)


def test_spmm_composes_permutations():
    p, q = np.random.default_rng(0).permutation(7), np.random.default_rng(1).permutation(7)
    P = sp.identity(7, format='csr')[p]
    Q = sp.identity(7, format='csr')[q]
    # row i of P @ Q is row p[i] of Q, i.e. e_{q[p[i]]}
    np.testing.assert_array_equal(spmm(P, Q).toarray(), np.eye(7)[q[p]])


def test_spmm_against_dense():
    A = random_sparse(30, 20, density=0.2, seed=4)
    B = random_sparse(20, 25, density=0.2, seed=5)
    C = spmm(A, B)
    check_csr(C)
    assert np.abs(C.toarray() - A.toarray() @ B.toarray()).max() < 1e-13


def test_spmm_keeps_cancellation_zeros():
    A = as_csr([[1.0, 1.0]])
    B = as_csr([[1.0], [-1.0]])
    C = spmm(A, B)
    assert C.nnz == 1 and C.data[0] == 0.0
    assert (A @ B).nnz == 0  # scipy itself drops it


def test_spmm_dimension_mismatch():
    with pytest.raises(ValueError):
        spmm(as_csr(np.ones((2, 3))), as_csr(np.ones((2, 3))))


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 15), st.integers(1, 15), st.integers(1, 15), st.integers(0, 10**6))
def test_spmm_spmv_associativity(n, k, m, seed):
    A = random_sparse(n, k, density=0.4, seed=seed)
    B = random_sparse(k, m, density=0.4, seed=seed + 1)
    x = np.random.default_rng(seed).standard_normal(m)
    lhs = spmv(spmm(A, B), x)
    rhs = spmv(A, spmv(B, x))
    scale = max(1.0, np.abs(rhs).max())
    assert np.abs(lhs - rhs).max() <= 1e-12 * scale


def test_transpose_cases():
    S = as_csr(random_sparse(8, seed=2) + random_sparse(8, seed=2).T)
    assert (transpose(S) != S).nnz == 0
    row = as_csr(np.arange(1.0, 6.0)[None, :])
    assert transpose(row).shape == (5, 1)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 20), st.integers(1, 20), st.integers(0, 10**6))
def test_transpose_round_trip(n, m, seed):
    A = as_csr(random_sparse(n, m, density=0.3, seed=seed))
    B = transpose(transpose(A))
    np.testing.assert_array_equal(B.indptr, A.indptr)
    np.testing.assert_array_equal(B.indices, A.indices)
    np.testing.assert_array_equal(B.data, A.data)


def test_check_csr_rejects_unsorted():
    A = sp.csr_matrix((np.ones(2), np.array([1, 0]), np.array([0, 2])), shape=(1, 2))
    with pytest.raises(ValueError):
        check_csr(A)
    check_csr(as_csr(A))


def test_extract_blocks_degenerate_splits():
    A = as_csr(random_sparse(6, seed=7))
    A_ff, A_fc, A_cf, A_cc = extract_cf_blocks(A, CfSplitting(np.ones(6, bool)))
    assert (A_cc != A).nnz == 0 and A_ff.shape == (0, 0)
    A_ff, A_fc, A_cf, A_cc = extract_cf_blocks(A, CfSplitting(np.zeros(6, bool)))
    assert (A_ff != A).nnz == 0 and A_cc.shape == (0, 0)


def test_extract_blocks_reassembly():
    A = as_csr(random_sparse(5, density=0.8, seed=8))
    split = CfSplitting.from_labels('FCFCC')
    blocks = [B.toarray() for B in extract_cf_blocks(A, split)]
    reassembled = np.block([[blocks[0], blocks[1]], [blocks[2], blocks[3]]])
    p = split.permutation
    np.testing.assert_array_equal(reassembled, A.toarray()[np.ix_(p, p)])


def test_extract_blocks_errors():
    with pytest.raises(ValueError):
        extract_cf_blocks(as_csr(np.ones((2, 3))), CfSplitting.from_labels('FC'))
    with pytest.raises(ValueError):
        extract_cf_blocks(as_csr(np.eye(3)), CfSplitting.from_labels('FC'))


def test_dense_solve_examples():
    x, fb = dense_solve(np.eye(3), np.array([1.0, 2, 3]))
    np.testing.assert_array_equal(x, [1, 2, 3])
    assert not fb
    x, fb = dense_solve([[2.0, -1], [-1, 2]], [1.0, 0])
    np.testing.assert_allclose(x, [2 / 3, 1 / 3], rtol=1e-14)
    x, fb = dense_solve([[1.0, 1], [1, 1]], [2.0, 2])
    assert fb
    np.testing.assert_allclose(x, [1, 1], rtol=1e-12)


def test_dense_solve_multiple_rhs():
    rng = np.random.default_rng(0)
    M = rng.standard_normal((6, 6)) + 6 * np.eye(6)
    B = rng.standard_normal((6, 3))
    x, fb = dense_solve(M, B)
    assert not fb and np.linalg.norm(M @ x - B) <= 1e-10 * np.linalg.norm(B)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 10), st.integers(1, 9), st.integers(0, 10**6))
def test_dense_solve_fallback_is_min_norm(n, rank, seed):
    rank = min(rank, n - 1)
    rng = np.random.default_rng(seed)
    U = rng.standard_normal((n, rank))
    V = rng.standard_normal((rank, n))
    M = U @ V
    rhs = rng.standard_normal(n)
    x, fb = dense_solve(M, rhs)
    assert fb
    oracle = np.linalg.pinv(M, rcond=1e-10) @ rhs
    assert np.linalg.norm(x - oracle) <= 1e-7 * max(1.0, np.linalg.norm(oracle))


def test_dense_solve_rejects_nonsquare():
    with pytest.raises(ValueError):
        dense_solve(np.ones((2, 3)), np.ones(2))


def test_matrix_market_round_trip(tmp_path):
    A = as_csr(random_sparse(9, 7, density=0.3, seed=11))
    path = tmp_path / 'a.mtx'
    write_matrix_market(path, A)
    B = read_matrix_market(path)
    assert B.shape == A.shape
    np.testing.assert_array_equal(B.toarray(), A.toarray())
