"""Sparse and small-dense kernels shared by every level of the solver.

The sparse representation is ``scipy.sparse.csr_matrix`` kept in canonical
form: sorted column indices, no duplicates, float64 values.  Explicit zeros
produced by cancellation are *kept*; dropping entries is the job of
:func:`lair.hierarchy.lump_to_diagonal` only.
"""
import warnings

import numpy as np
import scipy.io
import scipy.linalg
import scipy.sparse as sp

__all__ = ['TOL_PIVOT', 'as_csr', 'check_csr', 'spmv', 'spmm', 'transpose',
           'extract_cf_blocks', 'dense_solve', 'check_block_layout',
           'dense_block', 'read_matrix_market', 'write_matrix_market']

# relative pivot size below which dense_solve switches to least squares
TOL_PIVOT = 1e-12


def as_csr(A):
    """Return ``A`` as a canonical float64 CSR matrix (sorted, no duplicates)."""
    if sp.issparse(A):
        A = sp.csr_matrix(A, dtype=np.float64, copy=True)
    else:
        A = sp.csr_matrix(np.atleast_2d(np.asarray(A, dtype=np.float64)))
    A.sum_duplicates()
    A.sort_indices()
    return A


def check_csr(A):
    """Raise ``ValueError`` if ``A`` violates the canonical CSR invariants."""
    indptr, indices = A.indptr, A.indices
    n_rows, n_cols = A.shape
    if indptr.shape[0] != n_rows + 1 or indptr[0] != 0:
        raise ValueError('malformed row offsets')
    if indptr[-1] != indices.shape[0] or indices.shape[0] != A.data.shape[0]:
        raise ValueError('row offsets do not match stored entries')
    if np.any(np.diff(indptr) < 0):
        raise ValueError('row offsets must be nondecreasing')
    if indices.size and (indices.min() < 0 or indices.max() >= n_cols):
        raise ValueError('column index out of range')
    # strictly increasing inside every row
    steps = np.diff(indices)
    row_starts = np.zeros(indices.shape[0], dtype=bool)
    row_starts[indptr[1:-1][indptr[1:-1] < indices.shape[0]]] = True
    if np.any((steps <= 0) & ~row_starts[1:]):
        raise ValueError('column indices must be strictly increasing per row')


def spmv(A, x):
    """Sparse matrix-vector product ``A @ x``."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] != A.shape[1]:
        raise ValueError(f'spmv: A is {A.shape[0]}x{A.shape[1]}, '
                         f'x has length {x.shape[0]}')
    return A @ x


def _pattern(A):
    return sp.csr_matrix((np.ones_like(A.data), A.indices, A.indptr),
                         shape=A.shape)


def _row_keys(A):
    rows = np.repeat(np.arange(A.shape[0], dtype=np.int64), np.diff(A.indptr))
    return rows * A.shape[1] + A.indices


def spmm(A, B):
    """Sparse product ``A @ B`` that keeps entries zeroed by cancellation.

    scipy drops exact zeros from products; the structural product of the
    two patterns (all-positive values, so nothing cancels) recovers them.
    """
    A = as_csr(A)
    B = as_csr(B)
    if A.shape[1] != B.shape[0]:
        raise ValueError(f'spmm: inner dimensions differ '
                         f'({A.shape[1]} vs {B.shape[0]})')
    C = A @ B
    C.sort_indices()
    pattern = _pattern(A) @ _pattern(B)
    pattern.sort_indices()
    data = np.zeros(pattern.nnz)
    pos = np.searchsorted(_row_keys(pattern), _row_keys(C))
    data[pos] = C.data
    out = sp.csr_matrix((data, pattern.indices.copy(), pattern.indptr.copy()),
                        shape=(A.shape[0], B.shape[1]))
    out.has_sorted_indices = True
    return out


def transpose(A):
    """Return ``A.T`` in canonical CSR form (explicit zeros preserved)."""
    At = sp.csr_matrix(A.T)
    At.sort_indices()
    return At


def extract_cf_blocks(A, split):
    """Split ``A`` into ``(A_ff, A_fc, A_cf, A_cc)``.

    Blocks are ordered by the splitting's F- and C-point lists, both in
    increasing original index, so permuting ``A`` F-first-then-C and
    stacking the blocks reproduces it exactly.
    """
    if A.shape[0] != A.shape[1]:
        raise ValueError('extract_cf_blocks requires a square matrix')
    if split.n != A.shape[0]:
        raise ValueError(f'splitting covers {split.n} points, '
                         f'matrix has {A.shape[0]} rows')
    f, c = split.f_points, split.c_points
    A_f = A[f, :]
    A_c = A[c, :]
    blocks = (A_f[:, f], A_f[:, c], A_c[:, f], A_c[:, c])
    return tuple(as_csr(B) for B in blocks)


def dense_solve(M, rhs, tol_pivot=TOL_PIVOT):
    """Solve ``M x = rhs`` for a small dense square ``M``.

    LU with partial pivoting is used unless a pivot falls below
    ``tol_pivot * max|M|``; then the minimal-norm least-squares solution is
    computed from a complete orthogonal factorization (LAPACK ``gelsy``).

    Returns
    -------
    x : ndarray, same shape as ``rhs``
    fallback : bool
        True when the least-squares path was taken.
    """
    M = np.asarray(M, dtype=np.float64)
    rhs = np.asarray(rhs, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError('dense_solve expects a square matrix')
    if rhs.shape[0] != M.shape[0]:
        raise ValueError('right-hand side row count does not match')
    if M.shape[0] == 0:
        return np.zeros_like(rhs), False
    scale = np.abs(M).max()
    if scale > 0:
        with warnings.catch_warnings():
            warnings.simplefilter('ignore', scipy.linalg.LinAlgWarning)
            lu, piv = scipy.linalg.lu_factor(M, check_finite=False)
        if np.abs(np.diag(lu)).min() >= tol_pivot * scale:
            return scipy.linalg.lu_solve((lu, piv), rhs, check_finite=False), False
    x = scipy.linalg.lstsq(M, rhs, cond=tol_pivot, lapack_driver='gelsy',
                           check_finite=False)[0]
    return x, True


def check_block_layout(A, block_size):
    """Validate that ``A`` can be viewed as ``block_size``-square blocks."""
    k = int(block_size)
    if k < 1:
        raise ValueError('block size must be >= 1')
    if A.shape[0] % k or A.shape[1] % k:
        raise ValueError(f'matrix shape {A.shape} is not a multiple of '
                         f'block size {k}')
    return k


def dense_block(A, rows, cols):
    """Dense ``A[rows][:, cols]`` for sorted ``cols``; cheap for few rows."""
    out = np.zeros((len(rows), len(cols)))
    if len(cols) == 0:
        return out
    cols = np.asarray(cols)
    for p, r in enumerate(rows):
        lo, hi = A.indptr[r], A.indptr[r + 1]
        idx = A.indices[lo:hi]
        pos = np.searchsorted(cols, idx)
        pos[pos == len(cols)] = 0
        hit = cols[pos] == idx
        out[p, pos[hit]] = A.data[lo:hi][hit]
    return out


def read_matrix_market(path):
    """Read a real Matrix Market file into canonical CSR."""
    M = scipy.io.mmread(path)
    if np.iscomplexobj(M):
        raise ValueError('complex Matrix Market files are not supported')
    return as_csr(M)


def write_matrix_market(path, A, comment=''):
    """Write ``A`` as a ``coordinate real general`` Matrix Market file."""
    scipy.io.mmwrite(path, sp.coo_matrix(A), comment=comment, field='real',
                     precision=17, symmetry='general')
