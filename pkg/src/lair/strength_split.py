"""Classical strength of connection and first-pass Ruge-Stuben splitting."""
import heapq
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .sparse_core import as_csr, check_block_layout

__all__ = ['StrengthGraph', 'CfSplitting', 'classical_soc', 'rs_first_pass',
           'block_condense']


@dataclass(frozen=True)
class StrengthGraph:
    """Strong-neighbor sets stored as the pattern of a CSR matrix.

    Row ``i`` of ``matrix`` lists the points ``i`` strongly depends on; the
    stored values are the corresponding ``a_ij``.
    """
    matrix: sp.csr_matrix
    theta: float

    @property
    def n(self):
        return self.matrix.shape[0]

    def neighbors(self, i):
        lo, hi = self.matrix.indptr[i], self.matrix.indptr[i + 1]
        return self.matrix.indices[lo:hi]


@dataclass(frozen=True)
class CfSplitting:
    """C/F labels for ``n`` points (``is_c[i]`` True for C-points)."""
    is_c: np.ndarray
    c_points: np.ndarray = field(init=False, repr=False)
    f_points: np.ndarray = field(init=False, repr=False)
    coarse_index: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        is_c = np.asarray(self.is_c, dtype=bool)
        object.__setattr__(self, 'is_c', is_c)
        c = np.flatnonzero(is_c)
        object.__setattr__(self, 'c_points', c)
        object.__setattr__(self, 'f_points', np.flatnonzero(~is_c))
        index = np.full(is_c.shape[0], -1, dtype=np.int64)
        index[c] = np.arange(c.shape[0])
        object.__setattr__(self, 'coarse_index', index)

    @classmethod
    def from_labels(cls, labels):
        """Build from a string such as ``'FCFCC'`` or a sequence of 'C'/'F'."""
        return cls(np.array([s.upper() == 'C' for s in labels], dtype=bool))

    @property
    def n(self):
        return self.is_c.shape[0]

    @property
    def n_c(self):
        return self.c_points.shape[0]

    @property
    def n_f(self):
        return self.f_points.shape[0]

    @property
    def permutation(self):
        """Original indices in F-first-then-C order."""
        return np.concatenate([self.f_points, self.c_points])

    def labels(self):
        return ''.join('C' if c else 'F' for c in self.is_c)

    def expand(self, block_size):
        """Point-wise splitting of a block system with ``block_size`` DOFs per node."""
        if block_size == 1:
            return self
        return CfSplitting(np.repeat(self.is_c, block_size))


def classical_soc(A, theta):
    """Hard-minimum strength of connection.

    ``j`` is a strong neighbor of ``i`` when ``i != j`` and

        -a_ij >= theta * max_{k != i} |a_ik|

    Explicit zeros are never strong, so a row whose off-diagonals are all
    zero has an empty neighborhood.
    """
    if not theta > 0:
        raise ValueError(f'strength threshold must be positive, got {theta}')
    A = as_csr(A)
    if A.shape[0] != A.shape[1]:
        raise ValueError('classical_soc requires a square matrix')
    n = A.shape[0]
    rows = np.repeat(np.arange(n), np.diff(A.indptr))
    offdiag = rows != A.indices
    mag = np.where(offdiag, np.abs(A.data), 0.0)
    row_max = np.zeros(n)
    np.maximum.at(row_max, rows, mag)
    strong = offdiag & (A.data < 0) & (-A.data >= theta * row_max[rows])
    S = sp.csr_matrix((A.data[strong], (rows[strong], A.indices[strong])),
                      shape=A.shape)
    S.sort_indices()
    return StrengthGraph(S, float(theta))


def rs_first_pass(S):
    """First-pass Ruge-Stuben coloring of a strength graph.

    The measure of a point is the number of points that strongly depend on
    it.  The unassigned point of largest measure (lowest index on ties)
    becomes C, the measures of the points it depends on are decremented,
    every unassigned point depending on it becomes F, and the measures of
    the points those new F-points depend on are incremented.
    Points with no strong connections in either direction are F.
    """
    G = S.matrix if isinstance(S, StrengthGraph) else as_csr(S)
    n = G.shape[0]
    pattern = sp.csr_matrix((np.ones(G.nnz), G.indices, G.indptr), shape=G.shape)
    T = pattern.T.tocsr()  # row i of T: points depending on i
    T.sort_indices()
    measure = np.diff(T.indptr).astype(np.int64)
    row_len = np.diff(G.indptr)

    UNASSIGNED, C, F = 0, 1, 2
    state = np.zeros(n, dtype=np.int8)
    state[(measure == 0) & (row_len == 0)] = F

    heap = [(-int(measure[i]), i) for i in range(n) if state[i] == UNASSIGNED]
    heapq.heapify(heap)
    while heap:
        neg, i = heapq.heappop(heap)
        if state[i] != UNASSIGNED or -neg != measure[i]:
            continue
        state[i] = C
        for k in G.indices[G.indptr[i]:G.indptr[i + 1]]:
            if state[k] == UNASSIGNED and measure[k] > 0:
                measure[k] -= 1
                heapq.heappush(heap, (-int(measure[k]), int(k)))
        for j in T.indices[T.indptr[i]:T.indptr[i + 1]]:
            if state[j] != UNASSIGNED:
                continue
            state[j] = F
            for k in G.indices[G.indptr[j]:G.indptr[j + 1]]:
                if state[k] == UNASSIGNED:
                    measure[k] += 1
                    heapq.heappush(heap, (-int(measure[k]), int(k)))
    return CfSplitting(state == C)


def block_condense(A, block_size, norm='frobenius'):
    """Collapse each ``k x k`` block to a scalar for nodal coarsening.

    Off-diagonal entries become ``-||A_IJ||_F`` and diagonal entries
    ``+||A_II||_F`` so that large coupling blocks pass the hard-minimum
    strength test.
    """
    if norm != 'frobenius':
        raise ValueError(f'unsupported block norm {norm!r}')
    k = check_block_layout(A, block_size)
    A = as_csr(A)
    if k == 1:
        C = A.copy()
        C.data = np.abs(C.data)
        rows = np.repeat(np.arange(A.shape[0]), np.diff(A.indptr))
        C.data[rows != A.indices] *= -1.0
        return C
    B = sp.bsr_matrix(A, blocksize=(k, k))
    B.sort_indices()
    norms = np.sqrt(np.einsum('bij,bij->b', B.data, B.data))
    nb = A.shape[0] // k
    rows = np.repeat(np.arange(nb), np.diff(B.indptr))
    norms = np.where(rows == B.indices, norms, -norms)
    C = sp.csr_matrix((norms, B.indices.copy(), B.indptr.copy()),
                      shape=(nb, A.shape[1] // k))
    C.sort_indices()
    return C
