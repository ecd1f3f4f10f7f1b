"""Restriction and interpolation operators.

Every operator keeps C-points by injection: ``P = (W; I)`` and
``R = (Z, I)`` in F-then-C block form.  In memory they are stored in the
level's original point ordering, with the identity entries at C-point rows
of ``P`` and C-point columns of ``R``.
"""
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .sparse_core import as_csr, dense_block, dense_solve, extract_cf_blocks
from .strength_split import CfSplitting, StrengthGraph

__all__ = ['SingularBlockError', 'TransferPair', 'RestrictionConfig',
           'THETA_DISTANCE_1', 'THETA_DISTANCE_2', 'restriction_from_z',
           'interpolation_from_w', 'z_block', 'w_block', 'ideal_restriction',
           'ideal_interpolation', 'lair_neighborhood', 'lair_restriction',
           'neumann_restriction', 'one_point_interpolation',
           'classical_interpolation_modified', 'restriction_fidelity']

THETA_DISTANCE_1 = 0.1
THETA_DISTANCE_2 = 0.2


class SingularBlockError(np.linalg.LinAlgError):
    """A block that must be inverted (``A_ff``, ``K``, ...) is singular."""


@dataclass
class TransferPair:
    """Transfer operators for one splitting.

    Only the operators a builder produces are set; ``W`` and ``Z`` hold the
    dense F-blocks for the exact (diagnostic) builders.
    """
    split: CfSplitting
    P: sp.csr_matrix = None
    R: sp.csr_matrix = None
    W: np.ndarray = None
    Z: np.ndarray = None
    fallbacks: int = 0
    fallback_rows: tuple = ()


@dataclass(frozen=True)
class RestrictionConfig:
    """How restriction is built on each level.

    ``kind`` is one of ``'lair'``, ``'neumann'``, ``'ideal'`` or
    ``'transpose'`` (``R := P^T``).  ``theta`` defaults to 0.1 for
    distance one and 0.2 for distance two.
    """
    kind: str = 'lair'
    distance: int = 2
    theta: float = None
    neumann_order: int = 1

    def __post_init__(self):
        if self.kind not in ('lair', 'neumann', 'ideal', 'transpose'):
            raise ValueError(f'unknown restriction kind {self.kind!r}')
        if self.distance not in (1, 2):
            raise ValueError('restriction distance must be 1 or 2')

    @property
    def theta_r(self):
        if self.theta is not None:
            return self.theta
        return THETA_DISTANCE_1 if self.distance == 1 else THETA_DISTANCE_2


def restriction_from_z(Z, split):
    """Assemble ``R = (Z, I)`` (``Z`` is ``n_c x n_f``) in original ordering."""
    Z = sp.coo_matrix(Z)
    rows = np.concatenate([Z.row, np.arange(split.n_c)])
    cols = np.concatenate([split.f_points[Z.col], split.c_points])
    vals = np.concatenate([Z.data, np.ones(split.n_c)])
    return as_csr(sp.csr_matrix((vals, (rows, cols)), shape=(split.n_c, split.n)))


def interpolation_from_w(W, split):
    """Assemble ``P = (W; I)`` (``W`` is ``n_f x n_c``) in original ordering."""
    W = sp.coo_matrix(W)
    rows = np.concatenate([split.f_points[W.row], split.c_points])
    cols = np.concatenate([W.col, np.arange(split.n_c)])
    vals = np.concatenate([W.data, np.ones(split.n_c)])
    return as_csr(sp.csr_matrix((vals, (rows, cols)), shape=(split.n, split.n_c)))


def z_block(R, split):
    """F-point columns of a restriction operator."""
    return as_csr(as_csr(R)[:, split.f_points])


def w_block(P, split):
    """F-point rows of an interpolation operator."""
    return as_csr(as_csr(P)[split.f_points, :])


def _factor_aff(A, split, level):
    A_ff, A_fc, A_cf, _ = extract_cf_blocks(as_csr(A), split)
    dense = A_ff.toarray()
    if dense.shape[0] == 0:
        return None, A_fc, A_cf
    scale = np.abs(dense).max()
    with warnings.catch_warnings():
        warnings.simplefilter('ignore', scipy.linalg.LinAlgWarning)
        lu = scipy.linalg.lu_factor(dense, check_finite=False)
    if scale == 0 or np.abs(np.diag(lu[0])).min() < 1e-14 * scale:
        raise SingularBlockError(f'A_ff block is singular on level {level}')
    return lu, A_fc, A_cf


def ideal_restriction(A, split, level=0):
    """Exact ideal restriction ``Z = -A_cf A_ff^{-1}`` (dense, small problems)."""
    lu, _, A_cf = _factor_aff(A, split, level)
    if lu is None:
        Z = np.zeros((split.n_c, 0))
    else:
        Z = -scipy.linalg.lu_solve(lu, A_cf.toarray().T, trans=1).T
    return TransferPair(split, R=restriction_from_z(Z, split), Z=Z)


def ideal_interpolation(A, split, level=0):
    """Exact ideal interpolation ``W = -A_ff^{-1} A_fc`` (dense, small problems)."""
    lu, A_fc, _ = _factor_aff(A, split, level)
    if lu is None:
        W = np.zeros((0, split.n_c))
    else:
        W = -scipy.linalg.lu_solve(lu, A_fc.toarray())
    return TransferPair(split, P=interpolation_from_w(W, split), W=W)


def lair_neighborhood(S, split, i, distance):
    """F-points in the restriction neighborhood of C-point ``i``.

    Distance one: strong F-neighbors of ``i``.  Distance two adds the strong
    F-neighbors of those points (F-F-C paths only).
    """
    G = S.matrix if isinstance(S, StrengthGraph) else S
    is_c = split.is_c

    def f_neighbors(p):
        nb = G.indices[G.indptr[p]:G.indptr[p + 1]]
        return nb[~is_c[nb]]

    first = f_neighbors(i)
    if distance == 1 or first.size == 0:
        return np.unique(first)
    second = [first] + [f_neighbors(p) for p in first]
    return np.unique(np.concatenate(second))


def _node_dofs(nodes, k):
    nodes = np.asarray(nodes, dtype=np.int64)
    if k == 1:
        return nodes
    return (nodes[:, None] * k + np.arange(k)).ravel()


def lair_restriction(A, split, S, distance=2, block_size=1):
    """Local approximate ideal restriction.

    For each C-point ``i`` with neighborhood ``{l_1, ..., l_s}`` the weights
    solve ``sum_q a_{l_q l_p} z_{i l_q} = -a_{i l_p}``, which zeroes
    ``(RA)_{i l_p}`` for every point of the neighborhood.  With
    ``block_size > 1``, ``split`` and ``S`` live on nodes and every entry is
    a ``k x k`` block, giving ``k`` right-hand sides per C-node.

    Singular local systems are solved in the least-squares sense; their
    count is reported in ``fallbacks`` and their coarse rows in
    ``fallback_rows``.
    """
    A = as_csr(A)
    k = int(block_size)
    dof_split = split.expand(k)
    rows, cols, vals = [], [], []
    fallback_rows = []
    f_pos = np.full(dof_split.n, -1, dtype=np.int64)
    f_pos[dof_split.f_points] = np.arange(dof_split.n_f)
    for ci, i in enumerate(split.c_points):
        nb = lair_neighborhood(S, split, i, distance)
        if nb.size == 0:
            continue
        dofs = _node_dofs(nb, k)
        own = _node_dofs([i], k)
        local = dense_block(A, dofs, dofs).T
        rhs = -dense_block(A, own, dofs).T
        z, fallback = dense_solve(local, rhs)
        coarse = ci * k + np.arange(k)
        if fallback:
            fallback_rows.extend(coarse.tolist())
        rows.append(np.repeat(coarse, dofs.size))
        cols.append(np.tile(f_pos[dofs], k))
        vals.append(z.T.ravel())
    if rows:
        Z = sp.csr_matrix((np.concatenate(vals),
                           (np.concatenate(rows), np.concatenate(cols))),
                          shape=(dof_split.n_c, dof_split.n_f))
    else:
        Z = sp.csr_matrix((dof_split.n_c, dof_split.n_f))
    return TransferPair(dof_split, R=restriction_from_z(Z, dof_split),
                        fallbacks=len(fallback_rows) // k,
                        fallback_rows=tuple(fallback_rows))


def neumann_restriction(A, split, order):
    """Truncated Neumann-series restriction ``Z = -A_cf (sum_{j<=order} L^j) D^{-1}``.

    ``D`` is the diagonal of ``A_ff`` and ``L`` the negated strictly lower
    part of ``D^{-1} A_ff`` in the current point ordering.
    """
    if order < 0:
        raise ValueError('Neumann order must be nonnegative')
    A_ff, _, A_cf, _ = extract_cf_blocks(as_csr(A), split)
    d = A_ff.diagonal()
    zero = np.flatnonzero(d == 0)
    if zero.size:
        raise ValueError(f'zero diagonal in A_ff at row {split.f_points[zero[0]]}')
    d_inv = sp.diags(1.0 / d)
    L = -sp.tril(d_inv @ A_ff, k=-1, format='csr')
    term = sp.identity(split.n_f, format='csr')
    series = term.copy()
    for _ in range(order):
        term = term @ L
        series = series + term
    Z = -(A_cf @ series @ d_inv)
    return TransferPair(split, R=restriction_from_z(Z, split))


def one_point_interpolation(S, A, split, block_size=1):
    """Interpolate each F-point by value from its strongest C-neighbor.

    The target is the strong C-neighbor maximizing ``-a_ij``; without one,
    the C-neighbor of largest ``|a_ij|``; without any C-neighbor the row is
    zero.  For block systems ``S``, ``A`` and ``split`` are the nodal
    (condensed) objects and each weight becomes a ``k x k`` identity block.
    """
    A = as_csr(A)
    G = S.matrix if isinstance(S, StrengthGraph) else S
    is_c = split.is_c
    rows, cols = [], []
    for fi, i in enumerate(split.f_points):
        strong = G.indices[G.indptr[i]:G.indptr[i + 1]]
        strong = strong[is_c[strong]]
        lo, hi = A.indptr[i], A.indptr[i + 1]
        a_cols, a_vals = A.indices[lo:hi], A.data[lo:hi]
        if strong.size:
            pos = np.searchsorted(a_cols, strong)
            target = strong[np.argmax(-a_vals[pos])]
        else:
            mask = is_c[a_cols] & (a_cols != i)
            if not mask.any():
                continue
            target = a_cols[mask][np.argmax(np.abs(a_vals[mask]))]
        rows.append(fi)
        cols.append(split.coarse_index[target])
    W = sp.csr_matrix((np.ones(len(rows)), (rows, cols)),
                      shape=(split.n_f, split.n_c))
    P = interpolation_from_w(W, split)
    if block_size > 1:
        P = as_csr(sp.kron(P, sp.identity(block_size), format='csr'))
    return TransferPair(split.expand(block_size), P=P)


def classical_interpolation_modified(A, S, split):
    """Modified classical (Ruge-Stuben) interpolation.

    For F-point ``i`` with strong C-neighbors ``C_i``, strong F-neighbors
    ``F_i`` and weak neighbors ``W_i``::

        w_ij = -(a_ij + sum_{m in F_i} a_im abar_mj / sum_{l in C_i} abar_ml)
               / (a_ii + sum_{k in W_i} a_ik)

    where ``abar_xy`` keeps ``a_xy`` only if its sign differs from
    ``a_xx``.  A strong F-neighbor sharing no C-point with ``i`` (zero
    denominator) is lumped into the diagonal.  Rows whose modified
    diagonal vanishes fall back to one-point interpolation.
    """
    A = as_csr(A)
    G = S.matrix if isinstance(S, StrengthGraph) else S
    is_c = split.is_c
    diag = A.diagonal()
    rows, cols, vals = [], [], []
    fallback_rows = []
    for fi, i in enumerate(split.f_points):
        strong = G.indices[G.indptr[i]:G.indptr[i + 1]]
        c_i = strong[is_c[strong]]
        if c_i.size == 0:
            continue
        f_i = strong[~is_c[strong]]
        lo, hi = A.indptr[i], A.indptr[i + 1]
        a_cols, a_vals = A.indices[lo:hi], A.data[lo:hi]
        weak = (a_cols != i) & ~np.isin(a_cols, strong)
        denom = diag[i] + a_vals[weak].sum()
        num = a_vals[np.searchsorted(a_cols, c_i)].copy()
        for m in f_i:
            a_im = a_vals[np.searchsorted(a_cols, m)]
            m_row = dense_block(A, [m], c_i)[0]
            abar = np.where(np.sign(m_row) != np.sign(diag[m]), m_row, 0.0)
            total = abar.sum()
            if total == 0:
                denom += a_im
            else:
                num += a_im * abar / total
        if denom == 0:
            fallback_rows.append(int(i))
            pos = np.searchsorted(a_cols, c_i)
            target = c_i[np.argmax(-a_vals[pos])]
            rows.append(fi)
            cols.append(split.coarse_index[target])
            vals.append(1.0)
            continue
        rows.extend([fi] * c_i.size)
        cols.extend(split.coarse_index[c_i].tolist())
        vals.extend((-num / denom).tolist())
    W = sp.csr_matrix((vals, (rows, cols)), shape=(split.n_f, split.n_c))
    return TransferPair(split, P=interpolation_from_w(W, split),
                        fallbacks=len(fallback_rows),
                        fallback_rows=tuple(fallback_rows))


def restriction_fidelity(A, split, Z):
    """``||Z + A_cf A_ff^{-1}||_F / ||A_cf A_ff^{-1}||_F`` (dense)."""
    lu, _, A_cf = _factor_aff(A, split, level=0)
    if lu is None:
        return 0.0
    X = scipy.linalg.lu_solve(lu, A_cf.toarray().T, trans=1).T
    Z = Z.toarray() if sp.issparse(Z) else np.asarray(Z, dtype=np.float64)
    ref = np.linalg.norm(X)
    if ref == 0:
        return 0.0 if np.linalg.norm(Z) == 0 else np.inf
    return float(np.linalg.norm(Z + X) / ref)
