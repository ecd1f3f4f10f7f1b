"""Point (and block) Jacobi relaxation restricted to F-, C- or all points."""
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .sparse_core import as_csr, check_block_layout

__all__ = ['RelaxPlan', 'SCHEMES', 'make_relax_plan', 'diagonal_inverse',
           'f_jacobi_sweep', 'c_jacobi_sweep', 'ffc_jacobi', 'jacobi_global']

SCHEMES = ('ffc_jacobi', 'f_jacobi', 'jacobi_global', 'f_exact', 'none')


def diagonal_inverse(A, block_size=1):
    """Inverses of the diagonal entries (or ``k x k`` diagonal blocks) of ``A``.

    Returns an array of shape ``(n,)`` for ``block_size == 1`` and
    ``(n // k, k, k)`` otherwise.
    """
    A = as_csr(A)
    k = check_block_layout(A, block_size)
    if k == 1:
        d = A.diagonal()
        bad = np.flatnonzero(d == 0)
        if bad.size:
            raise ValueError(f'zero diagonal entry at row {bad[0]}')
        return 1.0 / d
    nb = A.shape[0] // k
    blocks = sp.bsr_matrix(A, blocksize=(k, k))
    out = np.zeros((nb, k, k))
    for I in range(nb):
        lo, hi = blocks.indptr[I], blocks.indptr[I + 1]
        hit = np.flatnonzero(blocks.indices[lo:hi] == I)
        if hit.size == 0:
            raise ValueError(f'missing diagonal block {I}')
        try:
            out[I] = scipy.linalg.inv(blocks.data[lo + hit[0]])
        except np.linalg.LinAlgError:
            raise ValueError(f'singular diagonal block {I}') from None
    return out


@dataclass
class _Sweep:
    rows: np.ndarray
    A_rows: sp.csr_matrix
    d_inv: np.ndarray
    weight: float
    block_size: int

    def __call__(self, x, b):
        r = b[self.rows] - self.A_rows @ x
        k = self.block_size
        if k == 1:
            x[self.rows] += self.weight * self.d_inv * r
        else:
            corr = np.einsum('bij,bj->bi', self.d_inv, r.reshape(-1, k))
            x[self.rows] += self.weight * corr.ravel()
        return x

    @property
    def work(self):
        """Multiply-adds: the row-restricted SpMV plus the diagonal scaling."""
        return self.A_rows.nnz + self.rows.shape[0] * self.block_size


@dataclass
class RelaxPlan:
    """A relaxation scheme with its cached row blocks and diagonal inverses.

    ``ffc_jacobi`` applies ``f_sweeps`` F-point sweeps followed by
    ``c_sweeps`` C-point sweeps; ``jacobi_global`` applies ``sweeps``
    weighted-Jacobi sweeps on every point.
    """
    scheme: str
    sweeps: list = field(default_factory=list)
    exact_rows: np.ndarray = None
    exact_A_rows: sp.csr_matrix = None
    exact_lu: tuple = None

    def apply(self, x, b):
        x = np.array(x, dtype=np.float64, copy=True)
        b = np.asarray(b, dtype=np.float64)
        if self.scheme == 'f_exact':
            if self.exact_rows.size:
                r = b[self.exact_rows] - self.exact_A_rows @ x
                x[self.exact_rows] += scipy.linalg.lu_solve(self.exact_lu, r)
            return x
        for sweep in self.sweeps:
            x = sweep(x, b)
        return x

    @property
    def work(self):
        if self.scheme == 'f_exact':
            n = self.exact_rows.shape[0]
            return self.exact_A_rows.nnz + n * n
        return sum(s.work for s in self.sweeps)


def make_relax_plan(A, split=None, scheme='ffc_jacobi', omega=None,
                    f_sweeps=2, c_sweeps=1, sweeps=1, block_size=1):
    """Build a :class:`RelaxPlan`.

    Default weights: 1.0 for F-/C-sweeps, 2/3 for global Jacobi.  Zero
    diagonals (or singular diagonal blocks) raise ``ValueError`` here, at
    setup time.
    """
    if scheme not in SCHEMES:
        raise ValueError(f'unknown relaxation scheme {scheme!r}')
    A = as_csr(A)
    if scheme == 'none':
        return RelaxPlan(scheme)
    k = check_block_layout(A, block_size)
    if scheme == 'f_exact':
        rows = split.f_points
        A_ff = A[rows][:, rows].toarray()
        lu = scipy.linalg.lu_factor(A_ff) if rows.size else None
        return RelaxPlan(scheme, exact_rows=rows, exact_A_rows=as_csr(A[rows]),
                         exact_lu=lu)
    d_inv = diagonal_inverse(A, k)

    def sweep(rows, weight):
        nodes = rows[::k] // k
        return _Sweep(rows, as_csr(A[rows]), d_inv[nodes], weight, k)

    if scheme == 'jacobi_global':
        w = 2.0 / 3.0 if omega is None else omega
        everything = np.arange(A.shape[0])
        return RelaxPlan(scheme, [sweep(everything, w) for _ in range(sweeps)])
    w = 1.0 if omega is None else omega
    plan = [sweep(split.f_points, w) for _ in range(f_sweeps)]
    if scheme == 'ffc_jacobi':
        plan += [sweep(split.c_points, w) for _ in range(c_sweeps)]
    return RelaxPlan(scheme, plan)


def f_jacobi_sweep(A, split, x, b, omega=1.0, block_size=1):
    """One Jacobi sweep on F-points: ``x_f += omega D_ff^{-1} (b - A x)_f``."""
    plan = make_relax_plan(A, split, 'f_jacobi', omega, f_sweeps=1,
                           block_size=block_size)
    return plan.apply(x, b)


def c_jacobi_sweep(A, split, x, b, omega=1.0, block_size=1):
    """One Jacobi sweep on C-points."""
    plan = make_relax_plan(A, split, 'ffc_jacobi', omega, f_sweeps=0,
                           c_sweeps=1, block_size=block_size)
    return plan.apply(x, b)


def ffc_jacobi(A, split, x, b, omega=1.0, f_sweeps=2, block_size=1):
    """Two F-sweeps followed by one C-sweep of Jacobi."""
    plan = make_relax_plan(A, split, 'ffc_jacobi', omega, f_sweeps=f_sweeps,
                           block_size=block_size)
    return plan.apply(x, b)


def jacobi_global(A, x, b, omega=2.0 / 3.0, sweeps=1, block_size=1):
    """Weighted Jacobi on every point."""
    plan = make_relax_plan(A, None, 'jacobi_global', omega, sweeps=sweeps,
                           block_size=block_size)
    return plan.apply(x, b)
