"""Cost metrics, convergence factors and dense two-grid analysis tools.

The dense routines materialize ``n x n`` operators and are meant for small
verification problems; they refuse matrices larger than ``DENSE_CAP``
unless called with ``force=True``.
"""
import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .sparse_core import as_csr, extract_cf_blocks
from .transfer import SingularBlockError

__all__ = ['DENSE_CAP', 'DenseSizeError', 'ComplexityReport', 'cycle_complexity',
           'wpd', 'measured_cf', 'jacobi_cf', 'dense_cf_blocks', 'two_grid_G',
           'two_grid_propagator', 'ProjectionNormCheck', 'projection_norm_check',
           'cgc_error_propagator', 'cgc_residual_propagator', 'cycle_propagator',
           'jacobi_delta', 'FIDELITY_COLUMNS', 'fidelity_row']

DENSE_CAP = 500


class DenseSizeError(ValueError):
    def __init__(self, n):
        super().__init__(f'dense diagnostic on n={n} exceeds the cap of {DENSE_CAP}')
        self.n = n


def _check_size(n, force):
    if n > DENSE_CAP and not force:
        raise DenseSizeError(n)


@dataclass
class ComplexityReport:
    cycle_complexity: float
    operator_complexity: float
    per_level: list


def cycle_complexity(H):
    """Work units for one cycle; 1 WU = ``nnz(A_0)`` multiply-adds.

    Each level visit costs a residual SpMV, a restriction and an
    interpolation SpMV, and every relaxation sweep (row-restricted SpMV plus
    diagonal scaling).  The coarsest dense solve counts ``n**2``.
    """
    unit = H.levels[0].A.nnz
    per_level = []
    for i, L in enumerate(H.levels):
        if i == H.depth - 1:
            n = L.A.shape[0]
            parts = dict(coarse_solve=n * n / unit)
        else:
            relax = L.post.work + (L.pre.work if L.pre is not None else 0)
            parts = dict(residual=L.A.nnz / unit, restrict=L.R.nnz / unit,
                         interpolate=L.P.nnz / unit, relax=relax / unit)
        parts['total'] = sum(parts.values())
        per_level.append(parts)
    cc = sum(p['total'] for p in per_level)
    return ComplexityReport(cc, H.operator_complexity, per_level)


def wpd(cc, rho):
    """Work units per digit of accuracy, ``-cc / log10(rho)``.

    Returns ``inf`` when ``rho >= 1`` (no convergence).
    """
    if rho <= 0:
        raise ValueError(f'convergence factor must be positive, got {rho}')
    if rho >= 1:
        return math.inf
    return -cc / math.log10(rho)


def measured_cf(residual_history):
    """Geometric-mean residual reduction over the trailing half of the history.

    With ``m`` ratios the last ``ceil(m / 2)`` are used; a single ratio is
    returned as is.
    """
    r = np.asarray(residual_history, dtype=np.float64)
    m = r.shape[0] - 1
    if m < 1:
        return math.nan
    count = math.ceil(m / 2)
    start, end = r[-count - 1], r[-1]
    if start == 0:
        return 0.0
    return float((end / start) ** (1.0 / count))


def jacobi_cf(A, iterations=50, seed=0, omega=1.0):
    """Average residual reduction of ``iterations`` Jacobi sweeps on ``A x = 0``."""
    A = as_csr(A)
    d_inv = omega / A.diagonal()
    x = np.random.default_rng(seed).uniform(-1.0, 1.0, A.shape[0])
    r = -(A @ x)
    r0 = np.linalg.norm(r)
    for _ in range(iterations):
        x += d_inv * r
        r = -(A @ x)
    return float((np.linalg.norm(r) / r0) ** (1.0 / iterations))


def dense_cf_blocks(A, split, force=False):
    """Dense ``(A_ff, A_fc, A_cf, A_cc)``."""
    _check_size(A.shape[0], force)
    return tuple(B.toarray() for B in extract_cf_blocks(as_csr(A), split))


def jacobi_delta(A_ff, sweeps=1, omega=1.0):
    """Dense ``Delta`` equivalent to ``sweeps`` weighted-Jacobi F-sweeps.

    ``I - Delta A_ff = (I - omega D^{-1} A_ff)^sweeps``.
    """
    D = omega * np.diag(1.0 / np.diag(A_ff))
    step = np.eye(A_ff.shape[0]) - D @ A_ff
    Delta = np.zeros_like(A_ff)
    for _ in range(sweeps):
        Delta = step @ Delta + D
    return Delta


def _solve_k(K, rhs):
    with warnings.catch_warnings():
        warnings.simplefilter('ignore', scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(K, check_finite=False)
    scale = np.abs(K).max() if K.size else 1.0
    if K.size and np.abs(np.diag(lu)).min() <= 1e-14 * scale:
        raise SingularBlockError('coarse-grid operator K = RAP is singular')
    return scipy.linalg.lu_solve((lu, piv), rhs, check_finite=False)


def _to_dense(M):
    return M.toarray() if sp.issparse(M) else np.asarray(M, dtype=np.float64)


def two_grid_G(A, split, W, Z, Delta, force=False):
    """The ``n_f x n_f`` operator carrying the nonzero two-grid eigenvalues::

        G = (I - Delta A_ff) + Delta (A_ff W + A_fc) K^{-1} (Z A_ff + A_cf)
    """
    A_ff, A_fc, A_cf, A_cc = dense_cf_blocks(A, split, force)
    W, Z, Delta = _to_dense(W), _to_dense(Z), _to_dense(Delta)
    K = Z @ A_ff @ W + Z @ A_fc + A_cf @ W + A_cc
    right = _solve_k(K, Z @ A_ff + A_cf)
    return np.eye(split.n_f) - Delta @ A_ff + Delta @ (A_ff @ W + A_fc) @ right


def two_grid_propagator(A, split, W, Z, Delta, force=False):
    """Dense ``I - M^{-1} A`` (F-then-C order) for exact coarse-grid correction
    followed by F-relaxation with ``Delta``."""
    A_ff, A_fc, A_cf, A_cc = dense_cf_blocks(A, split, force)
    W, Z, Delta = _to_dense(W), _to_dense(Z), _to_dense(Delta)
    nf, nc = split.n_f, split.n_c
    Ab = np.block([[A_ff, A_fc], [A_cf, A_cc]])
    P = np.vstack([W, np.eye(nc)])
    R = np.hstack([Z, np.eye(nc)])
    cgc = np.eye(nf + nc) - P @ _solve_k(R @ Ab @ P, R @ Ab)
    relax = np.eye(nf + nc)
    relax[:nf, :] -= Delta @ Ab[:nf, :]
    return relax @ cgc


class ProjectionNormCheck(NamedTuple):
    """``lhs = ||AP(RAP)^{-1}R||_2^2`` with the candidate right-hand sides.

    ``sigma_min``/``sigma_max`` are singular values of
    ``(I - A_ff Delta) A_fc K^{-1}``.
    """
    lhs: float
    rhs_min: float
    rhs_max: float
    rhs_max_squared: float
    sigma_min: float
    sigma_max: float

    def which(self, rtol=1e-6):
        """Names of the candidates that agree with ``lhs`` to ``rtol``."""
        cands = dict(min_sv=self.rhs_min, max_sv=self.rhs_max,
                     max_sv_squared=self.rhs_max_squared)
        return [k for k, v in cands.items() if abs(v - self.lhs) <= rtol * abs(self.lhs)]


def projection_norm_check(A, split, Delta, force=False):
    """Residual coarse-grid-correction norm with ``Z = 0``, ``W = -Delta A_fc``."""
    A_ff, A_fc, A_cf, A_cc = dense_cf_blocks(A, split, force)
    Delta = _to_dense(Delta)
    nf, nc = split.n_f, split.n_c
    W = -Delta @ A_fc
    Ab = np.block([[A_ff, A_fc], [A_cf, A_cc]])
    P = np.vstack([W, np.eye(nc)])
    R = np.hstack([np.zeros((nc, nf)), np.eye(nc)])
    K = R @ Ab @ P
    Pi = Ab @ P @ _solve_k(K, R)
    lhs = np.linalg.norm(Pi, 2) ** 2
    X = (np.eye(nf) - A_ff @ Delta) @ A_fc @ _solve_k(K.T, np.eye(nc)).T
    s = np.linalg.svd(X, compute_uv=False) if X.size else np.zeros(1)
    return ProjectionNormCheck(float(lhs), float(1 + s.min()), float(1 + s.max()),
                               float(1 + s.max() ** 2), float(s.min()), float(s.max()))


def cgc_error_propagator(A, P, R, force=False):
    """Dense ``I - P (RAP)^{-1} R A``."""
    A, P, R = _to_dense(A), _to_dense(P), _to_dense(R)
    _check_size(A.shape[0], force)
    return np.eye(A.shape[0]) - P @ _solve_k(R @ A @ P, R @ A)


def cgc_residual_propagator(A, P, R, force=False):
    """Dense ``I - A P (RAP)^{-1} R``."""
    A, P, R = _to_dense(A), _to_dense(P), _to_dense(R)
    _check_size(A.shape[0], force)
    return np.eye(A.shape[0]) - A @ P @ _solve_k(R @ A @ P, R)


def cycle_propagator(H, force=False):
    """Dense error propagator of one cycle of ``H``, probed column by column.

    With ``b = 0`` the exact solution is zero, so the cycle maps an error
    ``e`` to ``E e`` directly.
    """
    n = H.levels[0].A.shape[0]
    _check_size(n, force)
    zero = np.zeros(n)
    E = np.empty((n, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        E[:, j] = H.cycle(e, zero)
    return E


FIDELITY_COLUMNS = ('neumann1', 'neumann2', 'lair1', 'lair2')


def fidelity_row(A, theta_c=0.4, force=False):
    """Relative Frobenius error of four approximations to ``Z_ideal``.

    The splitting is first-pass Ruge-Stuben on the strength graph of ``A``.
    Returns a dict keyed by :data:`FIDELITY_COLUMNS` plus ``'zero'`` (the
    ``Z = 0`` reference, always 1 when ``A_cf A_ff^{-1} != 0``).
    """
    from .strength_split import classical_soc, rs_first_pass
    from .transfer import (THETA_DISTANCE_1, THETA_DISTANCE_2, lair_restriction,
                           neumann_restriction, restriction_fidelity, z_block)

    A = as_csr(A)
    _check_size(A.shape[0], force)
    split = rs_first_pass(classical_soc(A, theta_c))
    out = {}
    for d, theta in ((1, THETA_DISTANCE_1), (2, THETA_DISTANCE_2)):
        out[f'neumann{d}'] = neumann_restriction(A, split, d).R
        out[f'lair{d}'] = lair_restriction(A, split, classical_soc(A, theta), d).R
    row = {k: restriction_fidelity(A, split, z_block(out[k], split))
           for k in FIDELITY_COLUMNS}
    row['zero'] = restriction_fidelity(A, split, np.zeros((split.n_c, split.n_f)))
    return row
