"""Multilevel setup (coarsen, transfer, Galerkin product, lump) and V-cycles."""
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .relax import RelaxPlan, make_relax_plan
from .sparse_core import TOL_PIVOT, as_csr, check_block_layout, spmm, transpose
from .strength_split import CfSplitting, block_condense, classical_soc, rs_first_pass
from .transfer import (THETA_DISTANCE_1, RestrictionConfig,
                       classical_interpolation_modified, ideal_interpolation,
                       ideal_restriction, lair_restriction, neumann_restriction,
                       one_point_interpolation)

__all__ = ['SetupConfig', 'Level', 'Hierarchy', 'lump_to_diagonal', 'setup',
           'vcycle', 'format_setup_report']


def lump_to_diagonal(A, theta_d):
    """Move small off-diagonal entries onto the diagonal.

    In row ``i`` every off-diagonal entry with
    ``|a_ij| < theta_d * max_j |a_ij|`` (maximum over the whole row) is
    removed and added to ``a_ii``, so row sums are preserved.
    """
    A = as_csr(A)
    n = A.shape[0]
    if theta_d <= 0 or A.nnz == 0:
        return A
    rows = np.repeat(np.arange(n), np.diff(A.indptr))
    mag = np.abs(A.data)
    row_max = np.zeros(n)
    np.maximum.at(row_max, rows, mag)
    drop = (rows != A.indices) & (mag < theta_d * row_max[rows])
    if not drop.any():
        return A
    moved = np.bincount(rows[drop], weights=A.data[drop], minlength=n)
    touched = np.flatnonzero(np.bincount(rows[drop], minlength=n))
    keep = ~drop
    B = sp.coo_matrix((np.concatenate([A.data[keep], moved[touched]]),
                       (np.concatenate([rows[keep], touched]),
                        np.concatenate([A.indices[keep], touched]))),
                      shape=A.shape).tocsr()
    return as_csr(B)


@dataclass(frozen=True)
class SetupConfig:
    """Hierarchy construction parameters.

    ``interpolation`` is ``'one_point'``, ``'classical_modified'`` or
    ``'ideal'``; ``None`` picks classical for scalar and one-point for block
    systems.  ``relax`` defaults to F-F-C Jacobi for approximate-ideal
    restriction and to pre/post global Jacobi for ``R := P^T``.
    """
    theta_c: float = 0.4
    restriction: RestrictionConfig = RestrictionConfig()
    interpolation: str = None
    theta_interp: float = THETA_DISTANCE_1
    theta_d: float = 0.001
    lump_fine: bool = False
    max_coarse: int = 40
    max_levels: int = 25
    block_size: int = 1
    relax: str = None
    omega: float = None
    f_sweeps: int = 2
    pre_relax: bool = False

    @property
    def interpolation_kind(self):
        if self.interpolation is not None:
            return self.interpolation
        return 'one_point' if self.block_size > 1 else 'classical_modified'

    @property
    def relax_kind(self):
        if self.relax is not None:
            return self.relax
        return 'jacobi_global' if self.restriction.kind == 'transpose' else 'ffc_jacobi'


@dataclass
class Level:
    """One level of the hierarchy; the coarsest has no transfer operators."""
    A: sp.csr_matrix
    split: CfSplitting = None
    P: sp.csr_matrix = None
    R: sp.csr_matrix = None
    post: RelaxPlan = None
    pre: RelaxPlan = None
    block_size: int = 1
    stats: dict = field(default_factory=dict)

    @property
    def permutation(self):
        return None if self.split is None else self.split.permutation


@dataclass
class Hierarchy:
    levels: list
    coarse_solver: tuple
    config: SetupConfig = None

    @property
    def depth(self):
        return len(self.levels)

    @property
    def operator_complexity(self):
        return sum(L.A.nnz for L in self.levels) / self.levels[0].A.nnz

    @property
    def total_nnz(self):
        return sum(L.A.nnz for L in self.levels)

    @property
    def setup_report(self):
        return [dict(level=i, n=L.A.shape[0], nnz=L.A.nnz, **L.stats)
                for i, L in enumerate(self.levels)]

    def coarse_solve(self, b):
        kind, data = self.coarse_solver
        if kind == 'lu':
            return scipy.linalg.lu_solve(data, b, check_finite=False)
        return data @ b

    def cycle(self, x, b):
        return vcycle(self, 0, x, b)

    def aspreconditioner(self):
        """Callable applying one V-cycle to ``A e = v`` from a zero guess."""
        n = self.levels[0].A.shape[0]
        return lambda v: vcycle(self, 0, np.zeros(n), v)


def _factor_coarse(A):
    dense = A.toarray()
    if dense.shape[0] == 0:
        return ('pinv', dense.T)
    with warnings.catch_warnings():
        warnings.simplefilter('ignore', scipy.linalg.LinAlgWarning)
        lu = scipy.linalg.lu_factor(dense, check_finite=False)
    scale = np.abs(dense).max()
    if scale > 0 and np.abs(np.diag(lu[0])).min() >= TOL_PIVOT * scale:
        return ('lu', lu)
    warnings.warn('coarsest-level matrix is singular; using a pseudo-inverse')
    return ('pinv', np.linalg.pinv(dense))


def _build_interpolation(A, C, node_split, split, cfg, level):
    kind = cfg.interpolation_kind
    k = cfg.block_size
    if kind == 'one_point':
        S = classical_soc(C, cfg.theta_interp)
        return one_point_interpolation(S, C, node_split, k)
    if kind == 'classical_modified':
        if k > 1:
            raise ValueError('classical interpolation is scalar only; '
                             'use one_point for block systems')
        S = classical_soc(A, cfg.theta_interp)
        return classical_interpolation_modified(A, S, split)
    if kind == 'ideal':
        return ideal_interpolation(A, split, level)
    raise ValueError(f'unknown interpolation {kind!r}')


def _build_restriction(A, C, node_split, split, P, cfg, level):
    rc = cfg.restriction
    if rc.kind == 'lair':
        S = classical_soc(C, rc.theta_r)
        return lair_restriction(A, node_split, S, rc.distance, cfg.block_size)
    if rc.kind == 'neumann':
        return neumann_restriction(A, split, rc.neumann_order)
    if rc.kind == 'ideal':
        return ideal_restriction(A, split, level)
    return None  # transpose: handled by caller


def setup(A, cfg=None, **kwargs):
    """Build a multilevel hierarchy for ``A``.

    Coarsening stops when the matrix has at most ``max_coarse`` rows, when
    ``max_levels`` is reached, or when the splitting stalls (no C-points or
    no F-points); the last matrix is factorized densely.  Galerkin products
    on coarse levels are lumped with ``theta_d`` (the fine matrix too if
    ``lump_fine``).
    """
    cfg = SetupConfig() if cfg is None else cfg
    if kwargs:
        cfg = replace(cfg, **kwargs)
    A = as_csr(A)
    if A.shape[0] == 0:
        raise ValueError('cannot set up a hierarchy for an empty matrix')
    if A.shape[0] != A.shape[1]:
        raise ValueError('setup requires a square matrix')
    k = check_block_layout(A, cfg.block_size)
    if cfg.lump_fine:
        A = lump_to_diagonal(A, cfg.theta_d)

    levels = []
    while A.shape[0] > cfg.max_coarse and len(levels) + 1 < cfg.max_levels:
        lvl = len(levels)
        C = block_condense(A, k) if k > 1 else A
        node_split = rs_first_pass(classical_soc(C, cfg.theta_c))
        if node_split.n_c in (0, node_split.n):
            warnings.warn(f'coarsening stalled on level {lvl} '
                          f'(n_c={node_split.n_c}, n={node_split.n})')
            break
        split = node_split.expand(k)
        interp = _build_interpolation(A, C, node_split, split, cfg, lvl)
        restr = _build_restriction(A, C, node_split, split, interp.P, cfg, lvl)
        R = transpose(interp.P) if restr is None else restr.R
        galerkin = spmm(spmm(R, A), interp.P)
        coarse = lump_to_diagonal(galerkin, cfg.theta_d)

        relax = cfg.relax_kind
        plan = make_relax_plan(A, split, relax, cfg.omega,
                               f_sweeps=cfg.f_sweeps, block_size=k)
        pre = plan if (relax == 'jacobi_global' or cfg.pre_relax) else None
        stats = dict(n_c=split.n_c,
                     r_fallbacks=0 if restr is None else restr.fallbacks,
                     p_fallbacks=interp.fallbacks,
                     galerkin_nnz=galerkin.nnz,
                     lumped_nnz=galerkin.nnz - coarse.nnz)
        levels.append(Level(A, split, interp.P, R, plan, pre, k, stats))
        A = coarse
    levels.append(Level(A, block_size=k))
    return Hierarchy(levels, _factor_coarse(A), cfg)


def vcycle(H, level, x, b):
    """Apply one V-cycle starting at ``level`` and return the new iterate.

    Approximate-ideal-restriction levels use coarse-grid correction followed
    by post-relaxation (no pre-relaxation unless configured); the
    ``R := P^T`` baseline relaxes before and after.
    """
    b = np.asarray(b, dtype=np.float64)
    if level == H.depth - 1:
        return H.coarse_solve(b)
    L = H.levels[level]
    x = np.array(x, dtype=np.float64, copy=True)
    if L.pre is not None:
        x = L.pre.apply(x, b)
    r = b - L.A @ x
    rc = L.R @ r
    ec = vcycle(H, level + 1, np.zeros(rc.shape[0]), rc)
    x += L.P @ ec
    return L.post.apply(x, b)


def format_setup_report(H):
    """Plain-text table of per-level sizes, fallbacks and lumping."""
    head = f"{'level':>5} {'n':>8} {'nnz':>9} {'n_c':>8} {'R_fb':>5} {'P_fb':>5} {'lumped':>8}"
    lines = [head, '-' * len(head)]
    for row in H.setup_report:
        lines.append(f"{row['level']:>5} {row['n']:>8} {row['nnz']:>9} "
                     f"{row.get('n_c', '-'):>8} {row.get('r_fallbacks', '-'):>5} "
                     f"{row.get('p_fallbacks', '-'):>5} {row.get('lumped_nnz', '-'):>8}")
    lines.append(f'operator complexity: {H.operator_complexity:.3f}')
    return '\n'.join(lines)
