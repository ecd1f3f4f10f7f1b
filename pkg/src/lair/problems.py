"""Finite-difference advection-diffusion-reaction test matrices.

Unknowns live on the ``n**dim`` interior nodes of a uniform grid on the
unit cube (``h = 1/(n+1)``), numbered lexicographically with ``x``
fastest.  Diffusion uses the centered ``(2*dim + 1)``-point Laplacian,
advection first-order upwinding and reaction a diagonal term.  A boundary
node neighbor is Dirichlet (folded into the right-hand side) unless the
flow leaves the domain there (``beta . n > 0``), in which case a zero-gradient
ghost value gives a one-sided Neumann closure of the diffusion term.
"""
import math
from dataclasses import asdict, dataclass

import numpy as np
import scipy.sparse as sp

from .relax import diagonal_inverse
from .sparse_core import as_csr, check_block_layout

__all__ = ['PdeSpec', 'VELOCITY_FIELDS', 'REACTION_FIELDS', 'velocity',
           'piecewise_gamma', 'advection_diffusion_reaction', 'time_step_system',
           'block_diag_scale', 'synthetic_block_advection', 'grid_spacing']

VELOCITY_FIELDS = ('zero', 'constant', 'recirculating', 'curved')
REACTION_FIELDS = ('zero', 'constant', 'piecewise_gamma')


@dataclass(frozen=True)
class PdeSpec:
    """Parameters of ``-div(kappa grad u) + beta . grad u + sigma u = f``.

    ``angle`` orients the ``'constant'`` velocity; ``sigma`` is the value
    of the ``'constant'`` reaction field.  A time step ``dt`` turns the
    spatial matrix ``S`` into ``I + dt S``.
    """
    dim: int = 2
    n: int = 32
    kappa: float = 0.0
    beta: str = 'curved'
    reaction: str = 'zero'
    angle: float = 0.3
    sigma: float = 0.0
    dt: float = None

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ValueError('dim must be 1, 2 or 3')
        if self.n < 3:
            raise ValueError('need at least 3 points per axis')
        if self.kappa < 0 or (self.dt is not None and self.dt < 0):
            raise ValueError('kappa and dt must be nonnegative')
        if self.beta not in VELOCITY_FIELDS:
            raise ValueError(f'unknown velocity field {self.beta!r}')
        if self.reaction not in REACTION_FIELDS:
            raise ValueError(f'unknown reaction field {self.reaction!r}')
        if self.beta in ('recirculating', 'curved') and self.dim != 2:
            raise ValueError(f'{self.beta} velocity is two-dimensional')
        if self.reaction == 'piecewise_gamma' and self.dim != 2:
            raise ValueError('piecewise_gamma is two-dimensional')

    @property
    def h(self):
        return grid_spacing(self.n)


def grid_spacing(n):
    return 1.0 / (n + 1)


def velocity(spec, coords):
    """Velocity at points ``coords`` (shape ``(m, dim)``)."""
    coords = np.atleast_2d(coords)
    m, dim = coords.shape
    if spec.beta == 'zero':
        return np.zeros((m, dim))
    if spec.beta == 'constant':
        t = spec.angle
        direction = {1: [math.cos(t)],
                     2: [math.cos(t), math.sin(t)],
                     3: [math.cos(t) / math.sqrt(2), math.sin(t) / math.sqrt(2),
                         1 / math.sqrt(2)]}[dim]
        return np.tile(direction, (m, 1))
    x, y = coords[:, 0], coords[:, 1]
    if spec.beta == 'recirculating':
        return np.column_stack([x * (1 - x) * (2 * y - 1),
                                -(2 * x - 1) * (1 - y) * y])
    return np.column_stack([y ** 2, np.cos(np.pi * x / 2) ** 2])


def piecewise_gamma(x, y):
    """Total cross section: ``1e4`` on the open center square, ``1e-4`` elsewhere."""
    x, y = np.asarray(x), np.asarray(y)
    inside = (x > 0.25) & (x < 0.75) & (y > 0.25) & (y < 0.75)
    out = np.where(inside, 1e4, 1e-4)
    return float(out) if out.ndim == 0 else out


def _reaction(spec, coords):
    if spec.reaction == 'zero':
        return np.zeros(coords.shape[0])
    if spec.reaction == 'constant':
        return np.full(coords.shape[0], float(spec.sigma))
    return piecewise_gamma(coords[:, 0], coords[:, 1])


def _boundary_value(spec, point):
    if spec.beta == 'recirculating':
        # u = 1 on x = 1 or y = 1, 0 on the other sides
        return np.where((point[:, 0] >= 1.0) | (point[:, 1] >= 1.0), 1.0, 0.0)
    return np.ones(point.shape[0])


def _grid(spec):
    n, dim, h = spec.n, spec.dim, spec.h
    N = n ** dim
    sub = np.unravel_index(np.arange(N), (n,) * dim)[::-1]  # sub[a]: index on axis a
    coords = np.column_stack([(s + 1) * h for s in sub])
    return N, sub, coords


def advection_diffusion_reaction(spec):
    """Assemble the matrix for ``spec``.

    Returns ``(A, meta)``; ``meta`` carries ``h``, the node coordinates, the
    boundary right-hand side ``rhs`` and, for velocity fields of constant
    sign per component, a ``flow_order`` permutation under which the
    ``kappa = 0`` matrix is lower triangular.
    """
    n, dim, h, kappa = spec.n, spec.dim, spec.h, spec.kappa
    N, sub, coords = _grid(spec)
    beta = velocity(spec, coords)
    diag = _reaction(spec, coords).astype(np.float64)
    rhs = np.zeros(N)
    rows, cols, vals = [], [], []
    nodes = np.arange(N)

    def couple(mask, offset, coef):
        rows.append(nodes[mask])
        cols.append(nodes[mask] + offset)
        vals.append(coef[mask] if np.ndim(coef) else np.full(mask.sum(), coef))

    def boundary(mask, axis, side, coef):
        point = coords[mask].copy()
        point[:, axis] = side
        rhs[mask] += coef[mask] * _boundary_value(spec, point) if np.ndim(coef) \
            else coef * _boundary_value(spec, point)

    for a in range(dim):
        stride = n ** a
        has_minus = sub[a] > 0
        has_plus = sub[a] < n - 1
        b = beta[:, a]
        if kappa > 0:
            d = kappa / h ** 2
            diag += 2 * d
            couple(has_minus, -stride, -d)
            couple(has_plus, stride, -d)
            # outflow sides get a zero-gradient ghost, inflow sides Dirichlet
            out_minus = ~has_minus & (b < 0)
            out_plus = ~has_plus & (b > 0)
            diag[out_minus] -= d
            diag[out_plus] -= d
            boundary(~has_minus & ~out_minus, a, 0.0, d)
            boundary(~has_plus & ~out_plus, a, 1.0, d)
        coef = np.abs(b) / h
        diag += coef
        fwd, bwd = b > 0, b < 0
        couple(fwd & has_minus, -stride, -coef)
        couple(bwd & has_plus, stride, -coef)
        boundary(fwd & ~has_minus, a, 0.0, coef)
        boundary(bwd & ~has_plus, a, 1.0, coef)

    rows.append(nodes)
    cols.append(nodes)
    vals.append(diag)
    A = as_csr(sp.coo_matrix((np.concatenate(vals),
                              (np.concatenate(rows), np.concatenate(cols))),
                             shape=(N, N)))
    meta = dict(spec=asdict(spec), h=h, n=n, dim=dim, coords=coords, rhs=rhs)
    order = _flow_order(spec, beta, sub)
    if order is not None:
        meta['flow_order'] = order
    if spec.dt is not None:
        A = time_step_system(A, spec.dt)
        meta['rhs'] = spec.dt * rhs
    return A, meta


def _flow_order(spec, beta, sub):
    signs = []
    for a in range(spec.dim):
        b = beta[:, a]
        if np.all(b >= 0):
            signs.append(1)
        elif np.all(b <= 0):
            signs.append(-1)
        else:
            return None
    n = spec.n
    keys = [s if sign > 0 else n - 1 - s for s, sign in zip(sub, signs)]
    # lexsort: last key is primary, so the highest axis varies slowest
    return np.lexsort(keys)


def time_step_system(S, dt):
    """Backward-Euler matrix ``I + dt S``."""
    S = as_csr(S)
    if S.shape[0] != S.shape[1]:
        raise ValueError('time_step_system requires a square matrix')
    return as_csr(sp.identity(S.shape[0], format='csr') + dt * S)


def block_diag_scale(A, block_size):
    """Scale by the inverse block diagonal: returns ``(D_B^{-1} A, D_B^{-1})``.

    Apply the returned ``D_B^{-1}`` to right-hand sides for a consistent
    system.
    """
    k = check_block_layout(A, block_size)
    inv = diagonal_inverse(A, k)
    if k == 1:
        D_inv = sp.diags(inv, format='csr')
    else:
        D_inv = sp.block_diag(list(inv), format='csr')
    return as_csr(D_inv @ as_csr(A)), as_csr(D_inv)


def _intra_block(k, coupling):
    T = np.triu(np.ones((k, k)), 1)
    return np.eye(k) + coupling * (T - T.T)


def synthetic_block_advection(spec, block_size=3, coupling=2.0):
    """Scalar grid matrix with every node expanded to a ``k x k`` block.

    Diagonal blocks are ``a_ii (I + coupling * T)`` with ``T`` the dense
    skew-symmetric sign pattern, so point Jacobi on the unscaled system
    diverges; off-diagonal blocks are ``a_ij E`` with
    ``E = (I + ones/k) / 2``, preserving the scalar upwind graph.  For
    ``k = 1`` this is the scalar matrix.
    """
    A, meta = advection_diffusion_reaction(spec)
    k = int(block_size)
    if k == 1:
        return A, meta
    d = A.diagonal()
    off = as_csr(A - sp.diags(d))
    off.eliminate_zeros()
    E = 0.5 * (np.eye(k) + np.ones((k, k)) / k)
    B = sp.kron(off, E) + sp.kron(sp.diags(d), _intra_block(k, coupling))
    meta = dict(meta, block_size=k, rhs=np.repeat(meta['rhs'], k))
    return as_csr(B), meta
