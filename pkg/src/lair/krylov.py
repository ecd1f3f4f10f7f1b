"""Restarted right-preconditioned GMRES."""
from dataclasses import dataclass, field

import numpy as np

from .diagnostics import measured_cf

__all__ = ['SolveConfig', 'SolveReport', 'gmres', 'random_initial_guess']


@dataclass(frozen=True)
class SolveConfig:
    rel_tol: float = 1e-12
    max_iters: int = 200
    restart: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.restart < 1:
            raise ValueError('restart must be >= 1')


@dataclass
class SolveReport:
    residual_history: list
    iterations: int
    converged: bool
    measured_cf: float = field(init=False)
    wall_estimate_wu: float = None

    def __post_init__(self):
        self.measured_cf = measured_cf(self.residual_history)


def random_initial_guess(n, seed):
    """Uniform ``[-1, 1]`` guess from a seeded generator."""
    return np.random.default_rng(seed).uniform(-1.0, 1.0, n)


def gmres(A, b, x0=None, M=None, cfg=None, cycle_complexity=None):
    """Solve ``A x = b`` by GMRES(restart) with right preconditioner ``M``.

    ``M`` is a callable approximating ``A^{-1}`` and must be a fixed linear
    map.  Preconditioned directions are stored, so the iteration count equals
    the number of ``M`` applications.  The residual history holds true
    residual norms: recomputed explicitly at each restart, and equal to the
    Arnoldi least-squares residual inside a cycle.

    Returns ``(x, SolveReport)``.
    """
    cfg = SolveConfig() if cfg is None else cfg
    b = np.asarray(b, dtype=np.float64)
    n = b.shape[0]
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=np.float64, copy=True)
    M = (lambda v: v) if M is None else M

    r = b - A @ x
    beta = np.linalg.norm(r)
    _check_finite(beta)
    history = [float(beta)]
    r0 = beta
    iters = 0
    converged = r0 == 0

    while not converged and iters < cfg.max_iters:
        m = min(cfg.restart, cfg.max_iters - iters)
        V = np.zeros((m + 1, n))
        Zs = np.zeros((m, n))
        H = np.zeros((m + 1, m))
        cs = np.zeros(m)
        sn = np.zeros(m)
        g = np.zeros(m + 1)
        g[0] = beta
        V[0] = r / beta
        j_done = 0
        breakdown = False
        for j in range(m):
            Zs[j] = M(V[j])
            w = A @ Zs[j]
            iters += 1
            for i in range(j + 1):  # modified Gram-Schmidt
                H[i, j] = w @ V[i]
                w -= H[i, j] * V[i]
            H[j + 1, j] = np.linalg.norm(w)
            breakdown = H[j + 1, j] < 1e-14
            if not breakdown:
                V[j + 1] = w / H[j + 1, j]
            for i in range(j):  # apply previous Givens rotations
                t = cs[i] * H[i, j] + sn[i] * H[i + 1, j]
                H[i + 1, j] = -sn[i] * H[i, j] + cs[i] * H[i + 1, j]
                H[i, j] = t
            denom = np.hypot(H[j, j], H[j + 1, j])
            if denom == 0:
                cs[j], sn[j] = 1.0, 0.0
            else:
                cs[j], sn[j] = H[j, j] / denom, H[j + 1, j] / denom
            H[j, j] = denom
            H[j + 1, j] = 0.0
            g[j + 1] = -sn[j] * g[j]
            g[j] = cs[j] * g[j]
            res = abs(g[j + 1])
            _check_finite(res)
            j_done = j + 1
            history.append(float(res))
            if res <= cfg.rel_tol * r0 or breakdown:
                break
        y = _back_substitute(H[:j_done, :j_done], g[:j_done])
        x += Zs[:j_done].T @ y
        r = b - A @ x
        beta = np.linalg.norm(r)
        _check_finite(beta)
        history[-1] = float(beta)  # true residual replaces the Arnoldi estimate
        converged = beta <= cfg.rel_tol * r0
        if breakdown:
            break

    wu = None if cycle_complexity is None else iters * cycle_complexity
    return x, SolveReport(history, iters, bool(converged), wu)


def _back_substitute(U, g):
    y = np.zeros_like(g)
    for i in range(g.shape[0] - 1, -1, -1):
        if U[i, i] == 0:
            continue
        y[i] = (g[i] - U[i, i + 1:] @ y[i + 1:]) / U[i, i]
    return y


def _check_finite(value):
    if not np.isfinite(value):
        raise FloatingPointError('GMRES residual is not finite')
