import numpy as np
import pytest
import scipy.sparse as sp

from lair.strength_split import CfSplitting


def random_sparse(n, m=None, density=0.2, seed=0):
    m = n if m is None else m
    rng = np.random.default_rng(seed)
    return sp.random(n, m, density=density, random_state=rng, format='csr',
                     data_rvs=lambda k: rng.uniform(-1.0, 1.0, k))


def diag_dominant(n, density=0.2, seed=0, nonsymmetric=True):
    """Random nonsymmetric M-matrix-like matrix: negative off-diagonals and a
    diagonal exceeding the absolute row sum."""
    rng = np.random.default_rng(seed)
    B = sp.random(n, n, density=density, random_state=rng, format='csr')
    if not nonsymmetric:
        B = B + B.T
    B.setdiag(0)
    B.eliminate_zeros()
    B = -B
    d = np.abs(B).sum(axis=1).A1 + rng.uniform(0.5, 1.5, n)
    return sp.csr_matrix(B + sp.diags(d))


def random_split(n, seed=0, frac_c=0.4):
    rng = np.random.default_rng(seed)
    is_c = rng.random(n) < frac_c
    is_c[0], is_c[-1] = False, True  # both sets nonempty
    return CfSplitting(is_c)


def upwind_chain(n):
    """1D upwind advection matrix with unit speed (bidiagonal)."""
    return sp.csr_matrix(sp.diags([np.ones(n), -np.ones(n - 1)], [0, -1]))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# acceptance criteria report -------------------------------------------------

ACCEPTANCE_RESULTS = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section('acceptance criteria')
    for num in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(ACCEPTANCE_RESULTS[num])
