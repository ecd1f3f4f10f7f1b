import warnings

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from lair.diagnostics import cycle_propagator
from lair.hierarchy import SetupConfig, format_setup_report, lump_to_diagonal, setup
from lair.problems import PdeSpec, advection_diffusion_reaction
from lair.sparse_core import as_csr, spmm
from lair.transfer import RestrictionConfig

from conftest import diag_dominant, random_sparse, upwind_chain


def test_lump_theta_zero_is_identity():
    A = as_csr(random_sparse(10, seed=1) + sp.identity(10))
    B = lump_to_diagonal(A, 0.0)
    assert (A != B).nnz == 0


def test_lump_row_example():
    A = as_csr([[10.0, 0.001, -5.0], [0, 1, 0], [0, 0, 1]])
    B = lump_to_diagonal(A, 0.001).toarray()
    np.testing.assert_allclose(B[0], [10.001, 0.0, -5.0], rtol=1e-15)
    assert lump_to_diagonal(A, 0.001).nnz == A.nnz - 1


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 30), st.floats(1e-3, 0.5), st.integers(0, 10**6))
def test_lump_preserves_row_sums(n, theta, seed):
    A = as_csr(random_sparse(n, density=0.4, seed=seed) + 2 * sp.identity(n))
    B = lump_to_diagonal(A, theta)
    np.testing.assert_allclose(B.sum(axis=1), A.sum(axis=1), atol=1e-13)
    assert B.nnz <= A.nnz


def test_small_matrix_single_level():
    A = diag_dominant(30, seed=2)
    H = setup(A)
    assert H.depth == 1
    b = np.ones(30)
    np.testing.assert_allclose(A @ H.cycle(np.zeros(30), b), b, atol=1e-12)


def test_empty_and_nonsquare_rejected():
    with pytest.raises(ValueError):
        setup(sp.csr_matrix((0, 0)))
    with pytest.raises(ValueError):
        setup(sp.csr_matrix(np.ones((2, 3))))


def test_chain_levels_stay_lower_triangular():
    A = as_csr(upwind_chain(64))
    H = setup(A, interpolation='one_point', max_coarse=4)
    assert H.depth > 2
    for L in H.levels:
        assert sp.triu(L.A, k=1).nnz == 0 or np.abs(sp.triu(L.A, k=1).data).max() == 0


def test_laplacian_operator_complexity():
    A, _ = advection_diffusion_reaction(PdeSpec(dim=2, n=32, kappa=1.0, beta='zero'))
    H = setup(A, interpolation='classical_modified')
    assert H.operator_complexity < 3.0


def test_dimensions_chain():
    A = diag_dominant(300, density=0.02, seed=3)
    H = setup(A)
    for L, nxt in zip(H.levels[:-1], H.levels[1:]):
        n, nc = L.A.shape[0], nxt.A.shape[0]
        assert L.P.shape == (n, nc) and L.R.shape == (nc, n)
        np.testing.assert_array_equal(L.permutation,
                                      np.concatenate([L.split.f_points, L.split.c_points]))
    assert H.levels[-1].A.shape[0] <= 40 or H.depth == 25


@pytest.mark.parametrize('theta_d', [0.0, 0.001])
def test_galerkin_consistency(theta_d):
    A, _ = advection_diffusion_reaction(PdeSpec(n=20, kappa=1e-2, beta='recirculating'))
    H = setup(A, theta_d=theta_d, max_coarse=10)
    for L, nxt in zip(H.levels[:-1], H.levels[1:]):
        rap = spmm(spmm(L.R, L.A), L.P)
        expected = lump_to_diagonal(rap, theta_d)
        assert np.abs((expected - nxt.A).toarray()).max() < 1e-13
        np.testing.assert_allclose(nxt.A.sum(axis=1), rap.sum(axis=1),
                                   rtol=1e-12, atol=1e-12)


def test_setup_deterministic():
    A, _ = advection_diffusion_reaction(PdeSpec(n=24, kappa=1e-3, beta='curved'))
    H1, H2 = setup(A), setup(A)
    for L1, L2 in zip(H1.levels, H2.levels):
        np.testing.assert_array_equal(L1.A.data, L2.A.data)
        np.testing.assert_array_equal(L1.A.indices, L2.A.indices)


def test_stall_guard_warns():
    # no strong connections anywhere: every point becomes F
    A = as_csr(sp.identity(60) + 0.01 * sp.eye(60, k=1))
    with pytest.warns(UserWarning, match='stalled'):
        H = setup(A)
    assert H.depth == 1


def test_cycle_fixed_point_and_linearity():
    A, _ = advection_diffusion_reaction(PdeSpec(n=10, kappa=0.1, beta='recirculating'))
    H = setup(A, max_coarse=10)
    x = np.random.default_rng(0).standard_normal(100)
    np.testing.assert_allclose(H.cycle(x, A @ x), x, rtol=1e-10, atol=1e-10)
    E = cycle_propagator(H)
    y, b = np.random.default_rng(1).standard_normal((2, 100))
    np.testing.assert_allclose(H.cycle(x, b) - H.cycle(y, b), E @ (x - y), atol=1e-10)
    np.testing.assert_allclose(cycle_propagator(H), E, atol=0)


def test_two_level_ideal_exact_solve():
    A = diag_dominant(150, density=0.05, seed=4)
    # lumping would perturb the Galerkin operator, so it is disabled
    cfg = SetupConfig(restriction=RestrictionConfig('ideal'), relax='f_exact',
                      max_levels=2, max_coarse=1, theta_d=0.0)
    H = setup(A, cfg)
    assert H.depth == 2
    e = np.random.default_rng(5).standard_normal(150)
    assert np.linalg.norm(H.cycle(e, np.zeros(150))) < 1e-10 * np.linalg.norm(e)


def test_transpose_baseline_uses_pre_and_post():
    A, _ = advection_diffusion_reaction(PdeSpec(n=16, kappa=1.0, beta='zero'))
    H = setup(A, restriction=RestrictionConfig('transpose'))
    L = H.levels[0]
    assert L.pre is not None and L.post.scheme == 'jacobi_global'
    assert (L.R != L.P.T).nnz == 0
    assert H.levels[0].pre is H.levels[0].post


def test_lair_levels_post_relax_only():
    A, _ = advection_diffusion_reaction(PdeSpec(n=16, kappa=1e-3, beta='curved'))
    H = setup(A)
    assert all(L.pre is None and L.post.scheme == 'ffc_jacobi' for L in H.levels[:-1])
    assert setup(A, pre_relax=True).levels[0].pre is not None


def test_classical_interp_rejects_block():
    A = as_csr(sp.kron(diag_dominant(50, density=0.1, seed=6), np.eye(2)))
    with pytest.raises(ValueError, match='one_point'):
        setup(A, block_size=2, interpolation='classical_modified')


def test_block_setup_runs():
    A = as_csr(sp.kron(diag_dominant(60, density=0.08, seed=7), np.eye(2)))
    H = setup(A, block_size=2)
    assert H.depth >= 2
    for L in H.levels[:-1]:
        assert L.A.shape[0] % 2 == 0 and L.split.n_c % 2 == 0


def test_setup_report_text():
    A, _ = advection_diffusion_reaction(PdeSpec(n=16, kappa=1e-3, beta='curved'))
    H = setup(A)
    text = format_setup_report(H)
    assert 'operator complexity' in text
    assert len(H.setup_report) == H.depth
    assert text.count('\n') == H.depth + 2


def test_lump_fine_flag():
    A, _ = advection_diffusion_reaction(PdeSpec(n=16, kappa=1e-6, beta='recirculating'))
    assert setup(A, lump_fine=True, theta_d=0.01).levels[0].A.nnz < A.nnz
    assert setup(A).levels[0].A.nnz == A.nnz


def test_singular_coarse_matrix_warns():
    with warnings.catch_warnings():
        warnings.simplefilter('error')
        setup(as_csr(np.eye(3)))
    with pytest.warns(UserWarning, match='pseudo-inverse'):
        H = setup(as_csr(np.ones((3, 3))))
    assert H.coarse_solver[0] == 'pinv'
