import numpy as np
import pytest
import scipy.sparse as sp

from macroale.amg import COARSE, FINE, ISOLATED, build_amg, mis_coarsening
from macroale.errors import SolverError


def laplace1d(n):
    return sp.diags([-np.ones(n - 1), 2 * np.ones(n), -np.ones(n - 1)], [-1, 0, 1], format="csr")


def test_identity_is_single_level():
    h = build_amg(sp.identity(50, format="csr"), max_coarse=10)
    assert h.n_levels == 1
    split = mis_coarsening(sp.identity(5))
    assert (split == ISOLATED).all()


def test_mis_is_maximal_independent():
    A = laplace1d(100)
    split = mis_coarsening(A)
    assert set(np.unique(split)) <= {COARSE, FINE}
    c = np.flatnonzero(split == COARSE)
    assert np.all(np.diff(c) >= 2)  # independent
    # every fine node has a coarse neighbour
    for i in np.flatnonzero(split == FINE):
        assert split[max(i - 1, 0)] == COARSE or split[min(i + 1, 99)] == COARSE
    assert len(c) == 50


def test_galerkin_identity():
    A = laplace1d(100)
    h = build_amg(A, max_coarse=10)
    for fine, coarse in zip(h.levels[:-1], h.levels[1:]):
        diff = coarse.A - fine.R @ fine.A @ fine.P
        assert abs(diff).max() <= 1e-12
        assert (fine.R != fine.P.T).nnz == 0


def test_vcycle_contracts():
    A = laplace1d(100)
    h = build_amg(A, max_coarse=10)
    rng = np.random.default_rng(0)
    b = rng.standard_normal(100)
    x = np.zeros(100)
    r0 = np.linalg.norm(b)
    for _ in range(10):
        x = h.cycle(x, b)
    assert np.linalg.norm(b - A @ x) < 0.5 * r0


def test_vcycle_is_spd(rng):
    n = 60
    A = laplace1d(n) + sp.identity(n) * 0.1
    h = build_amg(A, max_coarse=8)
    Mmat = np.column_stack([h(e) for e in np.eye(n)])
    np.testing.assert_allclose(Mmat, Mmat.T, atol=1e-12)
    for _ in range(100):
        z = rng.standard_normal(n)
        assert z @ h(z) > 0


def test_bad_input():
    with pytest.raises(SolverError):
        build_amg(sp.csr_matrix((3, 4)))
    A = sp.lil_matrix((3, 3))
    A[0, 0] = 1
    A[2, 2] = 1
    with pytest.raises(SolverError):
        build_amg(A.tocsr())


def test_dirichlet_rows_are_isolated():
    A = laplace1d(40).tolil()
    A[0, :] = 0
    A[:, 0] = 0
    A[0, 0] = 1
    split = mis_coarsening(A.tocsr())
    assert split[0] == ISOLATED
    h = build_amg(A.tocsr(), max_coarse=5)
    assert h.level_sizes()[1] < 39
