import numpy as np
import pytest
import scipy.sparse as sps

from shiftkrylov.errors import NotConverged, SingularOperator, StructureError
from shiftkrylov.generators import gen_convdiff, make_rng
from shiftkrylov.inner import InnerSolverConfig, ShiftedSolver, gmres_shifted, ilu0_factor, solve_shifted
from shiftkrylov.linalg import dense_lu_solve
from shiftkrylov.sparse import CsrMatrix


def test_ilu0_diagonal_is_exact():
    A = sps.diags([1.0, 2.0, 5.0]).tocsr()
    F = ilu0_factor(A, 0.5 + 1j)
    assert F.L.nnz == 0
    assert np.allclose(F.U.toarray(), np.diag([1.5, 2.5, 5.5]) + 1j * np.eye(3))


def test_ilu0_tridiagonal_equals_lu():
    n = 8
    A = sps.diags([-1.0, 2.5, -0.7], [-1, 0, 1], shape=(n, n)).tocsr()
    F = ilu0_factor(A, 0.3)
    L = F.L.toarray() + np.eye(n)
    assert np.allclose(L @ F.U.toarray(), A.toarray() + 0.3 * np.eye(n))


def test_ilu0_needs_diagonal():
    A = sps.csr_matrix(np.array([[0.0, 1.0], [1.0, 1.0]]))
    A.eliminate_zeros()
    with pytest.raises(StructureError):
        ilu0_factor(A)


def test_ilu0_reduces_gmres_iterations():
    A = gen_convdiff(2, 16, 1.0, "zero")
    b = make_rng(0).standard_normal(A.shape[0])
    cfg = InnerSolverConfig(kind="gmres", restart=200, tol=1e-8)
    _, st_none = gmres_shifted(A, 0.0, b, cfg)
    _, st_ilu = gmres_shifted(A, 0.0, b, cfg, precond=ilu0_factor(A))
    assert st_ilu.iterations < st_none.iterations


def test_gmres_identity():
    A = CsrMatrix.from_scipy(sps.eye(5, format="csr"))
    b = np.arange(1.0, 6.0)
    w, st = gmres_shifted(A, 1.0, b, InnerSolverConfig(kind="gmres"))
    assert np.allclose(w, b / 2)
    assert st.iterations == 1


def test_gmres_distinct_eigenvalues():
    A = sps.diags([1.0, 1.0, 2.0, 3.0, 3.0, 4.0]).tocsr()
    b = make_rng(1).standard_normal(6)
    w, st = gmres_shifted(A, 0.0, b, InnerSolverConfig(kind="gmres", tol=1e-12))
    assert st.iterations <= 4
    assert np.allclose(A @ w, b)


def test_gmres_convdiff_matches_lu():
    A = gen_convdiff(2, 32, 0.5)
    b = make_rng(2).standard_normal(A.shape[0])
    xi = 3.0
    cfg = InnerSolverConfig(kind="gmres", preconditioner="ilu0", tol=1e-12)
    w, st = gmres_shifted(A, xi, b, cfg, precond=ilu0_factor(A, xi))
    ref = dense_lu_solve(A.toarray() + xi * np.eye(A.shape[0]), b)
    assert np.linalg.norm(w - ref) <= 1e-8 * np.linalg.norm(ref)
    assert st.converged


def test_dense_and_gmres_agree():
    rng = make_rng(3)
    A = rng.standard_normal((50, 50)) / np.sqrt(50) + 3 * np.eye(50)
    b = rng.standard_normal(50)
    xi = 0.5 + 0.25j
    w1 = solve_shifted(A, xi, b, InnerSolverConfig(kind="dense-lu"))
    w2 = solve_shifted(sps.csr_matrix(A), xi, b, InnerSolverConfig(kind="gmres", preconditioner="none", tol=1e-12))
    w3 = solve_shifted(sps.csr_matrix(A), xi, b, InnerSolverConfig(kind="sparse-lu"))
    assert np.linalg.norm(w1 - w2) <= 1e-8 * np.linalg.norm(w1)
    assert np.linalg.norm(w1 - w3) <= 1e-12 * np.linalg.norm(w1)


@pytest.mark.parametrize("kind", ["dense-lu", "sparse-lu", "gmres"])
def test_eigenvalue_shift_is_signalled(kind):
    A = sps.diags([1.0, 2.0, 3.0]).tocsr()
    cfg = InnerSolverConfig(kind=kind, preconditioner="none", max_cycles=2, restart=2)
    with pytest.raises((SingularOperator, NotConverged)):
        solve_shifted(A, -2.0, np.ones(3), cfg)


@pytest.mark.parametrize("kind", ["dense-lu", "gmres"])
def test_zero_rhs(kind):
    w = solve_shifted(np.eye(4) * 2, 1.0, np.zeros(4), InnerSolverConfig(kind=kind))
    assert np.array_equal(w, np.zeros(4))


def test_block_rhs_and_cache():
    rng = make_rng(4)
    A = rng.standard_normal((20, 20)) + 6 * np.eye(20)
    S = ShiftedSolver(A, InnerSolverConfig(kind="dense-lu"), cache_size=2)
    B = rng.standard_normal((20, 3))
    for xi in (0.0, 1.0, 0.0, 2.0, 3.0):
        W = S.solve(xi, B)
        assert np.allclose(A @ W + xi * W, B)
    assert len(S._cache) == 2


def test_config_validation():
    with pytest.raises(ValueError):
        InnerSolverConfig(kind="cg")
    with pytest.raises(ValueError):
        InnerSolverConfig(tol=2.0)
