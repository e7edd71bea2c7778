import numpy as np
import pytest

from shiftkrylov.bases import (
    block_rk_expand,
    block_rk_init,
    ek_expand,
    ek_init,
    orthogonality_error,
    poly_arnoldi_expand,
    poly_arnoldi_init,
    rk_expand,
    rk_init,
    rk_relation_residual,
)
from shiftkrylov.errors import BreakdownExact, DeflationWarning
from shiftkrylov.generators import gen_convdiff, make_rng
from shiftkrylov.inner import InnerSolverConfig, ShiftedSolver

from conftest import random_dense


def test_rk_init_scaling():
    e1 = np.eye(5)[:, 0]
    for scale in (1.0, 2.0):
        B = rk_init(scale * e1, np.eye(5))
        assert np.allclose(B.V[:, 0], e1)
        assert np.isclose(B.beta[0, 0], scale)
    b = make_rng(0).standard_normal(30)
    assert abs(np.linalg.norm(rk_init(b, np.eye(30)).V[:, 0]) - 1) <= 1e-15


def test_identity_breaks_down():
    b = make_rng(1).standard_normal(6)
    B = rk_init(b, np.eye(6))
    with pytest.raises(BreakdownExact):
        rk_expand(B, np.eye(6), 0.5)
    assert B.breakdown
    assert rk_relation_residual(B, np.eye(6)) <= 1e-13


def test_diag_two_by_two():
    A = np.diag([1.0, 2.0])
    b = np.ones(2) / np.sqrt(2)
    B = rk_init(b, A)
    rk_expand(B, A, 0.0)
    K = np.column_stack([b, np.linalg.solve(A, b)])
    P = B.V @ B.V.conj().T
    assert np.allclose(P @ K, K)
    assert rk_relation_residual(B, A) <= 1e-13 * np.linalg.norm(A)


def test_convdiff_orthogonality_and_relation():
    A = gen_convdiff(2, 16, 0.5)
    rng = make_rng(2)
    b = rng.standard_normal(A.shape[0])
    poles = rng.uniform(0.5, 50, 10) + 1j * rng.uniform(-20, 20, 10)
    B = rk_init(b, A, capacity=4)
    solver = ShiftedSolver(A, InnerSolverConfig(kind="sparse-lu"))
    normA = A.norm_fro()
    for xi in poles:
        rk_expand(B, A, xi, solver)
        assert rk_relation_residual(B, A) <= 1e-12 * normA
    assert orthogonality_error(B.V) <= 1e-12


def test_nesting_prefix():
    A = random_dense(25, 3)
    b = make_rng(3).standard_normal(25)
    B = rk_init(b, A)
    rk_expand(B, A, 1.0)
    V2 = B.V.copy()
    rk_expand(B, A, 2.0 + 1j)
    assert np.array_equal(B.V[:, :2], V2)


def test_pole_commutation():
    A = random_dense(40, 4)
    b = make_rng(4).standard_normal(40)
    s = 0.7 - 0.3j
    B = rk_init(b, A)
    rk_expand(B, A, 2.0)
    rk_expand(B, A, s)
    x = np.linalg.solve(A + s * np.eye(40), b)
    V = B.V
    assert np.linalg.norm(x - V @ (V.conj().T @ x)) <= 1e-10 * np.linalg.norm(x)


def test_relation_sensitivity():
    A = random_dense(30, 5)
    b = make_rng(5).standard_normal(30)
    B = rk_init(b, A)
    for xi in (1.0, 2.0, 0.5j):
        rk_expand(B, A, xi)
    base = rk_relation_residual(B, A)
    B._T[0, 0] += 1e-6
    bumped = rk_relation_residual(B, A)
    assert base <= 1e-12 * np.linalg.norm(A)
    assert 1e-7 <= bumped <= 1e-5


def test_alpha_matches_definition():
    A = random_dense(30, 6)
    B = rk_init(make_rng(6).standard_normal(30), A)
    for xi in (1.0, -0.5 + 2j, 3.0):
        rk_expand(B, A, xi)
        assert np.allclose(B.alpha, B.explicit_alpha(), atol=1e-10)


def test_block_deflation():
    b = make_rng(7).standard_normal(20)
    with pytest.warns(DeflationWarning):
        B = block_rk_init(np.column_stack([b, b]), np.eye(20))
    assert B.k == 1


def test_block_relation_audit():
    A = random_dense(60, 8)
    Bm = make_rng(8).standard_normal((60, 2))
    B = block_rk_init(Bm, A)
    assert B.k == 2
    assert np.allclose(B.V @ B.beta, Bm)
    for xi in (0.5, 1.0 + 1j, 2.0, -0.5j, 4.0):
        block_rk_expand(B, A, xi)
        assert rk_relation_residual(B, A) <= 1e-12 * np.linalg.norm(A)
    assert orthogonality_error(B.V) <= 1e-12 * B.m


def test_block_width_one_matches_single():
    A = random_dense(20, 9)
    b = make_rng(9).standard_normal(20)
    B1 = rk_init(b, A)
    B2 = block_rk_init(b[:, None], A)
    for xi in (1.0, 2.0j):
        rk_expand(B1, A, xi)
        block_rk_expand(B2, A, xi)
    assert np.array_equal(B1.V, B2.V)
    assert np.array_equal(B1.stacked(), B2.stacked())


def test_extended_identity_breakdown():
    with pytest.raises(BreakdownExact):
        ek_init(np.ones(4), np.eye(4))


def test_extended_span_diag():
    A = np.diag([1.0, 2.0, 3.0])
    b = np.array([1.0, 1.0, 1.0])
    E = ek_init(b, A)
    K = np.column_stack([b, np.linalg.solve(A, b)])
    Q, _ = np.linalg.qr(K)
    assert np.allclose(E.V @ E.V.conj().T, Q @ Q.T)


def test_extended_relation_spd():
    rng = make_rng(10)
    M = rng.standard_normal((50, 50))
    A = M @ M.T / 50 + np.eye(50)
    E = ek_init(rng.standard_normal(50), A)
    for m in range(1, 6):
        ek_expand(E, A)
        assert E.relation_residual(m) <= 1e-12 * np.linalg.norm(A)
    assert orthogonality_error(E.V) <= 1e-12 * E.ncols


def test_poly_identity_breakdown():
    P = poly_arnoldi_init(np.ones(3))
    with pytest.raises(BreakdownExact):
        poly_arnoldi_expand(P, np.eye(3))
    assert P.m == 1 and P.Hbar[1, 0] == 0


def test_poly_shifted_relation_and_gram_schmidt():
    A = random_dense(40, 11)
    r = make_rng(11).standard_normal(40)
    P = poly_arnoldi_init(r)
    for _ in range(8):
        poly_arnoldi_expand(P, A)
    for s in (0.0, 1 + 1j):
        assert P.relation_residual(A, s) <= 1e-12 * (np.linalg.norm(A) + abs(s))
    # classical Gram-Schmidt on the Krylov matrix, column by column
    V = P.V
    for j in range(P.m):
        w = A @ V[:, j]
        assert np.allclose(P.Hbar[: j + 1, j], V[:, : j + 1].conj().T @ w, atol=1e-12)


@pytest.mark.parametrize("seed", range(3))
def test_complex_poles_random(seed):
    A = random_dense(35, 20 + seed)
    rng = make_rng(seed)
    B = rk_init(rng.standard_normal(35) + 1j * rng.standard_normal(35), A)
    for xi in rng.standard_normal(6) + 1j * rng.standard_normal(6):
        rk_expand(B, A, xi)
        assert rk_relation_residual(B, A) <= 1e-12 * np.linalg.norm(A)
    assert orthogonality_error(B.V) <= 1e-12 * B.m
