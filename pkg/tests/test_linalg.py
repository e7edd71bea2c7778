import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from shiftkrylov.errors import DimensionError, SingularOperator, SingularProjected
from shiftkrylov.generators import make_rng
from shiftkrylov.linalg import (
    dense_lu_solve,
    hessenberg_last_row_inverse,
    hessenberg_last_rows_inverse,
    householder_lstsq,
    householder_qr,
    lu_factor,
    singular_values,
    tri_solve_upper,
)


def crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


@settings(max_examples=30, deadline=None)
@given(rows=st.integers(2, 12), extra=st.integers(0, 6), seed=st.integers(0, 10_000))
def test_qr_reconstructs_and_is_unitary(rows, extra, seed):
    rng = make_rng(seed)
    cols = max(1, rows - extra)
    M = crandn(rng, rows, cols)
    F = householder_qr(M)
    assert np.allclose(F.Q @ F.G, M, atol=1e-12 * np.linalg.norm(M))
    U = np.hstack([F.Q, F.P])
    assert np.allclose(U.conj().T @ U, np.eye(rows), atol=1e-13)
    assert np.allclose(np.tril(F.G, -1), 0)


def test_qr_flags_dependent_column():
    M = np.array([[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]])
    F = householder_qr(M)
    assert F.rank_deficient
    assert F.deficient.tolist() == [False, True]


def test_batched_qr_matches_loop():
    rng = make_rng(1)
    M = crandn(rng, 5, 7, 3)
    F = householder_qr(M)
    for j in range(5):
        Fj = householder_qr(M[j])
        assert np.allclose(np.abs(F.G[j]), np.abs(Fj.G))


def test_lstsq_matches_numpy():
    rng = make_rng(2)
    M = crandn(rng, 4, 9, 5)
    rhs = crandn(rng, 4, 9, 2)
    y, res = householder_lstsq(M, rhs)
    for j in range(4):
        ref, *_ = np.linalg.lstsq(M[j], rhs[j], rcond=None)
        assert np.allclose(y[j], ref, atol=1e-12)
        assert np.isclose(res[j], np.linalg.norm(M[j] @ ref - rhs[j]))


def test_tri_solve_singular():
    G = np.array([[1.0, 2.0], [0.0, 0.0]])
    with pytest.raises(SingularProjected):
        tri_solve_upper(G, np.ones((2, 1)))


def test_lu_solve_and_singular():
    A = np.array([[4.0, 1.0], [2.0, 3.0]])
    x = dense_lu_solve(A, np.array([1.0, 2.0]))
    assert np.allclose(A @ x, [1.0, 2.0])
    with pytest.raises(SingularOperator):
        lu_factor(np.array([[1.0, 2.0], [2.0, 4.0]]))
    with pytest.raises(DimensionError):
        lu_factor(np.ones((2, 3)))


def test_hessenberg_last_row():
    rng = make_rng(3)
    H = np.triu(crandn(rng, 6, 6), -1) + 4 * np.eye(6)
    z = hessenberg_last_row_inverse(H)
    assert np.allclose(z, np.linalg.inv(H)[-1])
    Z = hessenberg_last_rows_inverse(H, 2)
    assert np.allclose(Z, np.linalg.inv(H)[-2:])


def test_singular_values_order():
    sv = singular_values(np.diag([1.0, 3.0, 2.0]))
    assert np.allclose(sv, [3.0, 2.0, 1.0])
    with pytest.raises(ValueError):
        singular_values(np.array([[np.nan]]))


def test_qr_identity_columns():
    F = householder_qr(np.eye(3)[:, :2])
    assert np.allclose(np.abs(F.G), np.eye(2))
    assert np.allclose(np.abs(F.Q), np.eye(3)[:, :2])


def test_qr_repeated_column_flags_third_pivot():
    rng = make_rng(11)
    M = crandn(rng, 5, 2)
    M = np.hstack([M, M[:, :1]])
    F = householder_qr(M)
    assert abs(F.G[2, 2]) <= 1e-13 * np.linalg.norm(M)
    assert F.deficient[2]


def test_tri_solve_hand_case():
    y = tri_solve_upper(np.array([[2.0, 1.0], [0.0, 4.0]]), np.array([[3.0], [8.0]]))
    assert np.allclose(y[:, 0], [0.5, 2.0])
    v = np.array([[1.0], [2.0j]])
    assert np.allclose(tri_solve_upper(np.eye(2), v), v)


def test_hessenberg_identity_and_scaling():
    e = np.zeros(4)
    e[-1] = 1
    assert np.allclose(hessenberg_last_row_inverse(np.eye(4)), e)
    rng = make_rng(5)
    H = np.triu(rng.standard_normal((4, 4)), -1) + 3 * np.eye(4)
    z = hessenberg_last_row_inverse(H)
    assert np.allclose(z @ H, e, atol=1e-13)
    assert np.allclose(hessenberg_last_row_inverse(2 * H), z / 2)


def test_lu_diag_and_random_complex():
    assert np.allclose(dense_lu_solve(np.diag([2.0, 4.0]), np.array([2.0, 8.0])), [1.0, 2.0])
    rng = make_rng(6)
    M = crandn(rng, 50, 50)
    b = crandn(rng, 50)
    x = dense_lu_solve(M, b)
    assert np.linalg.norm(M @ x - b) <= 1e-10 * np.linalg.norm(b) * np.linalg.cond(M)


def test_singular_values_rank_one_and_gram():
    rng = make_rng(7)
    u, v = rng.standard_normal(6), rng.standard_normal(4)
    sv = singular_values(np.outer(u, v))
    assert sv[1] / sv[0] <= 1e-14
    M = rng.standard_normal((20, 30))
    sv = singular_values(M)
    ev = np.sort(np.linalg.eigvalsh(M @ M.T))[::-1]
    assert np.allclose(sv**2, ev, rtol=1e-10)
