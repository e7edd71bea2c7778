import numpy as np
import pytest

from shiftkrylov.diagnostics import (
    cauchy_solution,
    centroid_bound,
    eigen_bound_check,
    exact_solutions,
    rank_one_error,
    sv_ratio,
    table1,
)
from shiftkrylov.generators import ShiftSetSpec, gen_diagonalizable, gen_shifts, make_rng, signed_integer_spectrum


def test_single_shift_bound_zero():
    d = centroid_bound(signed_integer_spectrum(5), [0.5], 0.5)
    assert d.eps == 0 and d.bound_c == 0


def test_bound_scales_with_k():
    lam = signed_integer_spectrum(100)
    for k in (3, 5):
        s = gen_shifts(ShiftSetSpec("clustered-gaussian", 300, {"centroid": 0.5, "k": k}, seed=1))
        d = centroid_bound(lam, s, 0.5)
        assert np.isclose(d.min_dist, 0.5)
        assert 10.0 ** (-k) < d.bound_c < 10.0 ** (2 - k)


def test_shifted_centroid_min_dist():
    s = gen_shifts(ShiftSetSpec("clustered-gaussian", 50, {"centroid": 1 + 1e-10, "k": 4}, seed=1))
    d = centroid_bound(signed_integer_spectrum(100), s, 1 + 1e-10)
    assert np.isclose(d.min_dist, 1e-10, rtol=1e-5)
    assert d.bound_c > 1e5


def test_rank_one_error_zero_for_equal_shifts():
    p = gen_diagonalizable(signed_integer_spectrum(10), seed=2)
    s = np.full(6, 0.5 + 0.1j)
    X = exact_solutions(p.A, p.b, s)
    assert rank_one_error(X, p.A, s[0], p.b) <= 1e-14
    assert sv_ratio(X) <= 1e-14


def test_rank_one_error_callable():
    p = gen_diagonalizable(signed_integer_spectrum(10), seed=3)
    s = 0.5 + 1e-3j * make_rng(3).standard_normal(5)
    X = exact_solutions(p.A, p.b, s)
    solve = lambda c, b: np.linalg.solve(p.A + c * np.eye(20), b)
    assert np.isclose(rank_one_error(X, solve, 0.5, p.b), rank_one_error(X, p.A, 0.5, p.b))


def test_sv_ratio_needs_matrix():
    with pytest.raises(ValueError):
        sv_ratio(np.ones((3, 1)))


def test_cauchy_matches_eigen_coordinates():
    p = gen_diagonalizable(signed_integer_spectrum(8), seed=4)
    s = np.array([0.3, 0.5 + 0.2j])
    bt = np.linalg.solve(p.Q, p.b)
    X = exact_solutions(p.A, p.b, s)
    assert np.allclose(np.linalg.solve(p.Q, X), cauchy_solution(p.lam, bt, s))


def test_eigen_bound_holds_small():
    p = gen_diagonalizable(signed_integer_spectrum(20), seed=5)
    bt = np.linalg.solve(p.Q, p.b)
    for k in (1, 2, 4):
        s = gen_shifts(ShiftSetSpec("clustered-gaussian", 40, {"centroid": 0.5, "k": k}, seed=6))
        lhs, rhs = eigen_bound_check(p.lam, bt, s)
        assert lhs <= rhs


def test_table1_small_trends():
    rows = table1(n=40, ell=30, ks=range(3, 6), seed=1)
    err = [r["rank_one_error"] for r in rows]
    assert all(0.05 <= b / a <= 0.2 for a, b in zip(err, err[1:]))
    assert [r["k"] for r in rows] == [3, 4, 5]
    assert len(table1(n=40, ell=30, ks=[3])) == 1
    with pytest.raises(ValueError):
        table1(n=41)
    with pytest.raises(ValueError):
        table1(n=40, family="middle")
