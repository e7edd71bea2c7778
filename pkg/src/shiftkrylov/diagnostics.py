"""Low-rank approximability of the solution matrix ``X = [x_1, ..., x_l]``.

When the shifts cluster around a centroid ``c`` the columns of ``X`` are all
close to ``(A + cI)^{-1} b``. In eigen-coordinates ``A = Q diag(lam) Q^{-1}``
the solution is the Cauchy-like matrix ``bt_i / (lam_i + s_j)`` and the
distance to the rank-one surrogate obeys::

    ||Xt - (Lam + cI)^{-1} bt 1^T||_F <= eps / min_j |lam_j + c| * ||Xt||_F

with ``eps = max_i |s_i - c|``.
"""
from dataclasses import dataclass, asdict
from typing import Optional

import numpy as np

from .generators import ShiftSet, ShiftSetSpec, gen_diagonalizable, gen_shifts, signed_integer_spectrum
from .linalg import lu_factor, singular_values
from .sparse import as_dense

__all__ = [
    "ClusterDiagnostics",
    "centroid_bound",
    "rank_one_error",
    "sv_ratio",
    "exact_solutions",
    "cauchy_solution",
    "eigen_bound_check",
    "table1",
    "TABLE1_CENTROIDS",
]

TABLE1_CENTROIDS = {"left": 0.5, "right": 1.0 + 1e-10}


@dataclass
class ClusterDiagnostics:
    centroid: complex
    eps: float
    min_dist: float
    bound_c: float
    measured_error: Optional[float] = None
    sv_ratio: Optional[float] = None

    def as_dict(self):
        d = asdict(self)
        d["centroid"] = [self.centroid.real, self.centroid.imag]
        return d


def _shift_array(shifts):
    return np.asarray(shifts.shifts if isinstance(shifts, ShiftSet) else shifts, dtype=complex).reshape(-1)


def centroid_bound(lam, shifts, centroid=None):
    """Cluster radius, eigenvalue distance and the bound ``eps / min_dist``.

    ``centroid`` defaults to the mean of the shifts.
    """
    s = _shift_array(shifts)
    lam = np.asarray(lam)
    c = complex(s.mean() if centroid is None else centroid)
    eps = float(np.max(np.abs(s - c)))
    min_dist = float(np.min(np.abs(lam + c)))
    if min_dist == 0:
        raise ZeroDivisionError("centroid coincides with a negated eigenvalue")
    return ClusterDiagnostics(centroid=c, eps=eps, min_dist=min_dist, bound_c=eps / min_dist)


def exact_solutions(A, b, shifts):
    """Columns ``(A + s_j I)^{-1} b`` by one dense LU per shift."""
    D = as_dense(A).astype(complex)
    s = _shift_array(shifts)
    n = D.shape[0]
    X = np.empty((n, s.size), dtype=complex)
    eye = np.eye(n)
    for j, sj in enumerate(s):
        X[:, j] = lu_factor(D + sj * eye).solve(np.asarray(b, dtype=complex))
    return X


def rank_one_error(X, A, centroid, b):
    """``||X - (A + cI)^{-1} b 1^T||_F / ||X||_F``.

    ``A`` is a matrix, or a callable returning ``(A + cI)^{-1} b`` given
    ``(centroid, b)``.
    """
    X = np.asarray(X)
    if callable(A):
        z = np.asarray(A(centroid, b))
    else:
        D = as_dense(A).astype(complex)
        z = lu_factor(D + complex(centroid) * np.eye(D.shape[0])).solve(np.asarray(b, dtype=complex))
    return float(np.linalg.norm(X - z[:, None]) / np.linalg.norm(X))


def sv_ratio(X):
    """``sigma_2(X) / sigma_1(X)``."""
    X = np.asarray(X)
    if min(X.shape) < 2:
        raise ValueError("sv_ratio needs at least two rows and two columns")
    sv = singular_values(X)
    return float(sv[1] / sv[0]) if sv[0] > 0 else 0.0


def cauchy_solution(lam, btilde, shifts):
    """Solution in eigen-coordinates, ``bt_i / (lam_i + s_j)``."""
    s = _shift_array(shifts)
    lam = np.asarray(lam)
    return np.asarray(btilde)[:, None] / (lam[:, None] + s[None, :])


def eigen_bound_check(lam, btilde, shifts, centroid=None):
    """Return ``(lhs, rhs)`` of the centroid inequality in eigen-coordinates."""
    diag = centroid_bound(lam, shifts, centroid)
    Xt = cauchy_solution(lam, btilde, shifts)
    surrogate = np.asarray(btilde) / (np.asarray(lam) + diag.centroid)
    lhs = float(np.linalg.norm(Xt - surrogate[:, None]))
    return lhs, diag.bound_c * float(np.linalg.norm(Xt))


def table1(n=200, ell=300, ks=range(3, 8), seed=0, family="left", shift_seed=None):
    """Rank-one error and singular value ratio across clustering levels.

    ``A = Q diag(-n/2..-1, 1..n/2) Q^{-1}`` with Gaussian ``Q`` and ``b``
    drawn from ``seed``; the shifts are ``c + i w_j 10^{-k}`` with the
    Gaussian ``w`` drawn once (from ``shift_seed``, default ``seed + 1``) and
    reused for every ``k``. ``family`` picks ``c`` from ``TABLE1_CENTROIDS``.
    Errors and bounds use the mean of the shifts as the centroid.

    Returns
    -------
    list of dict
        Keys ``k``, ``rank_one_error``, ``sv_ratio``, ``bound_c``, ``eps``,
        ``min_dist``, ``eigen_lhs``, ``eigen_rhs``.
    """
    if family not in TABLE1_CENTROIDS:
        raise ValueError(f"family must be one of {sorted(TABLE1_CENTROIDS)}")
    if n % 2:
        raise ValueError("n must be even")
    c = TABLE1_CENTROIDS[family]
    prob = gen_diagonalizable(signed_integer_spectrum(n // 2), seed)
    btilde = np.linalg.solve(prob.Q, prob.b)
    sseed = seed + 1 if shift_seed is None else shift_seed
    rows = []
    D = prob.A.astype(complex)
    for k in ks:
        shifts = gen_shifts(ShiftSetSpec("clustered-gaussian", ell, {"centroid": c, "k": k}, seed=sseed))
        X = exact_solutions(D, prob.b, shifts)
        diag = centroid_bound(prob.lam, shifts)
        lhs, rhs = eigen_bound_check(prob.lam, btilde, shifts)
        rows.append(
            {
                "k": int(k),
                "centroid": [diag.centroid.real, diag.centroid.imag],
                "rank_one_error": rank_one_error(X, D, diag.centroid, prob.b),
                "sv_ratio": sv_ratio(X),
                "bound_c": diag.bound_c,
                "eps": diag.eps,
                "min_dist": diag.min_dist,
                "eigen_lhs": lhs,
                "eigen_rhs": rhs,
            }
        )
    return rows
