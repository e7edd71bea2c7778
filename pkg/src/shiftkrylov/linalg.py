"""Dense complex kernels: Householder QR, LU, triangular and Hessenberg solves.

Every routine works in complex double precision. The QR, triangular solve
and least-squares helpers accept stacks of matrices (leading batch axis) so
that one projected problem per shift can be handled in a single sweep.
"""
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

from .errors import DimensionError, SingularOperator, SingularProjected

RANK_TOL = 1e-14
TRI_TOL = 1e-14

__all__ = [
    "QrFactors",
    "LuFactors",
    "householder_qr",
    "householder_lstsq",
    "tri_solve_upper",
    "hessenberg_last_row_inverse",
    "hessenberg_last_rows_inverse",
    "lu_factor",
    "dense_lu_solve",
    "singular_values",
]


@dataclass
class QrFactors:
    """Thin QR factors ``M = [Q, P] [G; 0]``.

    Attributes
    ----------
    Q : ndarray (..., rows, cols)
        Orthonormal basis of range(M).
    P : ndarray (..., rows, rows - cols)
        Orthonormal complement of ``Q``.
    G : ndarray (..., cols, cols)
        Upper triangular factor.
    deficient : ndarray of bool (..., cols)
        Columns whose pivot ``|G[j, j]|`` fell below ``1e-14 * ||M||_F``.
    """

    Q: np.ndarray
    P: np.ndarray
    G: np.ndarray
    deficient: np.ndarray

    @property
    def rank_deficient(self):
        return bool(np.any(self.deficient))


def _check_finite(M, name="matrix"):
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name} has non-finite entries")


def _reflect(R, rhs=None, Qacc=None):
    """Householder triangularization of the batch ``R`` in place.

    ``rhs`` (batch, rows, q) receives the same reflections, ``Qacc`` (if
    given) receives them too so that it ends as ``[Q, P]^H``.
    """
    b, rows, cols = R.shape
    for j in range(cols):
        x = R[:, j:, j]
        normx = np.linalg.norm(x, axis=1)
        x0 = x[:, 0]
        ax0 = np.abs(x0)
        phase = np.where(ax0 > 0, x0 / np.where(ax0 > 0, ax0, 1.0), 1.0)
        v = x.copy()
        v[:, 0] += phase * normx
        vn = np.linalg.norm(v, axis=1)
        v /= np.where(vn > 0, vn, 1.0)[:, None]
        vh = v.conj()[:, None, :]
        R[:, j:, j:] -= 2.0 * v[:, :, None] * (vh @ R[:, j:, j:])
        R[:, j + 1:, j] = 0.0
        if rhs is not None:
            rhs[:, j:, :] -= 2.0 * v[:, :, None] * (vh @ rhs[:, j:, :])
        if Qacc is not None:
            Qacc[:, j:, :] -= 2.0 * v[:, :, None] * (vh @ Qacc[:, j:, :])


def householder_qr(M):
    """Householder QR with the complement block split off.

    Parameters
    ----------
    M : array_like (rows, cols) or (batch, rows, cols)
        ``rows >= cols`` is required.

    Returns
    -------
    QrFactors
    """
    M = np.asarray(M, dtype=complex)
    single = M.ndim == 2
    if single:
        M = M[None]
    if M.ndim != 3:
        raise DimensionError("householder_qr expects a matrix or a stack of matrices")
    b, rows, cols = M.shape
    if rows < cols:
        raise DimensionError(f"householder_qr needs rows >= cols, got {rows}x{cols}")
    _check_finite(M)
    R = M.copy()
    Qh = np.broadcast_to(np.eye(rows, dtype=complex), (b, rows, rows)).copy()
    _reflect(R, Qacc=Qh)
    Qfull = np.conj(np.swapaxes(Qh, 1, 2))
    G = R[:, :cols, :]
    scale = np.linalg.norm(M, axis=(1, 2))
    deficient = np.abs(np.diagonal(G, axis1=1, axis2=2)) <= RANK_TOL * scale[:, None]
    out = QrFactors(Qfull[:, :, :cols], Qfull[:, :, cols:], G, deficient)
    if single:
        out = QrFactors(out.Q[0], out.P[0], out.G[0], out.deficient[0])
    return out


def tri_solve_upper(G, rhs):
    """Back substitution ``G y = rhs`` for upper triangular ``G``.

    ``G`` may be (c, c) or (batch, c, c); ``rhs`` carries the matching
    leading shape and may have a trailing column axis.
    Raises :class:`SingularProjected` when a pivot is below
    ``1e-14 * max|diag(G)|``.
    """
    G = np.asarray(G, dtype=complex)
    rhs = np.asarray(rhs, dtype=complex)
    single = G.ndim == 2
    if single:
        G = G[None]
        rhs = rhs[None]
    b, c, c2 = G.shape
    if c != c2 or rhs.shape[1] != c:
        raise DimensionError("tri_solve_upper: shape mismatch")
    vec = rhs.ndim == 2
    if vec:
        rhs = rhs[:, :, None]
    d = np.abs(np.diagonal(G, axis1=1, axis2=2))
    thresh = TRI_TOL * d.max(axis=1, initial=0.0)
    bad = (d <= thresh[:, None]) | (d == 0)
    if np.any(bad):
        ib, idx = np.argwhere(bad)[0]
        raise SingularProjected(
            f"upper triangular factor is singular at diagonal index {idx}", index=int(idx)
        )
    y = np.zeros(rhs.shape, dtype=complex)
    for i in range(c - 1, -1, -1):
        acc = rhs[:, i, :] - np.einsum("bj,bjq->bq", G[:, i, i + 1:], y[:, i + 1:, :])
        y[:, i, :] = acc / G[:, i, i][:, None]
    if vec:
        y = y[:, :, 0]
    return y[0] if single else y


def householder_lstsq(M, rhs):
    """Least-squares solve ``min ||M y - rhs||`` over a batch of matrices.

    Parameters
    ----------
    M : ndarray (batch, rows, cols)
    rhs : ndarray (batch, rows, q)

    Returns
    -------
    y : ndarray (batch, cols, q)
    resnorm : ndarray (batch,)
        Frobenius norm of ``P^H rhs``, i.e. the optimal residual.
    """
    R = np.array(M, dtype=complex)
    z = np.array(rhs, dtype=complex)
    cols = R.shape[2]
    _reflect(R, rhs=z)
    resnorm = np.linalg.norm(z[:, cols:, :], axis=(1, 2))
    y = tri_solve_upper(R[:, :cols, :], z[:, :cols, :])
    return y, resnorm


@dataclass
class LuFactors:
    """Partial-pivoting LU factors of a square matrix, reusable for solves."""

    lu: np.ndarray
    piv: np.ndarray

    def solve(self, rhs, trans=0):
        return la.lu_solve((self.lu, self.piv), rhs, trans=trans, check_finite=False)


def lu_factor(M):
    """Factor ``M`` with partial pivoting; zero pivots raise SingularOperator."""
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError("lu_factor needs a square matrix")
    _check_finite(M)
    n = M.shape[0]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", la.LinAlgWarning)
        lu, piv = la.lu_factor(M, check_finite=False)
    d = np.abs(np.diag(lu))
    thresh = np.finfo(float).eps * n * d.max(initial=0.0)
    bad = np.flatnonzero(d <= thresh)
    if bad.size:
        raise SingularOperator(f"zero pivot at index {bad[0]} after pivoting", index=int(bad[0]))
    return LuFactors(lu, piv)


def dense_lu_solve(M, rhs):
    """Solve ``M x = rhs`` by LU with partial pivoting."""
    rhs = np.asarray(rhs)
    if rhs.shape[0] != np.shape(M)[0]:
        raise DimensionError("dense_lu_solve: right-hand side length mismatch")
    return lu_factor(M).solve(rhs)


def hessenberg_last_row_inverse(H):
    """Return ``e_m^T H^{-1}`` as a 1-D array by solving ``H^T z = e_m``."""
    H = np.asarray(H, dtype=complex)
    m = H.shape[0]
    if H.ndim != 2 or H.shape[1] != m:
        raise DimensionError("hessenberg_last_row_inverse needs a square matrix")
    em = np.zeros(m, dtype=complex)
    em[-1] = 1.0
    try:
        f = lu_factor(H)
    except SingularOperator as exc:
        raise SingularProjected(f"projected Hessenberg matrix is singular: {exc}", exc.index) from exc
    return f.solve(em, trans=1)


def hessenberg_last_rows_inverse(H, k):
    """Return ``E_m^T H^{-1}`` (k x mk) for a block Hessenberg ``H``."""
    H = np.asarray(H, dtype=complex)
    mk = H.shape[0]
    if k == 1:
        return hessenberg_last_row_inverse(H)[None, :]
    E = np.zeros((mk, k), dtype=complex)
    E[mk - k:, :] = np.eye(k)
    try:
        f = lu_factor(H)
    except SingularOperator as exc:
        raise SingularProjected(f"projected block Hessenberg matrix is singular: {exc}", exc.index) from exc
    return f.solve(E, trans=1).T


def singular_values(M):
    """Singular values in nonincreasing order (LAPACK divide-and-conquer)."""
    M = np.asarray(M)
    _check_finite(M)
    if M.size == 0:
        return np.zeros(0)
    return np.linalg.svd(M, compute_uv=False)
