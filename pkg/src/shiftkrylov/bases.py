"""Orthonormal Krylov bases: (block) rational, extended and polynomial.

All bases orthonormalize by modified Gram-Schmidt with one unconditional
reorthogonalization pass and store ``A`` times every basis vector, so the
projected matrix ``V^H A V`` grows by one block row/column per step without
extra products.

Sign convention: basis vectors come from ``(A + xi I)^{-1}``. With ``H`` the
orthogonalization coefficients, ``T = V^H A V`` and ``alpha`` the norm of
``(I - V V^H) A v_{m+1}``, the rational relation reads::

    A V_m = [V_{m+1}, v~] [ T_m                              ]
                          [ -(xi_{m+1} I + t_{m+1}) h E^T H^-1 ]
                          [ -alpha h E^T H^-1                 ]
"""
import warnings

import numpy as np
import scipy.linalg as la

from .errors import BreakdownExact, DeflationWarning, ShiftKrylovError
from .inner import InnerSolverConfig, ShiftedSolver
from .linalg import hessenberg_last_rows_inverse

BREAKDOWN_TOL = 1e-14
DEFLATION_TOL = 1e-12
# alpha^2 = ||Av||^2 - ||V^H Av||^2 loses digits once alpha^2 is this small
# relative to ||Av||^2; below it alpha is recomputed by explicit projection.
ALPHA_CANCEL = 1e-4

__all__ = [
    "RationalKrylovBasis",
    "ExtendedKrylovBasis",
    "PolynomialArnoldiBasis",
    "rk_init",
    "rk_expand",
    "rk_relation_residual",
    "block_rk_init",
    "block_rk_expand",
    "ek_init",
    "ek_expand",
    "poly_arnoldi_init",
    "poly_arnoldi_expand",
    "orthogonality_error",
]


def _solver(A, inner):
    if isinstance(inner, ShiftedSolver):
        return inner
    return ShiftedSolver(A, inner if inner is not None else InnerSolverConfig())


def _mgs2(V, w, coeff):
    """Two MGS passes of ``w`` against the columns of ``V``; ``coeff`` accumulates."""
    for _ in range(2):
        for i in range(V.shape[1]):
            h = np.vdot(V[:, i], w)
            coeff[i] += h
            w -= h * V[:, i]
    return w


def orthogonality_error(V):
    """``max |V^H V - I|``."""
    G = V.conj().T @ V
    return float(np.max(np.abs(G - np.eye(G.shape[0])))) if G.size else 0.0


class _Growable:
    def _grow(self, name, shape):
        arr = getattr(self, name)
        if all(s <= c for s, c in zip(shape, arr.shape)):
            return
        new_shape = tuple(c if s <= c else max(s, 2 * c) for s, c in zip(shape, arr.shape))
        new = np.zeros(new_shape, dtype=complex)
        new[tuple(slice(0, c) for c in arr.shape)] = arr
        setattr(self, name, new)


class RationalKrylovBasis(_Growable):
    """Block rational Krylov basis ``span{B, (A+xi_2 I)^{-1} B, ...}``.

    A width-one block is the plain rational Krylov basis. After ``m``
    expansions the basis holds ``m + 1`` blocks, and the minimal residual
    projection lives on the leading ``m`` of them.

    Attributes
    ----------
    k : int
        Block width after deflation.
    beta : ndarray (k, c)
        Coefficients with ``B = V_1 beta``.
    poles : list of complex
        ``xi_2, ..., xi_{m+1}`` in the order used.
    alpha : ndarray (k, k)
        Upper triangular factor of ``(I - V V^H) A V_{m+1}``.
    breakdown : bool
        Set once an expansion found the space invariant.
    """

    def __init__(self, n, k, capacity=16):
        self.n = n
        self.k = k
        self.nblocks = 0
        self.poles = []
        self.breakdown = False
        self.beta = None
        self.alpha = np.zeros((k, k), dtype=complex)
        self._V = np.zeros((n, capacity * k), dtype=complex)
        self._AV = np.zeros((n, capacity * k), dtype=complex)
        self._H = np.zeros((capacity * k, capacity * k), dtype=complex)
        self._T = np.zeros((capacity * k, capacity * k), dtype=complex)
        self._C = None

    # views -------------------------------------------------------------
    @property
    def dim(self):
        return self.nblocks * self.k

    @property
    def m(self):
        """Number of completed expansions."""
        return len(self.poles)

    @property
    def ls_blocks(self):
        """Blocks carrying the approximate solution."""
        return self.nblocks if self.breakdown else self.nblocks - 1

    @property
    def V(self):
        return self._V[:, : self.dim]

    @property
    def AV(self):
        return self._AV[:, : self.dim]

    @property
    def H(self):
        return self._H[: self.dim, : self.m * self.k]

    @property
    def T(self):
        return self._T[: self.dim, : self.dim]

    @property
    def cached(self):
        """``A V_{m+1}`` (last block) and ``V^H A V_{m+1}`` from the latest step."""
        k = self.k
        return self._AV[:, self.dim - k: self.dim], self._C

    # construction ------------------------------------------------------
    def _set_first(self, A, V1, beta):
        k = self.k
        self._V[:, :k] = V1
        self.beta = beta
        self.nblocks = 1
        AV1 = np.asarray(A @ V1, dtype=complex).reshape(self.n, k)
        self._AV[:, :k] = AV1
        self._T[:k, :k] = V1.conj().T @ AV1
        self._C = self._T[:k, :k].copy()
        self._update_alpha(AV1, self._C)

    def _update_alpha(self, AVl, C):
        k = self.k
        if k == 1:
            av2 = np.vdot(AVl[:, 0], AVl[:, 0]).real
            a2 = av2 - np.vdot(C[:, 0], C[:, 0]).real
            if a2 >= ALPHA_CANCEL * av2:
                self.alpha = np.array([[np.sqrt(a2)]], dtype=complex)
                return
        else:
            G = AVl.conj().T @ AVl - C.conj().T @ C
            G = 0.5 * (G + G.conj().T)
            scale = np.linalg.norm(AVl, 2) ** 2
            if np.linalg.eigvalsh(G).min() >= ALPHA_CANCEL * scale:
                self.alpha = np.linalg.cholesky(G).conj().T
                return
        self.alpha = self._explicit_alpha(AVl)

    def _explicit_alpha(self, AVl):
        V = self.V
        W = AVl - V @ (V.conj().T @ AVl)
        W -= V @ (V.conj().T @ W)
        R = la.qr(W, mode="r")[0][: self.k, :]
        d = np.diag(R)
        ph = np.where(np.abs(d) > 0, d / np.where(np.abs(d) > 0, np.abs(d), 1), 1.0)
        # scale rows so that the diagonal is real and nonnegative
        return ph.conj()[:, None] * R

    def expand(self, A, xi, solver):
        """Append the block ``(A + xi I)^{-1} V_last`` orthonormalized."""
        if self.breakdown:
            raise BreakdownExact("basis already invariant", step=self.m)
        k, d = self.k, self.dim
        Vlast = self._V[:, d - k: d]
        W = np.asarray(solver.solve(xi, Vlast), dtype=complex).reshape(self.n, k)
        self._grow("_V", (self.n, d + k))
        self._grow("_AV", (self.n, d + k))
        self._grow("_H", (d + k, d))
        self._grow("_T", (d + k, d + k))
        coeff = np.zeros((d + k, k), dtype=complex)
        newcols = np.zeros((self.n, k), dtype=complex)
        dead = []
        for c in range(k):
            w = W[:, c].copy()
            w0 = np.linalg.norm(w)
            basis = np.hstack([self._V[:, :d], newcols[:, :c]])
            w = _mgs2(basis, w, coeff[: d + c, c])
            nw = np.linalg.norm(w)
            if nw <= BREAKDOWN_TOL * w0:
                dead.append(c)
                continue
            coeff[d + c, c] = nw
            newcols[:, c] = w / nw
        if dead:
            if len(dead) == k:
                self.breakdown = True
                raise BreakdownExact(f"rational Krylov space invariant at step {self.m + 1}", step=self.m + 1)
            raise ShiftKrylovError(f"partial block breakdown at step {self.m + 1} (columns {dead})")
        self._V[:, d: d + k] = newcols
        self._H[: d + k, d - k: d] = coeff
        self.poles.append(complex(xi))
        self.nblocks += 1
        AVn = np.asarray(A @ newcols, dtype=complex).reshape(self.n, k)
        self._AV[:, d: d + k] = AVn
        C = self._V[:, : d + k].conj().T @ AVn
        self._T[: d + k, d: d + k] = C
        self._T[d: d + k, :d] = newcols.conj().T @ self._AV[:, :d]
        self._C = C
        self._update_alpha(AVn, C)
        return self

    # projected quantities ----------------------------------------------
    def stacked(self):
        """Shift-independent ``((m+2)k, mk)`` minimal residual matrix."""
        k = self.k
        m = self.ls_blocks
        mk = m * k
        S = np.zeros(((m + 2) * k, mk), dtype=complex)
        Tm = self._T[:mk, :mk]
        S[:mk] = Tm
        if self.breakdown or m == 0:
            return S
        Hm = self._H[:mk, :mk]
        hsub = self._H[mk: mk + k, mk - k: mk]
        tlast = self._T[mk: mk + k, mk: mk + k]
        E = hessenberg_last_rows_inverse(Hm, k)
        xi = self.poles[-1]
        S[mk: mk + k] = -(xi * np.eye(k) + tlast) @ hsub @ E
        S[mk + k:] = -self.alpha @ hsub @ E
        return S

    def relation_residual(self, A):
        """``||A V_m - [V_{m+1}, v~] S||_F`` with ``v~`` formed explicitly."""
        k = self.k
        m = self.ls_blocks
        mk = m * k
        Vm = self._V[:, :mk]
        AVm = np.asarray(A @ Vm, dtype=complex)
        S = self.stacked()
        if self.breakdown:
            return float(np.linalg.norm(AVm - Vm @ S[:mk]))
        V1 = self._V[:, : mk + k]
        AVl = self._AV[:, mk: mk + k]
        W = AVl - V1 @ (V1.conj().T @ AVl)
        W -= V1 @ (V1.conj().T @ W)
        d = np.abs(np.diag(self.alpha))
        if np.all(d > 0):
            Vt = la.solve_triangular(self.alpha.T, W.T, lower=True).T
        else:
            Vt = np.zeros_like(W)
        recon = V1 @ S[: mk + k] + Vt @ S[mk + k:]
        return float(np.linalg.norm(AVm - recon))

    def explicit_alpha(self):
        """``alpha`` recomputed from its definition (test support)."""
        k = self.k
        return self._explicit_alpha(self._AV[:, self.dim - k: self.dim])


def rk_init(b, A, capacity=16):
    """Start a single-vector rational basis with ``v_1 = b / ||b||``."""
    b = np.asarray(b, dtype=complex).reshape(-1)
    beta = np.linalg.norm(b)
    if beta == 0:
        raise ValueError("right-hand side must be nonzero")
    basis = RationalKrylovBasis(b.size, 1, capacity)
    basis._set_first(A, (b / beta)[:, None], np.array([[beta]], dtype=complex))
    return basis


def block_rk_init(B, A, capacity=16, deflation_tol=DEFLATION_TOL):
    """Start a block rational basis from ``B`` with rank-revealing deflation."""
    B = np.asarray(B, dtype=complex)
    if B.ndim == 1 or B.shape[1] == 1:
        return rk_init(B.reshape(-1), A, capacity)
    Q, R, piv = la.qr(B, mode="economic", pivoting=True)
    d = np.abs(np.diag(R))
    if d.size == 0 or d[0] == 0:
        raise ValueError("right-hand side block must be nonzero")
    r = int(np.sum(d > deflation_tol * d[0]))
    if r < B.shape[1]:
        warnings.warn(f"right-hand side block deflated from {B.shape[1]} to {r} columns", DeflationWarning, stacklevel=2)
    if r == 1:
        v = Q[:, 0]
        # align with the first nonzero column so that real data stays real
        j = int(np.argmax(np.linalg.norm(B, axis=0)))
        ph = np.vdot(v, B[:, j])
        v = v * (ph / abs(ph))
        basis = RationalKrylovBasis(B.shape[0], 1, capacity)
        basis._set_first(A, v[:, None], v.conj()[None, :] @ B)
        return basis
    V1 = Q[:, :r]
    basis = RationalKrylovBasis(B.shape[0], r, capacity)
    basis._set_first(A, V1, V1.conj().T @ B)
    return basis


def rk_expand(basis, A, xi, inner=None):
    """Expand with pole ``xi``; ``inner`` is a config or a ShiftedSolver."""
    return basis.expand(A, xi, _solver(A, inner))


block_rk_expand = rk_expand


def rk_relation_residual(basis, A):
    return basis.relation_residual(A)


class ExtendedKrylovBasis(_Growable):
    """Orthonormal basis of ``span{b, A^{-1}b, Ab, A^{-2}b, ...}``.

    Each step appends two columns: ``A`` applied to the forward column and
    ``A^{-1}`` applied to the inverse column of the last pair.
    """

    def __init__(self, n, capacity=16):
        self.n = n
        self.ncols = 0
        self.beta = 0.0
        self.breakdown = False
        self._V = np.zeros((n, 2 * capacity), dtype=complex)
        self._AV = np.zeros((n, 2 * capacity), dtype=complex)

    @property
    def nblocks(self):
        return self.ncols // 2

    @property
    def V(self):
        return self._V[:, : self.ncols]

    def _append(self, A, cols):
        d = self.ncols
        self._grow("_V", (self.n, d + 2))
        self._grow("_AV", (self.n, d + 2))
        new = []
        coeff = np.zeros((d + 2, 2), dtype=complex)
        for c, w in enumerate(cols):
            w = np.array(w, dtype=complex)
            w0 = np.linalg.norm(w)
            basis = np.hstack([self._V[:, :d]] + [x[:, None] for x in new])
            w = _mgs2(basis, w, coeff[: d + c, c])
            nw = np.linalg.norm(w)
            if nw <= BREAKDOWN_TOL * w0:
                self.breakdown = True
                break
            coeff[d + c, c] = nw
            new.append(w / nw)
        if new:
            N = np.column_stack(new)
            self._V[:, d: d + len(new)] = N
            self._AV[:, d: d + len(new)] = np.asarray(A @ N, dtype=complex)
            self.ncols = d + len(new)
        if self.breakdown:
            # keep the accepted columns so callers can finish on the invariant space
            raise BreakdownExact(f"extended Krylov space invariant at block {self.nblocks + 1}", step=self.nblocks + 1)
        return coeff

    def expand(self, A, solver):
        if self.breakdown:
            raise BreakdownExact("basis already invariant")
        d = self.ncols
        fwd = self._AV[:, d - 2].copy()
        inv = solver.solve(0.0, self._V[:, d - 1])
        self._append(A, [fwd, inv])
        return self

    def T_under(self, m):
        """``V_{m+1}^H A V_m``, shape ``(2m+2, 2m)``."""
        if m + 1 > self.nblocks:
            raise ValueError("basis too small for the requested projection")
        return self._V[:, : 2 * m + 2].conj().T @ self._AV[:, : 2 * m]

    def relation_residual(self, m):
        return float(np.linalg.norm(self._AV[:, : 2 * m] - self._V[:, : 2 * m + 2] @ self.T_under(m)))


def ek_init(b, A, inner=None, capacity=16):
    """``V_1 = orth[b, A^{-1} b]``; raises BreakdownExact if they are collinear."""
    solver = _solver(A, inner)
    b = np.asarray(b, dtype=complex).reshape(-1)
    basis = ExtendedKrylovBasis(b.size, capacity)
    basis.beta = float(np.linalg.norm(b))
    if basis.beta == 0:
        raise ValueError("right-hand side must be nonzero")
    basis._append(A, [b, solver.solve(0.0, b)])
    return basis


def ek_expand(basis, A, inner=None):
    return basis.expand(A, _solver(A, inner))


class PolynomialArnoldiBasis(_Growable):
    """Arnoldi basis of ``span{r, Ar, A^2 r, ...}`` with ``A V_m = V_{m+1} Hbar_m``."""

    def __init__(self, r, capacity=32):
        r = np.asarray(r, dtype=complex).reshape(-1)
        self.n = r.size
        self.beta = float(np.linalg.norm(r))
        if self.beta == 0:
            raise ValueError("starting vector must be nonzero")
        self.m = 0
        self.breakdown = False
        self._V = np.zeros((self.n, capacity + 1), dtype=complex)
        self._H = np.zeros((capacity + 1, capacity), dtype=complex)
        self._V[:, 0] = r / self.beta

    @property
    def V(self):
        return self._V[:, : self.m + 1]

    @property
    def Hbar(self):
        return self._H[: self.m + 1, : self.m]

    def expand(self, A):
        if self.breakdown:
            raise BreakdownExact("Krylov space already invariant", step=self.m)
        m = self.m
        self._grow("_V", (self.n, m + 2))
        self._grow("_H", (m + 2, m + 1))
        w = np.asarray(A @ self._V[:, m], dtype=complex)
        w0 = np.linalg.norm(w)
        w = _mgs2(self._V[:, : m + 1], w, self._H[: m + 1, m])
        h = np.linalg.norm(w)
        self.m = m + 1
        if h <= BREAKDOWN_TOL * w0:
            self._H[m + 1, m] = 0.0
            self.breakdown = True
            raise BreakdownExact(f"polynomial Krylov space invariant at step {m + 1}", step=m + 1)
        self._H[m + 1, m] = h
        self._V[:, m + 1] = w / h
        return self

    def relation_residual(self, A, s=0.0):
        """``||(A + sI) V_m - V_{m+1} (Hbar_m + s [I; 0])||_F``."""
        m = self.m
        Vm = self._V[:, :m]
        Hs = self.Hbar.copy()
        Hs[:m, :m] += s * np.eye(m)
        left = np.asarray(A @ Vm, dtype=complex) + s * Vm
        return float(np.linalg.norm(left - self._V[:, : m + 1] @ Hs))


def poly_arnoldi_init(r, capacity=32):
    return PolynomialArnoldiBasis(r, capacity)


def poly_arnoldi_expand(basis, A):
    return basis.expand(A)
