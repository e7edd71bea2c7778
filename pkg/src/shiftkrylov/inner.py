"""Solvers for the single shifted systems ``(A + xi I) w = v``.

Three routes are available: a dense LU of ``A + xi I`` (``A`` densified
once), a sparse LU (SuperLU through scipy) and restarted GMRES with right
preconditioning by ILU(0) or Jacobi.
"""
from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sps
import scipy.sparse.linalg as spla

from .errors import NotConverged, SingularOperator, StructureError
from .linalg import lu_factor
from .sparse import CsrMatrix, as_dense

__all__ = [
    "InnerSolverConfig",
    "Ilu0Factors",
    "ilu0_factor",
    "GmresStats",
    "gmres_shifted",
    "ShiftedSolver",
    "solve_shifted",
]

KINDS = ("dense-lu", "sparse-lu", "gmres")
PRECONDITIONERS = ("none", "ilu0", "jacobi")


@dataclass
class InnerSolverConfig:
    kind: str = "dense-lu"
    restart: int = 50
    max_cycles: int = 100
    tol: float = 1e-10
    preconditioner: str = "ilu0"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"inner kind must be one of {KINDS}, got {self.kind!r}")
        if self.preconditioner not in PRECONDITIONERS:
            raise ValueError(f"preconditioner must be one of {PRECONDITIONERS}")
        if int(self.restart) < 1:
            raise ValueError("restart must be >= 1")
        if int(self.max_cycles) < 1:
            raise ValueError("max_cycles must be >= 1")
        if not 0.0 < float(self.tol) < 1.0:
            raise ValueError("tol must lie in (0, 1)")


@dataclass
class Ilu0Factors:
    """ILU(0) of ``A + xi I``: unit lower ``L`` (diagonal implicit) and ``U``.

    Both factors live on the sparsity pattern of ``A``. ``breakdown`` is set
    when a pivot had to be lifted to the ``1e-12 * max|diag|`` floor.
    """

    L: sps.csr_matrix
    U: sps.csr_matrix
    xi: complex
    breakdown: bool = False
    lifted: list = field(default_factory=list)

    def solve(self, v):
        y = spla.spsolve_triangular(self.L, v, lower=True, unit_diagonal=True)
        return spla.spsolve_triangular(self.U, y, lower=False)


def _as_csr(A):
    if isinstance(A, CsrMatrix):
        return A.to_scipy()
    if sps.issparse(A):
        M = sps.csr_matrix(A)
        M.sort_indices()
        return M
    return sps.csr_matrix(np.asarray(A))


def ilu0_factor(A, xi=0.0):
    """Incomplete LU with zero fill of ``A + xi I`` (IKJ ordering)."""
    M = _as_csr(A)
    n = M.shape[0]
    indptr = M.indptr.tolist()
    indices = M.indices.tolist()
    vals = M.data.astype(complex).tolist()
    diag = [-1] * n
    for i in range(n):
        for p in range(indptr[i], indptr[i + 1]):
            if indices[p] == i:
                diag[i] = p
                break
        if diag[i] < 0:
            raise StructureError(f"diagonal entry of row {i} is not stored")
        vals[diag[i]] += xi
    floor = 1e-12 * max(abs(vals[d]) for d in diag)
    lifted = []
    pos = [-1] * n
    for i in range(n):
        start, end = indptr[i], indptr[i + 1]
        for p in range(start, end):
            pos[indices[p]] = p
        for p in range(start, diag[i]):
            k = indices[p]
            lik = vals[p] / vals[diag[k]]
            vals[p] = lik
            for q in range(diag[k] + 1, indptr[k + 1]):
                t = pos[indices[q]]
                if t >= 0:
                    vals[t] -= lik * vals[q]
        d = vals[diag[i]]
        if abs(d) < floor:
            vals[diag[i]] = floor * (d / abs(d) if d != 0 else 1.0)
            lifted.append(i)
        for p in range(start, end):
            pos[indices[p]] = -1
    data = np.array(vals, dtype=complex)
    rows = np.repeat(np.arange(n), np.diff(M.indptr))
    cols = M.indices
    lower = cols < rows
    upper = ~lower
    L = sps.csr_matrix((data[lower], (rows[lower], cols[lower])), shape=(n, n))
    U = sps.csr_matrix((data[upper], (rows[upper], cols[upper])), shape=(n, n))
    return Ilu0Factors(L=L, U=U, xi=complex(xi), breakdown=bool(lifted), lifted=lifted)


@dataclass
class GmresStats:
    iterations: int = 0
    cycles: int = 0
    residuals: list = field(default_factory=list)
    true_residual: float = np.inf
    converged: bool = False


def _givens(a, b):
    if b == 0:
        return 1.0, 0.0
    if a == 0:
        return 0.0, 1.0
    rho = np.hypot(abs(a), abs(b))
    return abs(a) / rho, (a / abs(a)) * np.conj(b) / rho


def gmres_shifted(A, xi, rhs, cfg, precond=None, x0=None):
    """Restarted GMRES for ``(A + xi I) w = rhs``, right preconditioned.

    ``precond`` is any object with ``solve(v)`` approximating
    ``(A + xi I)^{-1} v``. Arnoldi uses modified Gram-Schmidt with one
    reorthogonalization pass.

    Returns
    -------
    w : ndarray
    stats : GmresStats

    Raises
    ------
    NotConverged
        Carries the iterate with the smallest true residual.
    """
    rhs = np.asarray(rhs, dtype=complex)
    n = rhs.size
    tol = float(cfg.tol)
    m = int(cfg.restart)
    apply_m = precond.solve if precond is not None else (lambda v: v)

    def op(x):
        return A @ x + xi * x

    stats = GmresStats()
    bnorm = np.linalg.norm(rhs)
    if bnorm == 0:
        stats.converged, stats.true_residual = True, 0.0
        return np.zeros(n, dtype=complex), stats
    x = np.zeros(n, dtype=complex) if x0 is None else np.array(x0, dtype=complex)
    r = rhs - op(x) if x0 is not None else rhs.copy()
    best_x, best_res = x.copy(), np.linalg.norm(r)
    for cycle in range(int(cfg.max_cycles)):
        beta = np.linalg.norm(r)
        if beta <= tol * bnorm:
            break
        stats.cycles += 1
        V = np.zeros((n, m + 1), dtype=complex)
        H = np.zeros((m + 1, m), dtype=complex)
        cs = np.zeros(m)
        sn = np.zeros(m, dtype=complex)
        g = np.zeros(m + 1, dtype=complex)
        g[0] = beta
        V[:, 0] = r / beta
        j_used = 0
        for j in range(m):
            w = op(apply_m(V[:, j]))
            wnorm = np.linalg.norm(w)
            for _ in range(2):
                for i in range(j + 1):
                    h = np.vdot(V[:, i], w)
                    H[i, j] += h
                    w -= h * V[:, i]
            hnext = np.linalg.norm(w)
            H[j + 1, j] = hnext
            for i in range(j):
                t = cs[i] * H[i, j] + sn[i] * H[i + 1, j]
                H[i + 1, j] = -np.conj(sn[i]) * H[i, j] + cs[i] * H[i + 1, j]
                H[i, j] = t
            cs[j], sn[j] = _givens(H[j, j], H[j + 1, j])
            H[j, j] = cs[j] * H[j, j] + sn[j] * H[j + 1, j]
            H[j + 1, j] = 0.0
            g[j + 1] = -np.conj(sn[j]) * g[j]
            g[j] = cs[j] * g[j]
            stats.iterations += 1
            stats.residuals.append(abs(g[j + 1]))
            j_used = j + 1
            lucky = hnext <= 1e-14 * wnorm
            if lucky or abs(g[j + 1]) <= tol * bnorm:
                break
            V[:, j + 1] = w / hnext
        k = j_used
        y = np.zeros(k, dtype=complex)
        for i in range(k - 1, -1, -1):
            y[i] = (g[i] - H[i, i + 1:k] @ y[i + 1:k]) / H[i, i]
        x = x + apply_m(V[:, :k] @ y)
        r = rhs - op(x)
        res = np.linalg.norm(r)
        if res < best_res:
            best_x, best_res = x.copy(), res
    stats.true_residual = best_res
    if best_res <= tol * bnorm:
        stats.converged = True
        return best_x, stats
    raise NotConverged(
        f"GMRES({m}) reached relative residual {best_res / bnorm:.3e} > {tol:.1e} "
        f"after {stats.cycles} cycles",
        x=best_x,
        residual=best_res,
        stats=stats,
    )


class _SparseLu:
    def __init__(self, lu):
        self.lu = lu

    def solve(self, rhs):
        return self.lu.solve(np.asarray(rhs, dtype=complex))


class _Jacobi:
    def __init__(self, inv_diag):
        self.inv_diag = inv_diag

    def solve(self, v):
        return self.inv_diag * v


class ShiftedSolver:
    """Caching front end for repeated solves with ``A + xi I``.

    The dense route densifies ``A`` once and keeps the LU factors of the
    most recent shifts; the GMRES route caches preconditioners the same way.
    """

    def __init__(self, A, cfg=None, cache_size=4):
        self.A = A
        self.cfg = cfg or InnerSolverConfig()
        self.n = A.shape[0]
        self.cache_size = cache_size
        self._dense = None
        self._cache = OrderedDict()
        self.log = []

    def _cached(self, xi, build):
        key = complex(xi)
        if key in self._cache:
            self._cache.move_to_end(key)
            return self._cache[key]
        val = build(key)
        self._cache[key] = val
        if len(self._cache) > self.cache_size:
            self._cache.popitem(last=False)
        return val

    def _lu(self, xi):
        if self._dense is None:
            self._dense = as_dense(self.A)

        def build(key):
            try:
                return lu_factor(self._dense + key * np.eye(self.n))
            except SingularOperator as exc:
                raise SingularOperator(f"A + ({key})I is singular: {exc}", exc.index, key) from exc

        return self._cached(xi, build)

    def _splu(self, xi):
        def build(key):
            M = sps.csc_matrix(_as_csr(self.A).astype(complex) + key * sps.identity(self.n, format="csc"))
            try:
                return _SparseLu(spla.splu(M))
            except RuntimeError as exc:
                raise SingularOperator(f"A + ({key})I is singular: {exc}", shift=key) from exc

        return self._cached(xi, build)

    def _precond(self, xi):
        kind = self.cfg.preconditioner
        if kind == "none":
            return None
        if kind == "jacobi":
            d = np.asarray(_as_csr(self.A).diagonal(), dtype=complex) + xi
            if np.any(d == 0):
                raise SingularOperator("Jacobi preconditioner has a zero diagonal", shift=xi)
            return _Jacobi(1.0 / d)
        return self._cached(xi, lambda key: ilu0_factor(self.A, key))

    def _residual(self, xi, w, rhs):
        return np.linalg.norm(rhs - (self.A @ w + xi * w), axis=0)

    def solve(self, xi, rhs):
        """Solve ``(A + xi I) w = rhs`` for a vector or an (n, k) block."""
        rhs = np.asarray(rhs, dtype=complex)
        tol = float(self.cfg.tol)
        bnorm = np.linalg.norm(rhs, axis=0)
        if not np.any(bnorm):
            return np.zeros_like(rhs)
        if self.cfg.kind in ("dense-lu", "sparse-lu"):
            F = self._lu(xi) if self.cfg.kind == "dense-lu" else self._splu(xi)
            w = F.solve(rhs)
            res = self._residual(xi, w, rhs)
            if np.any(res > tol * bnorm):
                w = w + F.solve(rhs - (self.A @ w + xi * w))
                res = self._residual(xi, w, rhs)
            self.log.append({"xi": complex(xi), "kind": self.cfg.kind, "residual": float(np.max(res / np.where(bnorm > 0, bnorm, 1)))})
            if np.any(res > tol * bnorm):
                raise NotConverged(
                    f"{self.cfg.kind} solve with xi={xi} left relative residual "
                    f"{np.max(res / np.where(bnorm > 0, bnorm, 1)):.3e} > {tol:.1e}",
                    x=w,
                    residual=res,
                    pole=xi,
                )
            return w
        M = self._precond(xi)
        cols = rhs.reshape(self.n, -1)
        out = np.zeros(cols.shape, dtype=complex)
        for c in range(cols.shape[1]):
            try:
                out[:, c], st = gmres_shifted(self.A, xi, cols[:, c], self.cfg, precond=M)
            except NotConverged as exc:
                exc.pole = xi
                raise
            self.log.append({"xi": complex(xi), "kind": "gmres", "iterations": st.iterations, "cycles": st.cycles})
        return out.reshape(rhs.shape)


def solve_shifted(A, xi, rhs, cfg=None):
    """One-off ``(A + xi I)^{-1} rhs`` through :class:`ShiftedSolver`."""
    return ShiftedSolver(A, cfg).solve(xi, rhs)
