"""Reference solvers: Galerkin extended Krylov, restarted shifted FOM and a
direct per-shift solve."""
import time

import numpy as np
import scipy.sparse as sps
import scipy.sparse.linalg as spla

from ..bases import PolynomialArnoldiBasis, ek_expand, ek_init
from ..errors import BreakdownExact
from ..inner import ShiftedSolver
from ..linalg import dense_lu_solve
from ..sparse import CsrMatrix, as_dense
from .mr import _true_rhs_norms, audit_residuals
from .types import OuterConfig, ShiftedProblem, SolveReport

__all__ = ["geksm", "fom_restarted", "direct_solve"]


def _require_single(problem, name):
    if problem.mode != "single":
        raise ValueError(f"{name} needs a single right-hand side")


def _galerkin(T, s, beta):
    """Solve ``(T + s_i I) y_i = beta e_1`` for every shift; singular ones give NaN."""
    d = T.shape[0]
    M = np.broadcast_to(T, (s.size, d, d)).copy()
    M[:, np.arange(d), np.arange(d)] += s[:, None]
    rhs = np.zeros((s.size, d, 1), dtype=complex)
    rhs[:, 0, 0] = beta
    y = np.full((s.size, d), np.nan, dtype=complex)
    ok = np.ones(s.size, dtype=bool)
    try:
        y[:] = np.linalg.solve(M, rhs)[:, :, 0]
    except np.linalg.LinAlgError:
        for j in range(s.size):
            try:
                y[j] = np.linalg.solve(M[j], rhs[j, :, 0])
            except np.linalg.LinAlgError:
                ok[j] = False
    ok &= np.all(np.isfinite(y), axis=1)
    return y, ok


def geksm(problem: ShiftedProblem, cfg=None, callback=None):
    """Galerkin projection onto the extended Krylov space of ``(A, b)``.

    At step ``m`` the basis ``V_{m+1}`` (``2m + 2`` columns) gives
    ``A V_m = V_{m+1} T_under`` and the residual of shift ``s`` is
    ``||T_under[2m:] y||`` with ``y`` from ``(T_m + s I) y = beta e_1``.
    Shifts whose projected matrix is singular are skipped for that step.
    """
    _require_single(problem, "geksm")
    t0 = time.perf_counter()
    cfg = cfg or OuterConfig()
    A, s = problem.A, problem.s
    nshift = s.size
    tol = float(cfg.tol)
    norms = _true_rhs_norms(problem)
    solver = ShiftedSolver(A, cfg.inner)
    conv_at = np.where(norms == 0, 0, -1)
    hist = [np.where(norms == 0, 0.0, 1.0)]
    ys, notes, wall = {}, [], []
    status = "converged"
    m = 0
    basis = None
    rank = 0
    if np.any(conv_at < 0):
        try:
            basis = ek_init(problem.b, A, solver)
        except BreakdownExact:
            basis = None
    while basis is not None and np.any(conv_at < 0):
        if m >= cfg.maxit:
            status = "maxit"
            break
        m += 1
        active = np.flatnonzero(conv_at < 0)
        try:
            ek_expand(basis, A, solver)
            broken = False
        except BreakdownExact:
            broken = True
        if broken:
            # finish on the invariant space with explicit residuals
            V = basis.V
            rank = V.shape[1]
            T = V.conj().T @ basis._AV[:, :rank]
            y, ok = _galerkin(T, s[active], basis.beta)
            R = np.asarray(A @ (V @ y.T), dtype=complex) + (V @ y.T) * s[active]
            R -= problem.b[:, None]
            res = np.linalg.norm(R, axis=0)
            notes.append(f"extended Krylov space invariant at step {m}")
        else:
            rank = 2 * m
            Tu = basis.T_under(m)
            y, ok = _galerkin(Tu[:rank], s[active], basis.beta)
            res = np.linalg.norm(Tu[rank:] @ y.T, axis=0)
        res = np.where(ok, res, np.nan)
        if callback is not None:
            callback({"m": m, "basis": basis, "active": active, "y": y, "resnorm": res})
        row = np.full(nshift, np.nan)
        row[active] = res / np.where(norms[active] > 0, norms[active], 1.0)
        hist.append(row)
        for j, i in enumerate(active):
            if not ok[j]:
                continue
            ys[i] = y[j]
            if res[j] <= tol * norms[i]:
                conv_at[i] = m
        wall.append(time.perf_counter() - t0)
        if broken:
            if np.any(conv_at < 0):
                status = "breakdown"
            break
    if basis is None and np.any(conv_at < 0):
        # b and A^{-1} b are collinear: b is an eigenvector
        lam = complex(np.vdot(problem.b, A @ problem.b) / np.vdot(problem.b, problem.b))
        X = problem.b[:, None] / (lam + s)[None, :]
        conv_at[conv_at < 0] = 0
        notes.append("right-hand side spans an invariant subspace")
        rep = SolveReport("geksm", s.copy(), np.array(hist), norms, conv_at, tol, X_dense=X,
                          iterations=0, rank=1, status="breakdown", wall_times=[time.perf_counter() - t0], notes=notes)
        if cfg.audit:
            rep.audit_residuals = audit_residuals(problem, X)
        return rep
    Y = np.zeros((rank, nshift), dtype=complex)
    for i, yi in ys.items():
        Y[: yi.size, i] = yi
    rep = SolveReport(
        solver="geksm",
        shifts=s.copy(),
        residual_history=np.array(hist),
        rhs_norms=norms,
        converged_at=conv_at,
        tol=tol,
        iterations=m,
        rank=rank,
        status=status,
        basis=basis,
        Y=Y,
        wall_times=wall or [time.perf_counter() - t0],
        notes=notes,
    )
    if cfg.audit:
        rep.audit_residuals = audit_residuals(problem, rep.X)
    return rep


class _ShiftedGivens:
    """Incremental Givens QR of ``Hbar_j + s [I; 0]`` for a set of shifts.

    The FOM residual equals the GMRES residual divided by the cosine of the
    last rotation, so each step costs ``O(j)`` per shift.
    """

    def __init__(self, shifts, capacity):
        self.s = np.asarray(shifts, dtype=complex)
        ns = self.s.size
        self.cs = np.zeros((ns, capacity))
        self.sn = np.zeros((ns, capacity), dtype=complex)
        self.g = np.ones(ns, dtype=complex)
        self.j = 0

    def push(self, hcol):
        """Add column ``j`` (length ``j + 2``); return ``|e_j^T (H_j + sI)^{-1} e_1| h_{j+1,j}``."""
        j = self.j
        col = np.broadcast_to(hcol, (self.s.size, j + 2)).astype(complex)
        col[:, j] += self.s
        cs, sn = self.cs, self.sn
        for i in range(j):
            a, b = col[:, i].copy(), col[:, i + 1].copy()
            col[:, i] = cs[:, i] * a + sn[:, i] * b
            col[:, i + 1] = -np.conj(sn[:, i]) * a + cs[:, i] * b
        a, b = col[:, j], col[:, j + 1]
        rho = np.hypot(np.abs(a), np.abs(b))
        safe = np.where(rho > 0, rho, 1.0)
        aa = np.abs(a)
        phase = np.where(aa > 0, a / np.where(aa > 0, aa, 1.0), 1.0)
        cs[:, j] = np.where(rho > 0, aa / safe, 1.0)
        sn[:, j] = phase * np.conj(b) / safe
        gmres = np.abs(self.g) * np.abs(sn[:, j])
        self.g = -np.conj(sn[:, j]) * self.g
        self.j = j + 1
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(cs[:, j] > 0, gmres / cs[:, j], np.inf)


def fom_restarted(problem: ShiftedProblem, restart=100, max_cycles=10, cfg=None, callback=None):
    """Restarted shifted FOM with collinear residuals.

    Each cycle builds one polynomial Arnoldi basis from the current common
    residual direction ``v``. With ``r_i = gamma_i v`` the projected systems
    are ``(H_j + s_i I) y_i = gamma_i e_1`` and the new residual is
    ``-gamma_i h_{j+1,j} (e_j^T y_i) v_{j+1}``, parallel for every shift.
    Converged shifts keep the iterate of the step at which they converged.

    ``callback`` receives, at every Arnoldi step, a dict with ``cycle``,
    ``j``, ``basis``, ``gamma`` (per-shift cofactors at the start of the
    cycle), ``active`` and ``X`` (solutions at the start of the cycle).
    """
    _require_single(problem, "fom_restarted")
    t0 = time.perf_counter()
    cfg = cfg or OuterConfig()
    A, s = problem.A, problem.s
    nshift, n = s.size, problem.n
    tol = float(cfg.tol)
    norms = _true_rhs_norms(problem)
    conv_at = np.where(norms == 0, 0, -1)
    hist = [np.where(norms == 0, 0.0, 1.0)]
    X = np.zeros((n, nshift), dtype=complex)
    beta = float(np.linalg.norm(problem.b))
    gamma = np.full(nshift, beta, dtype=complex)
    v = problem.b / beta if beta > 0 else None
    wall, notes = [], []
    it = 0
    cycles = 0
    status = "converged"
    while np.any(conv_at < 0):
        if cycles >= max_cycles:
            status = "maxit"
            break
        cycles += 1
        basis = PolynomialArnoldiBasis(v, capacity=restart)
        active = np.flatnonzero(conv_at < 0)
        cycle_shifts = active.copy()
        givens = _ShiftedGivens(s[cycle_shifts], restart)
        stop_at = {}
        broken = False
        for j in range(1, restart + 1):
            try:
                basis.expand(A)
            except BreakdownExact:
                broken = True
            it += 1
            fac_all = givens.push(basis._H[: j + 1, j - 1])
            fac = fac_all[np.searchsorted(cycle_shifts, active)]
            if broken:
                fac = np.zeros(active.size)
            res = np.abs(gamma[active]) * fac
            row = np.full(nshift, np.nan)
            row[active] = res / norms[active]
            hist.append(row)
            newly = [(a, i) for a, i in enumerate(active) if res[a] <= tol * norms[i]]
            for a, i in newly:
                conv_at[i] = it
                stop_at[i] = j
            if callback is not None:
                callback({"cycle": cycles, "j": j, "basis": basis, "gamma": gamma.copy(), "active": active, "X": X})
            wall.append(time.perf_counter() - t0)
            keep = conv_at[active] < 0
            if newly:
                active = active[keep]
            if broken or active.size == 0:
                break
        jend = basis.m
        for i in range(nshift):
            if i in stop_at or i in active:
                jj = stop_at.get(i, jend)
                Hj = basis.Hbar[:jj, :jj] + s[i] * np.eye(jj)
                e1 = np.zeros(jj, dtype=complex)
                e1[0] = gamma[i]
                y = np.linalg.solve(Hj, e1)
                X[:, i] += basis._V[:, :jj] @ y
                gamma[i] = -basis._H[jj, jj - 1] * y[-1]
        if broken:
            notes.append(f"Krylov space invariant in cycle {cycles}")
            if np.any(conv_at < 0):
                status = "breakdown"
            break
        if active.size:
            v = basis._V[:, jend].copy()
    rep = SolveReport(
        solver="fom",
        shifts=s.copy(),
        residual_history=np.array(hist),
        rhs_norms=norms,
        converged_at=conv_at,
        tol=tol,
        iterations=it,
        cycles=cycles,
        rank=None,
        status=status,
        X_dense=X,
        wall_times=wall or [time.perf_counter() - t0],
        notes=notes,
    )
    if cfg.audit:
        rep.audit_residuals = audit_residuals(problem, X)
    return rep


def direct_solve(problem: ShiftedProblem, cfg=None):
    """Per-shift direct solves: sparse LU for sparse ``A``, dense LU otherwise."""
    t0 = time.perf_counter()
    A, s = problem.A, problem.s
    tol = float((cfg or OuterConfig()).tol)
    q = problem.q
    X = np.zeros((problem.n, s.size * q), dtype=complex)
    sparse_in = isinstance(A, CsrMatrix) or sps.issparse(A)
    if sparse_in:
        As = (A.to_scipy() if isinstance(A, CsrMatrix) else sps.csr_matrix(A)).astype(complex)
        eye = sps.identity(problem.n, dtype=complex, format="csc")
    else:
        D = as_dense(A).astype(complex)
    for i, si in enumerate(s):
        rhs = problem.rhs(i).astype(complex)
        if sparse_in:
            X[:, i * q:(i + 1) * q] = spla.splu(sps.csc_matrix(As + si * eye)).solve(rhs)
        else:
            X[:, i * q:(i + 1) * q] = dense_lu_solve(D + si * np.eye(problem.n), rhs)
    norms = _true_rhs_norms(problem)
    res = audit_residuals(problem, X, q)
    rep = SolveReport(
        solver="direct",
        shifts=s.copy(),
        residual_history=np.vstack([np.ones(s.size), res]),
        rhs_norms=norms,
        converged_at=np.where(res <= tol, 1, -1),
        tol=tol,
        iterations=1,
        rank=None,
        status="converged" if np.all(res <= tol) else "maxit",
        q=q,
        X_dense=X,
        wall_times=[time.perf_counter() - t0],
    )
    rep.audit_residuals = res
    return rep
