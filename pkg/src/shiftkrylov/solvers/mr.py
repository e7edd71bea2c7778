"""Minimal residual rational Krylov solvers for shifted systems.

One core handles the three right-hand side forms. The rational basis is
built from a block ``B0`` of width ``k`` (``k = 1`` for a single vector) and
the right-hand side of shift ``i`` is ``V_1 beta W_i``; the projected least
squares problem of shift ``i`` is then::

    min || (stacked + s_i [I; 0; 0]) y - E_1 beta W_i ||_F

with ``W_i = 1`` for a single vector, ``W_i = I`` for a block and
``W_i = B2[i]^T`` for the low-rank family ``b_i = B1 B2[i]^T``.
"""
import time
from dataclasses import dataclass

import numpy as np

from ..bases import RationalKrylovBasis, block_rk_init, rk_init
from ..errors import BreakdownExact, SingularOperator, SingularProjected
from ..inner import ShiftedSolver
from ..linalg import householder_lstsq, householder_qr, tri_solve_upper
from .types import OuterConfig, ShiftedProblem, SolveReport

__all__ = [
    "ProjectedLeastSquares",
    "project_ls_assemble",
    "solve_shift_ls",
    "select_next_pole",
    "select_next_pole_index",
    "first_pole",
    "mr_rksm",
    "block_mr_rksm",
    "mr_rksm_lowrank_rhs",
]

SINGULAR_NUDGE = 1e-8


@dataclass
class ProjectedLeastSquares:
    """Shift-independent part of the projected problem.

    ``stacked`` has ``(m+2)k`` rows and ``mk`` columns; the matrix for shift
    ``s`` adds ``s`` to the leading ``mk x mk`` diagonal.
    """

    stacked: np.ndarray
    beta: np.ndarray
    k: int = 1

    @property
    def ncols(self):
        return self.stacked.shape[1]

    def matrix(self, s):
        M = self.stacked.astype(complex, copy=True)
        idx = np.arange(self.ncols)
        M[idx, idx] += s
        return M

    def rhs(self, W=None):
        q = 1 if W is None else np.shape(W)[1]
        r = np.zeros((self.stacked.shape[0], q), dtype=complex)
        r[: self.k] = self.beta if W is None else self.beta @ np.asarray(W)
        return r

    def factors(self, s):
        return householder_qr(self.matrix(s))


def project_ls_assemble(basis: RationalKrylovBasis):
    """Assemble the minimal residual matrix of the current basis."""
    if basis.ls_blocks < 1:
        raise ValueError("the basis needs at least one expansion")
    return ProjectedLeastSquares(basis.stacked(), basis.beta.copy(), basis.k)


def solve_shift_ls(pls, s, W=None):
    """Solve the projected problem of one shift through its QR factors.

    Returns
    -------
    y : ndarray (mk,) or (mk, q)
        ``G^{-1} Q^H rhs``.
    resnorm : float
        ``||P^H rhs||_F``, the norm of the optimal residual.
    """
    F = pls.factors(s)
    r = pls.rhs(W)
    y = tri_solve_upper(F.G, F.Q.conj().T @ r)
    res = float(np.linalg.norm(F.P.conj().T @ r))
    return (y[:, 0] if y.shape[1] == 1 else y), res


def select_next_pole_index(resnorms, active=None, exclude=None):
    """Index of the largest active residual, ties to the smallest index.

    ``exclude`` (an index) is skipped unless it is the only active shift.
    """
    r = np.asarray(resnorms, dtype=float)
    act = np.ones(r.size, dtype=bool) if active is None else np.asarray(active, dtype=bool).copy()
    if not act.any():
        raise ValueError("no active shift to select a pole from")
    if exclude is not None and act.sum() > 1:
        act[exclude] = False
    masked = np.where(act, r, -np.inf)
    return int(np.argmax(masked))


def select_next_pole(resnorms, shifts, active=None, exclude=None):
    """Shift value with the largest active residual (see ``select_next_pole_index``)."""
    return complex(np.asarray(shifts)[select_next_pole_index(resnorms, active, exclude)])


def first_pole(shifts, rule="farthest-from-mean"):
    """Return ``(index or None, pole)`` for the first expansion."""
    s = np.asarray(shifts, dtype=complex)
    if not isinstance(rule, str):
        return None, complex(rule)
    if rule == "first-shift":
        return 0, complex(s[0])
    d = np.abs(s - s.mean())
    i = int(np.argmax(d))
    return i, complex(s[i])


def _expand(basis, A, xi, solver, notes):
    try:
        basis.expand(A, xi, solver)
    except SingularOperator:
        nudged = xi + SINGULAR_NUDGE * (1.0 + abs(xi))
        notes.append(f"pole {xi} made A + xi I singular; used {nudged} instead")
        basis.expand(A, nudged, solver)


def _batched_ls(S, shifts, rhs):
    """Least squares for a stack of shifts; singular ones come back as NaN."""
    na = shifts.size
    rows, cols = S.shape
    M = np.broadcast_to(S, (na, rows, cols)).copy()
    idx = np.arange(cols)
    M[:, idx, idx] += shifts[:, None]
    try:
        return householder_lstsq(M, rhs)
    except SingularProjected:
        y = np.full((na, cols, rhs.shape[2]), np.nan, dtype=complex)
        res = np.full(na, np.nan)
        for j in range(na):
            try:
                yj, rj = householder_lstsq(M[j: j + 1], rhs[j: j + 1])
            except SingularProjected:
                continue
            y[j], res[j] = yj[0], rj[0]
        return y, res


def _true_rhs_norms(problem):
    if problem.mode == "single":
        return np.full(len(problem.shifts), np.linalg.norm(problem.b))
    if problem.mode == "block":
        return np.full(len(problem.shifts), np.linalg.norm(problem.B))
    return np.linalg.norm(problem.B1 @ problem.B2.T, axis=0)


def audit_residuals(problem, X, q=1):
    """True relative residuals ``||b_i - (A + s_i I) x_i|| / ||b_i||``."""
    s = problem.s
    norms = _true_rhs_norms(problem)
    out = np.zeros(s.size)
    chunk = max(1, 256 // q)
    for start in range(0, s.size, chunk):
        stop = min(s.size, start + chunk)
        Xc = X[:, start * q: stop * q]
        AX = np.asarray(problem.A @ Xc, dtype=complex)
        for i in range(start, stop):
            cols = slice((i - start) * q, (i - start + 1) * q)
            r = problem.rhs(i) - (AX[:, cols] + s[i] * Xc[:, cols])
            out[i] = np.linalg.norm(r) / norms[i] if norms[i] > 0 else np.linalg.norm(r)
    return out


def _mr_core(problem, cfg, B0, W, name, callback=None):
    t0 = time.perf_counter()
    cfg = cfg or OuterConfig()
    A = problem.A
    s = problem.s
    nshift = s.size
    solver = ShiftedSolver(A, cfg.inner)
    basis = rk_init(B0[:, 0], A) if B0.shape[1] == 1 else block_rk_init(B0, A)
    k = basis.k
    q = W.shape[2]
    BW = np.einsum("kc,icq->ikq", basis.beta, W)
    norms = _true_rhs_norms(problem)
    tol = float(cfg.tol)
    conv_at = np.where(norms == 0, 0, -1)
    hist = [np.where(norms == 0, 0.0, 1.0)]
    ys = {}
    notes = []
    wall = []
    status = "converged"
    m = 0
    idx0, xi = first_pole(s, cfg.first_pole)
    last_idx = idx0
    while np.any(conv_at < 0):
        if m >= cfg.maxit:
            status = "maxit"
            break
        m += 1
        try:
            _expand(basis, A, xi, solver, notes)
        except BreakdownExact:
            notes.append(f"invariant subspace found at iteration {m}")
        S = basis.stacked()
        active = np.flatnonzero(conv_at < 0)
        rhs = np.zeros((active.size, S.shape[0], q), dtype=complex)
        rhs[:, :k, :] = BW[active]
        y, res = _batched_ls(S, s[active], rhs)
        if callback is not None:
            callback({"m": m, "basis": basis, "active": active, "y": y, "resnorm": res, "stacked": S})
        row = np.full(nshift, np.nan)
        row[active] = res / np.where(norms[active] > 0, norms[active], 1.0)
        hist.append(row)
        for j, i in enumerate(active):
            if np.isnan(res[j]):
                continue
            ys[i] = y[j]
            if res[j] <= tol * norms[i]:
                conv_at[i] = m
        wall.append(time.perf_counter() - t0)
        if basis.breakdown:
            if np.any(conv_at < 0):
                status = "breakdown"
            break
        act = conv_at < 0
        if not act.any():
            break
        last_idx = select_next_pole_index(np.nan_to_num(row, nan=-np.inf), act, exclude=last_idx)
        xi = complex(s[last_idx])
    rank = basis.ls_blocks * k if m > 0 else 0
    Y = np.zeros((rank, nshift * q), dtype=complex)
    for i, yi in ys.items():
        Y[: yi.shape[0], i * q: (i + 1) * q] = yi
    rep = SolveReport(
        solver=name,
        shifts=s.copy(),
        residual_history=np.array(hist),
        rhs_norms=norms,
        converged_at=conv_at,
        tol=tol,
        poles=list(basis.poles),
        iterations=m,
        rank=rank,
        status=status,
        basis=basis,
        Y=Y,
        q=q,
        wall_times=wall if wall else [time.perf_counter() - t0],
        notes=notes,
    )
    if cfg.audit:
        rep.audit_residuals = audit_residuals(problem, rep.X, q)
        bad = np.flatnonzero(rep.converged & (rep.audit_residuals > tol))
        if bad.size:
            rep.notes.append(f"{bad.size} converged shifts fail the true-residual audit (worst {rep.audit_residuals[bad].max():.2e})")
    return rep


def mr_rksm(problem: ShiftedProblem, cfg=None, callback=None):
    """Minimal residual rational Krylov solve of ``(A + s_i I) x_i = b``.

    Parameters
    ----------
    problem : ShiftedProblem
        Single right-hand side ``b``.
    cfg : OuterConfig, optional
    callback : callable, optional
        Called after every projected solve with a dict holding ``m``,
        ``basis``, ``active``, ``y``, ``resnorm`` and ``stacked``.

    Returns
    -------
    SolveReport
        ``status`` is ``"maxit"`` when some shifts did not converge.
    """
    if problem.mode != "single":
        raise ValueError("mr_rksm needs a single right-hand side; use block_mr_rksm or mr_rksm_lowrank_rhs")
    B0 = np.asarray(problem.b, dtype=complex)[:, None]
    W = np.ones((len(problem.shifts), 1, 1), dtype=complex)
    return _mr_core(problem, cfg, B0, W, "mr-rksm", callback)


def block_mr_rksm(problem: ShiftedProblem, cfg=None, callback=None):
    """Block variant: every shift solves ``(A + s_i I) X_i = B``.

    Columns of ``B`` that are numerically dependent are deflated from the
    basis (with a DeflationWarning); the solutions still cover every column.
    """
    if problem.mode == "single":
        B = problem.b[:, None]
    elif problem.mode == "block":
        B = problem.B
    else:
        raise ValueError("block_mr_rksm needs b or B")
    B0 = np.asarray(B, dtype=complex)
    c = B0.shape[1]
    W = np.broadcast_to(np.eye(c, dtype=complex), (len(problem.shifts), c, c)).copy()
    return _mr_core(problem, cfg, B0, W, "block-mr-rksm", callback)


def mr_rksm_lowrank_rhs(problem: ShiftedProblem, cfg=None, callback=None):
    """Shift-dependent right-hand sides ``b_i = B1 @ B2[i]`` from one basis of ``B1``."""
    if problem.mode != "lowrank":
        raise ValueError("mr_rksm_lowrank_rhs needs (B1, B2)")
    B0 = np.asarray(problem.B1, dtype=complex)
    W = np.asarray(problem.B2, dtype=complex)[:, :, None]
    return _mr_core(problem, cfg, B0, W, "mr-rksm-lowrank", callback)
