"""Problem, configuration and report containers shared by the outer solvers."""
from dataclasses import dataclass, field
from typing import Any, Optional, Union

import numpy as np

from ..errors import DimensionError
from ..generators import ShiftSet
from ..inner import InnerSolverConfig

__all__ = ["ShiftedProblem", "OuterConfig", "SolveReport", "FIRST_POLE_RULES"]

FIRST_POLE_RULES = ("farthest-from-mean", "first-shift")


@dataclass
class ShiftedProblem:
    """``(A + s_i I) x_i = b_i`` for every shift ``s_i``.

    Exactly one right-hand side form is given: a vector ``b`` shared by all
    shifts, a block ``B`` shared by all shifts, or the low-rank pair
    ``(B1, B2)`` with ``b_i = B1 @ B2[i]``.
    """

    A: Any
    shifts: Union[ShiftSet, np.ndarray]
    b: Optional[np.ndarray] = None
    B: Optional[np.ndarray] = None
    B1: Optional[np.ndarray] = None
    B2: Optional[np.ndarray] = None

    def __post_init__(self):
        if not isinstance(self.shifts, ShiftSet):
            self.shifts = ShiftSet(self.shifts)
        n = self.A.shape[0]
        if self.A.shape != (n, n):
            raise DimensionError("A must be square")
        given = [x is not None for x in (self.b, self.B, self.B1)]
        if sum(given) != 1:
            raise ValueError("give exactly one of b, B or (B1, B2)")
        if self.b is not None:
            self.b = np.asarray(self.b).reshape(-1)
            if self.b.size != n:
                raise DimensionError(f"b has {self.b.size} entries, A has order {n}")
        if self.B is not None:
            self.B = np.atleast_2d(np.asarray(self.B).T).T
            if self.B.shape[0] != n:
                raise DimensionError("B must have n rows")
        if self.B1 is not None:
            if self.B2 is None:
                raise ValueError("B1 needs a matching B2")
            self.B1 = np.atleast_2d(np.asarray(self.B1).T).T
            self.B2 = np.atleast_2d(np.asarray(self.B2).T).T
            if self.B1.shape[0] != n:
                raise DimensionError("B1 must have n rows")
            if self.B2.shape != (len(self.shifts), self.B1.shape[1]):
                raise DimensionError("B2 must be (number of shifts) x (columns of B1)")
        elif self.B2 is not None:
            raise ValueError("B2 given without B1")

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def mode(self):
        if self.b is not None:
            return "single"
        return "block" if self.B is not None else "lowrank"

    @property
    def s(self):
        return self.shifts.shifts

    @property
    def q(self):
        """Columns of each per-shift right-hand side."""
        return self.B.shape[1] if self.mode == "block" else 1

    def rhs(self, i):
        """Right-hand side of shift ``i`` as an (n, q) array."""
        if self.mode == "single":
            return self.b[:, None]
        if self.mode == "block":
            return self.B
        return (self.B1 @ self.B2[i])[:, None]


@dataclass
class OuterConfig:
    """Outer-iteration settings.

    ``first_pole`` is one of ``FIRST_POLE_RULES`` or an explicit number.
    """

    tol: float = 1e-8
    maxit: int = 100
    first_pole: Any = "farthest-from-mean"
    inner: InnerSolverConfig = field(default_factory=InnerSolverConfig)
    audit: bool = True

    def __post_init__(self):
        if not 0.0 < float(self.tol) < 1.0:
            raise ValueError("tol must lie in (0, 1)")
        if int(self.maxit) < 1:
            raise ValueError("maxit must be >= 1")
        if isinstance(self.first_pole, str) and self.first_pole not in FIRST_POLE_RULES:
            raise ValueError(f"first_pole must be one of {FIRST_POLE_RULES} or a number")
        if isinstance(self.inner, dict):
            self.inner = InnerSolverConfig(**self.inner)


@dataclass
class SolveReport:
    """Outcome of one outer solve.

    Attributes
    ----------
    solver : str
    shifts : ndarray
    residual_history : ndarray (iterations + 1, nshifts)
        Estimated residual norms relative to each shift's right-hand side;
        row 0 is the zero initial guess. NaN once a shift has converged.
    rhs_norms : ndarray (nshifts,)
    converged_at : ndarray of int (nshifts,)
        Iteration of convergence, -1 if never.
    poles : list of complex
    iterations : int
    rank : int or None
        Dimension of the space carrying the solutions (None for FOM).
    status : {"converged", "maxit", "breakdown"}
    basis : object
    Y : ndarray or None
        Coefficients, shape (rank, nshifts * q); X = V[:, :rank] @ Y.
    audit_residuals : ndarray or None
        Recomputed true relative residuals.
    """

    solver: str
    shifts: np.ndarray
    residual_history: np.ndarray
    rhs_norms: np.ndarray
    converged_at: np.ndarray
    tol: float
    poles: list = field(default_factory=list)
    iterations: int = 0
    cycles: Optional[int] = None
    rank: Optional[int] = None
    status: str = "converged"
    basis: Any = None
    Y: Optional[np.ndarray] = None
    q: int = 1
    X_dense: Optional[np.ndarray] = None
    wall_times: list = field(default_factory=list)
    audit_residuals: Optional[np.ndarray] = None
    notes: list = field(default_factory=list)

    @property
    def converged(self):
        return self.converged_at >= 0

    @property
    def all_converged(self):
        return bool(np.all(self.converged))

    @property
    def wall_time(self):
        return self.wall_times[-1] if self.wall_times else 0.0

    @property
    def X(self):
        """Solutions, shape (n, nshifts * q)."""
        if self.X_dense is not None:
            return self.X_dense
        return self.basis.V[:, : self.rank] @ self.Y

    def solution(self, i):
        cols = slice(i * self.q, (i + 1) * self.q)
        if self.X_dense is not None:
            x = self.X_dense[:, cols]
        else:
            x = self.basis.V[:, : self.rank] @ self.Y[:, cols]
        return x[:, 0] if self.q == 1 else x

    @property
    def final_residuals(self):
        """Last estimated relative residual of every shift."""
        h = self.residual_history
        out = np.empty(h.shape[1])
        for j in range(h.shape[1]):
            col = h[:, j][~np.isnan(h[:, j])]
            out[j] = col[-1] if col.size else np.nan
        return out

    @property
    def max_final_residual(self):
        vals = self.audit_residuals if self.audit_residuals is not None else self.final_residuals
        return float(np.nanmax(vals))

    def summary(self):
        """JSON-friendly digest."""
        return {
            "solver": self.solver,
            "status": self.status,
            "iterations": int(self.iterations),
            "cycles": self.cycles,
            "rank": self.rank,
            "nshifts": int(self.shifts.size),
            "converged": int(np.sum(self.converged)),
            "wall_time_seconds": float(self.wall_time),
            "max_final_residual": self.max_final_residual,
            "converged_at": [int(c) for c in self.converged_at],
            "poles": [[float(p.real), float(p.imag)] for p in self.poles],
            "notes": list(self.notes),
        }
