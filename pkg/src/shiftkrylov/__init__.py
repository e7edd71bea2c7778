"""Minimal residual rational Krylov solvers for shifted linear systems ``(A + s_i I) x_i = b``."""
from .errors import (
    BreakdownExact,
    ConfigError,
    DeflationWarning,
    DimensionError,
    MatrixMarketError,
    NotConverged,
    ShiftKrylovError,
    SingularOperator,
    SingularProjected,
    StructureError,
)
from .generators import ShiftSet, ShiftSetSpec, gen_convdiff, gen_diagonalizable, gen_shifts
from .inner import InnerSolverConfig, ShiftedSolver, solve_shifted
from .solvers import (
    OuterConfig,
    ShiftedProblem,
    SolveReport,
    block_mr_rksm,
    direct_solve,
    fom_restarted,
    geksm,
    mr_rksm,
    mr_rksm_lowrank_rhs,
)
from .sparse import CsrMatrix, read_matrix_market, write_matrix_market

__version__ = "0.1.0"
