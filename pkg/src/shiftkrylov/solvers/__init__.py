"""Outer solvers for families of shifted linear systems."""
from .baselines import direct_solve, fom_restarted, geksm
from .mr import (
    ProjectedLeastSquares,
    audit_residuals,
    block_mr_rksm,
    first_pole,
    mr_rksm,
    mr_rksm_lowrank_rhs,
    project_ls_assemble,
    select_next_pole,
    select_next_pole_index,
    solve_shift_ls,
)
from .types import OuterConfig, ShiftedProblem, SolveReport

__all__ = [
    "ShiftedProblem",
    "OuterConfig",
    "SolveReport",
    "ProjectedLeastSquares",
    "project_ls_assemble",
    "solve_shift_ls",
    "select_next_pole",
    "select_next_pole_index",
    "first_pole",
    "audit_residuals",
    "mr_rksm",
    "block_mr_rksm",
    "mr_rksm_lowrank_rhs",
    "geksm",
    "fom_restarted",
    "direct_solve",
]
