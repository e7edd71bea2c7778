"""Benchmark suites: convection-diffusion and Matrix Market experiments.

Every suite expands into a list of :class:`PlannedRun` objects. Each run
holds a plain configuration dictionary, so the plan can be printed
(``--dry-run``) or executed through :func:`shiftkrylov.config.run_experiment`.
The ``desk`` scale shrinks the grids and rescales the ellipse families by the
ratio of the largest Laplacian eigenvalues so the shifts keep their position
relative to the spectrum.
"""
import csv
import io
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import build_problem, parse_config, run_experiment
from .errors import ShiftKrylovError
from .generators import gen_convdiff
from .output import run_record
from .sparse import write_matrix_market

__all__ = ["SUITES", "SCALES", "PlannedRun", "BenchResult", "plan_suite", "run_suite", "bench_table_csv", "ellipse_scale"]

SUITES = ("convdiff2d", "convdiff3d", "matrixmarket")
SCALES = ("desk", "paper")

PAPER_GRID = {"convdiff2d": 100, "convdiff3d": 50}
DESK_GRID = {"convdiff2d": 32, "convdiff3d": 10}
PAPER_ELLIPSE = {"center": [-223.81, 5.0], "radius": 500.0, "aspect": 1.0}
MM_PAPER_ELLIPSE = {"center": [-0.8, -0.07], "radius": 0.2, "aspect": 0.1}
MM_DESK_GRID = 45
MM_ELLS = (256, 512, 1024)
LOGSPACE = {"low": 1e-6, "high": 1e6}
BENCH_COLUMNS = ["suite", "scale", "family", "ell", "solver", "iterations", "cycles", "rank", "max_rel_residual", "status"]


def ellipse_scale(n_small, n_large):
    """Ratio of the largest Laplacian eigenvalues of two grids, ``((n_s+1)/(n_l+1))^2``."""
    return ((n_small + 1) / (n_large + 1)) ** 2


def _scaled_ellipse(base, factor):
    c = base["center"]
    return {"center": [c[0] * factor, c[1] * factor], "radius": base["radius"] * factor, "aspect": base["aspect"]}


@dataclass
class PlannedRun:
    suite: str
    scale: str
    family: str
    ell: int
    solver: str
    config: dict

    def describe(self):
        inner = self.config.get("outer", {}).get("inner", {})
        kind = inner.get("kind", "dense-lu") if self.solver in ("mr-rksm", "geksm") else "-"
        prob = self.config["problem"]
        src = prob.get("matrix_market") or f"convdiff{prob.get('dim')}d n={prob.get('n')}"
        return f"{self.suite}/{self.scale}: {self.solver:<13} family={self.family:<16} ell={self.ell:<5} inner={kind:<9} A={src}"


@dataclass
class BenchResult:
    run: PlannedRun
    record: dict = field(default_factory=dict)
    error: str = ""
    report: object = None

    @property
    def ok(self):
        return not self.error and self.record.get("status") == "converged"


def _families(suite, scale, ell):
    grid = (DESK_GRID if scale == "desk" else PAPER_GRID)[suite]
    fac = ellipse_scale(grid, PAPER_GRID[suite]) if scale == "desk" else 1.0
    # positive real shifts keep A + sI away from the convection-diffusion spectrum
    return [
        ("real", {"family": "real-logspace", "count": ell, "params": dict(LOGSPACE, sign=1)}),
        ("conjugate-pairs", {"family": "conjugate-pairs", "count": ell, "params": dict(LOGSPACE)}),
        ("ellipse", {"family": "ellipse", "count": ell, "params": _scaled_ellipse(PAPER_ELLIPSE, fac)}),
    ]


def _convdiff_plan(suite, scale, seed):
    dim = 2 if suite == "convdiff2d" else 3
    n = (DESK_GRID if scale == "desk" else PAPER_GRID)[suite]
    ell = 200 if scale == "desk" else 1000
    iterative = scale == "desk" or dim == 3
    inner = {"kind": "gmres", "restart": 50, "max_cycles": 100, "preconditioner": "ilu0"} if iterative else {"kind": "sparse-lu"}
    runs = []
    for fam, shifts in _families(suite, scale, ell):
        for solver in ("mr-rksm", "geksm", "fom"):
            outer = {"tol": 1e-8, "maxit": 100}
            if solver == "fom":
                outer.update(restart=100, max_cycles=10)
            else:
                outer["inner"] = dict(inner)
            cfg = {
                "name": f"{suite}-{scale}-{fam}-{solver}",
                "seed": seed,
                "problem": {"generator": "convdiff", "dim": dim, "n": n, "nu": 0.5},
                "rhs": {"kind": "random-gaussian", "seed": seed},
                "shifts": dict(shifts, seed=seed),
                "solver": solver,
                "outer": outer,
            }
            runs.append(PlannedRun(suite, scale, fam, ell, solver, cfg))
    return runs


def _mm_plan(scale, seed, matrix):
    if scale == "paper" and matrix is None:
        raise ShiftKrylovError("matrixmarket at --scale paper needs --matrix PATH")
    if matrix is None:
        ellipse = _scaled_ellipse(PAPER_ELLIPSE, ellipse_scale(MM_DESK_GRID, PAPER_GRID["convdiff2d"]))
        matrix = f"<generated convdiff2d n={MM_DESK_GRID}>"
    else:
        ellipse = dict(MM_PAPER_ELLIPSE)
    runs = []
    for ell in MM_ELLS:
        for solver in ("mr-rksm", "direct-oracle"):
            outer = {"tol": 1e-8, "maxit": 100}
            if solver == "mr-rksm":
                outer["inner"] = {"kind": "sparse-lu"}
            cfg = {
                "name": f"matrixmarket-{scale}-ell{ell}-{solver}",
                "seed": seed,
                "problem": {"matrix_market": str(matrix)},
                "rhs": {"kind": "random-gaussian", "seed": seed},
                "shifts": {"family": "ellipse", "count": ell, "params": dict(ellipse), "seed": seed},
                "solver": solver,
                "outer": outer,
            }
            runs.append(PlannedRun("matrixmarket", scale, "ellipse", ell, solver, cfg))
    return runs


def plan_suite(suite, scale="desk", seed=0, matrix=None):
    """List the runs of a suite without executing anything."""
    if suite not in SUITES:
        raise ShiftKrylovError(f"unknown suite {suite!r}; choose from {', '.join(SUITES)}")
    if scale not in SCALES:
        raise ShiftKrylovError(f"unknown scale {scale!r}; choose from {', '.join(SCALES)}")
    if suite == "matrixmarket":
        return _mm_plan(scale, seed, matrix)
    return _convdiff_plan(suite, scale, seed)


def _materialize_matrix(runs, workdir):
    """Generate the desk Matrix Market file when a run refers to it."""
    for r in runs:
        src = r.config["problem"].get("matrix_market", "")
        if src.startswith("<generated"):
            path = Path(workdir) / f"convdiff2d_n{MM_DESK_GRID}.mtx"
            if not path.exists():
                path.parent.mkdir(parents=True, exist_ok=True)
                write_matrix_market(gen_convdiff(2, MM_DESK_GRID, 0.5), path, comment="2D convection-diffusion, nu=0.5")
            r.config["problem"]["matrix_market"] = str(path)


def run_suite(suite, scale="desk", seed=0, matrix=None, workdir=".", progress=None, solvers=None):
    """Execute the planned runs; failures are recorded, never raised.

    ``solvers`` optionally restricts the suite to some solver names.
    """
    runs = plan_suite(suite, scale, seed, matrix)
    if solvers is not None:
        runs = [r for r in runs if r.solver in solvers]
    _materialize_matrix(runs, workdir)
    cache = {}
    results = []
    for r in runs:
        t0 = time.perf_counter()
        res = BenchResult(r)
        try:
            cfg = parse_config(r.config)
            key = repr(sorted(cfg.problem.items()))
            prob = build_problem(cfg, A=cache.get(key))
            cache[key] = prob.A
            rep = run_experiment(cfg, prob)
            res.report = rep
            res.record = run_record(rep, r.config)
        except (ShiftKrylovError, ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
            res.error = f"{type(exc).__name__}: {exc}"
            res.record = {"status": "error", "error": res.error, "wall_time_seconds": time.perf_counter() - t0}
        results.append(res)
        if progress is not None:
            progress(res)
    return results


def _cell(res, key):
    if not res.ok:
        return "*"
    v = res.record.get(key)
    return "-" if v is None else str(v)


def bench_table_csv(results):
    """Table-shaped CSV; ``*`` marks runs that did not converge."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(BENCH_COLUMNS)
    for res in results:
        r = res.run
        rec = res.record
        cycles = _cell(res, "cycles") if r.solver == "fom" else "-"
        mx = rec.get("final_max_relative_residual")
        w.writerow(
            [
                r.suite,
                r.scale,
                r.family,
                r.ell,
                r.solver,
                "-" if r.solver == "direct-oracle" and res.ok else _cell(res, "iterations"),
                cycles,
                _cell(res, "rank"),
                "" if mx is None else f"{mx:.6e}",
                rec.get("status", "error"),
            ]
        )
    return buf.getvalue()
