"""JSON experiment configurations: schema, validation and object builders.

A configuration names one problem source, a right-hand side recipe, a shift
family, a solver and its settings::

    {
      "problem": {"generator": "convdiff", "dim": 2, "n": 32, "nu": 0.5},
      "rhs": {"kind": "random-gaussian", "seed": 1},
      "shifts": {"family": "ellipse", "count": 200,
                 "params": {"center": [-23.9, 0.53], "radius": 53.4}},
      "solver": "mr-rksm",
      "outer": {"tol": 1e-8, "maxit": 100,
                "inner": {"kind": "gmres", "preconditioner": "ilu0"}},
      "output": {"svg": true, "plot_shifts": 10}
    }
"""
import json
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from .errors import ConfigError
from .generators import SHIFT_FAMILIES, ShiftSetSpec, gen_convdiff, gen_shifts, make_rng, parse_complex
from .inner import KINDS, PRECONDITIONERS, InnerSolverConfig
from .solvers import (
    OuterConfig,
    ShiftedProblem,
    block_mr_rksm,
    direct_solve,
    fom_restarted,
    geksm,
    mr_rksm,
    mr_rksm_lowrank_rhs,
)
from .sparse import read_matrix_market

__all__ = ["SOLVERS", "SCHEMA", "ExperimentConfig", "load_config", "parse_config", "run_experiment"]

SOLVERS = ("mr-rksm", "block-mr-rksm", "geksm", "fom", "direct-oracle")
RHS_KINDS = ("random-gaussian", "ones", "file", "block", "lowrank")

_number = {"type": "number"}
_complex = {
    "oneOf": [
        {"type": "number"},
        {"type": "string"},
        {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
        {"type": "object", "properties": {"re": _number, "im": _number}, "additionalProperties": False},
    ]
}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["problem", "shifts", "solver"],
    "properties": {
        "name": {"type": "string"},
        "seed": {"type": "integer"},
        "problem": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "generator": {"enum": ["convdiff"]},
                "dim": {"enum": [2, 3]},
                "n": {"type": "integer", "minimum": 2},
                "nu": {"type": "number", "exclusiveMinimum": 0},
                "field": {"enum": ["swirl", "zero"]},
                "matrix_market": {"type": "string"},
            },
        },
        "rhs": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": list(RHS_KINDS)},
                "seed": {"type": "integer"},
                "path": {"type": "string"},
                "k": {"type": "integer", "minimum": 1},
            },
        },
        "shifts": {
            "type": "object",
            "additionalProperties": False,
            "required": ["family"],
            "properties": {
                "family": {"enum": list(SHIFT_FAMILIES)},
                "count": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer"},
                "params": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "low": {"type": "number", "exclusiveMinimum": 0},
                        "high": {"type": "number", "exclusiveMinimum": 0},
                        "sign": {"enum": [-1, 1, -1.0, 1.0]},
                        "center": _complex,
                        "radius": {"type": "number", "exclusiveMinimum": 0},
                        "aspect": _number,
                        "values": {"type": "array", "items": _complex, "minItems": 1},
                        "centroid": _complex,
                        "k": _number,
                        "scale": _number,
                    },
                },
            },
        },
        "solver": {"enum": list(SOLVERS)},
        "outer": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "tol": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "maxit": {"type": "integer", "minimum": 1},
                "first_pole": {"oneOf": [{"enum": ["farthest-from-mean", "first-shift"]}, _complex]},
                "audit": {"type": "boolean"},
                "restart": {"type": "integer", "minimum": 1},
                "max_cycles": {"type": "integer", "minimum": 1},
                "inner": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "kind": {"enum": list(KINDS)},
                        "restart": {"type": "integer", "minimum": 1},
                        "max_cycles": {"type": "integer", "minimum": 1},
                        "tol": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                        "preconditioner": {"enum": list(PRECONDITIONERS)},
                    },
                },
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "svg": {"type": "boolean"},
                "plot_shifts": {"type": "integer", "minimum": 1},
                "prefix": {"type": "string"},
            },
        },
    },
}


@dataclass
class ExperimentConfig:
    problem: dict
    shifts: dict
    solver: str
    rhs: dict = field(default_factory=lambda: {"kind": "random-gaussian"})
    outer: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)
    seed: int = 0
    name: str = "run"
    base_dir: Path = field(default_factory=Path.cwd)

    def as_dict(self):
        return {
            "name": self.name,
            "seed": self.seed,
            "problem": self.problem,
            "rhs": self.rhs,
            "shifts": self.shifts,
            "solver": self.solver,
            "outer": self.outer,
            "output": self.output,
        }


def _field_of(err):
    path = [str(p) for p in err.absolute_path]
    if err.validator == "additionalProperties":
        extra = sorted(set(err.instance) - set(err.schema.get("properties", {})))
        path += extra[:1]
    elif err.validator == "required":
        missing = [r for r in err.validator_value if r not in err.instance]
        path += missing[:1]
    return ".".join(path) or "<root>"


def parse_config(data, base_dir=None):
    """Validate a decoded configuration and return an :class:`ExperimentConfig`."""
    validator = jsonschema.Draft7Validator(SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        fld = _field_of(err)
        if err.validator == "additionalProperties":
            msg = "unknown key"
        elif err.validator == "required":
            msg = "required key is missing"
        else:
            msg = err.message
        raise ConfigError(msg, fld)
    prob = data["problem"]
    sources = [k for k in ("generator", "matrix_market") if k in prob]
    if len(sources) != 1:
        raise ConfigError("give exactly one of 'generator' or 'matrix_market'", "problem")
    rhs = dict(data.get("rhs", {"kind": "random-gaussian"}))
    rhs.setdefault("kind", "random-gaussian")
    if rhs["kind"] == "file" and "path" not in rhs:
        raise ConfigError("file right-hand side needs 'path'", "rhs.path")
    solver = data["solver"]
    if rhs["kind"] == "block" and solver not in ("block-mr-rksm", "direct-oracle"):
        raise ConfigError(f"block right-hand side is not supported by {solver!r}", "rhs.kind")
    if rhs["kind"] == "lowrank" and solver not in ("mr-rksm", "direct-oracle"):
        raise ConfigError(f"low-rank right-hand side is not supported by {solver!r}", "rhs.kind")
    shifts = dict(data["shifts"])
    if shifts["family"] != "explicit-list" and "count" not in shifts:
        raise ConfigError("required key is missing", "shifts.count")
    try:
        OuterConfig(**_outer_kwargs(data.get("outer", {})))
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc), "outer") from exc
    return ExperimentConfig(
        problem=dict(prob),
        shifts=shifts,
        solver=solver,
        rhs=rhs,
        outer=dict(data.get("outer", {})),
        output=dict(data.get("output", {})),
        seed=int(data.get("seed", 0)),
        name=str(data.get("name", "run")),
        base_dir=Path(base_dir) if base_dir else Path.cwd(),
    )


def load_config(path):
    """Read and validate a JSON configuration file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}", "--config") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}", "<json>") from exc
    return parse_config(data, base_dir=path.parent)


def _outer_kwargs(outer):
    kw = {k: v for k, v in outer.items() if k in ("tol", "maxit", "first_pole", "audit")}
    if "first_pole" in kw and not isinstance(kw["first_pole"], str):
        kw["first_pole"] = parse_complex(kw["first_pole"])
    if "inner" in outer:
        kw["inner"] = InnerSolverConfig(**outer["inner"])
    return kw


def outer_config(cfg: ExperimentConfig):
    return OuterConfig(**_outer_kwargs(cfg.outer))


def build_matrix(cfg: ExperimentConfig):
    p = cfg.problem
    if "matrix_market" in p:
        path = Path(p["matrix_market"])
        if not path.is_absolute():
            path = cfg.base_dir / path
        return read_matrix_market(path)
    return gen_convdiff(int(p.get("dim", 2)), int(p.get("n", 32)), float(p.get("nu", 0.5)), p.get("field", "swirl"))


def build_shifts(cfg: ExperimentConfig):
    sh = cfg.shifts
    count = int(sh.get("count", len(sh.get("params", {}).get("values", []))))
    return gen_shifts(ShiftSetSpec(sh["family"], count, dict(sh.get("params", {})), int(sh.get("seed", cfg.seed))))


def build_problem(cfg: ExperimentConfig, A=None, shifts=None):
    """Materialize matrix, shifts and right-hand side."""
    A = build_matrix(cfg) if A is None else A
    shifts = build_shifts(cfg) if shifts is None else shifts
    r = cfg.rhs
    n = A.shape[0]
    rng = make_rng(int(r.get("seed", cfg.seed)))
    kind = r["kind"]
    if kind == "random-gaussian":
        return ShiftedProblem(A, shifts, b=rng.standard_normal(n))
    if kind == "ones":
        return ShiftedProblem(A, shifts, b=np.ones(n))
    if kind == "file":
        path = Path(r["path"])
        if not path.is_absolute():
            path = cfg.base_dir / path
        b = np.load(path) if path.suffix == ".npy" else np.loadtxt(path)
        return ShiftedProblem(A, shifts, b=b)
    k = int(r.get("k", 2))
    if kind == "block":
        return ShiftedProblem(A, shifts, B=rng.standard_normal((n, k)))
    return ShiftedProblem(A, shifts, B1=rng.standard_normal((n, k)), B2=rng.standard_normal((len(shifts), k)))


def run_experiment(cfg: ExperimentConfig, problem=None):
    """Run the configured solver and return its SolveReport."""
    problem = build_problem(cfg) if problem is None else problem
    outer = outer_config(cfg)
    name = cfg.solver
    if name == "mr-rksm":
        return mr_rksm_lowrank_rhs(problem, outer) if problem.mode == "lowrank" else mr_rksm(problem, outer)
    if name == "block-mr-rksm":
        return block_mr_rksm(problem, outer)
    if name == "geksm":
        return geksm(problem, outer)
    if name == "fom":
        return fom_restarted(
            problem, restart=int(cfg.outer.get("restart", 100)), max_cycles=int(cfg.outer.get("max_cycles", 10)), cfg=outer
        )
    return direct_solve(problem, outer)
