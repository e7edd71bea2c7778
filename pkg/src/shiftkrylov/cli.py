"""Command-line entry point: ``shiftkrylov {solve,table1,bench,gen}``."""
import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import bench as _bench
from .config import build_matrix, build_problem, build_shifts, load_config, parse_config, run_experiment
from .diagnostics import TABLE1_CENTROIDS, table1
from .errors import ConfigError, ShiftKrylovError
from .generators import gen_convdiff
from .output import history_csv, report_svg, run_record, write_json
from .sparse import write_matrix_market

TABLE1_SCALES = {"paper": {"n": 200, "ell": 300}, "desk": {"n": 100, "ell": 150}}


def _override_seed(data, seed):
    data["seed"] = seed
    for key in ("rhs", "shifts"):
        if isinstance(data.get(key), dict) and "seed" in data[key]:
            data[key]["seed"] = seed


def _read_config(args):
    if args.seed is None:
        return load_config(args.config)
    path = Path(args.config)
    cfg = load_config(path)
    data = cfg.as_dict()
    _override_seed(data, args.seed)
    return parse_config(data, base_dir=path.parent)


def cmd_solve(args):
    cfg = _read_config(args)
    if args.dry_run:
        print(json.dumps(cfg.as_dict(), indent=2, sort_keys=True))
        return 0
    rep = run_experiment(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    prefix = cfg.output.get("prefix", cfg.name)
    write_json(run_record(rep, cfg.as_dict()), out / f"{prefix}_summary.json")
    (out / f"{prefix}_history.csv").write_text(history_csv(rep))
    if cfg.output.get("svg", False):
        (out / f"{prefix}_convergence.svg").write_text(report_svg(rep, cfg.output.get("plot_shifts", 10)))
    print(
        f"{rep.solver}: status={rep.status} iterations={rep.iterations} rank={rep.rank if rep.rank is not None else '-'} "
        f"max_rel_residual={rep.max_final_residual:.3e} time={rep.wall_time:.2f}s -> {out}"
    )
    return 0 if rep.status == "converged" else 1


def cmd_table1(args):
    dims = dict(TABLE1_SCALES[args.scale])
    if args.n is not None:
        dims["n"] = args.n
    if args.ell is not None:
        dims["ell"] = args.ell
    ks = range(args.kmin, args.kmax + 1)
    seed = 0 if args.seed is None else args.seed
    families = list(TABLE1_CENTROIDS) if args.family == "both" else [args.family]
    if args.dry_run:
        for fam in families:
            print(f"table1 family={fam} n={dims['n']} ell={dims['ell']} k={list(ks)} seed={seed}")
        return 0
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["family", "k", "rank_one_error", "sv_ratio", "bound_c"])
    for fam in families:
        for row in table1(dims["n"], dims["ell"], ks, seed=seed, family=fam):
            w.writerow([fam, row["k"], f"{row['rank_one_error']:.6e}", f"{row['sv_ratio']:.6e}", f"{row['bound_c']:.6e}"])
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "table1.csv").write_text(buf.getvalue())
    sys.stdout.write(buf.getvalue())
    return 0


def cmd_bench(args):
    seed = 0 if args.seed is None else args.seed
    if args.dry_run:
        for r in _bench.plan_suite(args.suite, args.scale, seed, args.matrix):
            print(r.describe())
        return 0
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    def progress(res):
        t = res.record.get("wall_time_seconds", float("nan"))
        tag = "ok" if res.ok else "*"
        print(f"{res.run.describe()}  {tag:<2} {t:7.2f}s {res.error}", flush=True)

    results = _bench.run_suite(args.suite, args.scale, seed, args.matrix, workdir=out, progress=progress)
    stem = f"bench_{args.suite}_{args.scale}"
    table = _bench.bench_table_csv(results)
    (out / f"{stem}.csv").write_text(table)
    write_json([res.record for res in results], out / f"{stem}_records.json")
    sys.stdout.write(table)
    return 0


def cmd_gen(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.config is None:
        A = gen_convdiff(args.dim, args.n, args.nu)
        write_matrix_market(A, out / "matrix.mtx", comment=f"convection-diffusion dim={args.dim} n={args.n} nu={args.nu}")
        print(f"wrote {out / 'matrix.mtx'} ({A.shape[0]} x {A.shape[1]}, {A.nnz} nonzeros)")
        return 0
    cfg = _read_config(args)
    A = build_matrix(cfg)
    write_matrix_market(A, out / "matrix.mtx")
    shifts = build_shifts(cfg)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["re", "im"])
    for s in np.asarray(shifts, dtype=complex):
        w.writerow([repr(float(s.real)), repr(float(s.imag))])
    (out / "shifts.csv").write_text(buf.getvalue())
    prob = build_problem(cfg, A=A, shifts=shifts)
    if prob.mode == "single":
        np.savetxt(out / "rhs.txt", prob.b, fmt="%.17e")
    print(f"wrote matrix.mtx, shifts.csv ({len(shifts)} shifts) to {out}")
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="shiftkrylov", description="Rational Krylov solvers for shifted linear systems.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config_required=False):
        sp.add_argument("--config", required=config_required, help="JSON experiment configuration")
        sp.add_argument("--seed", type=int, default=None, help="override every seed")
        sp.add_argument("--out", default=".", help="output directory")
        sp.add_argument("--dry-run", action="store_true", help="print the planned work and exit")

    sp = sub.add_parser("solve", help="run one configured experiment")
    common(sp, config_required=True)
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("table1", help="rank-one error and singular value ratio versus clustering")
    common(sp)
    sp.add_argument("--scale", choices=_bench.SCALES, default="paper")
    sp.add_argument("--n", type=int, default=None)
    sp.add_argument("--ell", type=int, default=None)
    sp.add_argument("--kmin", type=int, default=3)
    sp.add_argument("--kmax", type=int, default=7)
    sp.add_argument("--family", choices=("both",) + tuple(TABLE1_CENTROIDS), default="both")
    sp.set_defaults(func=cmd_table1)

    sp = sub.add_parser("bench", help="run a benchmark suite")
    common(sp)
    sp.add_argument("suite", choices=_bench.SUITES)
    sp.add_argument("--scale", choices=_bench.SCALES, default="desk")
    sp.add_argument("--matrix", default=None, help="Matrix Market file for the matrixmarket suite")
    sp.set_defaults(func=cmd_bench)

    sp = sub.add_parser("gen", help="write a generated matrix (and shifts) to disk")
    common(sp)
    sp.add_argument("--dim", type=int, choices=(2, 3), default=2)
    sp.add_argument("--n", type=int, default=32)
    sp.add_argument("--nu", type=float, default=0.5)
    sp.set_defaults(func=cmd_gen)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ShiftKrylovError, ValueError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
