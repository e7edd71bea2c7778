"""Run records, residual-history CSV files and SVG convergence plots."""
import csv
import io
import json
import math
from pathlib import Path

import numpy as np

__all__ = ["SCHEMA_VERSION", "run_record", "history_csv", "write_history_csv", "convergence_svg", "report_svg", "write_json"]

SCHEMA_VERSION = 1
SVG_WIDTH, SVG_HEIGHT = 800, 600


def _fmt(x):
    return "" if x is None or (isinstance(x, float) and math.isnan(x)) else f"{x:.6e}"


def run_record(report, config=None):
    """JSON-ready record of one solve."""
    final = report.final_residuals
    rec = {
        "schema_version": SCHEMA_VERSION,
        "config": config,
        "solver": report.solver,
        "status": report.status,
        "iterations": int(report.iterations),
        "cycles": report.cycles,
        "rank": report.rank,
        "wall_time_seconds": float(report.wall_time),
        "nshifts": int(report.shifts.size),
        "converged_at": [int(c) for c in report.converged_at],
        "final_relative_residuals": [None if np.isnan(v) else float(v) for v in final],
        "final_max_relative_residual": float(np.nanmax(final)),
        "residual_history": [[None if np.isnan(v) else float(v) for v in row] for row in report.residual_history],
        "poles": [[float(p.real), float(p.imag)] for p in report.poles],
        "notes": list(report.notes),
    }
    if report.audit_residuals is not None:
        rec["audit_max_relative_residual"] = float(np.max(report.audit_residuals))
    return rec


def history_csv(report):
    """One row per iteration, one column per shift; blank once converged."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    h = report.residual_history
    w.writerow(["iteration"] + [f"shift_{j}" for j in range(h.shape[1])])
    for i, row in enumerate(h):
        w.writerow([i] + [_fmt(float(v)) for v in row])
    return buf.getvalue()


def write_history_csv(report, path):
    Path(path).write_text(history_csv(report))


def write_json(obj, path):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _sample(nshift, count):
    if nshift <= count:
        return list(range(nshift))
    return sorted({int(round(x)) for x in np.linspace(0, nshift - 1, count)})


def convergence_svg(series, title="", ylabel="relative residual", floor=1e-16):
    """Log-scale polyline plot.

    Parameters
    ----------
    series : list of (label, 1-D array)
        NaN entries end a polyline (the shift has converged).
    """
    left, right, top, bottom = 80, 20, 40, 60
    pw, ph = SVG_WIDTH - left - right, SVG_HEIGHT - top - bottom
    vals = [np.asarray(y, dtype=float) for _, y in series]
    finite = np.concatenate([v[np.isfinite(v)] for v in vals]) if vals else np.array([1.0])
    finite = np.maximum(finite, floor)
    ymin = math.floor(math.log10(finite.min())) if finite.size else -16
    ymax = math.ceil(math.log10(finite.max())) if finite.size else 0
    if ymax <= ymin:
        ymax = ymin + 1
    xmax = max((v.size - 1 for v in vals), default=1) or 1

    def px(i):
        return left + pw * i / xmax

    def py(v):
        return top + ph * (ymax - math.log10(max(v, floor))) / (ymax - ymin)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {SVG_WIDTH} {SVG_HEIGHT}" '
        f'width="{SVG_WIDTH}" height="{SVG_HEIGHT}">',
        f'<rect x="0" y="0" width="{SVG_WIDTH}" height="{SVG_HEIGHT}" fill="white"/>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for e in range(ymin, ymax + 1):
        y = py(10.0**e)
        out.append(f'<line x1="{left}" y1="{y:.2f}" x2="{left + pw}" y2="{y:.2f}" stroke="#ddd"/>')
        out.append(f'<text x="{left - 8}" y="{y + 4:.2f}" font-size="12" text-anchor="end">1e{e}</text>')
    step = max(1, int(math.ceil(xmax / 10)))
    for i in range(0, xmax + 1, step):
        out.append(f'<text x="{px(i):.2f}" y="{top + ph + 18}" font-size="12" text-anchor="middle">{i}</text>')
    out.append(f'<text x="{left + pw / 2}" y="{SVG_HEIGHT - 15}" font-size="14" text-anchor="middle">iteration</text>')
    out.append(
        f'<text x="20" y="{top + ph / 2}" font-size="14" text-anchor="middle" '
        f'transform="rotate(-90 20 {top + ph / 2})">{ylabel}</text>'
    )
    if title:
        out.append(f'<text x="{SVG_WIDTH / 2}" y="24" font-size="16" text-anchor="middle">{title}</text>')
    palette = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"]
    for c, ((label, _), v) in enumerate(zip(series, vals)):
        pts = [f"{px(i):.2f},{py(x):.2f}" for i, x in enumerate(v) if np.isfinite(x)]
        if len(pts) < 2 and pts:
            pts = pts * 2
        if pts:
            out.append(
                f'<polyline fill="none" stroke="{palette[c % len(palette)]}" stroke-width="1.5" '
                f'points="{" ".join(pts)}"><title>{label}</title></polyline>'
            )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def report_svg(report, count=10):
    """Convergence plot of ``count`` evenly sampled shifts."""
    h = report.residual_history
    idx = _sample(h.shape[1], count)
    series = []
    for j in idx:
        series.append((f"shift {j}: {report.shifts[j]:.4g}", h[:, j]))
    return convergence_svg(series, title=report.solver)
