"""CSV export and import of convergence traces.

One row per iteration, every float written with 17 significant digits so
that a reader recovers the exact doubles and can recompute inequalities
without rounding slack.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .solver import ConvergenceTrace, complexity_violations

TRACE_COLUMNS = ("k", "lambda", "alpha", "beta", "norm_v", "eps", "dist_x0", "step_norm",
                 "sigma_slack", "bound_v", "bound_eps", "solution_dist")
HEADER = ",".join(TRACE_COLUMNS)


class TraceFormatError(ValueError):
    pass


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def trace_rows(trace: ConvergenceTrace, d0: float) -> list[list[str]]:
    """Rows of the CSV body; ``bound_v``/``bound_eps`` are evaluated at row ``k``."""
    if not trace.records:
        return []
    _, _, _, bv, be = complexity_violations(
        trace.column("norm_v"), trace.column("eps"), trace.column("lam"),
        trace.sigma, d0, trace.lambda_floor, trace.schedule)
    rows = []
    for r, b1, b2 in zip(trace.records, bv, be):
        sd = "nan" if r.solution_dist is None else fmt(r.solution_dist)
        rows.append([str(r.k), fmt(r.lam), fmt(r.alpha), fmt(r.beta), fmt(r.norm_v), fmt(r.eps),
                     fmt(r.dist_x0), fmt(r.step_norm), fmt(r.sigma_slack), fmt(b1), fmt(b2), sd])
    return rows


def write_trace(path, trace: ConvergenceTrace, d0: float) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        w.writerows(trace_rows(trace, d0))
    return path


def read_trace(path) -> dict[str, np.ndarray]:
    """Columns of a trace file keyed by header name.

    Raises
    ------
    TraceFormatError
        Unreadable file, wrong header, ragged or non-numeric rows, or no rows.
    """
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise TraceFormatError(f"cannot read trace {path}: {exc}") from None
    if not rows:
        raise TraceFormatError("trace is empty (no header)")
    if ",".join(rows[0]) != HEADER:
        raise TraceFormatError(f"unexpected header {','.join(rows[0])!r}")
    body = [r for r in rows[1:] if r]
    if not body:
        raise TraceFormatError("trace has no rows")
    try:
        data = np.array([[float(c) for c in r] for r in body if len(r) == len(TRACE_COLUMNS)])
    except ValueError as exc:
        raise TraceFormatError(f"non-numeric entry: {exc}") from None
    if data.shape[0] != len(body):
        bad = next(i for i, r in enumerate(body) if len(r) != len(TRACE_COLUMNS))
        raise TraceFormatError(f"row {bad} has {len(body[bad])} fields, expected {len(TRACE_COLUMNS)}")
    cols = {name: data[:, i] for i, name in enumerate(TRACE_COLUMNS)}
    k = cols["k"]
    if not np.array_equal(k, np.arange(len(k))):
        raise TraceFormatError("column k must count 0, 1, 2, ...")
    return cols
