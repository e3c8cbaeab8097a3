"""Command-line harness: ``run``, ``verify`` and ``sweep``.

Exit codes
----------
0  converged (``run``), all inequalities hold (``verify``), sweep finished
1  usage, configuration or trace-format error
2  ``run`` stopped at ``max_iter``
3  solver fault, or ``verify`` found a violated inequality
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import logging
import shlex
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .config import OUT_DIR_ENV, ConfigError, RunConfig
from .solver import CHECK_LEVELS, complexity_violations, fejer_violations, run
from .tolerances import DEFAULT
from .traceio import TraceFormatError, fmt, read_trace, write_trace

log = logging.getLogger("inertial_prox")

EXIT_OK, EXIT_USAGE, EXIT_MAXITER, EXIT_FAULT = 0, 1, 2, 3
GRID_KEYS = ("method", "sigma", "alpha", "beta")
SWEEP_COLUMNS = ("cell", "method", "sigma", "alpha", "beta", "lambda", "status", "iterations",
                 "final_norm_v", "final_eps", "final_solution_dist")


def _err(msg: str) -> None:
    print(f"error: {msg}", file=sys.stderr)


def _load_config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    if getattr(args, "check_level", None):
        cfg = cfg.replace(check_level=args.check_level)
    return cfg


def execute(cfg: RunConfig):
    """Build problem and oracle from ``cfg`` and run the solver.

    Returns ``(trace, problem, x0, solution, d0)``.
    """
    problem = cfg.build_problem()
    x0 = cfg.start_point(problem)
    solution, d0 = problem.solution_oracle(x0)
    oracle = cfg.build_oracle(problem)
    trace = run(oracle, cfg.solver_config(), x0, solution=solution)
    trace.d0 = d0
    return trace, problem, x0, solution, d0


def _summary(trace, extra: dict) -> str:
    last = trace.records[-1] if trace.records else None
    fields = {
        "status": trace.status.kind,
        "iterations": trace.iterations,
        "final_norm_v": fmt(last.norm_v) if last else "nan",
        "final_eps": fmt(last.eps) if last else "nan",
        "final_solution_dist": fmt(last.solution_dist) if last else "nan",
        "lambda": fmt(trace.lambda_floor),
        **extra,
    }
    if trace.status.detail:
        fields["detail"] = trace.status.detail
    return " ".join(f"{k}={shlex.quote(str(v))}" for k, v in fields.items())


def _status_code(trace) -> int:
    return {"Converged": EXIT_OK, "MaxIter": EXIT_MAXITER}.get(trace.status.kind, EXIT_FAULT)


# ---------------------------------------------------------------------------
# run


def cmd_run(cfg: RunConfig, out: str | None = None) -> int:
    trace, *_, d0 = execute(cfg)
    path = write_trace(cfg.output_path(out), trace, d0)
    print(_summary(trace, {"d0": fmt(d0), "output": path}))
    if trace.status.fault:
        _err(f"solver fault: {trace.status.detail}")
    return _status_code(trace)


# ---------------------------------------------------------------------------
# verify


def verify_columns(cols: dict, cfg: RunConfig) -> list[tuple[str, float, int]]:
    """Recheck every row of a trace.

    Returns ``(inequality, max_violation, worst_row)`` triples; a positive
    violation means the inequality fails beyond its tolerance.
    """
    problem = cfg.build_problem()
    x0 = cfg.start_point(problem)
    _, d0 = problem.solution_oracle(x0)
    oracle = cfg.build_oracle(problem)
    sched = cfg.schedule()
    sigma = cfg.sigma
    lam_floor = oracle.lam
    k = cols["k"].astype(int)
    lam, norm_v, eps = cols["lambda"], cols["norm_v"], cols["eps"]

    out = []

    def add(name, viol):
        viol = np.asarray(viol, dtype=float)
        viol = np.where(np.isnan(viol), np.inf, viol)
        i = int(np.argmax(viol))
        out.append((name, float(viol[i]), int(k[i])))

    # rhs >= sigma^2 ||lam v||^2, so this tolerance is never looser than 1e-9 (1 + rhs)
    rhs_floor = sigma**2 * (lam * norm_v) ** 2
    add("sigma_criterion", -cols["sigma_slack"] - DEFAULT.rel_tol * (1 + rhs_floor))
    add("eps_nonnegative", -eps)
    add("lambda_floor", lam_floor * (1 - 1e-15) - lam)
    sched_a = np.array([sched.alpha_k(i) for i in k])
    sched_b = np.array([sched.beta_k(i) for i in k])
    add("schedule", np.maximum(np.abs(cols["alpha"] - sched_a), np.abs(cols["beta"] - sched_b)))

    ftol = DEFAULT.fejer * (1 + d0**2)
    a, b, c = fejer_violations(cols["dist_x0"], cols["step_norm"], d0)
    add("fejer_nondecrease", a - ftol)
    add("fejer_bounded_by_d0", b - ftol)
    add("fejer_cumulative_steps", c - ftol)

    _, vv, ev, bv, be = complexity_violations(norm_v, eps, lam, sigma, d0, lam_floor, sched)
    add("complexity_v", vv)
    add("complexity_eps", ev)
    rel = np.maximum(np.abs(cols["bound_v"] - bv) / (1 + bv), np.abs(cols["bound_eps"] - be) / (1 + be))
    add("bound_columns", rel - 1e-12)
    return out


def cmd_verify(trace_path, cfg: RunConfig) -> int:
    cols = read_trace(trace_path)
    results = verify_columns(cols, cfg)
    width = max(len(r[0]) for r in results)
    print(f"{'inequality':<{width}}  {'max_violation':>24}  {'worst_row':>9}  status")
    failed = []
    for name, viol, row in results:
        ok = viol <= 0
        print(f"{name:<{width}}  {fmt(viol):>24}  {row:>9}  {'ok' if ok else 'VIOLATED'}")
        if not ok:
            failed.append((name, row, viol))
    print(f"rows={len(cols['k'])} violations={len(failed)}")
    if failed:
        for name, row, viol in failed:
            _err(f"row k={row} violates {name} by {fmt(viol)}")
        return EXIT_FAULT
    return EXIT_OK


# ---------------------------------------------------------------------------
# sweep


def load_grid(path) -> dict:
    try:
        with open(path) as fh:
            grid = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read grid {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"grid {path} is not valid JSON: {exc}") from None
    if not isinstance(grid, dict):
        raise ConfigError("grid must be a JSON object")
    unknown = set(grid) - set(GRID_KEYS)
    if unknown:
        raise ConfigError(f"grid keys must be among {', '.join(GRID_KEYS)}; got {', '.join(sorted(unknown))}")
    for key, vals in grid.items():
        if not isinstance(vals, list):
            raise ConfigError(f"grid entry {key} must be a list")
    return grid


def grid_cells(cfg: RunConfig, grid: dict) -> list[RunConfig]:
    keys = [k for k in GRID_KEYS if k in grid]
    if not keys or any(len(grid[k]) == 0 for k in keys):
        raise ConfigError("grid is empty")
    cells = []
    for i, combo in enumerate(itertools.product(*(grid[k] for k in keys))):
        try:
            cells.append(cfg.replace(**dict(zip(keys, combo))))
        except (ConfigError, TypeError) as exc:
            raise ConfigError(f"cell {i}: {exc}") from None
    return cells


def _run_cell(args):
    i, cell = args
    try:
        trace, *_ = execute(cell)
    except ConfigError as exc:
        return i, None, str(exc)
    last = trace.records[-1] if trace.records else None
    row = {
        "cell": i, "method": cell.method, "sigma": fmt(cell.sigma),
        "alpha": json.dumps(cell.alpha), "beta": json.dumps(cell.beta),
        "lambda": fmt(trace.lambda_floor), "status": trace.status.kind,
        "iterations": trace.iterations,
        "final_norm_v": fmt(last.norm_v) if last else "nan",
        "final_eps": fmt(last.eps) if last else "nan",
        "final_solution_dist": fmt(last.solution_dist) if last else "nan",
    }
    return i, row, trace.status.detail if trace.status.fault else None


def cmd_sweep(cfg: RunConfig, grid: dict, out: str | None = None, jobs: int = 1) -> int:
    cells = grid_cells(cfg, grid)
    work = list(enumerate(cells))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_cell, work))
    else:
        results = [_run_cell(w) for w in work]
    rows = []
    for i, row, problem in results:
        if row is None:
            _err(f"cell {i}: {problem}")
            return EXIT_USAGE
        if problem is not None:
            _err(f"cell {i} faulted: {problem}")
            return EXIT_FAULT
        rows.append(row)
    path = Path(out) if out else cfg.output_path(None).with_name(f"sweep_{cfg.problem}.csv")
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    counts = {}
    for r in rows:
        counts[r["status"]] = counts.get(r["status"], 0) + 1
    print(" ".join([f"cells={len(rows)}"] + [f"{k}={v}" for k, v in sorted(counts.items())]
                   + [f"output={shlex.quote(str(path))}"]))
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="inertial-prox",
        description="Run, verify and sweep the inertial hybrid proximal-extragradient solver.",
        epilog=f"Default output directory: ${OUT_DIR_ENV} (else the current directory).",
    )
    p.add_argument("-v", "--verbose", action="store_true", help="log solver warnings")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", metavar="PATH", help="JSON run configuration")
        sp.add_argument("--check-level", choices=CHECK_LEVELS, help="override the config's check level")

    r = sub.add_parser("run", help="solve one configuration and write its trace")
    common(r)
    r.add_argument("--out", metavar="PATH", help="trace CSV path")

    v = sub.add_parser("verify", help="recheck a trace against the proven inequalities")
    common(v)
    v.add_argument("trace", metavar="TRACE", help="trace CSV written by run")

    s = sub.add_parser("sweep", help="run a grid of configurations")
    common(s)
    s.add_argument("--grid", metavar="PATH", required=True,
                   help="JSON object mapping any of method/sigma/alpha/beta to lists")
    s.add_argument("--out", metavar="PATH", help="summary CSV path")
    s.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _load_config(args)
        if args.command == "run":
            return cmd_run(cfg, args.out)
        if args.command == "verify":
            return cmd_verify(args.trace, cfg)
        if args.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
        return cmd_sweep(cfg, load_grid(args.grid), args.out, args.jobs)
    except (ConfigError, TraceFormatError) as exc:
        _err(str(exc))
        return EXIT_USAGE


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
