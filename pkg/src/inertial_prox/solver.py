"""Inertial inexact proximal-point engine with half-space projections.

One iteration, given ``x_k``, ``x_{k-1}`` and the anchor ``x0``::

    w_k  = x_k + alpha_k (x_k - x_{k-1})
    w~_k = w_k + beta_k (w_k - x0)
    (y_k, v_k, eps_k) = oracle(w~_k)            # relative-error step
    H_k = {z : <z - y_k, v_k> <= eps_k}
    W_k = {z : <z - x_k, x0 - x_k> <= 0}
    x_{k+1} = P_{H_k & W_k}(x0)

Every zero of ``T`` lies in ``H_k & W_k``, so ``||x_k - x0||`` increases
monotonically towards the distance ``d0`` from ``x0`` to the solution set
and the iterates converge strongly to the projection of ``x0`` onto it.
The iteration stops once ``max(||v_k||, eps_k) <= rho`` or after
``max_iter`` steps.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .certify import CertifiedTriple, check_rho_solution, check_sigma_criterion, prox_halfspace
from .geometry import GeometryError, HalfSpace, as_vector, project_two_halfspaces
from .methods import ProxOracle
from .tolerances import DEFAULT

log = logging.getLogger(__name__)

CHECK_LEVELS = ("off", "invariants", "paranoid")


class ScheduleError(ValueError):
    pass


@dataclass(frozen=True)
class InertialSchedule:
    """Inertial parameters ``alpha_k`` and ``beta_k``.

    ``alpha`` is a constant or a finite list (zero after its end); ``beta``
    follows ``beta_rule``: ``"zero"``, ``"harmonic"`` (``beta / (k + 1)``)
    or ``"list"`` (zero after its end).
    """

    alpha: float | tuple = 0.0
    beta: float | tuple = 0.0
    beta_rule: str = "zero"

    def __post_init__(self):
        if isinstance(self.alpha, (list, tuple, np.ndarray)):
            object.__setattr__(self, "alpha", tuple(float(a) for a in self.alpha))
            vals = self.alpha
        else:
            object.__setattr__(self, "alpha", float(self.alpha))
            vals = (self.alpha,)
        if any(not (math.isfinite(a) and a >= 0) for a in vals):
            raise ScheduleError("alpha_k must be finite and >= 0")
        if self.beta_rule not in ("zero", "harmonic", "list"):
            raise ScheduleError(f"unknown beta rule {self.beta_rule!r}")
        if self.beta_rule == "list":
            object.__setattr__(self, "beta", tuple(float(b) for b in self.beta))
            vals = self.beta
        else:
            object.__setattr__(self, "beta", 0.0 if self.beta_rule == "zero" else float(self.beta))
            vals = (self.beta,)
        if any(not (math.isfinite(b) and b >= 0) for b in vals):
            raise ScheduleError("beta_k must be finite and >= 0")

    @classmethod
    def default(cls) -> InertialSchedule:
        return cls(alpha=1.0, beta=0.5, beta_rule="harmonic")

    def alpha_k(self, k: int) -> float:
        if isinstance(self.alpha, tuple):
            return self.alpha[k] if k < len(self.alpha) else 0.0
        return self.alpha

    def beta_k(self, k: int) -> float:
        if self.beta_rule == "zero":
            return 0.0
        if self.beta_rule == "harmonic":
            return self.beta / (k + 1)
        return self.beta[k] if k < len(self.beta) else 0.0

    @property
    def alpha_bar(self) -> float:
        if isinstance(self.alpha, tuple):
            return max(self.alpha, default=0.0)
        return self.alpha

    @property
    def beta_bar(self) -> float:
        if self.beta_rule == "list":
            return max(self.beta, default=0.0)
        return self.beta

    @property
    def s_bar(self) -> float:
        if self.beta_rule == "zero":
            return 0.0
        if self.beta_rule == "harmonic":
            return self.beta**2 * math.pi**2 / 6
        return float(sum(b * b for b in self.beta))


@dataclass
class SolverConfig:
    sigma: float = 0.5
    rho: float = 1e-8
    max_iter: int = 10_000
    schedule: InertialSchedule = field(default_factory=InertialSchedule.default)
    check_level: str = "invariants"
    lambda_floor: float | None = None  # defaults to the oracle's lambda

    def __post_init__(self):
        if not 0 <= self.sigma < 1:
            raise ValueError("sigma must lie in [0, 1)")
        if not self.rho >= 0:
            raise ValueError("rho must be >= 0")
        if self.max_iter < 0:
            raise ValueError("max_iter must be >= 0")
        if self.check_level not in CHECK_LEVELS:
            raise ValueError(f"check_level must be one of {CHECK_LEVELS}")


@dataclass
class IterationRecord:
    """Quantities of iteration ``k``; ``x_next`` is the new iterate ``x_{k+1}``.

    ``dist_x0``, ``step_norm`` and ``solution_dist`` all refer to ``x_next``:
    ``||x_{k+1} - x0||``, ``||x_{k+1} - x_k||`` and ``||x_{k+1} - x*||``.
    """

    k: int
    x: np.ndarray
    w: np.ndarray
    w_tilde: np.ndarray
    y: np.ndarray
    v: np.ndarray
    eps: float
    lam: float
    alpha: float
    beta: float
    x_next: np.ndarray
    norm_v: float
    dist_x0: float
    step_norm: float
    sigma_slack: float
    solution_dist: float | None = None


@dataclass(frozen=True)
class Status:
    kind: str  # "Converged" | "MaxIter" | "Fault"
    detail: str = ""

    @property
    def converged(self) -> bool:
        return self.kind == "Converged"

    @property
    def fault(self) -> bool:
        return self.kind == "Fault"

    def __str__(self):
        return f"{self.kind}({self.detail})" if self.detail else self.kind


@dataclass
class ConvergenceTrace:
    x0: np.ndarray
    sigma: float
    lambda_floor: float
    schedule: InertialSchedule
    records: list = field(default_factory=list)
    status: Status = Status("MaxIter")
    d0: float | None = None

    @property
    def iterations(self) -> int:
        return len(self.records)

    @property
    def x_final(self) -> np.ndarray:
        return self.records[-1].x_next if self.records else self.x0

    @property
    def y_final(self) -> np.ndarray | None:
        return self.records[-1].y if self.records else None

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records], dtype=float)


# ---------------------------------------------------------------------------


def extrapolate(x_k, x_prev, x0, alpha_k: float, beta_k: float):
    """Return ``(w, w_tilde)``."""
    if alpha_k < 0 or beta_k < 0:
        raise ScheduleError("alpha_k and beta_k must be >= 0")
    w = x_k + alpha_k * (x_k - x_prev)
    w_tilde = w + beta_k * (w - x0)
    return w, w_tilde


def build_halfspaces(t: CertifiedTriple, x_k, x0) -> tuple[HalfSpace, HalfSpace]:
    """``H = {z : <z - y, v> <= eps}`` and ``W = {z : <z - x_k, x0 - x_k> <= 0}``."""
    x_k = as_vector(x_k)
    x0 = as_vector(x0)
    n = x0 - x_k
    return prox_halfspace(t), HalfSpace(n, float(n @ x_k))


def _fault(trace: ConvergenceTrace, reason: str) -> ConvergenceTrace:
    log.warning("solver fault: %s", reason)
    trace.status = Status("Fault", reason)
    return trace


def run(oracle: ProxOracle, config: SolverConfig, x0, solution=None) -> ConvergenceTrace:
    """Iterate from ``x0`` with the given oracle.

    Parameters
    ----------
    oracle : ProxOracle
        Source of the certified steps; its ``lam`` is used as ``lambda_k``.
    config : SolverConfig
    x0 : array_like
        Start point and anchor of the half-space ``W_k``.
    solution : array_like, optional
        A known zero of ``T``.  Fills ``solution_dist`` and, in paranoid
        mode, is checked to lie in ``H_k & W_k`` at every iteration.

    Returns
    -------
    ConvergenceTrace
        Faults (sigma-criterion violations, infeasible projections,
        non-finite values, broken invariants) end the run with status
        ``Fault`` instead of raising.
    """
    x0 = as_vector(x0, "x0")
    sched = config.schedule
    sigma = config.sigma
    lam_floor = oracle.lam if config.lambda_floor is None else float(config.lambda_floor)
    check = CHECK_LEVELS.index(config.check_level)
    xs = None if solution is None else as_vector(solution, "solution")
    if check >= 2 and xs is None:
        raise ValueError("paranoid checks need a known solution")
    tol = DEFAULT.fejer

    trace = ConvergenceTrace(x0=x0, sigma=sigma, lambda_floor=lam_floor, schedule=sched)
    x_prev = x = x0
    for k in range(config.max_iter):
        a, b = sched.alpha_k(k), sched.beta_k(k)
        w, wt = extrapolate(x, x_prev, x0, a, b)
        if not np.all(np.isfinite(wt)):
            return _fault(trace, f"NonFinite: extrapolated point at k={k}")
        try:
            step = oracle.step(wt)
        except (ArithmeticError, GeometryError, ValueError) as exc:
            return _fault(trace, f"OracleError: {exc} at k={k}")
        t = step.triple
        if t.lam < lam_floor * (1 - 1e-15):
            return _fault(trace, f"LambdaFloor: lambda={t.lam} below {lam_floor} at k={k}")
        report = check_sigma_criterion(t, wt, sigma)
        if check >= 1 and not report.passes:
            return _fault(trace, f"SigmaViolation: lhs={report.lhs:.6e} rhs={report.rhs:.6e} at k={k}")
        H, W = build_halfspaces(t, x, x0)
        if check >= 2:
            for name, hs in (("H", H), ("W", W)):
                if hs.is_whole:
                    continue
                scale = 1.0 + np.linalg.norm(hs.normal) * (1.0 + np.linalg.norm(xs)) + abs(hs.offset)
                if hs.violation(xs) > tol * scale:
                    return _fault(trace, f"WellDefinedness: solution outside {name}_k at k={k}")
            if not oracle.check_inclusion(step):
                return _fault(trace, f"InclusionViolation: oracle triple outside the enlargement at k={k}")
        try:
            x_next = project_two_halfspaces(x0, H, W)
        except GeometryError as exc:
            return _fault(trace, f"{type(exc).__name__}: {exc} at k={k}")
        if not np.all(np.isfinite(x_next)):
            return _fault(trace, f"NonFinite: iterate at k={k}")

        dist = float(np.linalg.norm(x_next - x0))
        step_norm = float(np.linalg.norm(x_next - x))
        if check >= 1:
            prev = float(np.linalg.norm(x - x0))
            gap = prev**2 + step_norm**2 - dist**2
            if gap > tol * (1.0 + dist**2):
                return _fault(trace, f"FejerViolation: monotone distance broken by {gap:.3e} at k={k}")
            lower = 0.5 * (1 - sigma**2) * max(t.lam * np.linalg.norm(t.v), np.linalg.norm(wt - t.y))
            actual = float(np.linalg.norm(x_next - wt))
            if lower - actual > tol * (1.0 + lower):
                return _fault(trace, f"DisplacementViolation: {actual:.6e} < {lower:.6e} at k={k}")

        trace.records.append(IterationRecord(
            k=k, x=x, w=w, w_tilde=wt, y=t.y, v=t.v, eps=t.eps, lam=t.lam,
            alpha=a, beta=b, x_next=x_next,
            norm_v=float(np.linalg.norm(t.v)), dist_x0=dist, step_norm=step_norm,
            sigma_slack=report.slack,
            solution_dist=None if xs is None else float(np.linalg.norm(x_next - xs)),
        ))
        if check_rho_solution(t.v, t.eps, config.rho):
            trace.status = Status("Converged", f"rho={config.rho:g}")
            return trace
        x_prev, x = x, x_next
    trace.status = Status("MaxIter")
    return trace


# ---------------------------------------------------------------------------
# diagnostics


@dataclass
class FejerReport:
    """Largest violation of each anchored-Fejer inequality (<= 0 means satisfied)."""

    nondecrease: float
    bounded_by_d0: float
    cumulative_steps: float
    displacement: float
    tolerance: float

    @property
    def ok(self) -> bool:
        return max(self.nondecrease, self.bounded_by_d0, self.cumulative_steps,
                   self.displacement) <= self.tolerance

    def as_dict(self) -> dict:
        return {
            "nondecrease": self.nondecrease,
            "bounded_by_d0": self.bounded_by_d0,
            "cumulative_steps": self.cumulative_steps,
            "displacement": self.displacement,
        }


def fejer_violations(dist_x0: np.ndarray, step_norm: np.ndarray, d0: float):
    """Per-row violations of the three distance inequalities.

    Row ``k`` holds ``||x_{k+1} - x0||`` and ``||x_{k+1} - x_k||``.  Returns
    arrays ``(nondecrease, bounded, cumulative)``.
    """
    dist = np.asarray(dist_x0, dtype=float)
    steps = np.asarray(step_norm, dtype=float)
    prev = np.concatenate([[0.0], dist[:-1]])
    nondecrease = prev**2 + steps**2 - dist**2
    bounded = dist - d0
    cumulative = np.cumsum(steps**2) - d0**2
    return nondecrease, bounded, cumulative


def fejer_report(trace: ConvergenceTrace, d0: float) -> FejerReport:
    tol = DEFAULT.fejer * (1.0 + d0**2)
    if not trace.records:
        return FejerReport(0.0, 0.0, 0.0, 0.0, tol)
    a, b, c = fejer_violations(trace.column("dist_x0"), trace.column("step_norm"), d0)
    sigma = trace.sigma
    disp = max(
        0.5 * (1 - sigma**2) * max(r.lam * np.linalg.norm(r.v), np.linalg.norm(r.w_tilde - r.y))
        - np.linalg.norm(r.x_next - r.w_tilde)
        for r in trace.records
    )
    return FejerReport(float(a.max()), float(b.max()), float(c.max()), float(disp), tol)


def _inertia_factor(sched: InertialSchedule) -> float:
    a, b, s = sched.alpha_bar, sched.beta_bar, sched.s_bar
    return (1 + a) * ((1 + b) * (1 + a * (1 + b)) + s)


def complexity_bound_v(k: int, d0: float, sigma: float, lambda_floor: float,
                       sched: InertialSchedule) -> float:
    """Bound on ``min_{j <= k} ||v_j||`` after ``k + 1`` iterations."""
    return (2 * d0 / math.sqrt(k + 1)) * math.sqrt(_inertia_factor(sched)) / ((1 - sigma**2) * lambda_floor)


def complexity_bound_eps(k: int, d0: float, sigma: float, lambda_floor: float,
                         sched: InertialSchedule) -> float:
    """Companion bound on ``eps_j`` at the same witness index."""
    return (d0**2 / (k + 1)) * 4 * sigma**2 * _inertia_factor(sched) / ((1 - sigma**2) ** 2 * lambda_floor)


def complexity_violations(norm_v, eps, lam, sigma: float, d0: float, lambda_floor: float,
                          sched: InertialSchedule):
    """Check the pointwise complexity bounds row by row.

    For each ``k`` the witness is the ``j <= k`` minimising
    ``max(||lam_j v_j||^2, lam_j eps_j / sigma^2)``; both of its
    quantities must sit below the bounds at ``k``.  Returns
    ``(witness, v_violation, eps_violation, bound_v, bound_eps)``; a
    violation is positive only when the bound is exceeded beyond
    ``1e-9 (1 + bound)``.
    """
    norm_v = np.asarray(norm_v, dtype=float)
    eps = np.asarray(eps, dtype=float)
    lam = np.asarray(lam, dtype=float)
    if sigma > 0:
        merit = np.maximum((lam * norm_v) ** 2, lam * eps / sigma**2)
    else:
        merit = np.where(eps > 0, np.inf, (lam * norm_v) ** 2)
    n = norm_v.shape[0]
    witness = np.empty(n, dtype=int)
    best = 0
    for k in range(n):
        if merit[k] < merit[best]:
            best = k
        witness[k] = best
    ks = np.arange(n)
    # both bounds are the k = 0 value scaled by 1/sqrt(k+1) and 1/(k+1)
    bv = complexity_bound_v(0, d0, sigma, lambda_floor, sched) / np.sqrt(ks + 1.0)
    be = complexity_bound_eps(0, d0, sigma, lambda_floor, sched) / (ks + 1.0)
    tol = DEFAULT.fejer
    v_viol = norm_v[witness] - bv - tol * (1 + bv)
    e_viol = eps[witness] - be - tol * (1 + be)
    return witness, v_viol, e_viol, bv, be


@dataclass
class ComplexityReport:
    max_v_violation: float
    max_eps_violation: float
    worst_row: int

    @property
    def ok(self) -> bool:
        return self.max_v_violation <= 0 and self.max_eps_violation <= 0


def complexity_report(trace: ConvergenceTrace, d0: float) -> ComplexityReport:
    if not trace.records:
        return ComplexityReport(-np.inf, -np.inf, -1)
    _, vv, ev, _, _ = complexity_violations(
        trace.column("norm_v"), trace.column("eps"), trace.column("lam"),
        trace.sigma, d0, trace.lambda_floor, trace.schedule)
    worst = int(np.argmax(np.maximum(vv, ev)))
    return ComplexityReport(float(vv.max()), float(ev.max()), worst)


def schedule_from_lists(alpha: Sequence[float] | float, beta: Sequence[float] | float | None,
                        beta_rule: str | None = None) -> InertialSchedule:
    """Convenience constructor used by the command line."""
    if beta is None:
        return InertialSchedule(alpha=alpha, beta=0.0, beta_rule="zero")
    if beta_rule is None:
        beta_rule = "list" if isinstance(beta, (list, tuple)) else "harmonic"
    return InertialSchedule(alpha=alpha, beta=beta, beta_rule=beta_rule)
