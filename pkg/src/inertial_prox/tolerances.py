"""Floating-point tolerances shared by every module.

The inequalities checked by this package hold exactly in real arithmetic;
the values below only budget for rounding.
"""

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    # generic inequality check: lhs <= rhs + abs_tol + rel_tol * |rhs|
    abs_tol: float = 1e-12
    rel_tol: float = 1e-9
    # projections: idempotence and feasibility
    projection: float = 1e-12
    # membership of a point in a set (e.g. y in C for exact N_C^eps tests)
    membership: float = 1e-9
    # graph-sample slack used by the sampled enlargement test
    enlargement: float = 1e-10
    # monotonicity floor on eigenvalues of M + M^T
    monotone_eig: float = 1e-10
    # eps in [-eps_clamp, 0) produced by rounding is set to 0
    eps_clamp: float = 1e-14
    # relative accuracy of power iteration for Lipschitz constants
    power_iteration: float = 1e-8
    # Fejer / complexity checks: violation <= fejer * (1 + scale)
    fejer: float = 1e-9

    def leq(self, lhs: float, rhs: float) -> bool:
        return lhs <= rhs + self.abs_tol + self.rel_tol * abs(rhs)


DEFAULT = Tolerances()
