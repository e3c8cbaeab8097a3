"""Relative-error certificates for inexact proximal steps.

A triple ``(y, v, eps)`` approximates the proximal step at ``(x, lam)``
with tolerance ``sigma`` when ``v in T^eps(y)`` and

    ||lam v + y - x||^2 + 2 lam eps <= sigma^2 (||lam v||^2 + ||y - x||^2).

Only the algebraic inequality is checked here; membership of ``v`` in the
enlargement is the business of :mod:`inertial_prox.operators`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import HalfSpace, as_vector, project_halfspace
from .tolerances import DEFAULT


class CertificateError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class CertifiedTriple:
    y: np.ndarray
    v: np.ndarray
    eps: float
    lam: float

    def __post_init__(self):
        y = as_vector(self.y, "y")
        v = as_vector(self.v, "v")
        if y.shape != v.shape:
            raise CertificateError("y and v differ in dimension")
        eps, lam = float(self.eps), float(self.lam)
        if not (np.isfinite(eps) and eps >= 0):
            raise CertificateError(f"eps must be finite and >= 0, got {eps}")
        if not (np.isfinite(lam) and lam > 0):
            raise CertificateError(f"lambda must be finite and > 0, got {lam}")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "eps", eps)
        object.__setattr__(self, "lam", lam)


@dataclass(frozen=True)
class SigmaReport:
    lhs: float
    rhs: float
    passes: bool

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs


def _check_sigma(sigma: float) -> float:
    sigma = float(sigma)
    if not 0 <= sigma < 1:
        raise CertificateError(f"sigma must lie in [0, 1), got {sigma}")
    return sigma


def sigma_sides(t: CertifiedTriple, x, sigma: float) -> tuple[float, float]:
    x = as_vector(x)
    lv = t.lam * t.v
    r = lv + t.y - x
    d = t.y - x
    lhs = float(r @ r) + 2.0 * t.lam * t.eps
    rhs = sigma**2 * (float(lv @ lv) + float(d @ d))
    return lhs, rhs


def check_sigma_criterion(t: CertifiedTriple, x, sigma: float) -> SigmaReport:
    """Relative-error inequality of a triple at ``(x, t.lam)``."""
    sigma = _check_sigma(sigma)
    lhs, rhs = sigma_sides(t, x, sigma)
    return SigmaReport(lhs, rhs, lhs <= rhs + DEFAULT.abs_tol + DEFAULT.rel_tol * rhs)


def sigma_inner_form(t: CertifiedTriple, x, sigma: float) -> float:
    """Slack of the equivalent inner-product form.

    ``(<x - y, v> - eps) - (1 - sigma^2) / (2 lam) (||lam v||^2 + ||x - y||^2)``;
    nonnegative exactly when the squared-norm form holds.
    """
    sigma = _check_sigma(sigma)
    x = as_vector(x)
    d = x - t.y
    lv = t.lam * t.v
    return (float(d @ t.v) - t.eps) - (1.0 - sigma**2) / (2.0 * t.lam) * (float(lv @ lv) + float(d @ d))


def inner_form_tolerance(t: CertifiedTriple, x, sigma: float) -> float:
    # the inner form is the squared-norm slack divided by 2 lam
    _, rhs = sigma_sides(t, x, sigma)
    return (DEFAULT.abs_tol + DEFAULT.rel_tol * rhs) / (2.0 * t.lam)


def prox_halfspace(t: CertifiedTriple) -> HalfSpace:
    """``{z : <z - y, v> <= eps}``, which contains every zero of ``T``."""
    return HalfSpace(t.v, float(t.v @ t.y) + t.eps)


def displacement_lower_bound(t: CertifiedTriple, x, sigma: float) -> tuple[float, float]:
    """Lower bound on the displacement of ``x`` by projection onto the prox half-space.

    Returns ``(lower, actual)`` where ``lower = (1 - sigma^2)/2 * max(||lam v||, ||x - y||)``
    and ``actual = ||P_H(x) - x||``.
    """
    x = as_vector(x)
    if not check_sigma_criterion(t, x, sigma).passes:
        raise CertificateError("triple does not satisfy the sigma criterion at x")
    lower = 0.5 * (1.0 - sigma**2) * max(t.lam * np.linalg.norm(t.v), np.linalg.norm(x - t.y))
    actual = float(np.linalg.norm(project_halfspace(x, prox_halfspace(t)) - x))
    return float(lower), actual


def check_rho_solution(v, eps: float, rho: float) -> bool:
    """``max(||v||, eps) <= rho``."""
    return max(float(np.linalg.norm(v)), float(eps)) <= rho
