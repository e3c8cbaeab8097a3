"""Oracles producing certified inexact proximal steps.

Each oracle maps the extrapolated point ``w_tilde`` to a triple
``(y, v, eps)`` together with a fixed stepsize ``lam``:

* :func:`exact_resolvent_oracle` -- the exact resolvent (``sigma = 0``);
* :func:`extragradient_oracle` -- Korpelevich extragradient step;
* :func:`tseng_oracle` -- Tseng's modified forward-backward step;
* :func:`fb_oracle` -- forward-backward step for cocoercive ``F``.

Besides the triple, :meth:`ProxOracle.step` returns the intermediate
quantities so that callers can re-check each method's own inequality
(:meth:`ProxOracle.certificate`) and inclusion (:meth:`ProxOracle.check_inclusion`).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .certify import CertifiedTriple
from .geometry import SimpleSet, WholeSpace, as_vector
from .operators import (
    AffineOperator,
    NormalConeOperator,
    SumOperator,
    check_affine_enlargement,
    check_normal_cone_enlargement,
)
from .tolerances import DEFAULT


class OracleError(ValueError):
    """Precondition of an oracle is not met."""


class NonPositiveEps(ArithmeticError):
    pass


@dataclass
class OracleStep:
    triple: CertifiedTriple
    w_tilde: np.ndarray
    info: dict = field(default_factory=dict)

    @property
    def y(self):
        return self.triple.y

    @property
    def v(self):
        return self.triple.v

    @property
    def eps(self):
        return self.triple.eps


def in_normal_cone(C: SimpleSet, y, u, eps: float = 0.0) -> bool:
    """``u in N_C^eps(y)``; exact for bounded sets and for the whole space."""
    if isinstance(C, WholeSpace):
        return float(np.linalg.norm(u)) <= DEFAULT.membership * (1.0 + float(np.linalg.norm(y)))
    if not C.bounded:
        raise OracleError(f"no exact normal-cone test for {C!r}")
    return check_normal_cone_enlargement(C, y, u, eps)


class ProxOracle:
    """Base class; subclasses implement :meth:`step`."""

    name = "oracle"

    def __init__(self, lam: float, sigma: float):
        self.lam = float(lam)
        self.sigma = float(sigma)
        if not self.lam > 0:
            raise OracleError("lambda must be positive")

    def step(self, w_tilde) -> OracleStep:
        raise NotImplementedError

    def __call__(self, w_tilde, k: int = 0) -> CertifiedTriple:
        return self.step(w_tilde).triple

    def certificate(self, s: OracleStep) -> tuple[float, float]:
        """``(lhs, rhs)`` of the method's own relative-error inequality."""
        raise NotImplementedError

    def check_inclusion(self, s: OracleStep) -> bool:
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}(lam={self.lam:.6g}, sigma={self.sigma:.6g})"


def _split(T):
    # (F, C) view of an operator: F affine or None, C the constraint set
    if isinstance(T, SumOperator):
        return T.f_part, T.set
    if isinstance(T, AffineOperator):
        return T, WholeSpace(T.dim)
    if isinstance(T, NormalConeOperator):
        return None, T.set
    raise OracleError(f"unsupported operator {T!r}")


class ExactResolventOracle(ProxOracle):
    """``y = (lam T + I)^{-1} w_tilde``, ``v = (w_tilde - y) / lam``, ``eps = 0``."""

    name = "exact"

    def __init__(self, T, lam: float):
        super().__init__(lam, 0.0)
        self.T = T
        self.F, self.C = _split(T)

    def step(self, w_tilde):
        w = as_vector(w_tilde)
        y = self.T.resolvent(self.lam, w)
        v = (w - y) / self.lam
        return OracleStep(CertifiedTriple(y, v, 0.0, self.lam), w)

    def certificate(self, s):
        r = self.lam * s.v + s.y - s.w_tilde
        return float(np.linalg.norm(r)), 0.0

    def check_inclusion(self, s):
        u = s.v if self.F is None else s.v - self.F(s.y)
        return in_normal_cone(self.C, s.y, u)


class ExtragradientOracle(ProxOracle):
    """Extragradient step for the variational inequality of ``F`` over ``C``.

    ``lam = sigma / L``.  Per call::

        w'  = P_C(w_tilde)
        y   = P_C(w_tilde - lam F(w'))
        y~  = P_C(w_tilde - lam F(y))
        q   = (w_tilde - y~) / lam - F(y)
        v   = F(y) + q,  eps = <q, y~ - y>
    """

    name = "extragradient"

    def __init__(self, F: AffineOperator, C: SimpleSet, sigma: float):
        if not 0 < sigma < 1:
            raise OracleError("extragradient needs sigma in (0, 1)")
        if not F.lipschitz > 0:
            raise OracleError("extragradient needs L > 0")
        super().__init__(sigma / F.lipschitz, sigma)
        self.F, self.C = F, C

    def step(self, w_tilde):
        w = as_vector(w_tilde)
        F, C, lam = self.F, self.C, self.lam
        wp = C.project(w)
        y = C.project(w - lam * F(wp))
        Fy = F(y)
        yt = C.project(w - lam * Fy)
        q = (w - yt) / lam - Fy
        v = Fy + q
        eps = float(q @ (yt - y))
        if eps < 0:
            # rounding in q is relative to the terms it cancels, and eps inherits
            # it times ||y~ - y||; the window scales with that product
            size = (np.linalg.norm(w - yt) / lam + np.linalg.norm(Fy)) * np.linalg.norm(yt - y)
            if eps < -DEFAULT.eps_clamp * (1.0 + size):
                raise NonPositiveEps(f"extragradient eps = {eps:.3e} below clamp window")
            eps = 0.0
        info = {"w_prime": wp, "y_tilde": yt, "q": q}
        return OracleStep(CertifiedTriple(y, v, eps, lam), w, info)

    def certificate(self, s):
        r = self.lam * s.v + s.y - s.w_tilde
        d = s.y - s.w_tilde
        return float(r @ r) + 2 * self.lam * s.eps, self.sigma**2 * float(d @ d)

    def check_inclusion(self, s):
        q = s.info["q"]
        return in_normal_cone(self.C, s.info["y_tilde"], q, 0.0) and in_normal_cone(self.C, s.y, q, s.eps)


class TsengOracle(ProxOracle):
    """Tseng forward-backward-forward step for ``0 in F(x) + B(x)``.

    ``B`` is a normal cone or a monotone affine map, ``lam = sigma / L`` and
    ``eps = 0``; ``(y, v)`` lies exactly in the graph of ``F + B``.
    """

    name = "tseng"

    def __init__(self, F: AffineOperator, B, C: SimpleSet, sigma: float):
        if not 0 < sigma < 1:
            raise OracleError("tseng needs sigma in (0, 1)")
        if not F.lipschitz > 0:
            raise OracleError("tseng needs L > 0")
        super().__init__(sigma / F.lipschitz, sigma)
        self.F, self.B, self.C = F, B, C

    def step(self, w_tilde):
        w = as_vector(w_tilde)
        F, lam = self.F, self.lam
        wp = self.C.project(w)
        Fwp = F(wp)
        y = self.B.resolvent(lam, w - lam * Fwp)
        v = F(y) - Fwp + (w - y) / lam
        return OracleStep(CertifiedTriple(y, v, 0.0, lam), w, {"w_prime": wp})

    def certificate(self, s):
        r = self.lam * s.v + s.y - s.w_tilde
        return float(np.linalg.norm(r)), self.sigma * float(np.linalg.norm(s.y - s.w_tilde))

    def check_inclusion(self, s):
        u = s.v - self.F(s.y)
        if isinstance(self.B, NormalConeOperator):
            return in_normal_cone(self.B.set, s.y, u)
        Bu = self.B(s.y)
        return float(np.linalg.norm(u - Bu)) <= DEFAULT.membership * (1.0 + float(np.linalg.norm(Bu)))


class ForwardBackwardOracle(ProxOracle):
    """Forward-backward step for ``(1/L)``-cocoercive ``F`` plus ``N_C``.

    ``lam = 2 sigma^2 / L``; ``v = (w_tilde - y) / lam`` and
    ``eps = L ||y - w'||^2 / 4`` so that ``F(w') in F^eps(y)``.
    """

    name = "fb"

    def __init__(self, F: AffineOperator, B: NormalConeOperator, C: SimpleSet, sigma: float):
        if not 0 < sigma < 1:
            raise OracleError("fb needs sigma in (0, 1)")
        L = getattr(F, "cocoercive_L", np.inf)
        if not np.isfinite(L):
            raise OracleError("fb needs a cocoercive F; this operator is not cocoercive")
        if not L > 0:
            raise OracleError("fb needs L > 0")
        super().__init__(2 * sigma**2 / L, sigma)
        self.F, self.B, self.C = F, B, C
        self.L = L

    def step(self, w_tilde):
        w = as_vector(w_tilde)
        lam = self.lam
        wp = self.C.project(w)
        Fwp = self.F(wp)
        y = self.B.resolvent(lam, w - lam * Fwp)
        v = (w - y) / lam
        dy = y - wp
        eps = float(dy @ dy) * self.L / 4.0
        return OracleStep(CertifiedTriple(y, v, eps, lam), w, {"w_prime": wp, "F_w_prime": Fwp})

    def certificate(self, s):
        d = s.y - s.w_tilde
        return 2 * self.lam * s.eps, self.sigma**2 * float(d @ d)

    def check_inclusion(self, s):
        Fwp = s.info["F_w_prime"]
        ok_f = check_affine_enlargement(self.F, s.y, Fwp, s.eps)
        return ok_f and in_normal_cone(self.B.set, s.y, s.v - Fwp)


# ---------------------------------------------------------------------------
# factories with the names used throughout the docs


def exact_resolvent_oracle(T, lam: float) -> ExactResolventOracle:
    return ExactResolventOracle(T, lam)


def extragradient_oracle(F: AffineOperator, C: SimpleSet, sigma: float) -> ExtragradientOracle:
    return ExtragradientOracle(F, C, sigma)


def tseng_oracle(F: AffineOperator, B, C: SimpleSet, sigma: float) -> TsengOracle:
    return TsengOracle(F, B, C, sigma)


def fb_oracle(F: AffineOperator, B: NormalConeOperator, C: SimpleSet, sigma: float) -> ForwardBackwardOracle:
    return ForwardBackwardOracle(F, B, C, sigma)


METHODS = ("exact", "extragradient", "tseng", "fb")


def make_oracle(method: str, T, sigma: float, lam: float | None = None) -> ProxOracle:
    """Build the named oracle for ``T`` (``F + N_C``, affine, or a normal cone).

    ``lam`` is only used by ``exact`` (default ``1 / L``, or 1 when ``L = 0``).
    """
    F, C = _split(T)
    if method == "exact":
        if lam is None:
            L = 0.0 if F is None else F.lipschitz
            lam = 1.0 / L if L > 0 else 1.0
        return exact_resolvent_oracle(T, lam)
    if F is None:
        raise OracleError(f"{method} needs a single-valued part F")
    B = NormalConeOperator(C)
    if method == "extragradient":
        return extragradient_oracle(F, C, sigma)
    if method == "tseng":
        return tseng_oracle(F, B, C, sigma)
    if method == "fb":
        return fb_oracle(F, B, C, sigma)
    raise OracleError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
