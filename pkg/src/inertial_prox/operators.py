"""Maximal monotone operators with resolvents and enlargement tests.

Supported families:

* :class:`AffineOperator` ``x -> M x + q`` with ``M + M^T`` positive
  semidefinite (monotone, Lipschitz with constant ``||M||_2``);
* :class:`SubdifferentialQuadratic`, the gradient of ``0.5 ||A x - b||^2``;
* :class:`NormalConeOperator` ``N_C`` of a simple set;
* :class:`SumOperator` ``F + N_C``.

The epsilon-enlargement ``T^eps(y)`` collects the ``v`` with
``<u - v, z - y> >= -eps`` for every ``(z, u)`` in the graph of ``T``.
Membership is decided exactly for normal cones of bounded sets (support
function identity) and for affine maps (a quadratic minimisation); for
anything else :func:`check_enlargement_sampled` gives a Monte-Carlo
necessary test.
"""

from __future__ import annotations

import numpy as np

from .geometry import (
    Ball,
    Box,
    DimensionError,
    GeometryError,
    SimpleSet,
    WholeSpace,
    as_vector,
    support_function,
)
from .tolerances import DEFAULT


class OperatorError(ValueError):
    pass


class NotMonotoneError(OperatorError):
    pass


class ResolventError(ArithmeticError):
    pass


def power_iteration(G: np.ndarray, tol: float = DEFAULT.power_iteration,
                    max_iter: int = 100_000, seed: int = 0) -> float:
    """Largest eigenvalue of a symmetric positive semidefinite matrix."""
    n = G.shape[0]
    x = np.random.default_rng(seed).standard_normal(n)
    x /= np.linalg.norm(x)
    lam = 0.0
    for _ in range(max_iter):
        y = G @ x
        lam_new = float(x @ y)
        ny = np.linalg.norm(y)
        if ny == 0.0:
            return 0.0
        x = y / ny
        if abs(lam_new - lam) <= tol * abs(lam_new):
            return lam_new
        lam = lam_new
    return lam


def spectral_norm(M: np.ndarray) -> float:
    return float(np.linalg.norm(M, 2)) if M.size else 0.0


# ---------------------------------------------------------------------------


class AffineOperator:
    """Monotone affine map ``F(x) = M x + q``.

    Attributes
    ----------
    lipschitz : float
        ``||M||_2``.
    cocoercive_L : float
        Smallest ``L`` with ``<x - y, F(x) - F(y)> >= ||F(x) - F(y)||^2 / L``;
        ``inf`` when ``F`` is not cocoercive (e.g. a nonzero skew part with
        directions where ``M + M^T`` vanishes).
    """

    single_valued = True

    def __init__(self, M, q=None):
        M = np.atleast_2d(np.asarray(M, dtype=float))
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise DimensionError(f"M must be square, got {M.shape}")
        if not np.all(np.isfinite(M)):
            raise OperatorError("M has non-finite entries")
        n = M.shape[0]
        q = np.zeros(n) if q is None else as_vector(q, "q")
        if q.shape[0] != n:
            raise DimensionError("q does not match M")
        self.M, self.q = M, q
        self.dim = n
        self.lipschitz = spectral_norm(M)
        S = 0.5 * (M + M.T)
        self._sym_eig, self._sym_vec = np.linalg.eigh(S)
        floor = -DEFAULT.monotone_eig * max(1.0, self.lipschitz)
        if self._sym_eig[0] < floor:
            raise NotMonotoneError(
                f"M + M^T has eigenvalue {2 * self._sym_eig[0]:.3e} < 0; operator is not monotone")
        self.cocoercive_L = self._cocoercivity()

    def _cocoercivity(self) -> float:
        if self.lipschitz == 0.0:
            return 0.0
        thresh = 1e-10 * self.lipschitz
        keep = self._sym_eig > thresh
        null = self._sym_vec[:, ~keep]
        if null.size and np.linalg.norm(self.M @ null, 2) > 1e-8 * self.lipschitz:
            return np.inf
        P = self._sym_vec[:, keep] / np.sqrt(self._sym_eig[keep])
        MP = self.M @ P
        return float(np.linalg.eigvalsh(MP.T @ MP)[-1])

    @property
    def strong_monotonicity(self) -> float:
        return max(float(self._sym_eig[0]), 0.0)

    def __call__(self, x) -> np.ndarray:
        return self.M @ x + self.q

    def resolvent(self, lam: float, x) -> np.ndarray:
        return resolvent_affine(self, lam, x)

    def to_dict(self) -> dict:
        return {"type": "affine", "M": self.M.tolist(), "q": self.q.tolist()}

    def __repr__(self):
        return f"{type(self).__name__}(dim={self.dim}, L={self.lipschitz:.6g})"


class SubdifferentialQuadratic(AffineOperator):
    """Gradient of ``f(x) = 0.5 ||A x - b||^2``, i.e. ``A^T (A x - b)``."""

    def __init__(self, A, b):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        b = as_vector(b, "b")
        if A.shape[0] != b.shape[0]:
            raise DimensionError("A and b disagree")
        self.A, self.b = A, b
        super().__init__(A.T @ A, -A.T @ b)
        # Baillon-Haddad: gradient of an L-smooth convex function
        self.cocoercive_L = self.lipschitz

    def value(self, x) -> float:
        r = self.A @ x - self.b
        return 0.5 * float(r @ r)

    def to_dict(self):
        return {"type": "quadratic", "A": self.A.tolist(), "b": self.b.tolist()}


class NormalConeOperator:
    """``N_C``: outward normals of ``C``; its resolvent is ``P_C`` for every lambda."""

    single_valued = False

    def __init__(self, set: SimpleSet):
        self.set = set
        self.dim = set.dim

    def resolvent(self, lam: float, x) -> np.ndarray:
        return resolvent_normal_cone(self, lam, x)

    def to_dict(self):
        return {"type": "normal_cone", "set": self.set.to_dict()}

    def __repr__(self):
        return f"NormalConeOperator({self.set!r})"


class SumOperator:
    """``T = F + N_C`` with ``F`` affine (possibly a quadratic gradient)."""

    single_valued = False

    def __init__(self, f_part: AffineOperator, b_part: NormalConeOperator):
        if b_part.dim is not None and b_part.dim != f_part.dim:
            raise DimensionError("F and N_C act on different dimensions")
        self.f_part, self.b_part = f_part, b_part
        self.dim = f_part.dim

    @property
    def set(self) -> SimpleSet:
        return self.b_part.set

    def resolvent(self, lam: float, x) -> np.ndarray:
        return resolvent_sum(self, lam, x)

    def to_dict(self):
        return {"type": "sum", "F": self.f_part.to_dict(), "B": self.b_part.to_dict()}

    def __repr__(self):
        return f"SumOperator({self.f_part!r}, {self.b_part!r})"


# ---------------------------------------------------------------------------
# resolvents


def _check_lambda(lam: float) -> float:
    lam = float(lam)
    if not lam > 0:
        raise OperatorError(f"lambda must be > 0, got {lam}")
    return lam


def resolvent_affine(op: AffineOperator, lam: float, x) -> np.ndarray:
    """``(lam M + I)^{-1} (x - lam q)``."""
    lam = _check_lambda(lam)
    x = as_vector(x)
    G = lam * op.M + np.eye(op.dim)
    rhs = x - lam * op.q
    try:
        y = np.linalg.solve(G, rhs)
    except np.linalg.LinAlgError as exc:
        raise ResolventError("lam M + I is singular; M is not monotone") from exc
    res = np.linalg.norm(G @ y - rhs)
    if res > 1e-10 * (1.0 + np.linalg.norm(rhs)) * (1.0 + lam * op.lipschitz):
        raise ResolventError(f"resolvent linear solve residual {res:.3e}")
    return y


def resolvent_normal_cone(op: NormalConeOperator, lam: float, x) -> np.ndarray:
    _check_lambda(lam)
    return op.set.project(x)


def _box_active_set(G, c, lower, upper, y, max_iter=50):
    # primal-dual active set for 0 in G y - c + N_[l,u](y)
    n = y.shape[0]
    tol = 1e-13 * (1.0 + np.abs(c).max())
    lo = y <= lower
    up = y >= upper
    for _ in range(max_iter):
        free = ~(lo | up)
        z = np.where(lo, lower, np.where(up, upper, 0.0))
        if free.any():
            rhs = c[free] - G[np.ix_(free, ~free)] @ z[~free]
            z[free] = np.linalg.solve(G[np.ix_(free, free)], rhs)
        r = c - G @ z  # must be <= 0 on lo, >= 0 on up, 0 on free
        new_lo = (free & (z < lower)) | (lo & (r <= tol))
        new_up = (free & (z > upper)) | (up & (r >= -tol))
        if np.array_equal(new_lo, lo) and np.array_equal(new_up, up):
            return z
        lo, up = new_lo, new_up
    return None


def _ball_vi(G, c, ball):
    # 0 in G y - c + N_B(y): interior solve, else G y + mu (y - center) = c
    # with ||y - center|| = r for some mu > 0, found by bisection on mu
    n = c.shape[0]
    I = np.eye(n)
    a, r = ball.center, ball.radius

    def solve(mu):
        return np.linalg.solve(G + mu * I, c + mu * a)

    y = solve(0.0)
    if np.linalg.norm(y - a) <= r:
        return y
    lo, hi = 0.0, 1.0
    while np.linalg.norm(solve(hi) - a) > r:
        lo, hi = hi, 2.0 * hi
        if hi > 1e300:
            raise ResolventError("ball multiplier search diverged")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if np.linalg.norm(solve(mid) - a) > r:
            lo = mid
        else:
            hi = mid
    y = solve(hi)
    return a + r * (y - a) / np.linalg.norm(y - a)


def _polish_face(G, c, poly, y, slack):
    # guess the active face from y, solve its KKT system, accept if it checks
    A, b, E, d = poly
    act = A @ y - b >= -slack
    K = np.vstack([A[act], E])
    m = K.shape[0]
    n = c.shape[0]
    rhs_c = np.concatenate([b[act], d])
    sys = np.block([[G, K.T], [K, np.zeros((m, m))]])
    sol, *_ = np.linalg.lstsq(sys, np.concatenate([c, rhs_c]), rcond=None)
    z, mult = sol[:n], sol[n:]
    scale = 1.0 + np.abs(c).max() + np.abs(b).max(initial=0.0) + np.abs(z).max()
    tol = 1e-11 * scale
    if np.linalg.norm(sys @ sol - np.concatenate([c, rhs_c])) > tol:
        return None
    if np.any(A @ z - b > tol) or np.any(mult[: int(act.sum())] < -tol):
        return None
    return z


def resolvent_sum(op: SumOperator, lam: float, x, tol: float = 1e-15,
                  max_iter: int = 100_000) -> np.ndarray:
    """Resolvent of ``F + N_C``: solve ``0 in (lam M + I) y + lam q - x + N_C(y)``.

    The problem is a strongly monotone affine variational inequality.  The
    whole space needs one linear solve; a box uses a primal-dual active-set
    iteration and a ball a one-dimensional multiplier search.  Other
    polyhedral sets run the contractive projected iteration
    ``y <- P_C(y - g (G y - c))`` until the active face can be read off and
    confirmed by its KKT system; non-polyhedral sets iterate to ``tol``.
    """
    lam = _check_lambda(lam)
    x = as_vector(x)
    F, C = op.f_part, op.set
    if isinstance(C, WholeSpace):
        return resolvent_affine(F, lam, x)
    n = F.dim
    G = lam * F.M + np.eye(n)
    c = x - lam * F.q
    y = C.project(x)
    if isinstance(C, Box):
        z = _box_active_set(G, c, C.lower, C.upper, y)
        if z is not None:
            return z
    if isinstance(C, Ball):
        return _ball_vi(G, c, C)
    poly = C.polyhedron()
    mu = 1.0 + lam * F.strong_monotonicity
    LG = spectral_norm(G)
    step = mu / LG**2
    contraction = np.sqrt(max(1.0 - mu**2 / LG**2, 0.0))
    factor = contraction / max(1.0 - contraction, 1e-16)
    stage = 1e-4
    for _ in range(max_iter):
        y_new = C.project(y - step * (G @ y - c))
        err = np.linalg.norm(y_new - y) * factor  # a posteriori distance to the solution
        y = y_new
        size = 1.0 + np.linalg.norm(y)
        if err <= tol * size:
            return y
        if poly is not None and err <= stage * size:
            z = _polish_face(G, c, poly, y, 10 * err + 1e-12 * size)
            if z is not None:
                return z
            stage *= 1e-2
    raise ResolventError("projected resolvent iteration did not converge")


def resolvent(op, lam: float, x) -> np.ndarray:
    return op.resolvent(lam, x)


# ---------------------------------------------------------------------------
# enlargement membership


def check_normal_cone_enlargement(c: SimpleSet, y, v, eps: float,
                                  tol: float = DEFAULT.membership) -> bool:
    """Exact test of ``v in N_C^eps(y)``: ``sigma_C(v) - <v, y> <= eps``."""
    y = as_vector(y, "y")
    v = as_vector(v, "v")
    if not c.contains(y, tol):
        raise GeometryError("y must lie in C")
    s = support_function(c, v)
    vy = float(v @ y)
    slack = DEFAULT.abs_tol + DEFAULT.rel_tol * (abs(s) + abs(vy))
    return s - vy <= eps + slack


def affine_enlargement_gap(op: AffineOperator, y, u) -> float:
    """Smallest ``eps`` with ``u in F^eps(y)`` for affine monotone ``F``.

    ``inf_z <F(z) - u, z - y> = -r^T S^+ r / 4`` with ``r = F(y) - u`` and
    ``S`` the symmetric part of ``M``; ``inf`` when ``r`` leaves the range
    of ``S``.
    """
    y = as_vector(y, "y")
    u = as_vector(u, "u")
    r = op(y) - u
    w = op._sym_vec.T @ r
    thresh = 1e-10 * max(op.lipschitz, 1.0)
    keep = op._sym_eig > thresh
    if np.any(np.abs(w[~keep]) > 1e-9 * (1.0 + np.linalg.norm(r))):
        return np.inf
    return float(0.25 * np.sum(w[keep] ** 2 / op._sym_eig[keep]))


def check_affine_enlargement(op: AffineOperator, y, u, eps: float) -> bool:
    gap = affine_enlargement_gap(op, y, u)
    return gap <= eps + DEFAULT.abs_tol + DEFAULT.rel_tol * abs(eps)


def graph_samples(op, y: np.ndarray, n: int, rng: np.random.Generator,
                  radius: float | None = None):
    """Draw ``n`` points ``(z, u)`` of the graph of ``op`` around ``y``.

    Base points are ``y + r * U[-1, 1]^d`` with ``r`` log-uniform between
    ``radius * 1e-3`` and ``radius`` (default ``10 (1 + ||y||)``).  Normal
    cone samples project the base point ``p`` onto ``C`` and pair
    ``z = P_C(p)`` with ``t (p - z)``; half of them use ``t = 0``.
    """
    d = y.shape[0]
    R = 10.0 * (1.0 + np.linalg.norm(y)) if radius is None else radius
    r = R * 10.0 ** rng.uniform(-3.0, 0.0, size=(n, 1))
    P = y + r * rng.uniform(-1.0, 1.0, size=(n, d))
    if isinstance(op, AffineOperator):
        Z = P
        return Z, Z @ op.M.T + op.q
    if isinstance(op, NormalConeOperator):
        C, F = op.set, None
    elif isinstance(op, SumOperator):
        C, F = op.set, op.f_part
    else:
        raise OperatorError(f"cannot sample the graph of {op!r}")
    Z = np.array([C.project(p) for p in P])
    t = 10.0 ** rng.uniform(-3.0, 3.0, size=(n, 1))
    t[: n // 2] = 0.0
    U = t * (P - Z)
    if F is not None:
        U = U + Z @ F.M.T + F.q
    return Z, U


def check_enlargement_sampled(op, y, v, eps: float, samples: int = 500,
                              rng: np.random.Generator | None = None,
                              radius: float | None = None) -> bool:
    """Necessary test of ``v in T^eps(y)`` over random graph points.

    Returns ``False`` iff some sampled ``(z, u)`` has
    ``<u - v, z - y> < -eps - 1e-10``.  ``True`` is evidence, not proof.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    y = as_vector(y, "y")
    v = as_vector(v, "v")
    rng = np.random.default_rng(0) if rng is None else rng
    Z, U = graph_samples(op, y, samples, rng, radius)
    vals = np.einsum("ij,ij->i", U - v, Z - y)
    return bool(np.all(vals >= -eps - DEFAULT.enlargement))
