"""Vector arithmetic and exact Euclidean projections.

Vectors are 1-D ``float64`` numpy arrays.  The sets here are the ones the
solver and its oracles project onto: half-spaces, the intersection of two
half-spaces, and a handful of simple closed convex sets (box, ball, unit
simplex, whole space, and Cartesian products of those).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .tolerances import DEFAULT


class GeometryError(ValueError):
    pass


class DimensionError(GeometryError):
    pass


class NonFiniteError(GeometryError):
    pass


class EmptySetError(GeometryError):
    pass


class InfeasibleIntersection(GeometryError):
    """Two half-spaces with opposing parallel normals and no common point."""


class DegenerateGram(GeometryError):
    """Parallel normals left the 2x2 Gram system unsolvable."""


class UnboundedSupport(GeometryError):
    pass


def as_vector(x, name: str = "x") -> np.ndarray:
    """Return ``x`` as a finite 1-D float array (scalars become length 1)."""
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    if arr.ndim != 1:
        raise DimensionError(f"{name} must be 1-D, got shape {arr.shape}")
    if arr.size == 0:
        raise DimensionError(f"{name} must have dimension >= 1")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"{name} has non-finite entries")
    return arr


def _check_same_dim(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise DimensionError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")


def inner(a, b) -> float:
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    _check_same_dim(a, b)
    return float(a @ b)


def norm(a) -> float:
    return float(np.linalg.norm(a))


# ---------------------------------------------------------------------------
# half-spaces


@dataclass(frozen=True, eq=False)
class HalfSpace:
    """The set ``{z : <normal, z> <= offset}``.

    A zero normal gives the whole space when ``offset >= 0`` and the empty
    set otherwise; :attr:`kind` records which.
    """

    normal: np.ndarray
    offset: float
    kind: str = field(init=False)

    def __post_init__(self):
        n = as_vector(self.normal, "normal")
        n.setflags(write=False)
        object.__setattr__(self, "normal", n)
        object.__setattr__(self, "offset", float(self.offset))
        if not np.isfinite(self.offset):
            raise NonFiniteError("offset must be finite")
        if float(n @ n) == 0.0:
            kind = "whole" if self.offset >= 0 else "empty"
        else:
            kind = "proper"
        object.__setattr__(self, "kind", kind)

    @property
    def dim(self) -> int:
        return self.normal.shape[0]

    @property
    def is_whole(self) -> bool:
        return self.kind == "whole"

    @property
    def is_empty(self) -> bool:
        return self.kind == "empty"

    def violation(self, x) -> float:
        """``<normal, x> - offset``; positive means ``x`` lies outside."""
        return inner(self.normal, x) - self.offset

    def contains(self, x, tol: float = 0.0) -> bool:
        if self.is_whole:
            return True
        if self.is_empty:
            return False
        return self.violation(x) <= tol

    def __repr__(self):
        return f"HalfSpace(normal={self.normal.tolist()}, offset={self.offset!r})"


def project_halfspace(x, h: HalfSpace) -> np.ndarray:
    x = as_vector(x)
    _check_same_dim(x, h.normal)
    if h.is_empty:
        raise EmptySetError("cannot project onto an empty half-space")
    if h.is_whole:
        return x.copy()
    gap = float(h.normal @ x) - h.offset
    if gap <= 0:
        return x.copy()
    return x - (gap / float(h.normal @ h.normal)) * h.normal


def _feasible(h: HalfSpace, p: np.ndarray) -> bool:
    if h.is_whole:
        return True
    # rounding slack relative to the magnitudes entering <n, p>
    scale = float(np.abs(h.normal) @ np.abs(p)) + abs(h.offset)
    return float(h.normal @ p) - h.offset <= 4 * np.finfo(float).eps * scale


def project_two_halfspaces(x, h1: HalfSpace, h2: HalfSpace) -> np.ndarray:
    """Euclidean projection of ``x`` onto ``h1 & h2``.

    Tries, in order: ``x`` itself, ``P_h1(x)``, ``P_h2(x)``; otherwise both
    constraints are active and the multipliers solve the 2x2 Gram system.
    """
    x = as_vector(x)
    _check_same_dim(x, h1.normal)
    _check_same_dim(x, h2.normal)
    if h1.is_empty or h2.is_empty:
        raise InfeasibleIntersection("one of the half-spaces is empty")
    if h1.is_whole:
        return project_halfspace(x, h2)
    if h2.is_whole:
        return project_halfspace(x, h1)

    if _feasible(h1, x) and _feasible(h2, x):
        return x.copy()
    p1 = project_halfspace(x, h1)
    if _feasible(h2, p1):
        return p1
    p2 = project_halfspace(x, h2)
    if _feasible(h1, p2):
        return p2

    n1, n2 = h1.normal, h2.normal
    s1, s2 = np.linalg.norm(n1), np.linalg.norm(n2)
    u1, u2 = n1 / s1, n2 / s2
    cos = float(u1 @ u2)
    # sin^2 of the angle from the orthogonal part, free of cancellation
    perp = u1 - cos * u2
    if float(perp @ perp) <= 1e-14:
        if cos > 0:
            # same direction: the tighter half-space implies the other
            return p1 if h1.offset / s1 <= h2.offset / s2 else p2
        # opposing normals: nonempty slab or nothing
        if h1.offset / s1 + h2.offset / s2 < 0:
            raise InfeasibleIntersection("half-spaces with opposing normals do not meet")
        raise DegenerateGram("opposing parallel normals: neither half-space implies the other")
    # both constraints active: nearest point of the two hyperplanes, via an
    # SVD least-squares solve on unit rows (error ~ cond(N), not cond(N)^2)
    N = np.vstack([u1, u2])
    c = np.array([h1.offset / s1, h2.offset / s2])
    z = x - np.linalg.lstsq(N, N @ x - c, rcond=None)[0]
    return z - np.linalg.lstsq(N, N @ z - c, rcond=None)[0]


# ---------------------------------------------------------------------------
# simple sets


class SimpleSet:
    """Closed convex set with a cheap Euclidean projection."""

    dim: int | None = None
    bounded: bool = True

    def project(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def support(self, v: np.ndarray) -> float:
        raise NotImplementedError

    def contains(self, x, tol: float = DEFAULT.membership) -> bool:
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
        """Random points of the set (rows when ``size`` is given)."""
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError

    def polyhedron(self):
        """``(A, b, E, d)`` with ``C = {z : A z <= b, E z = d}``, or None if not polyhedral."""
        return None

    def _check(self, x) -> np.ndarray:
        x = as_vector(x)
        if self.dim is not None and x.shape[0] != self.dim:
            raise DimensionError(f"expected dimension {self.dim}, got {x.shape[0]}")
        return x


class Box(SimpleSet):
    def __init__(self, lower, upper):
        lower = as_vector(lower, "lower")
        upper = as_vector(upper, "upper")
        _check_same_dim(lower, upper)
        if np.any(lower > upper):
            raise GeometryError("box needs lower <= upper componentwise")
        self.lower, self.upper = lower, upper
        self.dim = lower.shape[0]

    @classmethod
    def cube(cls, dim: int, radius: float = 1.0) -> Box:
        return cls(-radius * np.ones(dim), radius * np.ones(dim))

    def project(self, x):
        return np.clip(self._check(x), self.lower, self.upper)

    def support(self, v):
        v = self._check(v)
        return float(np.sum(np.maximum(v * self.lower, v * self.upper)))

    def contains(self, x, tol=DEFAULT.membership):
        x = self._check(x)
        return bool(np.all(x >= self.lower - tol) and np.all(x <= self.upper + tol))

    def sample(self, rng, size=None):
        shape = (self.dim,) if size is None else (size, self.dim)
        return rng.uniform(self.lower, self.upper, size=shape)

    def polyhedron(self):
        n = self.dim
        return (np.vstack([np.eye(n), -np.eye(n)]), np.concatenate([self.upper, -self.lower]),
                np.zeros((0, n)), np.zeros(0))

    def to_dict(self):
        return {"type": "box", "lower": self.lower.tolist(), "upper": self.upper.tolist()}

    def __repr__(self):
        return f"Box({self.lower.tolist()}, {self.upper.tolist()})"


class Ball(SimpleSet):
    def __init__(self, center, radius: float):
        self.center = as_vector(center, "center")
        if not radius >= 0:
            raise GeometryError("ball radius must be >= 0")
        self.radius = float(radius)
        self.dim = self.center.shape[0]

    def project(self, x):
        x = self._check(x)
        d = x - self.center
        r = np.linalg.norm(d)
        if r <= self.radius:
            return x.copy()
        return self.center + (self.radius / r) * d

    def support(self, v):
        v = self._check(v)
        return float(v @ self.center + self.radius * np.linalg.norm(v))

    def contains(self, x, tol=DEFAULT.membership):
        return bool(np.linalg.norm(self._check(x) - self.center) <= self.radius + tol)

    def sample(self, rng, size=None):
        n = 1 if size is None else size
        g = rng.standard_normal((n, self.dim))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        r = self.radius * rng.uniform(size=(n, 1)) ** (1.0 / self.dim)
        pts = self.center + r * g
        return pts[0] if size is None else pts

    def to_dict(self):
        return {"type": "ball", "center": self.center.tolist(), "radius": self.radius}

    def __repr__(self):
        return f"Ball({self.center.tolist()}, {self.radius})"


def project_unit_simplex(x: np.ndarray) -> np.ndarray:
    # sort-and-threshold: find tau with sum(max(x - tau, 0)) = 1
    u = np.sort(x)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, x.shape[0] + 1)
    rho = np.nonzero(u - css / idx > 0)[0][-1]
    tau = css[rho] / (rho + 1.0)
    return np.maximum(x - tau, 0.0)


class Simplex(SimpleSet):
    """The standard unit simplex ``{x >= 0, sum(x) = 1}``."""

    def __init__(self, dimension: int):
        if int(dimension) < 1:
            raise GeometryError("simplex dimension must be >= 1")
        self.dim = int(dimension)

    def project(self, x):
        return project_unit_simplex(self._check(x))

    def support(self, v):
        return float(np.max(self._check(v)))

    def contains(self, x, tol=DEFAULT.membership):
        x = self._check(x)
        return bool(np.all(x >= -tol) and abs(x.sum() - 1.0) <= tol)

    def sample(self, rng, size=None):
        return rng.dirichlet(np.ones(self.dim), size=size)

    def polyhedron(self):
        n = self.dim
        return -np.eye(n), np.zeros(n), np.ones((1, n)), np.ones(1)

    def to_dict(self):
        return {"type": "simplex", "dimension": self.dim}

    def __repr__(self):
        return f"Simplex({self.dim})"


class WholeSpace(SimpleSet):
    bounded = False

    def __init__(self, dim: int | None = None):
        self.dim = dim

    def project(self, x):
        return self._check(x).copy()

    def support(self, v):
        v = self._check(v)
        if np.any(v != 0):
            raise UnboundedSupport("support function of the whole space is +inf for v != 0")
        return 0.0

    def contains(self, x, tol=DEFAULT.membership):
        self._check(x)
        return True

    def sample(self, rng, size=None, scale: float = 10.0):
        if self.dim is None:
            raise GeometryError("cannot sample a whole space of unknown dimension")
        shape = (self.dim,) if size is None else (size, self.dim)
        return scale * rng.standard_normal(shape)

    def polyhedron(self):
        if self.dim is None:
            return None
        n = self.dim
        return np.zeros((0, n)), np.zeros(0), np.zeros((0, n)), np.zeros(0)

    def to_dict(self):
        return {"type": "whole", "dim": self.dim}

    def __repr__(self):
        return f"WholeSpace({self.dim})"


class ProductSet(SimpleSet):
    """Cartesian product of simple sets acting on consecutive coordinate blocks."""

    def __init__(self, parts: Sequence[SimpleSet]):
        if not parts:
            raise GeometryError("product of zero sets")
        if any(p.dim is None for p in parts):
            raise GeometryError("product factors need a fixed dimension")
        self.parts = tuple(parts)
        self.bounded = all(p.bounded for p in parts)
        self._cuts = np.cumsum([0] + [p.dim for p in parts])
        self.dim = int(self._cuts[-1])

    def _blocks(self, x):
        return [x[a:b] for a, b in zip(self._cuts[:-1], self._cuts[1:])]

    def project(self, x):
        x = self._check(x)
        return np.concatenate([p.project(b) for p, b in zip(self.parts, self._blocks(x))])

    def support(self, v):
        v = self._check(v)
        return float(sum(p.support(b) for p, b in zip(self.parts, self._blocks(v))))

    def contains(self, x, tol=DEFAULT.membership):
        x = self._check(x)
        return all(p.contains(b, tol) for p, b in zip(self.parts, self._blocks(x)))

    def sample(self, rng, size=None):
        return np.concatenate([p.sample(rng, size) for p in self.parts], axis=-1)

    def polyhedron(self):
        blocks = [p.polyhedron() for p in self.parts]
        if any(b is None for b in blocks):
            return None
        A = _block_diag([b[0] for b in blocks])
        E = _block_diag([b[2] for b in blocks])
        return A, np.concatenate([b[1] for b in blocks]), E, np.concatenate([b[3] for b in blocks])

    def to_dict(self):
        return {"type": "product", "parts": [p.to_dict() for p in self.parts]}

    def __repr__(self):
        return f"ProductSet({list(self.parts)!r})"


def _block_diag(mats):
    out = np.zeros((sum(m.shape[0] for m in mats), sum(m.shape[1] for m in mats)))
    r = c = 0
    for m in mats:
        out[r:r + m.shape[0], c:c + m.shape[1]] = m
        r, c = r + m.shape[0], c + m.shape[1]
    return out


def set_from_dict(d: dict) -> SimpleSet:
    kind = d["type"]
    if kind == "box":
        return Box(d["lower"], d["upper"])
    if kind == "ball":
        return Ball(d["center"], d["radius"])
    if kind == "simplex":
        return Simplex(d["dimension"])
    if kind == "whole":
        return WholeSpace(d.get("dim"))
    if kind == "product":
        return ProductSet([set_from_dict(p) for p in d["parts"]])
    raise GeometryError(f"unknown set type {kind!r}")


def project_simple_set(x, c: SimpleSet) -> np.ndarray:
    return c.project(x)


def support_function(c: SimpleSet, v) -> float:
    """``sup_{z in c} <v, z>``; finite for bounded sets or ``v = 0``."""
    return c.support(v)
