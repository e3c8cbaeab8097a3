"""Test problems whose solution sets are known in closed form.

Each constructor returns a :class:`ProblemInstance` for ``0 in F(x) + N_C(x)``
together with an exact oracle ``x0 -> (P_S(x0), d0)``, where ``S`` is the
solution set and ``d0 = dist(x0, S)``.  Solutions are planted by
construction rather than computed by a solver.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .geometry import Ball, Box, ProductSet, SimpleSet, Simplex, WholeSpace, as_vector
from .operators import AffineOperator, NormalConeOperator, SubdifferentialQuadratic, SumOperator


class ProblemError(ValueError):
    pass


@dataclass
class ProblemInstance:
    name: str
    operator: SumOperator
    solution_oracle: Callable[[np.ndarray], tuple[np.ndarray, float]]
    description: str = ""
    default_x0: np.ndarray | None = None
    params: dict = field(default_factory=dict)
    unique_solution: bool = True

    @property
    def F(self) -> AffineOperator:
        return self.operator.f_part

    @property
    def feasible_set(self) -> SimpleSet:
        return self.operator.set

    @property
    def lipschitz_L(self) -> float:
        return self.F.lipschitz

    @property
    def cocoercive_L(self) -> float:
        return self.F.cocoercive_L

    @property
    def dim(self) -> int:
        return self.F.dim

    def solution(self, x0) -> np.ndarray:
        return self.solution_oracle(as_vector(x0, "x0"))[0]

    def d0(self, x0) -> float:
        return self.solution_oracle(as_vector(x0, "x0"))[1]

    def residual(self, x) -> float:
        """Natural residual ``||x - P_C(x - F(x))||``; zero exactly on ``S``."""
        x = as_vector(x)
        return float(np.linalg.norm(x - self.feasible_set.project(x - self.F(x))))

    def to_dict(self) -> dict:
        return {"problem": self.name, "problem_params": dict(self.params)}


def _strictly_interior(C: SimpleSet, x: np.ndarray) -> bool:
    if isinstance(C, WholeSpace):
        return True
    if isinstance(C, Box):
        return bool(np.all(x > C.lower) and np.all(x < C.upper))
    if isinstance(C, Ball):
        return bool(np.linalg.norm(x - C.center) < C.radius)
    if isinstance(C, ProductSet):
        blocks = np.split(x, np.cumsum([p.dim for p in C.parts])[:-1])
        return all(_strictly_interior(p, b) for p, b in zip(C.parts, blocks))
    # the simplex has empty interior in R^n
    return False


def make_quadratic_min(A, b, name: str = "quadratic_min", params: dict | None = None) -> ProblemInstance:
    """Minimise ``0.5 ||A x - b||^2`` over the whole space.

    ``S = {x : A^T A x = A^T b}`` is an affine subspace and
    ``P_S(x0) = x0 - A^+ (A x0 - b)`` (minimum-norm least-squares correction).
    """
    F = SubdifferentialQuadratic(A, b)
    if F.lipschitz == 0:
        raise ProblemError("A must be nonzero")
    A, b = F.A, F.b
    n = F.dim

    def oracle(x0):
        d, *_ = np.linalg.lstsq(A, A @ x0 - b, rcond=None)
        xs = x0 - d
        return xs, float(np.linalg.norm(d))

    rank = np.linalg.matrix_rank(A)
    return ProblemInstance(
        name=name,
        operator=SumOperator(F, NormalConeOperator(WholeSpace(n))),
        solution_oracle=oracle,
        description=f"least squares, A {A.shape[0]}x{n} of rank {rank}",
        params=params if params is not None else {"A": A.tolist(), "b": b.tolist()},
        unique_solution=rank == n,
    )


def make_affine_vi(M, x_star, C: SimpleSet, name: str = "affine_vi",
                   params: dict | None = None) -> ProblemInstance:
    """VI for ``F(x) = M (x - x_star)`` over ``C`` with ``x_star`` planted.

    ``x_star`` must be strictly interior and ``M + M^T`` positive definite,
    which makes ``x_star`` the unique solution.
    """
    M = np.atleast_2d(np.asarray(M, dtype=float))
    x_star = as_vector(x_star, "x_star")
    if not _strictly_interior(C, x_star):
        raise ProblemError("x_star must lie strictly inside C")
    F = AffineOperator(M, -M @ x_star)
    if F.strong_monotonicity <= 1e-10 * max(F.lipschitz, 1.0):
        raise ProblemError("M + M^T must be positive definite for a unique planted solution")

    def oracle(x0):
        return x_star.copy(), float(np.linalg.norm(x0 - x_star))

    return ProblemInstance(
        name=name,
        operator=SumOperator(F, NormalConeOperator(C)),
        solution_oracle=oracle,
        description=f"strongly monotone affine VI, dim {F.dim}",
        params=params if params is not None else {
            "M": M.tolist(), "x_star": x_star.tolist(), "set": C.to_dict()},
    )


RPS = np.array([[0.0, -1.0, 1.0], [1.0, 0.0, -1.0], [-1.0, 1.0, 0.0]])


def make_matrix_game_rps() -> ProblemInstance:
    """Rock-paper-scissors as a saddle-point VI.

    ``F(u, w) = (A w, -A^T u)`` on ``Simplex(3) x Simplex(3)``; the unique
    equilibrium is uniform play on both sides.
    """
    A = RPS
    M = np.block([[np.zeros((3, 3)), A], [-A.T, np.zeros((3, 3))]])
    F = AffineOperator(M)
    C = ProductSet([Simplex(3), Simplex(3)])
    xs = np.full(6, 1.0 / 3.0)

    def oracle(x0):
        return xs.copy(), float(np.linalg.norm(x0 - xs))

    return ProblemInstance(
        name="rps",
        operator=SumOperator(F, NormalConeOperator(C)),
        solution_oracle=oracle,
        description="rock-paper-scissors zero-sum game",
        default_x0=np.array([1.0, 0, 0, 1.0, 0, 0]),
        params={},
    )


def make_cocoercive_problem(A, b, C: SimpleSet, name: str = "cocoercive",
                            params: dict | None = None) -> ProblemInstance:
    """``0 in grad f(x) + N_C(x)`` for ``f = 0.5 ||A x - b||^2``.

    Admitted constructions:

    * ``A`` full column rank with the least-squares solution strictly
      inside ``C`` (unique solution);
    * ``C`` a box and ``A`` square diagonal: coordinates decouple, a nonzero
      ``a_i`` pins ``x_i = clamp(b_i / a_i)`` and a zero ``a_i`` leaves
      ``x_i`` free in ``[l_i, u_i]``.
    """
    F = SubdifferentialQuadratic(A, b)
    A, b = F.A, F.b
    n = F.dim
    oracle = None
    unique = True
    if isinstance(C, Box) and A.shape == (n, n) and np.count_nonzero(A - np.diag(np.diag(A))) == 0:
        a = np.diag(A)
        pinned = a != 0
        target = np.zeros(n)
        target[pinned] = np.clip(b[pinned] / a[pinned], C.lower[pinned], C.upper[pinned])
        unique = bool(pinned.all())

        def oracle(x0):
            xs = np.where(pinned, target, np.clip(x0, C.lower, C.upper))
            return xs, float(np.linalg.norm(x0 - xs))
    elif np.linalg.matrix_rank(A) == n:
        x_ls = np.linalg.lstsq(A, b, rcond=None)[0]
        if _strictly_interior(C, x_ls):
            def oracle(x0):
                return x_ls.copy(), float(np.linalg.norm(x0 - x_ls))
    if oracle is None:
        raise ProblemError("construction does not admit an exact solution oracle")
    return ProblemInstance(
        name=name,
        operator=SumOperator(F, NormalConeOperator(C)),
        solution_oracle=oracle,
        description=f"constrained least squares, dim {n}",
        params=params if params is not None else {"A": A.tolist(), "b": b.tolist(), "set": C.to_dict()},
        unique_solution=unique,
    )


# ---------------------------------------------------------------------------
# named, parameterised instances (the command-line problem catalogue)


def _orthonormal(rng, n, k):
    q, _ = np.linalg.qr(rng.standard_normal((n, k)))
    return q[:, :k]


def random_quadratic(dim: int = 20, rank: int = 12, seed: int = 0) -> ProblemInstance:
    """Rank-deficient least squares: ``A`` is ``rank x dim`` with singular values in [0.5, 1.5]."""
    if not 1 <= rank <= dim:
        raise ProblemError("need 1 <= rank <= dim")
    rng = np.random.default_rng(seed)
    U = _orthonormal(rng, rank, rank)
    V = _orthonormal(rng, dim, rank)
    s = rng.uniform(0.5, 1.5, size=rank)
    A = (U * s) @ V.T
    b = rng.standard_normal(rank)
    p = make_quadratic_min(A, b, name="quadratic", params={"dim": dim, "rank": rank, "seed": seed})
    p.default_x0 = rng.standard_normal(dim)
    return p


def random_affine_vi(dim: int = 10, seed: int = 0, mu: float = 0.2) -> ProblemInstance:
    """``M = mu I + G G^T / dim + (K - K^T)/2`` on the box ``[-1, 1]^dim``."""
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((dim, dim))
    K = rng.standard_normal((dim, dim))
    M = mu * np.eye(dim) + G @ G.T / dim + 0.5 * (K - K.T)
    x_star = rng.uniform(-0.5, 0.5, size=dim)
    p = make_affine_vi(M, x_star, Box.cube(dim), name="affine_vi",
                       params={"dim": dim, "seed": seed, "mu": mu})
    p.default_x0 = rng.uniform(-1.0, 1.0, size=dim)
    return p


def vi_1d() -> ProblemInstance:
    """``F(x) = x`` on ``[-1, 1]``; solution 0."""
    p = make_affine_vi([[1.0]], [0.0], Box([-1.0], [1.0]), name="vi1d", params={})
    p.default_x0 = np.array([1.0])
    return p


def box_least_squares() -> ProblemInstance:
    """``A = diag(1, 2)``, ``b = (3, 3)`` on ``[0, 1]^2``; solution ``(1, 1)``."""
    p = make_cocoercive_problem(np.diag([1.0, 2.0]), [3.0, 3.0], Box([0.0, 0.0], [1.0, 1.0]),
                                name="box_lsq", params={})
    p.default_x0 = np.array([0.0, 0.0])
    return p


def _rps(**kw):
    if kw:
        raise ProblemError("rps takes no parameters")
    return make_matrix_game_rps()


def _no_params(builder):
    def build(**kw):
        if kw:
            raise ProblemError(f"{builder.__name__} takes no parameters")
        return builder()
    return build


CATALOGUE: dict[str, Callable[..., ProblemInstance]] = {
    "vi1d": _no_params(vi_1d),
    "quadratic": random_quadratic,
    "affine_vi": random_affine_vi,
    "rps": _rps,
    "box_lsq": _no_params(box_least_squares),
}


def build_problem(name: str, params: dict | None = None) -> ProblemInstance:
    try:
        builder = CATALOGUE[name]
    except KeyError:
        raise ProblemError(f"unknown problem {name!r}; choose from {', '.join(CATALOGUE)}") from None
    try:
        return builder(**(params or {}))
    except TypeError as exc:
        raise ProblemError(f"bad parameters for {name}: {exc}") from None


def suite() -> list[ProblemInstance]:
    """The problems every method is exercised on in the test-suite."""
    return [vi_1d(), random_quadratic(), random_affine_vi(), make_matrix_game_rps(), box_least_squares()]
