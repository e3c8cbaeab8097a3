import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import brute_force_polyhedron_projection, brute_force_simplex
from inertial_prox.geometry import (
    Ball,
    Box,
    DimensionError,
    EmptySetError,
    HalfSpace,
    InfeasibleIntersection,
    NonFiniteError,
    ProductSet,
    Simplex,
    UnboundedSupport,
    WholeSpace,
    as_vector,
    inner,
    norm,
    project_halfspace,
    project_simple_set,
    project_two_halfspaces,
    set_from_dict,
    support_function,
)

finite = st.floats(-50, 50, allow_nan=False, allow_infinity=False)


def vec(n):
    return arrays(np.float64, n, elements=finite)


# -- inner products ------------------------------------------------------


def test_inner_examples():
    assert inner([1, 2], [3, 4]) == 11
    assert inner([7.0, -2.0, 3.0], np.zeros(3)) == 0
    assert inner([1, 0], [0, 1]) == 0


def test_inner_rejects_bad_input():
    with pytest.raises(DimensionError):
        inner([1, 2], [1, 2, 3])
    with pytest.raises(NonFiniteError):
        as_vector([np.inf])
    with pytest.raises(DimensionError):
        as_vector(np.zeros((2, 2)))


@given(vec(4), vec(4))
def test_inner_symmetric_and_cauchy_schwarz(a, b):
    assert inner(a, b) == inner(b, a)
    assert abs(inner(a, b)) <= norm(a) * norm(b) * (1 + 1e-12) + 1e-12


# -- single half-space ---------------------------------------------------


def test_project_halfspace_examples():
    h = HalfSpace([1.0, 0.0], 0.0)
    np.testing.assert_allclose(project_halfspace([2, 3], h), [0, 3])
    np.testing.assert_allclose(project_halfspace([-1, 5], h), [-1, 5])
    np.testing.assert_allclose(project_halfspace([3, 3], HalfSpace([1, 1], 2)), [1, 1])


def test_project_halfspace_against_grid():
    # dense grid minimiser of ||z - x|| over z1 + z2 <= 2
    g = np.linspace(-1, 4, 501)
    Z = np.array(np.meshgrid(g, g)).reshape(2, -1).T
    Z = Z[Z.sum(axis=1) <= 2 + 1e-12]
    best = Z[np.argmin(np.linalg.norm(Z - [3, 3], axis=1))]
    np.testing.assert_allclose(best, [1, 1], atol=1e-2)


def test_zero_normal_halfspaces():
    whole = HalfSpace([0.0, 0.0], 1.0)
    assert whole.is_whole and whole.contains([1e9, -1e9])
    np.testing.assert_array_equal(project_halfspace([4, 5], whole), [4, 5])
    empty = HalfSpace([0.0, 0.0], -1.0)
    assert empty.is_empty
    with pytest.raises(EmptySetError):
        project_halfspace([0, 0], empty)


@given(vec(3), vec(3), finite)
def test_project_halfspace_properties(x, n, c):
    h = HalfSpace(n, c)
    if h.is_empty:
        return
    p = project_halfspace(x, h)
    scale = 1 + norm(n) * (1 + norm(x)) + abs(c)
    assert h.violation(p) <= 1e-10 * scale
    # idempotent and the displacement is a nonnegative multiple of the normal
    np.testing.assert_allclose(project_halfspace(p, h), p, atol=1e-9 * scale)
    d = x - p
    assert inner(d, n) >= -1e-9 * scale
    if h.is_whole:
        assert norm(d) == 0
        return
    u = n / norm(n)
    assert norm(d - inner(d, u) * u) <= 1e-9 * (1 + norm(x) + norm(d))


# -- two half-spaces -----------------------------------------------------


def test_project_two_halfspaces_examples():
    h1 = HalfSpace([1.0, 0.0], -1.0)
    np.testing.assert_allclose(project_two_halfspaces([0, 0], h1, HalfSpace([0, 1], -1)), [-1, -1])
    np.testing.assert_allclose(project_two_halfspaces([0, 0], h1, HalfSpace([0, 1], 5)), [-1, 0])
    np.testing.assert_allclose(
        project_two_halfspaces([0, 0], HalfSpace([1, 2], 1), HalfSpace([-3, 1], 0.5)), [0, 0])


def test_two_halfspaces_both_active_matches_grid():
    g = np.linspace(-2, 1, 601)
    Z = np.array(np.meshgrid(g, g)).reshape(2, -1).T
    Z = Z[(Z[:, 0] <= -1 + 1e-12) & (Z[:, 1] <= -1 + 1e-12)]
    best = Z[np.argmin(np.linalg.norm(Z, axis=1))]
    np.testing.assert_allclose(best, [-1, -1], atol=1e-2)


def test_two_halfspaces_infeasible():
    h1 = HalfSpace([1.0, 0.0], -1.0)
    h2 = HalfSpace([-1.0, 0.0], -1.0)  # z1 >= 1
    with pytest.raises(InfeasibleIntersection):
        project_two_halfspaces([0.0, 0.0], h1, h2)
    with pytest.raises(InfeasibleIntersection):
        project_two_halfspaces([0.0, 0.0], h1, HalfSpace([0, 0], -1))


def test_two_halfspaces_parallel_same_direction():
    h1 = HalfSpace([1.0, 1.0], 1.0)
    h2 = HalfSpace([2.0, 2.0], 4.0)  # looser copy of h1
    np.testing.assert_allclose(project_two_halfspaces([3, 3], h1, h2), [0.5, 0.5])
    np.testing.assert_allclose(project_two_halfspaces([3, 3], h2, h1), [0.5, 0.5])


def test_two_halfspaces_with_whole_space():
    h = HalfSpace([1.0, 0.0], 0.0)
    w = HalfSpace([0.0, 0.0], 0.0)
    np.testing.assert_allclose(project_two_halfspaces([2, 3], h, w), [0, 3])
    np.testing.assert_allclose(project_two_halfspaces([2, 3], w, h), [0, 3])


def _random_feasible_pair(rng, n):
    # pick a point inside both half-spaces so the intersection is nonempty
    z = rng.standard_normal(n)
    hs = []
    for _ in range(2):
        a = rng.standard_normal(n)
        hs.append(HalfSpace(a, float(a @ z) + rng.exponential()))
    return hs


def test_two_halfspaces_vs_active_set_enumeration(rng):
    for _ in range(300):
        n = int(rng.integers(1, 6))
        h1, h2 = _random_feasible_pair(rng, n)
        x = 3 * rng.standard_normal(n)
        got = project_two_halfspaces(x, h1, h2)
        ref = brute_force_polyhedron_projection(x, [h1.normal, h2.normal], [h1.offset, h2.offset])
        np.testing.assert_allclose(got, ref, atol=1e-9 * (1 + norm(x)))


@given(vec(3), vec(3), vec(3), st.floats(0, 10), st.floats(0, 10))
def test_two_halfspaces_variational_property(x, a, b, s, t):
    z0 = np.zeros(3)
    h1, h2 = HalfSpace(a, s), HalfSpace(b, t)  # both contain the origin
    p = project_two_halfspaces(x, h1, h2)
    scale = (1 + norm(x)) * (1 + norm(a) + norm(b)) + s + t
    assert h1.violation(p) <= 1e-9 * scale
    assert h2.violation(p) <= 1e-9 * scale
    # projection onto a convex set containing z0: <x - p, z0 - p> <= 0
    assert inner(x - p, z0 - p) <= 1e-7 * scale**2


# -- simple sets -----------------------------------------------------------


def test_simplex_examples():
    np.testing.assert_allclose(project_simple_set([2.0, 0.0], Simplex(2)), [1, 0])
    np.testing.assert_allclose(project_simple_set([0.8, 0.6], Simplex(2)), [0.6, 0.4])
    np.testing.assert_allclose(brute_force_simplex(np.array([0.8, 0.6])), [0.6, 0.4])


def test_box_and_ball_examples():
    np.testing.assert_array_equal(project_simple_set([0.2, 0.3], Box([-1, -1], [1, 1])), [0.2, 0.3])
    np.testing.assert_allclose(project_simple_set([2.0], Box([-1.0], [1.0])), [1.0])
    np.testing.assert_allclose(project_simple_set([3.0, 4.0], Ball([0, 0], 1)), [0.6, 0.8])
    np.testing.assert_array_equal(project_simple_set([0.1, 0.2], Ball([0, 0], 1)), [0.1, 0.2])


def test_ball_projection_against_grid():
    th = np.linspace(0, 2 * np.pi, 200001)
    pts = np.stack([np.cos(th), np.sin(th)], axis=1)
    best = pts[np.argmin(np.linalg.norm(pts - [3, 4], axis=1))]
    np.testing.assert_allclose(best, [0.6, 0.8], atol=1e-4)


def test_simplex_vs_enumeration(rng):
    for _ in range(300):
        n = int(rng.integers(1, 7))
        x = 2 * rng.standard_normal(n)
        np.testing.assert_allclose(Simplex(n).project(x), brute_force_simplex(x), atol=1e-12)


def test_box_vs_enumeration(rng):
    # a box is a polyhedron with 2n constraints
    for _ in range(100):
        n = int(rng.integers(1, 4))
        lo = rng.uniform(-2, 0, n)
        hi = lo + rng.uniform(0, 2, n)
        x = 3 * rng.standard_normal(n)
        N = np.vstack([np.eye(n), -np.eye(n)])
        ref = brute_force_polyhedron_projection(x, N, np.concatenate([hi, -lo]))
        np.testing.assert_allclose(Box(lo, hi).project(x), ref, atol=1e-12)


def _sets(n):
    return [
        Box(-np.ones(n), 2 * np.ones(n)),
        Ball(np.full(n, 0.5), 1.5),
        Simplex(n),
        WholeSpace(n),
    ]


@pytest.mark.parametrize("n", [1, 2, 4])
def test_projection_characterised_by_support(n, rng):
    # p = P_C(x)  iff  p in C  and  sigma_C(x - p) = <x - p, p>
    for C in _sets(n):
        for _ in range(50):
            x = 3 * rng.standard_normal(n)
            p = C.project(x)
            assert C.contains(p)
            d = x - p
            if isinstance(C, WholeSpace):
                assert norm(d) == 0
                continue
            assert abs(support_function(C, d) - inner(d, p)) <= 1e-10 * (1 + norm(d) * (1 + norm(p)))


@pytest.mark.parametrize("n", [2, 3])
def test_projection_never_beaten_by_samples(n, rng):
    for C in _sets(n)[:3]:
        Z = C.sample(rng, 2000)
        for _ in range(20):
            x = 3 * rng.standard_normal(n)
            p = C.project(x)
            assert np.all(np.linalg.norm(Z - x, axis=1) >= norm(p - x) - 1e-12)


def test_support_examples():
    assert support_function(Box([-1, -1], [1, 1]), [2, -3]) == 5
    assert support_function(Simplex(3), [1, 4, 2]) == 4
    for C in _sets(3)[:3]:
        assert support_function(C, np.zeros(3)) == 0
    assert support_function(WholeSpace(2), [0, 0]) == 0
    with pytest.raises(UnboundedSupport):
        support_function(WholeSpace(2), [1, 0])


def test_support_vs_vertex_enumeration(rng):
    lo, hi = np.array([-1.0, 0.0, 2.0]), np.array([1.0, 0.5, 3.0])
    verts = np.array(list(itertools.product(*zip(lo, hi))))
    for _ in range(50):
        v = rng.standard_normal(3)
        assert support_function(Box(lo, hi), v) == pytest.approx((verts @ v).max(), abs=1e-12)
        assert support_function(Simplex(3), v) == pytest.approx(np.eye(3).dot(v).max(), abs=1e-12)


def test_product_set_is_blockwise(rng):
    P = ProductSet([Simplex(3), Box([-1.0], [1.0]), Ball([0.0, 0.0], 2.0)])
    assert P.dim == 6
    x = 3 * rng.standard_normal(6)
    p = P.project(x)
    np.testing.assert_allclose(p[:3], Simplex(3).project(x[:3]))
    np.testing.assert_allclose(p[3:4], np.clip(x[3:4], -1, 1))
    np.testing.assert_allclose(p[4:], Ball([0, 0], 2).project(x[4:]))
    v = rng.standard_normal(6)
    assert support_function(P, v) == pytest.approx(
        v[:3].max() + abs(v[3]) + 2 * norm(v[4:]))


def test_set_dict_round_trip():
    for C in _sets(3) + [ProductSet([Simplex(2), Box([0.0], [1.0])])]:
        D = set_from_dict(C.to_dict())
        x = np.array([0.3, -2.0, 5.0])
        np.testing.assert_array_equal(D.project(x), C.project(x))


def test_set_constructors_validate():
    with pytest.raises(ValueError):
        Box([1.0], [0.0])
    with pytest.raises(ValueError):
        Ball([0.0], -1.0)
    with pytest.raises(ValueError):
        Simplex(0)
    with pytest.raises(DimensionError):
        Box([0.0, 0.0], [1.0, 1.0]).project([1.0, 2.0, 3.0])


@pytest.mark.parametrize("C", [Box([-1.0, 0.0], [1.0, 2.0]), Simplex(2), WholeSpace(2),
                               ProductSet([Simplex(1), Box([0.0], [1.0])])], ids=str)
def test_polyhedral_description_matches_membership(C, rng):
    A, b, E, d = C.polyhedron()
    for z in 2 * rng.standard_normal((300, 2)):
        z = z if rng.uniform() < 0.5 else C.project(z)
        inside = np.all(A @ z <= b + 1e-12) and np.allclose(E @ z, d, atol=1e-12)
        assert inside == C.contains(z, 1e-12)
    assert Ball([0.0, 0.0], 1.0).polyhedron() is None
