import itertools

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, max_examples=100, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def brute_force_polyhedron_projection(x, normals, offsets):
    """Project onto ``{z : N z <= c}`` by enumerating every active set.

    For each subset of constraints treated as equalities the equality-
    constrained minimiser is found by least squares; the feasible candidate
    closest to ``x`` wins.  Exponential, only for a handful of constraints.
    """
    x = np.asarray(x, dtype=float)
    N = np.atleast_2d(np.asarray(normals, dtype=float))
    c = np.asarray(offsets, dtype=float)
    best, best_d = None, np.inf
    for r in range(len(c) + 1):
        for act in itertools.combinations(range(len(c)), r):
            act = list(act)
            if act:
                A = N[act]
                lam, *_ = np.linalg.lstsq(A @ A.T, A @ x - c[act], rcond=None)
                z = x - A.T @ lam
            else:
                z = x.copy()
            if np.all(N @ z - c <= 1e-10 * (1 + np.abs(c))):
                d = np.linalg.norm(z - x)
                if d < best_d:
                    best, best_d = z, d
    return best


def brute_force_simplex(x):
    """Enumerate supports: on support S the projection is x_S - tau."""
    n = len(x)
    best, best_d = None, np.inf
    for r in range(1, n + 1):
        for S in itertools.combinations(range(n), r):
            S = list(S)
            tau = (x[S].sum() - 1) / r
            z = np.zeros(n)
            z[S] = x[S] - tau
            if np.all(z >= -1e-15):
                d = np.linalg.norm(z - x)
                if d < best_d:
                    best, best_d = z, d
    return best
