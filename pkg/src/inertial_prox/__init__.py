"""Inertial hybrid proximal-extragradient methods for monotone inclusions.

The solver finds ``x`` with ``0 in T(x)`` for a maximal monotone ``T`` by
combining inertial extrapolation, relative-error proximal steps and a
projection onto two half-spaces anchored at the start point.  The iterates
converge to the solution nearest the start point.

Modules
-------
geometry     half-spaces, simple convex sets, projections
operators    affine maps, normal cones, resolvents, enlargement checks
certify      relative-error certificates for inexact proximal steps
methods      exact, extragradient, Tseng and forward-backward oracles
solver       the main iteration and its diagnostics
problems     instances with planted solutions
cli          command-line harness (``inertial-prox``)
"""

from .certify import CertifiedTriple, check_sigma_criterion, sigma_inner_form
from .geometry import Ball, Box, HalfSpace, ProductSet, Simplex, WholeSpace, project_two_halfspaces
from .methods import (
    METHODS,
    exact_resolvent_oracle,
    extragradient_oracle,
    fb_oracle,
    make_oracle,
    tseng_oracle,
)
from .operators import AffineOperator, NormalConeOperator, SubdifferentialQuadratic, SumOperator
from .problems import (
    ProblemInstance,
    make_affine_vi,
    make_cocoercive_problem,
    make_matrix_game_rps,
    make_quadratic_min,
)
from .solver import (
    ConvergenceTrace,
    InertialSchedule,
    SolverConfig,
    complexity_bound_eps,
    complexity_bound_v,
    run,
)

__version__ = "0.1.0"

__all__ = [
    "AffineOperator", "Ball", "Box", "CertifiedTriple", "ConvergenceTrace", "HalfSpace",
    "InertialSchedule", "METHODS", "NormalConeOperator", "ProblemInstance", "ProductSet",
    "Simplex", "SolverConfig", "SubdifferentialQuadratic", "SumOperator", "WholeSpace",
    "check_sigma_criterion", "complexity_bound_eps", "complexity_bound_v",
    "exact_resolvent_oracle", "extragradient_oracle", "fb_oracle", "make_affine_vi",
    "make_cocoercive_problem", "make_matrix_game_rps", "make_oracle", "make_quadratic_min",
    "project_two_halfspaces", "run", "sigma_inner_form", "tseng_oracle",
]
