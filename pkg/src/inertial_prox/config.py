"""Run configuration for the command-line harness.

A configuration is a flat JSON object.  Only ``problem_params`` nests (one
level).  Recognised keys and defaults::

    {
      "problem": "vi1d",             # see inertial_prox.problems.CATALOGUE
      "problem_params": {},          # forwarded to the problem builder
      "method": "extragradient",     # exact | extragradient | tseng | fb
      "sigma": 0.5,
      "rho": 1e-6,
      "max_iter": 10000,
      "alpha": 1.0,                  # constant, or a list (zero after its end)
      "beta_rule": "harmonic",       # zero | harmonic | list
      "beta": 0.5,                   # c in c/(k+1), or a list
      "lambda": null,                # stepsize of the exact method (default 1/L)
      "x0": null,                    # start point (default: the problem's)
      "x0_distance": null,           # rescale x0 so that dist(x0, S) equals this
      "seed": 0,                     # default problem seed
      "output": null,                # trace path; --out overrides
      "check_level": "invariants"    # off | invariants | paranoid
    }
"""

from __future__ import annotations

import inspect
import json
import math
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .methods import METHODS, ProxOracle, make_oracle
from .problems import CATALOGUE, ProblemError, ProblemInstance, build_problem
from .solver import CHECK_LEVELS, InertialSchedule, ScheduleError, SolverConfig

OUT_DIR_ENV = "INERTIAL_PROX_OUT_DIR"


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    problem: str = "vi1d"
    problem_params: dict = field(default_factory=dict)
    method: str = "extragradient"
    sigma: float = 0.5
    rho: float = 1e-6
    max_iter: int = 10_000
    alpha: float | list = 1.0
    beta_rule: str = "harmonic"
    beta: float | list = 0.5
    # "lambda" in the file
    lam: float | None = None
    x0: list | None = None
    x0_distance: float | None = None
    seed: int = 0
    output: str | None = None
    check_level: str = "invariants"

    @classmethod
    def from_dict(cls, d: dict) -> RunConfig:
        if not isinstance(d, dict):
            raise ConfigError("configuration must be a JSON object")
        d = dict(d)
        if "lambda" in d:
            d["lam"] = d.pop("lambda")
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown configuration keys: {', '.join(sorted(unknown))}")
        cfg = cls(**d)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> RunConfig:
        try:
            with open(path) as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        return d

    def replace(self, **kw) -> RunConfig:
        d = asdict(self)
        d.update(kw)
        cfg = RunConfig(**d)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {', '.join(METHODS)}")
        if self.check_level not in CHECK_LEVELS:
            raise ConfigError(f"check_level must be one of {', '.join(CHECK_LEVELS)}")
        if not isinstance(self.problem_params, dict):
            raise ConfigError("problem_params must be an object")
        if any(isinstance(v, (dict, list)) for v in self.problem_params.values()):
            raise ConfigError("problem_params values must be scalars")
        for name in ("sigma", "rho"):
            val = getattr(self, name)
            if not isinstance(val, (int, float)) or not math.isfinite(val):
                raise ConfigError(f"{name} must be a finite number")
        if not 0 <= self.sigma < 1:
            raise ConfigError("sigma must lie in [0, 1)")
        if self.method != "exact" and self.sigma == 0:
            raise ConfigError(f"{self.method} needs sigma in (0, 1)")
        if self.rho < 0:
            raise ConfigError("rho must be >= 0")
        if not isinstance(self.max_iter, int) or self.max_iter < 0:
            raise ConfigError("max_iter must be a nonnegative integer")
        if self.lam is not None and not (isinstance(self.lam, (int, float)) and self.lam > 0):
            raise ConfigError("lambda must be a positive number")
        if self.x0_distance is not None and not self.x0_distance >= 0:
            raise ConfigError("x0_distance must be >= 0")
        try:
            self.schedule()
        except (ScheduleError, TypeError) as exc:
            raise ConfigError(f"bad inertial schedule: {exc}") from None

    def schedule(self) -> InertialSchedule:
        beta = self.beta
        if self.beta_rule == "zero":
            beta = 0.0
        return InertialSchedule(alpha=self.alpha, beta=beta, beta_rule=self.beta_rule)

    def solver_config(self) -> SolverConfig:
        return SolverConfig(sigma=self.sigma, rho=self.rho, max_iter=self.max_iter,
                            schedule=self.schedule(), check_level=self.check_level)

    # -- assembly --------------------------------------------------------

    def build_problem(self) -> ProblemInstance:
        params = dict(self.problem_params)
        if "seed" not in params and _takes_seed(self.problem):
            params["seed"] = self.seed
        try:
            return build_problem(self.problem, params)
        except ProblemError as exc:
            raise ConfigError(str(exc)) from None

    def start_point(self, problem: ProblemInstance) -> np.ndarray:
        if self.x0 is not None:
            x0 = np.asarray(self.x0, dtype=float)
        elif problem.default_x0 is not None:
            x0 = problem.default_x0.copy()
        else:
            raise ConfigError(f"problem {problem.name} has no default x0; set x0")
        if x0.shape != (problem.dim,):
            raise ConfigError(f"x0 must have dimension {problem.dim}")
        if self.x0_distance is not None:
            xs, d0 = problem.solution_oracle(x0)
            if d0 == 0:
                raise ConfigError("x0 is a solution; cannot rescale its distance")
            x0 = xs + (x0 - xs) * (self.x0_distance / d0)
        return x0

    def build_oracle(self, problem: ProblemInstance) -> ProxOracle:
        try:
            return make_oracle(self.method, problem.operator, self.sigma, self.lam)
        except ValueError as exc:
            raise ConfigError(f"method {self.method} rejected problem {problem.name}: {exc}") from None

    def output_path(self, override: str | None = None, suffix: str = "csv") -> Path:
        if override:
            return Path(override)
        if self.output:
            return Path(self.output)
        base = Path(os.environ.get(OUT_DIR_ENV, "."))
        return base / f"{self.problem}_{self.method}.{suffix}"


def _takes_seed(name: str) -> bool:
    builder = CATALOGUE.get(name)
    return builder is not None and "seed" in inspect.signature(builder).parameters
