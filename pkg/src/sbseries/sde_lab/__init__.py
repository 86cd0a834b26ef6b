"""Numerical integrators, Brownian sampling and convergence studies."""

from .problems import PROBLEMS, get_problem, linear_problem, nonlin2d_problem, sinh_problem
from .sampling import IncrementBatch, PathPlan, aggregate, aggregate_pair, sample_increments
from .steppers import StepperConfig, euler_step, family_step, integrate_path, make_method, milstein_step
from .study import StudyResult, strong_error_study

__all__ = [
    "IncrementBatch", "PROBLEMS", "PathPlan", "StepperConfig", "StudyResult", "aggregate",
    "aggregate_pair", "euler_step", "family_step", "get_problem", "integrate_path",
    "linear_problem", "make_method", "milstein_step", "nonlin2d_problem", "sample_increments",
    "sinh_problem", "strong_error_study",
]
