"""Strong-error convergence studies on coupled Brownian paths.

Paths are processed in fixed-size chunks (optionally on a thread pool); each
chunk draws its own per-path streams, so results do not depend on the number
of workers.  Per-level means use ``math.fsum`` and are therefore independent
of summation order.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..bseries import SdeProblem
from .sampling import PathPlan
from .steppers import ExactSolution, TaylorFamily, integrate_path

__all__ = ["LevelResult", "StudyAborted", "StudyResult", "fit_slope", "strong_error_study"]

# fine-grid refinement for problems without a closed-form solution
REFERENCE_REFINEMENT = 10


class StudyAborted(RuntimeError):
    pass


@dataclass
class LevelResult:
    level: int
    h: float
    mean_error: float
    stderr: float
    used: int
    failed: int


@dataclass
class StudyResult:
    method: str
    problem: str
    reference: str
    seed: int
    paths: int
    levels: list[LevelResult] = field(default_factory=list)
    slope: float = math.nan
    intercept: float = math.nan

    def as_dict(self) -> dict:
        return {
            "method": self.method,
            "problem": self.problem,
            "reference": self.reference,
            "seed": self.seed,
            "paths": self.paths,
            "slope": _json_float(self.slope),
            "intercept": _json_float(self.intercept),
            "levels": [
                {
                    "level": r.level,
                    "h": r.h,
                    "mean_error": r.mean_error,
                    "stderr_of_mean": r.stderr,
                    "used": r.used,
                    "failed": r.failed,
                }
                for r in self.levels
            ],
        }


def _json_float(x: float):
    return None if math.isnan(x) else x


def fit_slope(hs, errors) -> tuple[float, float]:
    """Least-squares line through ``(log2 h, log2 error)``; NaN if undefined."""
    hs = np.asarray(hs, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if len(hs) < 2 or not np.all(np.isfinite(errors)) or np.any(errors <= 0):
        return math.nan, math.nan
    slope, intercept = np.polyfit(np.log2(hs), np.log2(errors), 1)
    return float(slope), float(intercept)


def _chunk_errors(method, problem, x0, levels, seed, paths, reference, T):
    finest = max(levels)
    factor = REFERENCE_REFINEMENT if reference == "fine" else 1
    plan = PathPlan(seed, paths, finest, T=T, base_factor=factor)
    if reference == "exact":
        ref, ref_ok = integrate_path(ExactSolution(), problem, x0, plan, finest)
    else:
        ref, ref_ok = integrate_path(TaylorFamily((0,) * 6), problem, x0, plan.base)
    errs = {}
    for L in levels:
        y, ok = integrate_path(method, problem, x0, plan, L)
        e = np.linalg.norm(ref - y, axis=-1)
        errs[L] = (e, ok & ref_ok & np.isfinite(e))
    return errs


def strong_error_study(
    method,
    problem: SdeProblem,
    x0=None,
    levels=range(4, 10),
    paths: int = 500,
    seed: int = 0,
    reference: str | None = None,
    workers: int = 1,
    chunk: int = 100,
    T: float = 1.0,
    max_failure_fraction: float = 0.01,
) -> StudyResult:
    """Mean endpoint error ``(1/M) sum |X_ref(T) - Y(T)|_2`` per level ``h = T 2^-L``.

    ``reference`` is ``"exact"`` (closed-form solution on the same path) or
    ``"fine"`` (explicit c=0 family member at one-tenth of the finest step);
    by default the exact solution is used when the problem has one.
    Paths whose implicit solves fail are left out of the level's average;
    more than ``max_failure_fraction`` of failures aborts the study.
    """
    levels = sorted(int(L) for L in levels)
    if paths <= 0:
        raise ValueError("need at least one path")
    if not levels:
        raise ValueError("need at least one level")
    if reference is None:
        reference = "exact" if problem.exact is not None else "fine"
    if reference not in ("exact", "fine"):
        raise ValueError(f"unknown reference {reference!r}")
    if reference == "exact" and problem.exact is None:
        raise ValueError(f"problem {problem.name} has no exact solution")
    if x0 is None:
        x0 = problem.x0
    blocks = [list(range(i, min(i + chunk, paths))) for i in range(0, paths, chunk)]

    def run(block):
        return _chunk_errors(method, problem, x0, levels, seed, block, reference, T)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, blocks))
    else:
        parts = [run(b) for b in blocks]

    result = StudyResult(
        method=getattr(method, "name", str(method)),
        problem=problem.name,
        reference=reference,
        seed=seed,
        paths=paths,
    )
    for L in levels:
        e = np.concatenate([part[L][0] for part in parts])
        ok = np.concatenate([part[L][1] for part in parts])
        failed = int((~ok).sum())
        if failed > max_failure_fraction * paths:
            raise StudyAborted(f"level {L}: {failed} of {paths} paths failed")
        good = e[ok]
        n = len(good)
        mean = math.fsum(good) / n
        var = math.fsum((good - mean) ** 2) / (n - 1) if n > 1 else 0.0
        result.levels.append(LevelResult(L, T / 2**L, mean, math.sqrt(var / n), n, failed))
    result.slope, result.intercept = fit_slope(
        [r.h for r in result.levels], [r.mean_error for r in result.levels]
    )
    return result
