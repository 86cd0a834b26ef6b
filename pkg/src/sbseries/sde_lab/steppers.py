"""One-step integrators for scalar-noise SDEs, vectorized over paths.

States have shape ``(M, d)`` (a single state of shape ``(d,)`` is accepted
too); increments ``dW`` and ``dZ`` have shape ``(M,)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from ..bseries import SdeProblem
from .sampling import PathPlan, iterated_integrals

__all__ = [
    "ConvergenceError",
    "EulerMaruyama",
    "ExactSolution",
    "Milstein",
    "StepperConfig",
    "TaylorFamily",
    "euler_step",
    "family_step",
    "integrate_path",
    "make_method",
    "milstein_step",
]


class ConvergenceError(RuntimeError):
    def __init__(self, failed: int, iterations: int, residual: float):
        super().__init__(
            f"implicit solve failed on {failed} path(s) after {iterations} iterations "
            f"(max residual {residual:.3e})"
        )
        self.failed = failed
        self.iterations = iterations
        self.residual = residual


@dataclass(frozen=True)
class StepperConfig:
    solver: str = "newton"
    tol: float = 1e-12
    max_iter: int = 50
    damping: float = 0.5

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("tolerance must be positive")
        if self.solver not in ("newton", "fixed-point"):
            raise ValueError(f"unknown solver {self.solver!r}")
        if not 0 < self.damping < 1:
            raise ValueError("damping must lie in (0, 1)")


def _batch(y):
    y = np.asarray(y, dtype=float)
    return (y[None, :], True) if y.ndim == 1 else (y, False)


def _col(a, like):
    a = np.asarray(a, dtype=float)
    return a[..., None] if a.ndim else a * np.ones(like.shape[:-1])[..., None]


def euler_step(p: SdeProblem, y, dW, h: float):
    y, single = _batch(y)
    out = y + h * p.g(0, y) + _col(dW, y) * p.g(1, y)
    return out[0] if single else out


def milstein_step(p: SdeProblem, y, dW, h: float):
    y, single = _batch(y)
    dW = np.asarray(dW, dtype=float)
    g1 = p.g(1, y)
    out = y + h * p.g(0, y) + _col(dW, y) * g1 + _col(0.5 * (dW * dW - h), y) * p.dg(1, y, g1)
    return out[0] if single else out


def _family_explicit(c, p: SdeProblem, y, ints, h):
    c1, c2, c3, c4, c5, c6 = c
    I1, I11, I10, I01, I111 = (ints[w] for w in [(1,), (1, 1), (1, 0), (0, 1), (1, 1, 1)])
    hh = h * h
    dg = lambda l, *v: p.dg(l, y, *v)
    g0, g1 = p.g(0, y), p.g(1, y)
    g1g1 = dg(1, g1)
    g1g0 = dg(1, g0)
    g0g1 = dg(0, g1)
    g1_11 = dg(1, g1, g1)
    g1g1g1 = dg(1, g1g1)
    g0g0 = dg(0, g0)
    g1_01 = dg(1, g0, g1)
    g1g0g1 = dg(1, g0g1)
    g1g1g0 = dg(1, g1g0)
    g0_11 = dg(0, g1, g1)
    g1g1g1g1 = dg(1, g1g1g1)
    g1g1_11 = dg(1, g1_11)
    g1_211 = dg(1, g1g1, g1)
    g1_111 = dg(1, g1, g1, g1)
    terms = [
        ((1 - c1) * I1, g1),
        (h * (1 - c2), g0),
        ((-c1 - c4) * h + (1 - 2 * c1 - c3) * I11, g1g1),
        ((1 - c1) * I01 - c1 * I10, g1g0),
        (-c2 * I01 + (1 - c2) * I10, g0g1),
        (0.5 * I01 - (1.5 * c1 + c3 + c4) * h * I1 + (1 - 3 * c1 - 3 * c3) * I111, g1_11),
        (-((c1 + c3 + c4) * h * I1 + (3 * c1 + 3 * c3 - 1) * I111), g1g1g1),
        ((1 - 2 * c2 - c5) * hh / 2, g0g0),
        (-(c1 + c4) * hh, g1_01),
        (-c1 * hh / 2, g1g0g1),
        (-(0.5 * c1 + c4) * hh, g1g1g0),
        (0.25 * (1 - 2 * c2 - c6) * hh, g0_11),
        (-c3 * hh / 2, g1g1g1g1),
        (-0.5 * (0.5 * c1 + c3 + c4) * hh, g1g1_11),
        (-(c1 + 1.5 * c3 + c4) * hh, g1_211),
        (-0.5 * (c1 + c3 + c4) * hh, g1_111),
    ]
    out = y.copy()
    for coeff, F in terms:
        out = out + _col(coeff, y) * F
    return out


def _family_implicit(c, p: SdeProblem, Y, ints, h):
    c1, c2, c3, c4, c5, c6 = c
    I1, I11 = ints[(1,)], ints[(1, 1)]
    out = np.zeros_like(Y)
    g1 = p.g(1, Y)
    if c1:
        out = out + _col(c1 * I1, Y) * g1
    g0 = p.g(0, Y) if (c2 or c5) else None
    if c2:
        out = out + c2 * h * g0
    if c3 or c4:
        out = out + _col(c3 * I11 + c4 * h, Y) * p.dg(1, Y, g1)
    if c5:
        out = out + c5 * h * h / 2 * p.dg(0, Y, g0)
    if c6:
        out = out + c6 * h * h / 4 * p.dg(0, Y, g1, g1)
    return out


def _solve(residual, Y, cfg: StepperConfig):
    """Drive ``residual(Y) = 0`` path by path; returns ``(Y, converged, iters, res)``.

    ``residual(Y_rows, mask)`` evaluates the residual on the rows selected by
    ``mask``; converged paths are frozen and drop out of later iterations.
    """
    M, d = Y.shape
    R = residual(Y)
    norm = np.max(np.abs(R), axis=-1)
    scale = 1.0 + np.max(np.abs(Y), axis=-1)
    done = norm <= cfg.tol * scale
    it = 0
    while not done.all() and it < cfg.max_iter:
        it += 1
        act = ~done
        Ya, Ra = Y[act], R[act]
        if cfg.solver == "fixed-point":
            # residual = Y - G(Y), so Y - residual = G(Y)
            step = -Ra
        else:
            J = np.empty((Ya.shape[0], d, d))
            for j in range(d):
                delta = np.sqrt(np.finfo(float).eps) * (1.0 + np.abs(Ya[:, j]))
                Yp = Ya.copy()
                Yp[:, j] += delta
                J[:, :, j] = (residual(Yp, act) - Ra) / delta[:, None]
            step = -np.linalg.solve(J, Ra[..., None])[..., 0]
        trial = Ya + step
        Rt = residual(trial, act)
        nt = np.max(np.abs(Rt), axis=-1)
        worse = nt > norm[act]
        lam = 1.0
        tries = 0
        while cfg.solver == "newton" and worse.any() and tries < 10:
            lam *= cfg.damping
            tries += 1
            trial = np.where(worse[:, None], Ya + lam * step, trial)
            Rt = residual(trial, act)
            nt_new = np.max(np.abs(Rt), axis=-1)
            nt = np.where(worse, nt_new, nt)
            worse = worse & (nt_new > norm[act])
        Y = Y.copy()
        R = R.copy()
        Y[act] = trial
        R[act] = Rt
        norm[act] = nt
        scale = 1.0 + np.max(np.abs(Y), axis=-1)
        done = norm <= cfg.tol * scale
        if cfg.solver == "fixed-point":
            small = np.zeros_like(done)
            small[act] = np.max(np.abs(step), axis=-1) <= cfg.tol * scale[act]
            done |= small
    return Y, done, it, norm


def family_step(
    c: Sequence,
    p: SdeProblem,
    y,
    dW,
    dZ,
    h: float,
    cfg: StepperConfig | None = None,
    return_status: bool = False,
):
    """One step of the implicit strong order 1.5 family with parameters ``c``.

    Raises :class:`ConvergenceError` if the implicit solve fails on any path,
    unless ``return_status`` is set, in which case ``(Y, converged_mask)`` is
    returned instead.
    """
    cfg = cfg or StepperConfig()
    c = tuple(float(Fraction(x)) for x in c)
    y, single = _batch(y)
    ints = {w: np.broadcast_to(np.asarray(v, dtype=float), y.shape[:-1]) for w, v in iterated_integrals(dW, dZ, h).items()}
    E = _family_explicit(c, p, y, ints, h)
    if not any(c[i] for i in range(6)):
        Y, ok = E, np.ones(y.shape[0], dtype=bool)
    else:
        def residual(Yr, mask=None):
            sub = ints if mask is None else {w: v[mask] for w, v in ints.items()}
            Er = E if mask is None else E[mask]
            return Yr - Er - _family_implicit(c, p, Yr, sub, h)

        guess = E + _family_implicit(c, p, y, ints, h)
        Y, ok, iters, res = _solve(residual, guess, cfg)
        if not return_status and not ok.all():
            raise ConvergenceError(int((~ok).sum()), iters, float(res.max()))
    if return_status:
        return (Y[0], ok[0]) if single else (Y, ok)
    return Y[0] if single else Y


class EulerMaruyama:
    name = "euler"

    def step(self, p, y, dW, dZ, h):
        return euler_step(p, y, dW, h), None


class Milstein:
    name = "milstein"

    def step(self, p, y, dW, dZ, h):
        return milstein_step(p, y, dW, h), None


class TaylorFamily:
    def __init__(self, c: Sequence = (Fraction(1, 2),) * 6, cfg: StepperConfig | None = None):
        self.c = tuple(Fraction(x) for x in c)
        self.cfg = cfg or StepperConfig()
        self.name = "family(" + ",".join(map(str, self.c)) + ")"

    def step(self, p, y, dW, dZ, h):
        return family_step(self.c, p, y, dW, dZ, h, self.cfg, return_status=True)


class ExactSolution:
    """Pseudo-method reading the closed-form solution off the Brownian path."""

    name = "exact"


def make_method(name: str, params=None, cfg: StepperConfig | None = None):
    if name == "euler":
        return EulerMaruyama()
    if name == "milstein":
        return Milstein()
    if name == "taylor15":
        return TaylorFamily((0,) * 6, cfg)
    if name == "family":
        return TaylorFamily(params if params is not None else (Fraction(1, 2),) * 6, cfg)
    if name == "exact":
        return ExactSolution()
    raise ValueError(f"unknown method {name!r}")


def integrate_path(method, p: SdeProblem, x0, plan, level: int | None = None, T: float = 1.0):
    """Integrate a batch of paths to ``T``; returns ``(Y_T, ok_mask)``.

    ``plan`` is a :class:`PathPlan` (with ``level``) or an
    :class:`IncrementBatch`.  ``ok_mask`` flags paths whose implicit solves all
    converged.
    """
    batch = plan.level(level) if isinstance(plan, PathPlan) else plan
    if isinstance(plan, PathPlan):
        T = plan.T
    M = batch.dW.shape[0]
    y = np.broadcast_to(np.asarray(x0, dtype=float), (M, p.d)).copy()
    ok = np.ones(M, dtype=bool)
    if isinstance(method, ExactSolution):
        if p.exact is None:
            raise ValueError(f"problem {p.name} has no exact solution")
        # the endpoint does not depend on the level; read it off the base grid
        # so every level sees bit-identical values
        source = plan.base if isinstance(plan, PathPlan) else batch
        return p.exact(T, source.brownian_endpoint()), ok
    for n in range(batch.steps):
        y, status = method.step(p, y, batch.dW[:, n], batch.dZ[:, n], batch.h)
        if status is not None:
            ok &= status
    return y, ok
