"""Test problems with analytic derivative oracles.

All fields act on arrays of shape ``(..., d)``; directional derivatives
``D^k g_l(x)[v_1, ..., v_k]`` take directions of the same shape.
"""

from __future__ import annotations

import numpy as np

from ..bseries import SdeProblem

__all__ = ["PROBLEMS", "get_problem", "linear_problem", "nonlin2d_problem", "sinh_problem"]


def _s(x):
    return np.sqrt(x * x + 1.0)


def _s_derivs(x, k):
    # derivatives of sqrt(x^2 + 1)
    s = _s(x)
    if k == 0:
        return s
    if k == 1:
        return x / s
    if k == 2:
        return 1.0 / s**3
    if k == 3:
        return -3.0 * x / s**5
    raise ValueError(k)


def sinh_problem() -> SdeProblem:
    """``dX = (X/2 + sqrt(X^2+1)) dt + sqrt(X^2+1) dW``, ``X(0) = 0``.

    Exact solution ``X(t) = sinh(t + W(t))``.
    """

    def g0(x):
        return 0.5 * x + _s(x)

    def g1(x):
        return _s(x)

    def deriv(l, x, *dirs):
        k = len(dirs)
        scal = _s_derivs(x, k)
        if l == 0 and k == 1:
            scal = scal + 0.5
        out = scal
        for v in dirs:
            out = out * v
        return out

    return SdeProblem(
        name="sinh",
        d=1,
        m=1,
        fields=[g0, g1],
        derivatives=deriv,
        exact=lambda t, w: np.sinh(t + np.asarray(w))[..., None],
        x0=np.zeros(1),
        description="dX = (X/2 + sqrt(X^2+1)) dt + sqrt(X^2+1) dW, X(t) = sinh(t + W(t))",
    )


def _dot(a, b):
    return np.sum(a * b, axis=-1)


def nonlin2d_problem() -> SdeProblem:
    """Two-dimensional problem with one noise channel, ``X(0) = 0``.

    ``g0 = (x1/2 + sqrt(x1^2 + x2^2 + 1), x1/2 + sqrt(x2^2 + 1))``,
    ``g1 = (cos x1, sin x2)``.  No closed-form solution.
    """

    def g0(x):
        x1, x2 = x[..., 0], x[..., 1]
        r = np.sqrt(x1 * x1 + x2 * x2 + 1.0)
        return np.stack([0.5 * x1 + r, 0.5 * x1 + _s(x2)], axis=-1)

    def g1(x):
        return np.stack([np.cos(x[..., 0]), np.sin(x[..., 1])], axis=-1)

    def radial(x, dirs):
        # D^k sqrt(|x|^2 + 1) along dirs, k = 1..3
        r = np.sqrt(_dot(x, x) + 1.0)
        k = len(dirs)
        xs = [_dot(x, v) for v in dirs]
        if k == 1:
            return xs[0] / r
        if k == 2:
            return _dot(dirs[0], dirs[1]) / r - xs[0] * xs[1] / r**3
        u, v, w = dirs
        xu, xv, xw = xs
        return (
            -(_dot(u, v) * xw + _dot(u, w) * xv + _dot(v, w) * xu) / r**3
            + 3.0 * xu * xv * xw / r**5
        )

    def deriv(l, x, *dirs):
        k = len(dirs)
        x1, x2 = x[..., 0], x[..., 1]
        p1 = np.ones_like(x1)
        p2 = np.ones_like(x2)
        for v in dirs:
            p1 = p1 * v[..., 0]
            p2 = p2 * v[..., 1]
        if l == 0:
            first = radial(x, dirs)
            second = _s_derivs(x2, k) * p2
            if k == 1:
                first = first + 0.5 * dirs[0][..., 0]
                second = second + 0.5 * dirs[0][..., 0]
            return np.stack([first, second], axis=-1)
        # k-th derivatives of cos and sin
        cos_k = [np.cos, lambda a: -np.sin(a), lambda a: -np.cos(a), np.sin][k](x1)
        sin_k = [np.sin, np.cos, lambda a: -np.sin(a), lambda a: -np.cos(a)][k](x2)
        return np.stack([cos_k * p1, sin_k * p2], axis=-1)

    return SdeProblem(
        name="nonlin2d",
        d=2,
        m=1,
        fields=[g0, g1],
        derivatives=deriv,
        x0=np.zeros(2),
        description="2-D nonlinear SDE with scalar noise, fields (x1/2+sqrt(|x|^2+1), x1/2+sqrt(x2^2+1)), (cos x1, sin x2)",
    )


def linear_problem(a: float, b: float) -> SdeProblem:
    """Scalar ``dX = a X dt + b X dW``; exact ``X(t) = x0 exp((a - b^2/2) t + b W)``."""

    def deriv(l, x, *dirs):
        if len(dirs) > 1:
            return np.zeros_like(dirs[0])
        return (a if l == 0 else b) * dirs[0]

    return SdeProblem(
        name=f"linear(a={a},b={b})",
        d=1,
        m=1,
        fields=[lambda x: a * x, lambda x: b * x],
        derivatives=deriv,
        exact=lambda t, w: np.exp((a - 0.5 * b * b) * t + b * np.asarray(w))[..., None],
        x0=np.ones(1),
    )


PROBLEMS = {"sinh": sinh_problem, "nonlin2d": nonlin2d_problem}


def get_problem(name: str) -> SdeProblem:
    try:
        return PROBLEMS[name]()
    except KeyError:
        raise ValueError(f"unknown problem {name!r}; choose from {sorted(PROBLEMS)}") from None
