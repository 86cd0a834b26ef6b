"""Coefficient maps, exact-solution weights and numeric B-series.

A B-series ``B(phi, x; h) = sum_t alpha(t) * phi(t)(h) * F(t)(x)`` is
represented by a :class:`CoeffMap` (tree -> :class:`IntegralExpr`) and an
:class:`SdeProblem` supplying the vector fields whose nested derivatives
form the elementary differentials ``F(t)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import product as cartesian
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .integrals import ITO, IntegralExpr, evaluate_numeric, integrate, product
from .trees import HalfInt, Tree, alpha, canonical, enumerate_trees, rho2, symmetry_factor

__all__ = [
    "CoeffMap",
    "FTree",
    "SdeProblem",
    "beta_coeff",
    "bseries_eval",
    "elementary_differential",
    "enumerate_ftrees",
    "exact_map",
    "exact_weight",
    "finite_difference_derivative",
    "psi_weight",
]


class CoeffMap:
    """Immutable map from canonical trees to integral expressions.

    Trees without an entry map to zero; the empty tree maps to ``empty``
    (1 for exact weights and explicit parts, 0 for implicit parts).
    """

    def __init__(
        self,
        entries: Mapping[Tree, IntegralExpr] | None = None,
        calculus: str = ITO,
        empty: int = 1,
    ):
        self.calculus = calculus
        self.empty = IntegralExpr.const(empty, calculus)
        self._entries: dict[Tree, IntegralExpr] = {}
        for t, e in (entries or {}).items():
            if t.is_empty:
                raise ValueError("set the empty-tree value through `empty`")
            if e.calculus != calculus:
                raise ValueError(f"entry for {t} is {e.calculus}, map is {calculus}")
            if not e.is_zero():
                self._entries[canonical(t)] = e

    def __getitem__(self, t: Tree) -> IntegralExpr:
        if t.is_empty:
            return self.empty
        return self._entries.get(canonical(t), IntegralExpr.zero(self.calculus))

    def __contains__(self, t: Tree) -> bool:
        return canonical(t) in self._entries

    def __iter__(self):
        return iter(sorted(self._entries, key=lambda t: (rho2(t), t.key)))

    def __len__(self) -> int:
        return len(self._entries)

    def items(self):
        return [(t, self._entries[t]) for t in self]

    def is_zero(self) -> bool:
        return not self._entries

    def __repr__(self) -> str:
        body = ", ".join(f"{t}: {e}" for t, e in self.items())
        return f"CoeffMap({{{body}}}, empty={self.empty})"


@lru_cache(maxsize=None)
def exact_weight(t: Tree, calculus: str = ITO) -> IntegralExpr:
    """Weight of ``t`` in the B-series of the exact solution.

    ``phi(empty) = 1`` and ``phi([t_1..t_k]_l) = int prod phi(t_j) * dW_l``.
    """
    t = canonical(t)
    if t.is_empty:
        return IntegralExpr.const(1, calculus)
    inner = product((exact_weight(c, calculus) for c in t.children), calculus)
    return integrate(inner, t.color)


def exact_map(m: int, max_rho, calculus: str = ITO) -> CoeffMap:
    return CoeffMap({t: exact_weight(t, calculus) for t in enumerate_trees(m, max_rho)}, calculus)


@dataclass(frozen=True)
class FTree:
    """A tree ``[t_1, ..., t_k]_f`` whose root is the function ``f``."""

    children: tuple[Tree, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(sorted(canonical(c) for c in self.children)))
        if any(c.is_empty for c in self.children):
            raise ValueError("FTree children must be non-empty trees")

    @property
    def rho2(self) -> int:
        return sum(rho2(c) for c in self.children)

    @property
    def rho(self) -> HalfInt:
        return HalfInt(self.rho2)

    def __str__(self) -> str:
        return "f[" + ",".join(map(str, self.children)) + "]"


def beta_coeff(u: FTree) -> Fraction:
    out = Fraction(1, symmetry_factor(u.children))
    for c in u.children:
        out *= alpha(c)
    return out


def psi_weight(phi: CoeffMap, u: FTree) -> IntegralExpr:
    if phi.empty != 1:
        raise ValueError("psi requires phi(empty) = 1")
    return product((phi[c] for c in u.children), phi.calculus)


def enumerate_ftrees(m: int, max_rho) -> list[FTree]:
    """All ``u`` in ``U_f`` with ``rho(u) <= max_rho``, including ``[empty]_f``."""
    top = HalfInt.of(max_rho).twice
    pool = enumerate_trees(m, max_rho)
    weights = [rho2(t) for t in pool]
    out: list[FTree] = []

    def grow(prefix: list[Tree], budget: int, start: int) -> None:
        out.append(FTree(tuple(prefix)))
        for i in range(start, len(pool)):
            if weights[i] <= budget:
                prefix.append(pool[i])
                grow(prefix, budget - weights[i], i)
                prefix.pop()

    grow([], top, 0)
    return sorted(out, key=lambda u: (u.rho2, len(u.children), [c.key for c in u.children]))


# Derivative oracle signature: (channel l, x, *directions) -> D^k g_l(x)[dirs].
DerivativeOracle = Callable[..., np.ndarray]


def finite_difference_derivative(g: Callable[[np.ndarray], np.ndarray], x, *dirs) -> np.ndarray:
    """Nested central differences for ``D^k g(x)[v_1, ..., v_k]``.

    Uses the ``2^k``-point stencil with step ``eps^(1/(k+2)) * (1 + |x|)``
    applied along each direction (scaled to unit max-norm).  Works on
    batches: ``x`` and every direction broadcast over leading axes.
    """
    x = np.asarray(x, dtype=float)
    k = len(dirs)
    if k == 0:
        return g(x)
    dirs = [np.asarray(v, dtype=float) for v in dirs]
    step = np.finfo(float).eps ** (1.0 / (k + 2)) * (1.0 + np.max(np.abs(x), axis=-1, keepdims=True))
    scales = [np.maximum(np.max(np.abs(v), axis=-1, keepdims=True), 1e-300) for v in dirs]
    units = [v / s for v, s in zip(dirs, scales)]
    total = 0.0
    for signs in cartesian((1.0, -1.0), repeat=k):
        shift = sum(sgn * u for sgn, u in zip(signs, units))
        total = total + np.prod(signs) * g(x + step * shift)
    out = total / (2.0 * step) ** k
    for s in scales:
        out = out * s
    return out


@dataclass
class SdeProblem:
    """``dX = sum_{l=0}^m g_l(X) * dW_l`` with ``W_0(t) = t``.

    ``fields[l]`` maps an array of shape ``(..., d)`` to the same shape.
    ``derivatives``, if given, is ``(l, x, *dirs) -> D^k g_l(x)[dirs]`` for
    ``1 <= k <= max_derivative``; otherwise nested central differences are
    used.  ``exact(t, w)`` optionally gives the solution from ``x0`` at time
    ``t`` driven by Brownian value ``w``.
    """

    name: str
    d: int
    m: int
    fields: Sequence[Callable[[np.ndarray], np.ndarray]]
    derivatives: DerivativeOracle | None = None
    exact: Callable[[float, np.ndarray], np.ndarray] | None = None
    x0: np.ndarray | None = None
    max_derivative: int = 3
    description: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.fields) != self.m + 1:
            raise ValueError(f"expected {self.m + 1} fields, got {len(self.fields)}")
        if self.x0 is not None:
            self.x0 = np.asarray(self.x0, dtype=float)

    def g(self, l: int, x) -> np.ndarray:
        return self.fields[l](np.asarray(x, dtype=float))

    def dg(self, l: int, x, *dirs) -> np.ndarray:
        if not dirs:
            return self.g(l, x)
        if len(dirs) > self.max_derivative:
            raise ValueError(
                f"{self.name}: derivative of order {len(dirs)} exceeds the oracle limit {self.max_derivative}"
            )
        if self.derivatives is None:
            return finite_difference_derivative(self.fields[l], x, *dirs)
        return self.derivatives(l, np.asarray(x, dtype=float), *dirs)


def elementary_differential(t: Tree, p: SdeProblem, x) -> np.ndarray:
    """``F(t)(x)``: ``F(empty) = x``, ``F([t_1..t_k]_l) = g_l^(k)(x)[F(t_1), ..., F(t_k)]``."""
    x = np.asarray(x, dtype=float)
    if t.is_empty:
        return x
    if t.color > p.m:
        raise ValueError(f"tree {t} uses color {t.color} but the problem has m={p.m}")
    return p.dg(t.color, x, *(elementary_differential(c, p, x) for c in t.children))


def _times(w, F: np.ndarray) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    return w[..., None] * F if w.ndim else float(w) * F


def bseries_eval(
    phi: CoeffMap,
    p: SdeProblem,
    x,
    samples: Mapping,
    max_rho,
    trees: Iterable[Tree] | None = None,
) -> np.ndarray:
    """Truncated B-series ``x + sum_{rho(t) <= max_rho} alpha(t) phi(t) F(t)(x)``.

    ``samples`` maps words to sampled integral values (floats, or arrays of
    shape ``(M,)`` when ``x`` has shape ``(M, d)``).
    """
    x = np.asarray(x, dtype=float)
    out = x.copy()
    if trees is None:
        trees = enumerate_trees(p.m, max_rho)
    for t in trees:
        e = phi[t]
        if e.is_zero():
            continue
        w = evaluate_numeric(e, samples)
        out = out + float(alpha(t)) * _times(w, elementary_differential(t, p, x))
    return out
