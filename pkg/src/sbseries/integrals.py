"""Formal algebra of multiple stochastic integrals.

An :class:`IntegralExpr` is a finite rational combination of multiple
integrals ``I_w`` (Itô) or ``J_w`` (Stratonovich) indexed by words over the
channel alphabet ``{0, ..., m}`` with ``W_0(s) = s``.

Word convention: the *leftmost* letter is the innermost integral and the
*rightmost* letter the outermost one, so ``I(1,0) = int_0^h W_1(s) ds`` and
``I(0,1) = int_0^h s dW_1(s)``.  The empty word is the constant 1.

Products follow integration by parts.  Writing ``w = w'a`` and ``v = v'b``::

    I_w I_v = int I_{w'} I_v dW_a + int I_w I_{v'} dW_b
              + [a == b >= 1] int I_{w'} I_{v'} ds          (Itô only)

Every word carries the order ``#zeros + #nonzeros / 2``; the product is
graded (the Itô correction fuses two half-letters into one time letter).
"""

from __future__ import annotations

from collections import defaultdict
from fractions import Fraction
from functools import lru_cache
from math import factorial
from typing import Iterable, Mapping

from .trees import HalfInt

__all__ = [
    "ITO",
    "STRAT",
    "CalculusMismatch",
    "IntegralExpr",
    "MissingSampleError",
    "evaluate_numeric",
    "expectation_ito",
    "integrate",
    "mul",
    "truncate",
    "word_order",
]

ITO = "ito"
STRAT = "strat"

Word = tuple[int, ...]


class CalculusMismatch(ValueError):
    pass


class MissingSampleError(KeyError):
    def __init__(self, word: Word):
        super().__init__(f"no sample for word {_word_text(word)}")
        self.word = word


def _word_text(w: Word) -> str:
    return "(" + ",".join(map(str, w)) + ")"


def word_order2(w: Word) -> int:
    return sum(2 if a == 0 else 1 for a in w)


def word_order(w: Word) -> HalfInt:
    return HalfInt(word_order2(w))


def _check_calculus(calculus: str) -> str:
    if calculus not in (ITO, STRAT):
        raise ValueError(f"unknown calculus {calculus!r}")
    return calculus


class IntegralExpr:
    """Immutable rational combination of multiple integrals of one calculus."""

    __slots__ = ("terms", "calculus")

    def __init__(self, terms: Mapping[Word, Fraction] | None = None, calculus: str = ITO):
        self.calculus = _check_calculus(calculus)
        clean = {}
        for w, c in (terms or {}).items():
            c = Fraction(c)
            if c:
                clean[tuple(w)] = c
        self.terms: dict[Word, Fraction] = clean

    @classmethod
    def word(cls, w: Iterable[int], calculus: str = ITO, coeff=1) -> IntegralExpr:
        return cls({tuple(w): Fraction(coeff)}, calculus)

    @classmethod
    def const(cls, c, calculus: str = ITO) -> IntegralExpr:
        return cls({(): Fraction(c)}, calculus)

    @classmethod
    def zero(cls, calculus: str = ITO) -> IntegralExpr:
        return cls({}, calculus)

    def is_zero(self) -> bool:
        return not self.terms

    def words(self) -> list[Word]:
        return sorted(self.terms, key=lambda w: (-len(w), tuple(-a for a in w)))

    def min_order(self) -> HalfInt | None:
        if not self.terms:
            return None
        return HalfInt(min(word_order2(w) for w in self.terms))

    def _coerce(self, other) -> IntegralExpr:
        if isinstance(other, IntegralExpr):
            if other.calculus != self.calculus:
                raise CalculusMismatch(f"{self.calculus} vs {other.calculus}")
            return other
        if isinstance(other, (int, Fraction)):
            return IntegralExpr.const(other, self.calculus)
        return NotImplemented

    def __add__(self, other) -> IntegralExpr:
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out = dict(self.terms)
        for w, c in other.terms.items():
            out[w] = out.get(w, 0) + c
        return IntegralExpr(out, self.calculus)

    __radd__ = __add__

    def __neg__(self) -> IntegralExpr:
        return IntegralExpr({w: -c for w, c in self.terms.items()}, self.calculus)

    def __sub__(self, other) -> IntegralExpr:
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other) -> IntegralExpr:
        return (-self) + other

    def scale(self, c) -> IntegralExpr:
        c = Fraction(c)
        return IntegralExpr({w: c * v for w, v in self.terms.items()}, self.calculus)

    def __mul__(self, other) -> IntegralExpr:
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return mul(self, other)

    def __rmul__(self, other) -> IntegralExpr:
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        return NotImplemented

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = IntegralExpr.const(other, self.calculus)
        if not isinstance(other, IntegralExpr):
            return NotImplemented
        return self.calculus == other.calculus and self.terms == other.terms

    def __hash__(self) -> int:
        return hash((self.calculus, frozenset(self.terms.items())))

    def __repr__(self) -> str:
        return f"IntegralExpr({self!s}, {self.calculus})"

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        letter = "I" if self.calculus == ITO else "J"
        parts = []
        for w in self.words():
            c = self.terms[w]
            body = f"{letter}{_word_text(w)}" if w else ""
            mag = abs(c)
            if not body:
                text = str(mag)
            elif mag == 1:
                text = body
            else:
                text = f"{mag}*{body}"
            sign = "-" if c < 0 else "+"
            if not parts:
                parts.append(text if c > 0 else f"-{text}")
            else:
                parts.append(f"{sign} {text}")
        return " ".join(parts)


@lru_cache(maxsize=None)
def _word_product(u: Word, v: Word, calculus: str) -> tuple[tuple[Word, int], ...]:
    if not u:
        return ((v, 1),)
    if not v:
        return ((u, 1),)
    acc: dict[Word, int] = defaultdict(int)
    a, b = u[-1], v[-1]
    for w, c in _word_product(u[:-1], v, calculus):
        acc[w + (a,)] += c
    for w, c in _word_product(u, v[:-1], calculus):
        acc[w + (b,)] += c
    if calculus == ITO and a == b and a >= 1:
        for w, c in _word_product(u[:-1], v[:-1], calculus):
            acc[w + (0,)] += c
    return tuple(sorted((w, c) for w, c in acc.items() if c))


def mul(a: IntegralExpr, b: IntegralExpr) -> IntegralExpr:
    """Product in the Itô quasi-shuffle or Stratonovich shuffle algebra."""
    if a.calculus != b.calculus:
        raise CalculusMismatch(f"{a.calculus} vs {b.calculus}")
    out: dict[Word, Fraction] = defaultdict(Fraction)
    for u, cu in a.terms.items():
        for v, cv in b.terms.items():
            for w, n in _word_product(u, v, a.calculus):
                out[w] += cu * cv * n
    return IntegralExpr(out, a.calculus)


def product(factors: Iterable[IntegralExpr], calculus: str = ITO) -> IntegralExpr:
    out = IntegralExpr.const(1, calculus)
    for f in factors:
        out = mul(out, f)
    return out


def integrate(a: IntegralExpr, l: int, m: int | None = None) -> IntegralExpr:
    """``int_0^h a(s) * dW_l(s)``: append ``l`` as the outermost letter."""
    if l < 0 or (m is not None and l > m):
        raise ValueError(f"channel {l} outside 0..{m}")
    return IntegralExpr({w + (l,): c for w, c in a.terms.items()}, a.calculus)


def expectation_ito(a: IntegralExpr) -> list[tuple[int, Fraction]]:
    """Itô expectation as polynomial coefficients ``[(k, c_k)]`` of ``h^k``.

    Only all-zero words survive: ``E I_{0^k} = h^k / k!``.
    """
    if a.calculus != ITO:
        raise NotImplementedError("expectations are only available for Itô integrals")
    poly: dict[int, Fraction] = defaultdict(Fraction)
    for w, c in a.terms.items():
        if all(x == 0 for x in w):
            poly[len(w)] += c / factorial(len(w))
    return sorted((k, c) for k, c in poly.items() if c)


def truncate(a: IntegralExpr, max_order) -> IntegralExpr:
    """Keep exactly the words of order ``<= max_order``."""
    top = HalfInt.of(max_order).twice
    return IntegralExpr({w: c for w, c in a.terms.items() if word_order2(w) <= top}, a.calculus)


def evaluate_numeric(a: IntegralExpr, samples: Mapping[Word, object]):
    """``sum(coeff * samples[word])``; sample values may be floats or arrays."""
    total = 0.0
    for w in a.words():
        try:
            value = samples[w]
        except KeyError:
            if w:
                raise MissingSampleError(w) from None
            value = 1.0
        total = total + float(a.terms[w]) * value
    return total
