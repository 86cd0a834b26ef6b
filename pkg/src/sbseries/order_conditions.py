"""Taylor-method specifications and their strong/weak order conditions.

A one-step Taylor method ``Y_1 = B(Phi_ex, x_0; h) + B(Phi_im, Y_1; h)`` is
described by a :class:`MethodSpec`.  The checkers expand the method with
:func:`~sbseries.composition.implicit_taylor_coeffs` and compare against the
exact weights tree by tree:

* strong order ``p``: ``Phi(t) - phi(t)`` has no word of order ``<= p`` for
  ``rho(t) <= p``, and ``E[Phi(t) - phi(t)]`` has no ``h^k`` with ``k < p + 1``
  for ``rho(t) <= p + 1/2``;
* weak order ``p``: ``E[psi_Phi(u) - psi_phi(u)]`` has no ``h^k`` with
  ``k <= p`` for every ``u`` in ``U_f`` with ``rho(u) <= p + 1/2``.

Family coefficients (the one-dimensional-noise, strong order 1.5 family with
parameters ``c1..c6``) are stored per tree as the printed coefficient divided
by ``alpha(t)``:

=====================  =========  ==============================================
tree                   alpha      implicit part (printed term / alpha)
=====================  =========  ==============================================
``1``                  1          ``c1 I(1)``
``0``                  1          ``c2 I(0)``
``1[1]``               1          ``c3 I(1,1) + c4 I(0)``
``0[0]``               1          ``c5 I(0,0)``        (``c5 h^2/2``)
``0[1,1]``             1/2        ``c6 I(0,0)``        (``c6 h^2/4`` / ``1/2``)
=====================  =========  ==============================================

The explicit part follows the same rule; e.g. ``g1''(g1,g1)`` (alpha 1/2)
printed with ``I(0,1)/2`` becomes ``I(0,1)`` and ``g1'''(g1,g1,g1)`` (alpha
1/6) printed with ``-(c1+c3+c4) h^2 / 2`` becomes ``-6 (c1+c3+c4) I(0,0)``.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .bseries import CoeffMap, enumerate_ftrees, exact_weight, psi_weight
from .composition import implicit_taylor_coeffs
from .integrals import ITO, STRAT, IntegralExpr, expectation_ito, truncate, word_order2
from .trees import HalfInt, Tree, enumerate_trees, parse_tree, rho, rho2

__all__ = [
    "MethodSpec",
    "OrderReport",
    "Violation",
    "check_strong",
    "check_weak",
    "euler_spec",
    "exact_spec",
    "family_spec",
    "milstein_spec",
    "random_params",
    "semi_implicit_milstein_spec",
    "METHODS",
]


@dataclass
class MethodSpec:
    name: str
    calculus: str
    m: int
    phi_ex: CoeffMap
    phi_im: CoeffMap
    params: tuple[Fraction, ...] | None = None

    def __post_init__(self):
        if self.phi_ex.empty != 1 or not self.phi_im.empty.is_zero():
            raise ValueError("need Phi_ex(empty) = 1 and Phi_im(empty) = 0")
        for part in (self.phi_ex, self.phi_im):
            if part.calculus != self.calculus:
                raise ValueError(f"{self.name}: calculus mismatch")
            for t, e in part.items():
                if max(t.colors()) > self.m:
                    raise ValueError(f"{self.name}: tree {t} exceeds m={self.m}")
                # keeps Phi(t) = O(h^rho(t)) so truncated checks are sound
                if min(word_order2(w) for w in e.terms) < rho2(t):
                    raise ValueError(f"{self.name}: entry for {t} has a word of order below rho(t)")

    def expansion(self, max_rho) -> CoeffMap:
        return implicit_taylor_coeffs(self.phi_ex, self.phi_im, max_rho, m=self.m)


@dataclass
class Violation:
    kind: str
    target: str
    rho: str
    residual: list[tuple[tuple[int, ...], Fraction]] = field(default_factory=list)
    expectation: list[tuple[int, Fraction]] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "condition": self.kind,
            "tree": self.target,
            "rho": self.rho,
            "residual_words": [{"word": list(w), "coeff": str(c)} for w, c in self.residual],
            "expectation_terms": [{"power": k, "coeff": str(c)} for k, c in self.expectation],
        }


@dataclass
class OrderReport:
    method: str
    kind: str
    order: str
    checked: int
    violations: list[Violation] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    def offending(self) -> dict[str, list[tuple[int, ...]]]:
        out: dict[str, list[tuple[int, ...]]] = {}
        for v in self.violations:
            out.setdefault(v.target, []).extend(w for w, _ in v.residual)
        return out

    def as_dict(self) -> dict:
        return {
            "method": self.method,
            "kind": self.kind,
            "order": self.order,
            "checked": self.checked,
            "passed": self.passed,
            "violations": [v.as_dict() for v in self.violations],
        }

    def __str__(self) -> str:
        head = f"{self.method}: {self.kind} order {self.order}: "
        head += "PASS" if self.passed else f"FAIL ({len(self.violations)} violations)"
        lines = [head + f" [{self.checked} conditions checked]"]
        for v in self.violations:
            if v.residual:
                body = ", ".join(f"{c}*{_w(w)}" for w, c in v.residual)
            else:
                body = ", ".join(f"{c}*h^{k}" for k, c in v.expectation)
            lines.append(f"  {v.kind} {v.target} (rho={v.rho}): {body}")
        return "\n".join(lines)


def _w(w: tuple[int, ...]) -> str:
    return "(" + ",".join(map(str, w)) + ")"


def _low_powers(poly: list[tuple[int, Fraction]], p: Fraction) -> list[tuple[int, Fraction]]:
    # terms that are not O(h^(p+1))
    return [(k, c) for k, c in poly if k < p + 1]


def check_strong(spec: MethodSpec, p, mean: bool = True) -> OrderReport:
    """Mean-square order ``p`` conditions for ``spec``.

    ``mean=False`` checks only the pathwise condition, which is all that is
    available for Stratonovich methods.
    """
    p = HalfInt.of(p)
    pf = p.as_fraction()
    top = p + HalfInt(1) if mean else p
    if mean and spec.calculus == STRAT:
        raise NotImplementedError("the expectation condition is only available for Itô methods")
    Phi = spec.expansion(top)
    report = OrderReport(spec.name, "strong", str(p), 0)
    for t in enumerate_trees(spec.m, top):
        diff = Phi[t] - exact_weight(t, spec.calculus)
        if rho(t) <= p:
            report.checked += 1
            low = truncate(diff, p)
            if not low.is_zero():
                report.violations.append(Violation(
                    "pathwise", str(t), str(rho(t)),
                    residual=[(w, low.terms[w]) for w in low.words()],
                ))
        if not mean:
            continue
        report.checked += 1
        bad = _low_powers(expectation_ito(diff), pf)
        if bad:
            report.violations.append(Violation("mean", str(t), str(rho(t)), expectation=bad))
    return report


def check_weak(spec: MethodSpec, p: int) -> OrderReport:
    """Weak consistency of order ``p`` via expectations of ``psi`` weights."""
    if spec.calculus != ITO:
        raise NotImplementedError("weak order conditions are only available for Itô methods")
    p = int(p)
    top = HalfInt(2 * p + 1)
    Phi = spec.expansion(top)
    exact = CoeffMap({t: exact_weight(t, ITO) for t in enumerate_trees(spec.m, top)}, ITO)
    report = OrderReport(spec.name, "weak", str(p), 0)
    for u in enumerate_ftrees(spec.m, top):
        report.checked += 1
        diff = psi_weight(Phi, u) - psi_weight(exact, u)
        bad = _low_powers(expectation_ito(diff), Fraction(p))
        if bad:
            report.violations.append(Violation("weak", str(u), str(u.rho), expectation=bad))
    return report


def _I(*w: int) -> IntegralExpr:
    return IntegralExpr.word(w, ITO)


def _h() -> IntegralExpr:
    return _I(0)


def _hh() -> IntegralExpr:
    # h^2 / 2
    return _I(0, 0)


def euler_spec(m: int = 1) -> MethodSpec:
    entries = {Tree(l): IntegralExpr.word((l,)) for l in range(m + 1)}
    return MethodSpec("euler", ITO, m, CoeffMap(entries), CoeffMap(empty=0))


def milstein_spec(m: int = 1) -> MethodSpec:
    entries = {Tree(l): IntegralExpr.word((l,)) for l in range(m + 1)}
    for i in range(1, m + 1):
        for j in range(1, m + 1):
            entries[Tree(i, [Tree(j)])] = _I(j, i)
    return MethodSpec("milstein", ITO, m, CoeffMap(entries), CoeffMap(empty=0))


def semi_implicit_milstein_spec() -> MethodSpec:
    ex = CoeffMap({Tree(1): _I(1), parse_tree("1[1]"): _I(1, 1)})
    im = CoeffMap({Tree(0): _h()}, empty=0)
    return MethodSpec("semi-implicit-milstein", ITO, 1, ex, im)


def exact_spec(m: int, max_rho, calculus: str = ITO) -> MethodSpec:
    entries = {t: exact_weight(t, calculus) for t in enumerate_trees(m, max_rho)}
    return MethodSpec(f"exact<= {HalfInt.of(max_rho)}", calculus, m, CoeffMap(entries, calculus), CoeffMap(calculus=calculus, empty=0))


def family_spec(c: Sequence) -> MethodSpec:
    """The implicit strong order 1.5 family for one-dimensional Itô noise."""
    if len(c) != 6:
        raise ValueError("the family has exactly six parameters")
    c1, c2, c3, c4, c5, c6 = (Fraction(x) for x in c)
    I1, h, hh = _I(1), _h(), _hh()
    I11, I10, I01, I111 = _I(1, 1), _I(1, 0), _I(0, 1), _I(1, 1, 1)
    hI1 = h * I1
    T = parse_tree
    im = {
        T("1"): c1 * I1,
        T("0"): c2 * h,
        T("1[1]"): c3 * I11 + c4 * h,
        T("0[0]"): c5 * hh,
        T("0[1,1]"): c6 * hh,
    }
    ex = {
        T("1"): (1 - c1) * I1,
        T("0"): (1 - c2) * h,
        T("1[1]"): (-c1 - c4) * h + (1 - 2 * c1 - c3) * I11,
        T("1[0]"): (1 - c1) * I01 - c1 * I10,
        T("0[1]"): -c2 * I01 + (1 - c2) * I10,
        T("1[1,1]"): I01 - (3 * c1 + 2 * c3 + 2 * c4) * hI1 + 2 * (1 - 3 * c1 - 3 * c3) * I111,
        T("1[1[1]]"): -(c1 + c3 + c4) * hI1 - (3 * c1 + 3 * c3 - 1) * I111,
        T("0[0]"): (1 - 2 * c2 - c5) * hh,
        T("1[0,1]"): -2 * (c1 + c4) * hh,
        T("1[0[1]]"): -c1 * hh,
        T("1[1[0]]"): -(c1 + 2 * c4) * hh,
        T("0[1,1]"): (1 - 2 * c2 - c6) * hh,
        T("1[1[1[1]]]"): -c3 * hh,
        T("1[1[1,1]]"): -(c1 + 2 * c3 + 2 * c4) * hh,
        T("1[1,1[1]]"): -(2 * c1 + 3 * c3 + 2 * c4) * hh,
        T("1[1,1,1]"): -6 * (c1 + c3 + c4) * hh,
    }
    params = (c1, c2, c3, c4, c5, c6)
    name = "family(" + ",".join(map(str, params)) + ")"
    return MethodSpec(name, ITO, 1, CoeffMap(ex), CoeffMap(im, empty=0), params)


def random_params(seed: int, count: int = 6) -> tuple[Fraction, ...]:
    rng = random.Random(seed)
    return tuple(Fraction(rng.randint(-9, 9), rng.randint(1, 9)) for _ in range(count))


METHODS = {
    "euler": lambda params=None: euler_spec(),
    "milstein": lambda params=None: milstein_spec(),
    "semi-implicit-milstein": lambda params=None: semi_implicit_milstein_spec(),
    "taylor15": lambda params=None: family_spec([0] * 6),
    "family": lambda params=None: family_spec(params if params is not None else [Fraction(1, 2)] * 6),
}
