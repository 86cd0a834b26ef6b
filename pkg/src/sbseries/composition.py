"""Composition of B-series and implicit Taylor coefficient maps.

For a tree ``t`` a *decomposition* ``(theta, omega)`` splits ``t`` into a
subtree ``theta`` sharing the root (possibly empty) and the multiset
``omega`` of trees left over when ``theta`` is cut out.  The multiplicity
``gamma`` of a decomposition is the number of ordered cuts of a fixed
ordered representative of ``t`` that produce it.

With these, ``(phi_x o phi_y)(t) = sum gamma * phi_y(theta) * prod phi_x(omega)``
is the weight of ``B(phi_y, B(phi_x, x))``, and the implicit one-step
method ``Y = B(Phi_ex, x) + B(Phi_im, Y)`` has ``Phi = Phi_ex + Phi o Phi_im``.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from itertools import permutations
from itertools import product as cartesian
from math import factorial

from .bseries import CoeffMap
from .integrals import IntegralExpr, mul, product
from .trees import EMPTY, Tree, canonical, enumerate_trees, num_nodes

__all__ = [
    "Decomposition",
    "compose",
    "correction_terms",
    "decompositions",
    "gamma_recursive",
    "implicit_taylor_coeffs",
    "subtree_pairs",
]

Forest = tuple[Tree, ...]


def _forest(trees) -> Forest:
    return tuple(sorted(canonical(t) for t in trees))


@dataclass(frozen=True)
class Decomposition:
    theta: Tree
    omega: Forest
    gamma: int

    def __str__(self) -> str:
        return f"{self.gamma} x ({self.theta}, {{{', '.join(map(str, self.omega))}}})"


def _cuts(t: Tree) -> list[tuple[Tree, tuple[Tree, ...]]]:
    # rooted cuts of the ordered tree t that keep its root
    options = []
    for c in t.children:
        opts: list[tuple[Tree | None, tuple[Tree, ...]]] = [(None, (c,))]
        opts.extend(_cuts(c))
        options.append(opts)
    out = []
    for choice in cartesian(*options):
        kept = [th for th, _ in choice if th is not None]
        rest = tuple(x for _, om in choice for x in om)
        out.append((Tree(t.color, kept), rest))
    return out


@lru_cache(maxsize=None)
def decompositions(t: Tree) -> tuple[Decomposition, ...]:
    """All distinct ``(theta, omega)`` of ``t`` with their multiplicities.

    Sorted by ``theta`` (empty first, then by canonical key) and ``omega``.
    """
    if t.is_empty:
        raise ValueError("the empty tree has no decompositions")
    t = canonical(t)
    counts: Counter = Counter()
    counts[(EMPTY, (t,))] += 1
    for theta, omega in _cuts(t):
        counts[(canonical(theta), _forest(omega))] += 1
    keyed = sorted(
        counts.items(),
        key=lambda kv: (not kv[0][0].is_empty, kv[0][0].key, [x.key for x in kv[0][1]]),
    )
    return tuple(Decomposition(th, om, g) for (th, om), g in keyed)


@lru_cache(maxsize=None)
def subtree_pairs(t: Tree) -> frozenset[tuple[Tree, Forest]]:
    """The set ``ST(t)`` built directly from its recursive definition."""
    t = canonical(t)
    out = {(EMPTY, (t,))}
    child_sets = [subtree_pairs(c) for c in t.children]
    for choice in cartesian(*child_sets):
        theta = Tree(t.color, [th for th, _ in choice if not th.is_empty])
        omega = [x for _, om in choice for x in om]
        out.add((canonical(theta), _forest(omega)))
    return frozenset(out)


def gamma_recursive(t: Tree, theta: Tree, omega) -> int:
    """Multiplicity of ``(theta, omega)`` in ``ST(t)`` via the multinomial recursion.

    ``gamma = R_1!..R_Q! / (s_1!..s_p! r_11!..r_qp!) * prod gamma(t_i, theta_i, omega_i)``,
    summed over the distinct ways of matching the children of ``theta`` with
    children of ``t``; ``r`` counts repeated (child, subtree, remainder) triples.
    Independent of :func:`decompositions`; used to cross-check it.
    """
    t, theta, omega = canonical(t), canonical(theta), _forest(omega)
    if (theta, omega) not in subtree_pairs(t):
        raise ValueError(f"({theta}, {omega}) is not a decomposition of {t}")
    if theta.is_empty:
        return 1
    kids = t.children
    parts = theta.children
    structures = set()
    for slots in permutations(range(len(kids)), len(parts)):
        pools = [
            [om for th, om in subtree_pairs(kids[j]) if th == part]
            for part, j in zip(parts, slots)
        ]
        pruned = _forest(kids[j] for j in range(len(kids)) if j not in slots)
        for oms in cartesian(*pools):
            triples = tuple(sorted(
                ((kids[j], part, om) for j, part, om in zip(slots, parts, oms)),
                key=lambda x: (x[0].key, x[1].key, [y.key for y in x[2]]),
            ))
            rest = _forest(list(pruned) + [x for om in oms for x in om])
            if rest == omega:
                structures.add((triples, pruned))
    total = 0
    for triples, pruned in structures:
        num = 1
        for r in Counter(kids).values():
            num *= factorial(r)
        den = 1
        for s in Counter(pruned).values():
            den *= factorial(s)
        for r in Counter(triples).values():
            den *= factorial(r)
        sub = 1
        for child, part, om in triples:
            sub *= gamma_recursive(child, part, om)
        total += num // den * sub
    return total


def compose(phi_x: CoeffMap, phi_y: CoeffMap, t: Tree) -> IntegralExpr:
    """Weight of ``t`` in ``B(phi_y, B(phi_x, x))``."""
    if phi_x.calculus != phi_y.calculus:
        raise ValueError(f"calculus mismatch: {phi_x.calculus} vs {phi_y.calculus}")
    if phi_x.empty != 1:
        raise ValueError("composition requires phi_x(empty) = 1")
    if t.is_empty:
        return phi_y.empty
    out = IntegralExpr.zero(phi_x.calculus)
    for dec in decompositions(t):
        head = phi_y[dec.theta]
        if head.is_zero():
            continue
        tail = product((phi_x[d] for d in dec.omega), phi_x.calculus)
        out = out + mul(head, tail).scale(dec.gamma)
    return out


def implicit_taylor_coeffs(phi_ex: CoeffMap, phi_im: CoeffMap, max_rho, m: int | None = None) -> CoeffMap:
    """Weights ``Phi`` of the solution of ``Y = B(Phi_ex, x) + B(Phi_im, Y)``.

    Computed tree by tree in order of increasing ``rho``; every factor on
    the right of ``Phi(t) = Phi_ex(t) + sum gamma Phi_im(theta) prod Phi(omega)``
    lives on a strictly smaller tree because ``Phi_im(empty) = 0``.
    """
    if phi_ex.calculus != phi_im.calculus:
        raise ValueError(f"calculus mismatch: {phi_ex.calculus} vs {phi_im.calculus}")
    if phi_ex.empty != 1 or not phi_im.empty.is_zero():
        raise ValueError("need Phi_ex(empty) = 1 and Phi_im(empty) = 0")
    if m is None:
        m = max((c for t in list(phi_ex) + list(phi_im) for c in t.colors()), default=0)
    calc = phi_ex.calculus
    done: dict[Tree, IntegralExpr] = {}

    def lookup(t: Tree) -> IntegralExpr:
        return IntegralExpr.const(1, calc) if t.is_empty else done[t]

    for t in enumerate_trees(m, max_rho):
        value = phi_ex[t]
        for dec in decompositions(t):
            head = phi_im[dec.theta]
            if head.is_zero():
                continue
            tail = product((lookup(d) for d in dec.omega), calc)
            value = value + mul(head, tail).scale(dec.gamma)
        done[t] = value
    return CoeffMap(done, calc, empty=1)


def correction_terms(phi_ex: CoeffMap, phi_im: CoeffMap, t: Tree, phi: CoeffMap) -> IntegralExpr:
    """``R(t) = Phi(t) - Phi_ex(t) - Phi_im(t)``, summed directly over proper subtrees."""
    calc = phi_im.calculus
    out = IntegralExpr.zero(calc)
    for dec in proper_decompositions(t):
        head = phi_im[dec.theta]
        if head.is_zero():
            continue
        out = out + mul(head, product((phi[d] for d in dec.omega), calc)).scale(dec.gamma)
    return out


def proper_decompositions(t: Tree) -> list[Decomposition]:
    """Decompositions with ``theta`` neither empty nor the whole tree."""
    t = canonical(t)
    return [d for d in decompositions(t) if not d.theta.is_empty and d.theta != t]


def grafting_triples(max_nodes: int, m: int) -> set[tuple[Tree, Tree, Forest]]:
    """``{(t, theta, omega) : theta in T, (t, omega) in A(theta)}`` by grafting.

    ``A(theta)`` is generated by hanging multisets of trees on the nodes of
    ``theta``; used to check the index switch between ``ST`` and ``A``.
    """
    pool = [t for t in enumerate_trees(m, max_nodes) if num_nodes(t) <= max_nodes]
    out = {(t, EMPTY, (t,)) for t in pool}

    def graft(theta: Tree, budget: int):
        results = []
        for own in _forests_up_to(pool, budget):
            size = sum(num_nodes(x) for x in own)
            for kids, om, used in graft_all(theta.children, budget - size):
                results.append((Tree(theta.color, kids + own), om + own, used + size))
        return results

    def graft_all(children, budget):
        if not children:
            return [((), (), 0)]
        out = []
        for g, om, used in graft(children[0], budget):
            for rest, om2, used2 in graft_all(children[1:], budget - used):
                out.append(((g,) + rest, om + om2, used + used2))
        return out

    for theta in pool:
        for tree, omega, _ in graft(theta, max_nodes - num_nodes(theta)):
            out.add((canonical(tree), theta, _forest(omega)))
    return out


def _forests_up_to(pool: list[Tree], budget: int) -> list[Forest]:
    # multisets from pool with total node count <= budget
    out = []

    def grow(prefix, left, start):
        out.append(tuple(prefix))
        for i in range(start, len(pool)):
            n = num_nodes(pool[i])
            if n <= left:
                prefix.append(pool[i])
                grow(prefix, left - n, i)
                prefix.pop()

    grow([], budget, 0)
    return out
