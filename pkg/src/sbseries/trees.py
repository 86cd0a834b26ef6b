"""Colored rooted trees, the index set of stochastic B-series.

A tree is either the empty tree ``EMPTY`` or a root of color ``l`` in
``{0, ..., m}`` with a multiset of child trees.  Color 0 is the drift
(time) channel, colors ``>= 1`` are noise channels.

Trees are immutable.  ``Tree(color, children)`` keeps the children in the
order given (an *ordered* tree); :func:`canonical` sorts them recursively so
that structural equality of canonical trees is isomorphism of unordered
trees.  :func:`node` and :func:`parse_tree` always return canonical trees.

The printed form doubles as the literal grammar::

    tree  := color | color '[' tree (',' tree)* ']'
    color := decimal integer

e.g. ``0[1,1[2,2]]`` is the tree with a drift root carrying a noise-1 leaf
and a noise-1 node that itself carries two noise-2 leaves.
"""

from __future__ import annotations

from collections import Counter
from fractions import Fraction
from functools import lru_cache, total_ordering
from math import factorial
from typing import Iterable, Iterator

__all__ = [
    "EMPTY",
    "HalfInt",
    "Tree",
    "TreeSyntaxError",
    "alpha",
    "canonical",
    "enumerate_trees",
    "leaf",
    "node",
    "num_nodes",
    "parse_tree",
    "rho",
    "symmetry_factor",
]


@total_ordering
class HalfInt:
    """Exact value on the half-integer grid, stored as twice its value."""

    __slots__ = ("twice",)

    def __init__(self, twice: int):
        if twice < 0:
            raise ValueError("orders are non-negative")
        self.twice = int(twice)

    @classmethod
    def of(cls, value) -> HalfInt:
        """Coerce an int, Fraction, float or string like ``"3/2"``/``"1.5"``."""
        if isinstance(value, HalfInt):
            return value
        if isinstance(value, str):
            value = Fraction(value.strip())
        doubled = Fraction(value) * 2
        if doubled.denominator != 1:
            raise ValueError(f"{value!r} is not on the half-integer grid")
        return cls(int(doubled))

    def as_fraction(self) -> Fraction:
        return Fraction(self.twice, 2)

    def __float__(self) -> float:
        return self.twice / 2

    def __add__(self, other) -> HalfInt:
        return HalfInt(self.twice + HalfInt.of(other).twice)

    __radd__ = __add__

    def __eq__(self, other) -> bool:
        try:
            return self.twice == HalfInt.of(other).twice
        except (TypeError, ValueError):
            return NotImplemented

    def __lt__(self, other) -> bool:
        if isinstance(other, HalfInt):
            return self.twice < other.twice
        return self.as_fraction() < Fraction(other)

    def __hash__(self) -> int:
        return hash(self.as_fraction())

    def __repr__(self) -> str:
        return f"HalfInt({self})"

    def __str__(self) -> str:
        return str(self.as_fraction())


class Tree:
    """A colored rooted tree; ``Tree(None)`` is reserved for ``EMPTY``."""

    __slots__ = ("color", "children", "_text", "_hash")

    def __init__(self, color: int | None, children: Iterable[Tree] = ()):
        children = tuple(children)
        if color is None:
            if children:
                raise ValueError("the empty tree has no children")
        elif color < 0:
            raise ValueError(f"negative color {color}")
        if any(c.is_empty for c in children):
            raise ValueError("the empty tree cannot be a child")
        self.color = color
        self.children = children
        if color is None:
            self._text = "∅"
        elif children:
            self._text = f"{color}[{','.join(c._text for c in children)}]"
        else:
            self._text = str(color)
        self._hash = hash(self._text)

    @property
    def is_empty(self) -> bool:
        return self.color is None

    @property
    def key(self) -> tuple[int, str]:
        """Length-lexicographic sort key of the printed form."""
        return (len(self._text), self._text)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Tree):
            return NotImplemented
        return self._text == other._text

    def __hash__(self) -> int:
        return self._hash

    def __lt__(self, other: Tree) -> bool:
        return self.key < other.key

    def __str__(self) -> str:
        return self._text

    def __repr__(self) -> str:
        return f"Tree({self._text!r})"

    def nodes(self) -> Iterator[Tree]:
        """Pre-order iteration over the subtrees rooted at every node."""
        if self.is_empty:
            return
        yield self
        for c in self.children:
            yield from c.nodes()

    def colors(self) -> Counter:
        return Counter(t.color for t in self.nodes())


EMPTY = Tree(None)


def leaf(color: int) -> Tree:
    return Tree(color)


def node(color: int, *children: Tree) -> Tree:
    """Canonical tree ``[children]_color``."""
    return Tree(color, sorted(canonical(c) for c in children))


def canonical(t: Tree) -> Tree:
    if t.is_empty or not t.children:
        return t
    return Tree(t.color, sorted(canonical(c) for c in t.children))


def num_nodes(t: Tree) -> int:
    return sum(1 for _ in t.nodes())


def rho2(t: Tree) -> int:
    """Twice the order of ``t``; drift nodes weigh 2, noise nodes 1."""
    return sum(2 if s.color == 0 else 1 for s in t.nodes())


def rho(t: Tree) -> HalfInt:
    return HalfInt(rho2(t))


def symmetry_factor(children: Iterable[Tree]) -> int:
    """``r_1! ... r_q!`` where the ``r_i`` count equal trees among ``children``."""
    out = 1
    for r in Counter(canonical(c) for c in children).values():
        out *= factorial(r)
    return out


def alpha(t: Tree) -> Fraction:
    """Inverse order of the automorphism group of ``t``."""
    if t.is_empty or not t.children:
        return Fraction(1)
    out = Fraction(1, symmetry_factor(t.children))
    for c in t.children:
        out *= alpha(c)
    return out


@lru_cache(maxsize=None)
def _trees_of_order2(m: int, n2: int) -> tuple[Tree, ...]:
    # all canonical trees with colors <= m and twice-order exactly n2
    out = []
    for color in range(m + 1):
        budget = n2 - (2 if color == 0 else 1)
        if budget < 0:
            continue
        for kids in _forests_of_order2(m, budget):
            out.append(Tree(color, kids))
    return tuple(sorted(out))


@lru_cache(maxsize=None)
def _forests_of_order2(m: int, n2: int) -> tuple[tuple[Tree, ...], ...]:
    # multisets of trees (sorted tuples) with total twice-order n2
    if n2 == 0:
        return ((),)
    pool = sorted(t for k in range(1, n2 + 1) for t in _trees_of_order2(m, k))
    weights = [rho2(t) for t in pool]
    out = []

    def grow(prefix: list[Tree], budget: int, start: int) -> None:
        if budget == 0:
            out.append(tuple(prefix))
            return
        for i in range(start, len(pool)):
            if weights[i] <= budget:
                prefix.append(pool[i])
                grow(prefix, budget - weights[i], i)
                prefix.pop()

    grow([], n2, 0)
    return tuple(out)


def enumerate_trees(m: int, max_rho, max_nodes: int | None = None) -> list[Tree]:
    """All canonical non-empty trees with colors ``<= m`` and ``rho <= max_rho``.

    Sorted by ``(rho, key)``.  ``max_nodes`` optionally caps the node count.
    """
    if m < 0:
        raise ValueError("m must be non-negative")
    top = HalfInt.of(max_rho).twice
    if max_nodes is not None:
        # generate by size instead: far fewer candidates when the cap binds
        found = [t for n in range(1, max_nodes + 1) for t in _trees_of_size(m, n) if rho2(t) <= top]
        return sorted(found, key=lambda t: (rho2(t), t.key))
    out = []
    for n2 in range(1, top + 1):
        out.extend(_trees_of_order2(m, n2))
    return out


@lru_cache(maxsize=None)
def _trees_of_size(m: int, n: int) -> tuple[Tree, ...]:
    # all canonical trees with colors <= m and exactly n nodes
    return tuple(sorted(Tree(color, kids) for color in range(m + 1) for kids in _forests_of_size(m, n - 1)))


@lru_cache(maxsize=None)
def _forests_of_size(m: int, n: int) -> tuple[tuple[Tree, ...], ...]:
    if n == 0:
        return ((),)
    pool = sorted(t for k in range(1, n + 1) for t in _trees_of_size(m, k))
    sizes = [num_nodes(t) for t in pool]
    out = []

    def grow(prefix: list[Tree], budget: int, start: int) -> None:
        if budget == 0:
            out.append(tuple(prefix))
            return
        for i in range(start, len(pool)):
            if sizes[i] <= budget:
                prefix.append(pool[i])
                grow(prefix, budget - sizes[i], i)
                prefix.pop()

    grow([], n, 0)
    return tuple(out)


class TreeSyntaxError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


def parse_tree(text: str) -> Tree:
    """Parse a tree literal such as ``"0[1,1[2,2]]"`` into a canonical tree."""
    pos = 0

    def skip() -> None:
        nonlocal pos
        while pos < len(text) and text[pos].isspace():
            pos += 1

    def parse() -> Tree:
        nonlocal pos
        skip()
        start = pos
        while pos < len(text) and text[pos].isdigit():
            pos += 1
        if start == pos:
            found = repr(text[pos]) if pos < len(text) else "end of input"
            raise TreeSyntaxError(f"expected a color, found {found}", pos)
        color = int(text[start:pos])
        skip()
        kids = []
        if pos < len(text) and text[pos] == "[":
            pos += 1
            kids.append(parse())
            skip()
            while pos < len(text) and text[pos] == ",":
                pos += 1
                kids.append(parse())
                skip()
            if pos >= len(text) or text[pos] != "]":
                found = repr(text[pos]) if pos < len(text) else "end of input"
                raise TreeSyntaxError(f"expected ',' or ']', found {found}", pos)
            pos += 1
        return node(color, *kids)

    t = parse()
    skip()
    if pos != len(text):
        raise TreeSyntaxError(f"trailing input {text[pos]!r}", pos)
    return t
