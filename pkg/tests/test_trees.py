from fractions import Fraction
from itertools import permutations, product
from math import factorial

import pytest

from sbseries.trees import (
    EMPTY,
    HalfInt,
    Tree,
    TreeSyntaxError,
    alpha,
    canonical,
    enumerate_trees,
    leaf,
    node,
    num_nodes,
    parse_tree,
    rho,
)

EXAMPLE = "0[1,1[2,2]]"


def test_canonical_sorts_children():
    t = Tree(0, [leaf(2), leaf(1)])
    assert str(canonical(t)) == "0[1,2]"
    assert canonical(leaf(1)) == leaf(1)
    a = Tree(0, [Tree(1, [leaf(2), leaf(2)]), leaf(1)])
    b = Tree(0, [leaf(1), Tree(1, [leaf(2), leaf(2)])])
    assert canonical(a) == canonical(b)
    assert canonical(canonical(a)) == canonical(a)


def test_rho_values():
    assert rho(EMPTY) == 0
    assert rho(leaf(1)) == HalfInt.of("1/2")
    assert rho(leaf(0)) == 1
    assert rho(parse_tree(EXAMPLE)) == 3


def test_alpha_values():
    assert alpha(parse_tree(EXAMPLE)) == Fraction(1, 2)
    assert alpha(leaf(3)) == 1
    assert alpha(EMPTY) == 1
    assert alpha(parse_tree("1[1,1,1]")) == Fraction(1, 6)


def _orderings(t: Tree) -> set[str]:
    # every ordered tree (as text) with underlying unordered tree t
    if not t.children:
        return {str(t.color)}
    out = set()
    for perm in permutations(t.children):
        for parts in product(*(sorted(_orderings(c)) for c in perm)):
            out.add(f"{t.color}[" + ",".join(parts) + "]")
    return out


def _kappa_factorials(t: Tree) -> int:
    out = factorial(len(t.children))
    for c in t.children:
        out *= _kappa_factorials(c)
    return out


def test_alpha_against_ordered_representatives():
    trees = enumerate_trees(2, 3)
    assert len(trees) > 100
    for t in trees:
        assert alpha(t) == Fraction(len(_orderings(t)), _kappa_factorials(t)), str(t)


def test_enumeration_small_cases():
    assert [str(t) for t in enumerate_trees(1, 1)] == ["1", "0", "1[1]"]
    assert enumerate_trees(1, 0) == []
    counts = {}
    for t in enumerate_trees(0, 4):
        counts[num_nodes(t)] = counts.get(num_nodes(t), 0) + 1
    assert counts == {1: 1, 2: 1, 3: 2, 4: 4}
    sizes = [sum(1 for t in enumerate_trees(0, 6) if num_nodes(t) == n) for n in range(1, 7)]
    assert sizes == [1, 1, 2, 4, 9, 20]


def _closure(m: int, max2: int) -> set[Tree]:
    # naive fixpoint: graft any multiset of known trees under a new root
    known: set[Tree] = set()
    while True:
        new = set(known)
        pool = sorted(known)
        for color in range(m + 1):
            budget = max2 - (2 if color == 0 else 1)
            stack = [((), budget, 0)]
            while stack:
                kids, left, start = stack.pop()
                new.add(node(color, *kids))
                for i in range(start, len(pool)):
                    r = 2 * float(rho(pool[i]))
                    if r <= left:
                        stack.append((kids + (pool[i],), left - r, i))
        if new == known:
            return known
        known = new


@pytest.mark.parametrize("m,max_rho", [(1, 2), (2, Fraction(3, 2)), (0, 4), (1, Fraction(5, 2))])
def test_enumeration_matches_closure(m, max_rho):
    got = enumerate_trees(m, max_rho)
    assert len(set(got)) == len(got)
    assert set(got) == _closure(m, int(2 * max_rho))
    keys = [(rho(t).twice, t.key) for t in got]
    assert keys == sorted(keys)


def test_enumeration_closed_under_subtrees():
    got = set(enumerate_trees(2, 2))
    for t in got:
        for c in t.children:
            assert c in got


def test_parse_and_print_roundtrip():
    t = parse_tree(" 0 [ 1[2,2] , 1 ]")
    assert str(t) == EXAMPLE
    assert parse_tree("1") == leaf(1)
    for u in enumerate_trees(2, 2):
        assert parse_tree(str(u)) == u


@pytest.mark.parametrize("text,offset", [("0[1,", 4), ("", 0), ("0[]", 2), ("0[1]]", 4), ("x", 0)])
def test_parse_errors(text, offset):
    with pytest.raises(TreeSyntaxError) as info:
        parse_tree(text)
    assert info.value.offset == offset


def test_invariance_under_child_permutation():
    for t in enumerate_trees(2, 2):
        if len(t.children) > 1:
            flipped = Tree(t.color, list(reversed(t.children)))
            assert rho(flipped) == rho(t)
            assert alpha(flipped) == alpha(t)
            assert canonical(flipped) == t


def test_halfint():
    assert HalfInt.of("1.5") == HalfInt.of("3/2") == HalfInt(3)
    assert str(HalfInt(3)) == "3/2"
    assert HalfInt(1) + HalfInt(1) == 1
    with pytest.raises(ValueError):
        HalfInt.of("1/3")
