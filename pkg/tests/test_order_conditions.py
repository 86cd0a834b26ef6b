from fractions import Fraction

import pytest

from sbseries.bseries import CoeffMap
from sbseries.integrals import STRAT, IntegralExpr
from sbseries.order_conditions import (
    METHODS,
    MethodSpec,
    check_strong,
    check_weak,
    euler_spec,
    exact_spec,
    family_spec,
    milstein_spec,
    random_params,
    semi_implicit_milstein_spec,
)
from sbseries.trees import parse_tree

HALF = (Fraction(1, 2),) * 6


def test_euler_orders():
    assert check_strong(euler_spec(), "1/2").passed
    rep = check_strong(euler_spec(), 1)
    assert not rep.passed
    assert rep.offending()["1[1]"] == [(1, 1)]
    v = next(v for v in rep.violations if v.target == "1[1]" and v.kind == "pathwise")
    assert v.residual == [((1, 1), -1)]


def test_milstein_orders():
    assert check_strong(milstein_spec(), 1).passed
    assert not check_strong(milstein_spec(), "3/2").passed
    assert check_strong(semi_implicit_milstein_spec(), 1).passed


def test_family_at_half_point_and_random_tuples():
    assert check_strong(family_spec(HALF), "3/2").passed
    assert check_strong(family_spec((0,) * 6), "3/2").passed
    for seed in range(5):
        c = random_params(seed)
        assert check_strong(family_spec(c), "3/2").passed, c


def test_family_is_not_order_two():
    assert not check_strong(family_spec(random_params(11)), 2).passed


def test_family_with_a_wrong_coefficient_fails():
    spec = family_spec(HALF)
    bad = dict(spec.phi_ex.items())
    t = parse_tree("1[1,1]")
    bad[t] = bad[t] + IntegralExpr.word((1, 1, 1))
    broken = MethodSpec("broken", spec.calculus, 1, CoeffMap(bad), spec.phi_im)
    assert "1[1,1]" in check_strong(broken, "3/2").offending()


def test_exact_spec_passes_everything():
    assert check_strong(exact_spec(1, 2), "3/2").passed
    assert check_weak(exact_spec(1, 3), 1).passed


def test_weak_orders():
    assert check_weak(euler_spec(), 1).passed
    assert not check_weak(euler_spec(), 2).passed
    assert check_weak(family_spec(HALF), 1).passed


def test_report_rendering():
    rep = check_strong(euler_spec(), 1)
    text = str(rep)
    assert "FAIL" in text and "pathwise 1[1] (rho=1): -1*(1,1)" in text
    d = rep.as_dict()
    assert d["passed"] is False and d["violations"]


def test_validation():
    with pytest.raises(ValueError):
        family_spec((1, 2, 3))
    with pytest.raises(ValueError):
        MethodSpec("x", "ito", 1, CoeffMap({parse_tree("0"): IntegralExpr.word((1,))}), CoeffMap(empty=0))
    with pytest.raises(ValueError):
        MethodSpec("x", "ito", 1, CoeffMap(empty=0), CoeffMap(empty=0))
    with pytest.raises(ValueError):
        check_strong(euler_spec(), "1/3")


def test_stratonovich_mean_condition_not_available():
    spec = exact_spec(1, 1, STRAT)
    with pytest.raises(NotImplementedError):
        check_strong(spec, 1)
    assert check_strong(spec, 1, mean=False).passed
    with pytest.raises(NotImplementedError):
        check_weak(spec, 1)


def test_registry():
    for name, make in METHODS.items():
        assert make().m == 1, name
