from fractions import Fraction
from math import factorial

import numpy as np
import pytest

from sbseries.bseries import (
    CoeffMap,
    FTree,
    SdeProblem,
    beta_coeff,
    bseries_eval,
    elementary_differential,
    enumerate_ftrees,
    exact_map,
    exact_weight,
    finite_difference_derivative,
    psi_weight,
)
from sbseries.integrals import ITO, STRAT, IntegralExpr, expectation_ito
from sbseries.sde_lab.problems import nonlin2d_problem, sinh_problem
from sbseries.trees import enumerate_trees, parse_tree

P = parse_tree
EXAMPLE = P("0[1,1[2,2]]")


def test_example_stratonovich_expansion():
    e = exact_weight(EXAMPLE, STRAT)
    assert e.terms == {(2, 2, 1, 1, 0): 4, (2, 1, 2, 1, 0): 2, (1, 2, 2, 1, 0): 2}
    assert str(e) == "4*J(2,2,1,1,0) + 2*J(2,1,2,1,0) + 2*J(1,2,2,1,0)"


def test_example_ito_expansion():
    e = exact_weight(EXAMPLE, ITO)
    assert e.terms == {
        (2, 2, 1, 1, 0): 4,
        (2, 1, 2, 1, 0): 2,
        (1, 2, 2, 1, 0): 2,
        (2, 2, 0, 0): 2,
        (1, 0, 1, 0): 1,
        (0, 1, 1, 0): 2,
        (0, 0, 0): 1,
    }
    assert expectation_ito(e) == [(3, Fraction(1, 6))]


def test_simple_exact_weights():
    assert exact_weight(P("1")) == IntegralExpr.word((1,))
    assert exact_weight(P("1[1]")) == IntegralExpr.word((1, 1))
    # phi([t1..tk]_0) for a deterministic tree with n nodes is (n! / tree factorial) I(0^n)
    assert exact_weight(P("0[0,0]")) == IntegralExpr.word((0, 0, 0)).scale(2)


def test_ftrees_and_beta():
    us = enumerate_ftrees(1, Fraction(3, 2))
    assert us[0] == FTree(())
    assert beta_coeff(FTree(())) == 1
    assert beta_coeff(FTree((P("1"), P("1")))) == Fraction(1, 2)
    assert beta_coeff(FTree((P("1[1,1]"),))) == Fraction(1, 2)
    assert all(u.rho2 <= 3 for u in us)
    assert len(set(us)) == len(us)
    phi = exact_map(1, 2)
    assert psi_weight(phi, FTree(())) == 1
    assert psi_weight(phi, FTree((P("1"), P("0")))) == IntegralExpr.word((1,)) * IntegralExpr.word((0,))


def test_coeffmap_semantics():
    m = CoeffMap({P("0[1,2]"): IntegralExpr.word((1, 2, 0))})
    assert m[P("0[2,1]")] == IntegralExpr.word((1, 2, 0))
    assert m[P("1")].is_zero()
    with pytest.raises(ValueError):
        CoeffMap({P("1"): IntegralExpr.word((1,), STRAT)})


@pytest.mark.parametrize("problem", [sinh_problem(), nonlin2d_problem()])
def test_analytic_derivatives_against_finite_differences(problem):
    rng = np.random.default_rng(1)
    x = rng.normal(size=(20, problem.d))
    for l in (0, 1):
        for k in (1, 2, 3):
            dirs = [rng.normal(size=(20, problem.d)) for _ in range(k)]
            exact = problem.dg(l, x, *dirs)
            approx = finite_difference_derivative(problem.fields[l], x, *dirs)
            scale = 1 + np.abs(exact).max()
            assert np.abs(exact - approx).max() < 1e-3 * scale, (l, k)


def test_elementary_differentials_match_with_and_without_oracle():
    p = nonlin2d_problem()
    q = SdeProblem("fd", 2, 1, p.fields)
    x = np.array([[0.3, -0.4], [1.0, 0.5]])
    for t in enumerate_trees(1, 2):
        a = elementary_differential(t, p, x)
        b = elementary_differential(t, q, x)
        assert np.allclose(a, b, atol=1e-4), str(t)


def test_derivative_limit_and_color_checks():
    p = sinh_problem()
    with pytest.raises(ValueError):
        p.dg(1, np.zeros(1), *([np.ones(1)] * 4))
    with pytest.raises(ValueError):
        elementary_differential(P("2"), p, np.zeros(1))


def test_deterministic_series_reproduces_exponential():
    # dx = a x dt: the exact B-series is the Taylor series of exp(a h)
    a = 0.8
    p = SdeProblem("exp", 1, 0, [lambda x: a * x], derivatives=lambda l, x, *v: a * v[0] if len(v) == 1 else 0 * x, max_derivative=8)
    phi = exact_map(0, 8)
    for h in (0.5, 0.1):
        samples = {(0,) * k: h**k / factorial(k) for k in range(9)}
        y = bseries_eval(phi, p, np.array([1.0]), samples, 8)
        assert abs(y[0] - np.exp(a * h)) < (a * h) ** 9 / factorial(9) * 2


def test_bseries_eval_batches():
    p = sinh_problem()
    phi = exact_map(1, 1)
    x = np.array([[0.0], [0.5]])
    dW = np.array([0.1, -0.2])
    h = 0.01
    samples = {(1,): dW, (0,): h, (1, 1): (dW * dW - h) / 2}
    batched = bseries_eval(phi, p, x, samples, 1)
    for i in range(2):
        single = bseries_eval(phi, p, x[i], {w: (v if np.ndim(v) == 0 else v[i]) for w, v in samples.items()}, 1)
        assert np.allclose(batched[i], single)
