from fractions import Fraction
from itertools import product as cartesian

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sbseries.integrals import (
    ITO,
    STRAT,
    CalculusMismatch,
    IntegralExpr,
    MissingSampleError,
    evaluate_numeric,
    expectation_ito,
    integrate,
    mul,
    truncate,
    word_order2,
)
from sbseries.sde_lab.sampling import iterated_integrals, sample_increments

I = lambda *w: IntegralExpr.word(w, ITO)
J = lambda *w: IntegralExpr.word(w, STRAT)

words = st.lists(st.integers(0, 2), min_size=0, max_size=3).map(tuple)
coeffs = st.fractions(min_value=-5, max_value=5, max_denominator=6)


def exprs(calculus):
    return st.dictionaries(words, coeffs, max_size=3).map(lambda d: IntegralExpr(d, calculus))


def test_basic_products():
    assert mul(I(1), I(1)) == IntegralExpr({(1, 1): 2, (0,): 1})
    assert mul(J(1), J(1)) == IntegralExpr({(1, 1): 2}, STRAT)
    assert mul(I(1), I(2)) == I(1, 2) + I(2, 1)
    assert mul(I(0), I(0)) == I(0, 0).scale(2)


def test_calculus_mismatch():
    with pytest.raises(CalculusMismatch):
        mul(I(1), J(1))


def test_integrate_appends_outermost_letter():
    assert integrate(I(1) + I(2, 0), 1) == I(1, 1) + I(2, 0, 1)
    with pytest.raises(ValueError):
        integrate(I(1), 3, m=2)


def test_expectations():
    assert expectation_ito(IntegralExpr.const(1)) == [(0, 1)]
    assert expectation_ito(I(0, 0, 0)) == [(3, Fraction(1, 6))]
    assert expectation_ito(I(1) + I(0, 1)) == []
    assert expectation_ito(mul(I(1, 1), I(1, 1))) == [(2, Fraction(1, 2))]
    with pytest.raises(NotImplementedError):
        expectation_ito(J(0))


def test_truncate_and_printing():
    e = I(1) + I(0, 1).scale(3) - I(0, 0)
    assert truncate(e, Fraction(3, 2)) == I(1) + I(0, 1).scale(3)
    assert str(e) == "3*I(0,1) - I(0,0) + I(1)"
    assert str(IntegralExpr.zero()) == "0"


@settings(max_examples=60, deadline=None)
@given(exprs(ITO), exprs(ITO))
def test_commutative_ito(a, b):
    assert mul(a, b) == mul(b, a)


@settings(max_examples=60, deadline=None)
@given(exprs(STRAT), exprs(STRAT))
def test_commutative_strat(a, b):
    assert mul(a, b) == mul(b, a)


@settings(max_examples=40, deadline=None)
@given(exprs(ITO), exprs(ITO), exprs(ITO))
def test_associative_ito(a, b, c):
    assert mul(mul(a, b), c) == mul(a, mul(b, c))


@settings(max_examples=40, deadline=None)
@given(exprs(STRAT), exprs(STRAT), exprs(STRAT))
def test_associative_strat(a, b, c):
    assert mul(mul(a, b), c) == mul(a, mul(b, c))


@settings(max_examples=60, deadline=None)
@given(words, words, st.sampled_from([ITO, STRAT]))
def test_grading(u, v, calculus):
    prod = mul(IntegralExpr.word(u, calculus), IntegralExpr.word(v, calculus))
    assert prod.terms
    for w in prod.terms:
        assert word_order2(w) == word_order2(u) + word_order2(v)


@settings(max_examples=40, deadline=None)
@given(exprs(ITO), exprs(ITO), coeffs)
def test_bilinear(a, b, c):
    x = I(1, 2)
    assert mul(a + b.scale(c), x) == mul(a, x) + mul(b, x).scale(c)


# --- independent numeric oracle: iterated integrals on a fine grid ---------


def _grid_integrals(dW, h, calculus, max_len=3):
    """All words over {0,1,2} of length <= max_len, integrated on a grid.

    ``dW`` has shape (paths, channels=2, steps); left-point sums for Itô,
    trapezoid for Stratonovich.  Returns word -> path values at the endpoint.
    """
    paths, _, n = dW.shape
    incs = {0: np.full((paths, n), h), 1: dW[:, 0], 2: dW[:, 1]}
    curves = {(): np.ones((paths, n + 1))}
    for length in range(1, max_len + 1):
        for w in cartesian(range(3), repeat=length):
            inner = curves[w[:-1]]
            point = inner[:, :-1] if calculus == ITO else 0.5 * (inner[:, :-1] + inner[:, 1:])
            steps = point * incs[w[-1]]
            curves[w] = np.concatenate([np.zeros((paths, 1)), np.cumsum(steps, axis=1)], axis=1)
    return {w: c[:, -1] for w, c in curves.items()}


@pytest.mark.parametrize("calculus", [ITO, STRAT])
def test_products_match_grid_integrals(calculus):
    rng = np.random.default_rng(5)
    n, T, paths = 4000, 1.0, 40
    h = T / n
    dW = rng.standard_normal((paths, 2, n)) * np.sqrt(h)
    vals = _grid_integrals(dW, h, calculus)
    W = lambda *w: IntegralExpr.word(w, calculus)
    cases = [(W(1), W(1)), (W(1), W(2)), (W(1), W(0, 1)), (W(2, 1), W(1)), (W(1), W(1, 1)), (W(0), W(2))]
    for a, b in cases:
        lhs = evaluate_numeric(a, vals) * evaluate_numeric(b, vals)
        rhs = evaluate_numeric(mul(a, b), vals)
        err = np.mean(np.abs(lhs - rhs))
        assert err < 0.1, (str(a), str(b), err)
        # the Itô correction term is not negligible: dropping it is detectable
    if calculus == ITO:
        wrong = evaluate_numeric(IntegralExpr({(1, 1): 2}), vals)
        assert np.mean(np.abs(vals[(1,)] ** 2 - wrong)) > 0.5


def test_sampler_closed_forms_satisfy_algebra_pathwise():
    rng = np.random.default_rng(0)
    for h in (1.0, 0.1, 0.003):
        dW, dZ = sample_increments(h, rng, 1000)
        s = iterated_integrals(dW, dZ, h)
        ev = lambda e: evaluate_numeric(e, s)
        np.testing.assert_allclose(ev(I(1)) * ev(I(1)), ev(mul(I(1), I(1))), rtol=1e-12, atol=1e-15)
        np.testing.assert_allclose(ev(I(0)) * ev(I(1)), ev(mul(I(0), I(1))), rtol=1e-12, atol=1e-15)
        np.testing.assert_allclose(ev(I(0)) * ev(I(0)), ev(mul(I(0), I(0))), rtol=1e-12)
        # I1 * I11 = 3 I111 + I01 + I10 uses only sampled words
        np.testing.assert_allclose(ev(I(1)) * ev(I(1, 1)), ev(mul(I(1), I(1, 1))), rtol=1e-10, atol=1e-14)


def test_expectation_matches_monte_carlo():
    rng = np.random.default_rng(3)
    h = 0.5
    dW, dZ = sample_increments(h, rng, 200_000)
    s = iterated_integrals(dW, dZ, h)
    # mean of a product of sampled words vs. its expectation from the algebra
    pairs = [(I(1, 1), I(1, 1)), (I(1), I(1, 0)), (I(0, 1), I(1)), (I(1, 0), I(1, 0))]
    for a, b in pairs:
        samples = evaluate_numeric(a, s) * evaluate_numeric(b, s)
        exact = sum(float(c) * h**k for k, c in expectation_ito(mul(a, b)))
        se = samples.std() / np.sqrt(samples.size)
        assert abs(samples.mean() - exact) < 5 * se, (str(a), str(b))


def test_missing_sample_reports_word():
    with pytest.raises(MissingSampleError) as info:
        evaluate_numeric(I(2, 2), {(1,): 1.0})
    assert info.value.word == (2, 2)
    assert evaluate_numeric(IntegralExpr.const(3), {}) == 3.0
