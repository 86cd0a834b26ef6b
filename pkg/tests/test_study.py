import math

import numpy as np
import pytest

from sbseries.sde_lab.problems import nonlin2d_problem, sinh_problem
from sbseries.sde_lab.steppers import ExactSolution, TaylorFamily, make_method
from sbseries.sde_lab.study import StudyAborted, fit_slope, strong_error_study


def test_fit_slope():
    hs = [2.0**-k for k in range(3, 7)]
    slope, intercept = fit_slope(hs, [3 * h**1.5 for h in hs])
    assert slope == pytest.approx(1.5) and intercept == pytest.approx(math.log2(3))
    assert math.isnan(fit_slope(hs, [0.0] * 4)[0])
    assert math.isnan(fit_slope(hs[:1], [1.0])[0])


def test_exact_against_itself_gives_nan_slope():
    r = strong_error_study(ExactSolution(), sinh_problem(), levels=range(2, 5), paths=20)
    assert all(l.mean_error == 0 for l in r.levels)
    assert math.isnan(r.slope) and r.as_dict()["slope"] is None


def test_deterministic_across_workers_and_chunks():
    p = sinh_problem()
    m = make_method("family")
    a = strong_error_study(m, p, levels=range(3, 6), paths=60, seed=9, workers=1, chunk=60)
    b = strong_error_study(m, p, levels=range(3, 6), paths=60, seed=9, workers=4, chunk=7)
    assert a.as_dict() == b.as_dict()
    c = strong_error_study(m, p, levels=range(3, 6), paths=60, seed=10)
    assert a.as_dict() != c.as_dict()


def test_euler_slope_quick():
    r = strong_error_study(make_method("euler"), sinh_problem(), levels=range(4, 9), paths=300, seed=1)
    assert 0.3 < r.slope < 0.7
    assert all(l.failed == 0 and l.used == 300 for l in r.levels)
    assert all(l.stderr > 0 for l in r.levels)


def test_fine_reference_for_two_dimensional_problem():
    p = nonlin2d_problem()
    r = strong_error_study(TaylorFamily((0,) * 6), p, levels=[3, 4], paths=30)
    assert r.reference == "fine"
    assert all(np.isfinite(l.mean_error) and l.mean_error > 0 for l in r.levels)
    with pytest.raises(ValueError):
        strong_error_study(make_method("euler"), p, reference="exact")


def test_abort_when_too_many_paths_fail():
    # at h = 1/4 the implicit relation has no solution on some paths
    with pytest.raises(StudyAborted):
        strong_error_study(make_method("family"), sinh_problem(), levels=[2, 3], paths=400, seed=0)
    r = strong_error_study(make_method("family"), sinh_problem(), levels=[2, 3], paths=400, seed=0,
                           max_failure_fraction=1.0)
    assert r.levels[0].failed > 0 and r.levels[0].used + r.levels[0].failed == 400


def test_validation():
    p = sinh_problem()
    with pytest.raises(ValueError):
        strong_error_study(make_method("euler"), p, paths=0)
    with pytest.raises(ValueError):
        strong_error_study(make_method("euler"), p, levels=[])
    with pytest.raises(ValueError):
        strong_error_study(make_method("euler"), p, reference="coarse")
