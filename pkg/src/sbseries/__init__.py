"""B-series for stochastic differential equations.

Colored rooted trees, an exact algebra of multiple stochastic integrals,
composition of B-series, order conditions for implicit Taylor methods, and a
small numerical lab for strong convergence studies.
"""

__version__ = "0.1.0"

from .trees import HalfInt, Tree, alpha, canonical, enumerate_trees, parse_tree, rho
from .integrals import ITO, STRAT, IntegralExpr
from .bseries import CoeffMap, SdeProblem, bseries_eval, exact_weight
from .composition import compose, decompositions, implicit_taylor_coeffs
from .order_conditions import MethodSpec, check_strong, check_weak, family_spec

__all__ = [
    "CoeffMap", "HalfInt", "ITO", "IntegralExpr", "MethodSpec", "STRAT", "SdeProblem", "Tree",
    "alpha", "bseries_eval", "canonical", "check_strong", "check_weak", "compose", "decompositions",
    "enumerate_trees", "exact_weight", "family_spec", "implicit_taylor_coeffs", "parse_tree", "rho",
]
