"""Numerical laboratory for low-lying zeros of level-1 cusp forms."""

__version__ = "0.1.0"

from .bessel import HslashEvaluator, WeightFunction, bessel_j, bessel_j_all, hslash, smooth_bump
from .density import ZeroSet, density_from_zeros, family_average_one_level, family_average_two_level
from .eigenforms import HeckeEigenform, UnsupportedWeight, eigenform
from .expsums import ExpSumResult, ExponentFit, exp_sum_1, exp_sum_2, exp_sum_n, fit_exponents
from .kloosterman import kloosterman, kloosterman_table, weil_bound
from .petersson import TraceRequest, TruncationError, approx_weighted_trace, trace_delta, weighted_trace
from .primes import PrimeRange, ResidueFilter, primes_up_to
from .quadrature import QuadratureError, integrate
from .rmt import KernelDensity, pair
from .support import HypothesisParams, RankBoundInput, rank_bound, support_n_level, support_one_level, support_two_level
from .testfunctions import TestFunction, custom_pair, make_fejer, square

__all__ = [
    "ExpSumResult", "ExponentFit", "HeckeEigenform", "HslashEvaluator", "HypothesisParams", "KernelDensity",
    "PrimeRange", "QuadratureError", "RankBoundInput", "ResidueFilter", "TestFunction", "TraceRequest",
    "TruncationError", "UnsupportedWeight", "WeightFunction", "ZeroSet", "approx_weighted_trace", "bessel_j",
    "bessel_j_all", "custom_pair", "density_from_zeros", "eigenform", "exp_sum_1", "exp_sum_2", "exp_sum_n",
    "family_average_one_level", "family_average_two_level", "fit_exponents", "hslash", "integrate",
    "kloosterman", "kloosterman_table", "make_fejer", "pair", "primes_up_to", "rank_bound", "smooth_bump",
    "square", "support_n_level", "support_one_level", "support_two_level", "trace_delta", "weighted_trace",
    "weil_bound",
]
