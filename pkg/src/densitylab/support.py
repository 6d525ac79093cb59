"""Admissible Fourier support under the exponential-sum hypothesis H_n(alpha, A), and rank bounds.

All functions are generic in the number type: pass ``fractions.Fraction``
arguments to get exact rational answers.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from numbers import Real
from typing import Iterable


@dataclass(frozen=True)
class HypothesisParams:
    alpha: Real
    A: Real
    n: int = 1

    def __post_init__(self):
        if not (Fraction(1, 2) <= self.alpha <= Fraction(3, 4)):
            raise ValueError(f"alpha must lie in [1/2, 3/4], got {self.alpha}")
        if not self.A >= 0:
            raise ValueError(f"A must be nonnegative, got {self.A}")
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n}")


@dataclass(frozen=True)
class RankBoundInput:
    v1: float
    v2: float
    r: int

    def __post_init__(self):
        if not (self.v1 > 0 and self.v2 > 0):
            raise ValueError("v1 and v2 must be positive")
        if int(self.r) != self.r or self.r < 1:
            raise ValueError("r must be a positive integer")


def _branch(alpha, A, j: int):
    # 2 + (6 - 8 alpha) / (2j - 1 + 2A + 4 alpha)
    return 2 + (6 - 8 * alpha) / (2 * j - 1 + 2 * A + 4 * alpha)


def _cap(alpha):
    return Fraction(5, 2) if isinstance(alpha, Fraction) else 2.5


def support_one_level(p: HypothesisParams):
    """sigma = min(5/2, 2 + (6 - 8 alpha)/(1 + 2A + 4 alpha))."""
    return min(_cap(p.alpha), _branch(p.alpha, p.A, 1))


def support_two_level(p: HypothesisParams) -> tuple:
    """(sigma_1 + sigma_2, equal-split sigma) with total 2 + (6 - 8 alpha)/(3 + 2A + 4 alpha)."""
    total = _branch(p.alpha, p.A, 2)
    return total, total / 2


def support_n_level(p: HypothesisParams) -> tuple:
    """(n sigma, sigma): n sigma is the min of 5/2 and the branches j = 1..n."""
    total = min([_cap(p.alpha)] + [_branch(p.alpha, p.A, j) for j in range(1, p.n + 1)])
    return total, total / p.n


def rank_bound(inp: RankBoundInput) -> float:
    """Upper bound on the weighted proportion of forms with central order >= r.

    min((1/2 + 1/v1)/r, 1/(3 (r - 1/v2 - 1/2)^2)); the second branch only
    applies when r > 1/v2 + 1/2.
    """
    first = (0.5 + 1.0 / inp.v1) / inp.r
    gap = inp.r - 1.0 / inp.v2 - 0.5
    if gap <= 0:
        return first
    return min(first, 1.0 / (3.0 * gap * gap))


RANK_CSV_HEADER = ["r", "v1", "v2", "bound"]


def rank_bound_rows(v1: float, v2: float, rs: Iterable[int]) -> list[list[str]]:
    return [[str(r), format(v1, ".17g"), format(v2, ".17g"), format(rank_bound(RankBoundInput(v1, v2, r)), ".17g")]
            for r in rs]


__all__ = ["HypothesisParams", "RankBoundInput", "support_one_level", "support_two_level",
           "support_n_level", "rank_bound", "rank_bound_rows", "RANK_CSV_HEADER"]
