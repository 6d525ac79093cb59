"""Petersson traces Delta_k(m, n) from the Kloosterman-Bessel series, and their h-weighted sums.

Tail certification: for c > C the terms obey
  |S(m,n;c)/c J_{k-1}(4 pi sqrt(mn)/c)| <= 2 sqrt(g) A_k c^{-(k-1)},
with g = gcd(m, n), A_k = (2 pi sqrt(mn))^{k-1} / (k-1)!, using d(c) <= 2 sqrt(c),
the Weil bound and |J_nu(x)| <= (x/2)^nu / nu!.  Summing the power gives
  |tail| <= 4 pi sqrt(g) A_k C^{-(k-2)} / (k-2).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .bessel import DEFAULT_WEIGHT, ZETA8_BAR, HslashEvaluator, WeightFunction, bessel_j, bessel_j_all
from .kloosterman import kloosterman_row
from .parallel import ordered_map


class TruncationError(RuntimeError):
    """The certified tail of a truncated series exceeds the requested tolerance."""

    def __init__(self, message: str, bound: float, needed: int | None = None):
        super().__init__(message)
        self.bound = bound
        self.needed = needed


@dataclass(frozen=True)
class TraceRequest:
    m: int
    n: int
    k: int
    c_max: int | None = None
    tol: float = 1e-9

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise ValueError("m and n must be positive")
        if self.k % 2 or self.k < 4:
            raise ValueError(f"weight must be even and >= 4, got {self.k}")
        if not self.tol > 0:
            raise ValueError("tol must be positive")


@dataclass(frozen=True)
class TraceValue:
    value: float
    tail_bound: float
    c_max: int

    def __float__(self) -> float:
        return self.value


def _log_A(m: int, n: int, k: int) -> float:
    return (k - 1) * math.log(2.0 * math.pi * math.sqrt(m * n)) - math.lgamma(k)


def tail_bound(m: int, n: int, k: int, C: int) -> float:
    """Certified bound on 2 pi sum_{c > C} |S(m,n;c)/c J_{k-1}(4 pi sqrt(mn)/c)|."""
    if C < 1:
        return math.inf
    g = math.gcd(m, n)
    log_b = math.log(4.0 * math.pi * math.sqrt(g) / (k - 2)) + _log_A(m, n, k) - (k - 2) * math.log(C)
    return math.exp(log_b) if log_b < 700 else math.inf


def certified_c_max(m: int, n: int, k: int, tol: float) -> int:
    """Smallest C whose tail bound is at most tol."""
    g = math.gcd(m, n)
    log_target = math.log(tol) - math.log(4.0 * math.pi * math.sqrt(g) / (k - 2)) - _log_A(m, n, k)
    C = max(1, int(math.floor(math.exp(-log_target / (k - 2)))))
    while tail_bound(m, n, k, C) > tol:
        C += 1
    while C > 1 and tail_bound(m, n, k, C - 1) <= tol:
        C -= 1
    return C


@lru_cache(maxsize=4096)
def _kloosterman_row_cached(m: int, n: int, c_max: int) -> np.ndarray:
    row = kloosterman_row(m, n, c_max)
    row.setflags(write=False)
    return row


def _row(m: int, n: int, c_max: int) -> np.ndarray:
    # rows are symmetric in (m, n); share one cache entry
    a, b = min(m, n), max(m, n)
    return _kloosterman_row_cached(a, b, c_max)


def _resolve_c_max(req: TraceRequest) -> tuple[int, float]:
    if req.c_max is None:
        C = certified_c_max(req.m, req.n, req.k, req.tol)
        return C, tail_bound(req.m, req.n, req.k, C)
    bound = tail_bound(req.m, req.n, req.k, req.c_max)
    if bound > req.tol:
        needed = certified_c_max(req.m, req.n, req.k, req.tol)
        raise TruncationError(
            f"tail bound {bound:.3e} > tol {req.tol:.3e} at c_max={req.c_max}; need c_max >= {needed}",
            bound, needed)
    return req.c_max, bound


def _ik(k: int) -> int:
    return 1 if k % 4 == 0 else -1


def trace_delta(req: TraceRequest) -> TraceValue:
    """delta(m,n) + 2 pi i^k sum_{c <= C} S(m,n;c)/c J_{k-1}(4 pi sqrt(mn)/c)."""
    C, bound = _resolve_c_max(req)
    c = np.arange(1, C + 1, dtype=float)
    S = _row(req.m, req.n, C)
    J = bessel_j(req.k - 1, 4.0 * math.pi * math.sqrt(req.m * req.n) / c)
    series = math.fsum((S / c * J).tolist())
    value = (1.0 if req.m == req.n else 0.0) + 2.0 * math.pi * _ik(req.k) * series
    return TraceValue(value, bound, C)


def traces_over_weights(m: int, n: int, ks: Sequence[int], tol: float = 1e-9) -> list[TraceValue]:
    """Delta_k(m, n) for several weights sharing one Kloosterman row and one Bessel table."""
    if not ks:
        return []
    Cs = [certified_c_max(m, n, k, tol) for k in ks]
    C = max(Cs)
    c = np.arange(1, C + 1, dtype=float)
    S = _row(m, n, C)
    J = bessel_j_all(max(ks) - 1, 4.0 * math.pi * math.sqrt(m * n) / c)
    delta = 1.0 if m == n else 0.0
    out = []
    for k, Ck in zip(ks, Cs):
        # every weight sums to the common C so results do not depend on the batch
        series = math.fsum((S / c * J[:, k - 1]).tolist())
        out.append(TraceValue(delta + 2.0 * math.pi * _ik(k) * series, tail_bound(m, n, k, C), C))
    return out


def spectral_trace(lam_m: float, lam_n: float, k: int, L1: float) -> float:
    """(2 pi^2 / (k - 1)) lambda(m) lambda(n) / L(1, sym^2 f) for a one-dimensional space."""
    return 2.0 * math.pi**2 / (k - 1) * lam_m * lam_n / L1


@dataclass(frozen=True)
class WeightedTrace:
    value: float
    tail_bound: float
    weights: tuple[int, ...]

    def __float__(self) -> float:
        return self.value


def weighted_trace(m: int, n: int, K: float, weight: WeightFunction = DEFAULT_WEIGHT,
                   tol: float = 1e-12) -> WeightedTrace:
    """B(m, n) = sum over even k of 2 h((k-1)/K) Delta_k(m, n)."""
    if K < 2:
        raise ValueError("K must be at least 2")
    ks = [k for k in weight.k_range(K) if k >= 4]
    traces = traces_over_weights(m, n, ks, tol)
    w = [2.0 * weight((k - 1) / K) for k in ks]
    value = math.fsum(wi * t.value for wi, t in zip(w, traces))
    bound = math.fsum(wi * t.tail_bound for wi, t in zip(w, traces))
    return WeightedTrace(value, bound, tuple(ks))


def weighted_trace_table(pairs: Iterable[tuple[int, int]], K: float,
                         weight: WeightFunction = DEFAULT_WEIGHT, tol: float = 1e-12,
                         threads: int | None = None) -> list[WeightedTrace]:
    """weighted_trace over many (m, n), in input order."""
    return list(ordered_map(lambda mn: weighted_trace(mn[0], mn[1], K, weight, tol), list(pairs), threads))


def hslash_c_max(m: int, n: int, K: float, v_cut: float = 400.0) -> int:
    """Largest c with hbar argument c K^2 / (8 pi sqrt(mn)) below v_cut."""
    return max(1, int(v_cut * 8.0 * math.pi * math.sqrt(m * n) / (K * K)))


def approx_weighted_trace(m: int, n: int, K: float, weight: WeightFunction = DEFAULT_WEIGHT,
                          c_max: int | None = None, hbar: HslashEvaluator | None = None) -> float:
    """The hbar approximation to B(m, n):

    h_hat(0) K delta(m,n) - sqrt(pi) (mn)^{-1/4} K Im(zeta8_bar sum_c c^{-1/2} S(m,n;c) e(2 sqrt(mn)/c) hbar(c K^2 / (8 pi sqrt(mn)))).
    """
    if c_max is None:
        c_max = hslash_c_max(m, n, K)
    hbar = hbar or HslashEvaluator(weight)
    c = np.arange(1, c_max + 1, dtype=float)
    rmn = math.sqrt(m * n)
    S = _row(m, n, c_max)
    phase = np.exp(1j * (4.0 * math.pi * rmn / c))
    terms = c ** -0.5 * S * phase * hbar(c * K * K / (8.0 * math.pi * rmn))
    total = complex(math.fsum(terms.real.tolist()), math.fsum(terms.imag.tolist()))
    main = weight.h_hat_0 * K if m == n else 0.0
    return main - math.sqrt(math.pi) * (m * n) ** -0.25 * K * (ZETA8_BAR * total).imag


def write_trace_csv(rows: Iterable[tuple[int, int, int, TraceValue]], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "m", "n", "delta", "tail_bound"])
        for k, m, n, t in rows:
            w.writerow([k, m, n, format(t.value, ".17g"), format(t.tail_bound, ".17g")])
