"""Kloosterman sums S(m, n; c) and the small arithmetic functions around them.

Every phase is evaluated from the exact integer residue r = (m d + n dbar) mod c,
so no rounding error accumulates inside the exponent.  Sums of unit-modulus
terms are accumulated with ``math.fsum``.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
import scipy.fft as sp_fft

TWO_PI = 2.0 * math.pi


def divisor_count(c: int) -> int:
    if c < 1:
        raise ValueError("divisor_count needs c >= 1")
    count = 1
    m = c
    p = 2
    while p * p <= m:
        e = 0
        while m % p == 0:
            m //= p
            e += 1
        count *= e + 1
        p += 1
    if m > 1:
        count *= 2
    return count


def divisor_counts(limit: int) -> np.ndarray:
    """d(c) for 0 <= c <= limit (index 0 unused)."""
    d = np.zeros(limit + 1, dtype=np.int64)
    for k in range(1, limit + 1):
        d[k::k] += 1
    return d


def modular_inverse(d: int, c: int) -> int:
    if c < 1:
        raise ValueError("modulus must be positive")
    if math.gcd(d, c) != 1:
        raise ValueError(f"{d} is not invertible modulo {c}")
    if c == 1:
        return 0
    return pow(d, -1, c)


def unit_inverses(c: int) -> tuple[np.ndarray, np.ndarray]:
    """Units d in [0, c) and their inverses, via a vectorised extended Euclid."""
    if c == 1:
        return np.zeros(1, dtype=np.int64), np.zeros(1, dtype=np.int64)
    return _unit_inverses_cached(c) if c <= 1 << 16 else _unit_inverses(c)


@lru_cache(maxsize=2048)
def _unit_inverses_cached(c: int):
    d, inv = _unit_inverses(c)
    d.setflags(write=False)
    inv.setflags(write=False)
    return d, inv


def _unit_inverses(c: int):
    d = np.arange(1, c, dtype=np.int64)
    d = d[np.gcd(d, c) == 1]
    # run Euclid on (c, d) for every d simultaneously, tracking the d-coefficient
    r0 = np.full_like(d, c)
    r1 = d.copy()
    t0 = np.zeros_like(d)
    t1 = np.ones_like(d)
    while True:
        active = r1 != 0
        if not active.any():
            break
        q = np.where(active, r0 // np.where(active, r1, 1), 0)
        r0, r1 = np.where(active, r1, r0), np.where(active, r0 - q * r1, r1)
        t0, t1 = np.where(active, t1, t0), np.where(active, t0 - q * t1, t1)
    return d, t0 % c


def kloosterman_complex(m: int, n: int, c: int) -> complex:
    """Raw complex accumulation of S(m, n; c); the imaginary part is rounding noise."""
    if c < 1:
        raise ValueError("modulus must be positive")
    if c == 1:
        return complex(1.0, 0.0)
    d, dbar = unit_inverses(c)
    r = ((m % c) * d + (n % c) * dbar) % c
    theta = TWO_PI * (r / c)
    return complex(math.fsum(np.cos(theta).tolist()), math.fsum(np.sin(theta).tolist()))


def kloosterman(m: int, n: int, c: int) -> float:
    """S(m, n; c) = sum over d mod c, gcd(d, c) = 1, of e((m d + n dbar) / c).

    S(m, n; 1) = 1 by the single-class convention.
    """
    return kloosterman_complex(m, n, c).real


def kloosterman_row(m: int, n: int, c_max: int) -> np.ndarray:
    """[S(m, n; c) for c = 1..c_max] as a float array."""
    return np.array([kloosterman(m, n, c) for c in range(1, c_max + 1)])


def kloosterman_table(c: int, m_max: int, n_max: int, *, return_imag: bool = False):
    """S(m, n; c) for 1 <= m <= m_max, 1 <= n <= n_max at a single modulus.

    Batched through FFTs: S(m, n; c) = S(1, mn; c) whenever m or n is a unit
    mod c, and every S(1, N; c) comes out of one length-c transform.  Pairs
    with both entries non-units get one transform per such n.
    Returns an (m_max, n_max) real array, plus the largest |imag| of the raw
    accumulation when ``return_imag`` is set.
    """
    if c == 1:
        out = np.ones((m_max, n_max))
        return (out, 0.0) if return_imag else out
    d, dbar = unit_inverses(c)
    unit_phase = np.exp(1j * TWO_PI * (np.arange(c) / c))
    ms = np.arange(1, m_max + 1)
    ns = np.arange(1, n_max + 1)
    u = np.zeros(c, dtype=complex)
    u[dbar] = unit_phase[d]
    s1 = c * sp_fft.ifft(u)  # s1[N] = S(1, N; c)
    table = s1[(ms[:, None] * ns[None, :]) % c]
    m_unit = np.gcd(ms, c) == 1
    n_unit = np.gcd(ns, c) == 1
    bad_n = ns[~n_unit]
    if len(bad_n) and not m_unit.all():
        w = np.zeros((len(bad_n), c), dtype=complex)
        w[:, d] = unit_phase[(bad_n[:, None] * dbar[None, :]) % c]
        rows = c * sp_fft.ifft(w, axis=1)  # rows[j, M] = S(M, bad_n[j]; c)
        bad_m = ms[~m_unit]
        block = rows[:, bad_m % c].T
        table[np.ix_(~m_unit, ~n_unit)] = block
    if return_imag:
        return table.real.copy(), float(np.max(np.abs(table.imag)))
    return table.real.copy()


def weil_bound(m: int, n: int, c: int) -> float:
    """d(c) * sqrt(gcd(m, n, c)) * sqrt(c)."""
    return divisor_count(c) * math.sqrt(math.gcd(math.gcd(m, n), c)) * math.sqrt(c)
