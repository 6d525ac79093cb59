"""Segmented sieve of Eratosthenes and residue-class filtering.

Primes are produced block by block so that consumers (exponential sums,
density sums) can stream over ranges far larger than memory would allow
for a materialised list.  Blocks are independent once the base primes up
to sqrt(limit) are known, which is what makes parallel enumeration safe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterator

import numpy as np

from .parallel import ordered_map

DEFAULT_SEGMENT = 1 << 20


def simple_sieve(limit: int) -> np.ndarray:
    """All primes <= limit from a single (non-segmented) boolean sieve."""
    if limit < 2:
        return np.zeros(0, dtype=np.int64)
    is_prime = np.ones(limit + 1, dtype=bool)
    is_prime[:2] = False
    for p in range(2, math.isqrt(limit) + 1):
        if is_prime[p]:
            is_prime[p * p :: p] = False
    return np.flatnonzero(is_prime).astype(np.int64)


def sieve_block(lo: int, hi: int, base: np.ndarray) -> np.ndarray:
    """Primes in [lo, hi), given every prime <= sqrt(hi - 1) in ``base``."""
    lo = max(lo, 2)
    if hi <= lo:
        return np.zeros(0, dtype=np.int64)
    mark = np.ones(hi - lo, dtype=bool)
    for p in base:
        p = int(p)
        pp = p * p
        if pp >= hi:
            break
        start = max(pp, -(-lo // p) * p)
        mark[start - lo :: p] = False
    return np.flatnonzero(mark).astype(np.int64) + lo


@dataclass(frozen=True)
class ResidueFilter:
    """The congruence condition n = a (mod c)."""

    c: int
    a: int

    def __post_init__(self):
        if self.c < 1:
            raise ValueError(f"modulus must be positive, got {self.c}")
        if not 0 <= self.a < self.c:
            raise ValueError(f"residue {self.a} not in [0, {self.c})")

    @property
    def primitive(self) -> bool:
        return math.gcd(self.a, self.c) == 1

    def accepts(self, n: int) -> bool:
        return n % self.c == self.a

    def mask(self, values: np.ndarray) -> np.ndarray:
        return values % self.c == self.a


@dataclass(frozen=True)
class PrimeRange:
    """The primes p <= limit, enumerated in increasing order by blocks."""

    limit: int
    segment_size: int = DEFAULT_SEGMENT

    def __post_init__(self):
        if self.segment_size < 1:
            raise ValueError("segment_size must be positive")

    def base_primes(self) -> np.ndarray:
        return simple_sieve(math.isqrt(max(self.limit, 0)))

    def bounds(self) -> list[tuple[int, int]]:
        """Half-open block boundaries covering [0, limit]."""
        top = self.limit + 1
        return [(lo, min(lo + self.segment_size, top))
                for lo in range(0, max(top, 0), self.segment_size)]

    def segments(self, threads: int = 1) -> Iterator[np.ndarray]:
        """Yield prime blocks in increasing order.

        With ``threads > 1`` blocks are sieved concurrently but still yielded
        in order, so downstream folds see the same sequence.
        """
        if self.limit < 2:
            return
        base = self.base_primes()
        yield from ordered_map(lambda b: sieve_block(b[0], b[1], base),
                               self.bounds(), threads)

    def __iter__(self) -> Iterator[int]:
        for block in self.segments():
            yield from block.tolist()

    def count(self) -> int:
        return sum(len(b) for b in self.segments())


def primes_up_to(x: int, segment_size: int = DEFAULT_SEGMENT, threads: int = 1) -> np.ndarray:
    """Strictly increasing array of every prime <= x."""
    if x < 2:
        return np.zeros(0, dtype=np.int64)
    blocks = list(PrimeRange(x, segment_size).segments(threads))
    return np.concatenate(blocks) if blocks else np.zeros(0, dtype=np.int64)


def primes_in_class(x: int, filt: ResidueFilter, segment_size: int = DEFAULT_SEGMENT,
                    threads: int = 1) -> np.ndarray:
    """Primes p <= x with p = filt.a (mod filt.c)."""
    ps = primes_up_to(x, segment_size, threads)
    return ps[filt.mask(ps)]


def for_each_prime_block(x: int, callback: Callable[[np.ndarray], None],
                         segment_size: int = DEFAULT_SEGMENT) -> None:
    """Stream primes <= x to ``callback`` one sorted block at a time."""
    for block in PrimeRange(x, segment_size).segments():
        if len(block):
            callback(block)
