import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from densitylab.primes import (PrimeRange, ResidueFilter, for_each_prime_block, primes_in_class,
                               primes_up_to, simple_sieve)


def trial_division(n: int) -> bool:
    if n < 2:
        return False
    return all(n % d for d in range(2, math.isqrt(n) + 1))


def test_small_primes_match_trial_division():
    expected = [n for n in range(2000) if trial_division(n)]
    assert primes_up_to(1999).tolist() == expected
    assert simple_sieve(1999).tolist() == expected


def test_prime_counting_at_one_million():
    assert len(primes_up_to(10**6, segment_size=4096)) == 78498


@pytest.mark.parametrize("x", [-5, 0, 1])
def test_empty_below_two(x):
    assert len(primes_up_to(x)) == 0


@settings(max_examples=40, deadline=None)
@given(x=st.integers(2, 20000), seg=st.integers(1, 3000))
def test_segment_size_does_not_change_result(x, seg):
    assert np.array_equal(primes_up_to(x, segment_size=seg), simple_sieve(x))


def test_blocks_partition_the_range():
    pr = PrimeRange(10**5, segment_size=777)
    b = pr.bounds()
    assert b[0][0] == 0 and b[-1][1] == 10**5 + 1
    assert all(hi == lo2 for (_, hi), (lo2, _) in zip(b, b[1:]))
    blocks = list(pr.segments())
    assert all(len(x) == 0 or (x[0] >= lo and x[-1] < hi) for x, (lo, hi) in zip(blocks, b))
    assert pr.count() == 9592


def test_threads_keep_order():
    a = primes_up_to(300000, segment_size=10000, threads=1)
    b = primes_up_to(300000, segment_size=10000, threads=4)
    assert np.array_equal(a, b)
    assert np.all(np.diff(a) > 0)


def test_residue_class():
    assert primes_in_class(50, ResidueFilter(6, 5)).tolist() == [5, 11, 17, 23, 29, 41, 47]
    assert primes_in_class(50, ResidueFilter(3, 2)).tolist() == [2, 5, 11, 17, 23, 29, 41, 47]
    assert not ResidueFilter(6, 3).primitive


@pytest.mark.parametrize("c,a", [(0, 0), (5, 5), (5, -1)])
def test_bad_filter(c, a):
    with pytest.raises(ValueError):
        ResidueFilter(c, a)


def test_streaming_callback():
    seen = []
    for_each_prime_block(1000, seen.append, segment_size=100)
    assert np.concatenate(seen).tolist() == simple_sieve(1000).tolist()
