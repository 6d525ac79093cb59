import itertools
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from densitylab.expsums import (abel_identity_check, exp_sum_1, exp_sum_2, exp_sum_n, fit_exponents,
                                fit_power_law, geometric_checkpoints, hbar_psi, linear_psi, probe_n, probe_one,
                                reduced_phase, zero_psi)
from densitylab.testfunctions import make_fejer

mpmath.mp.dps = 40


def _primes(x):
    return [p for p in range(2, x + 1) if all(p % d for d in range(2, math.isqrt(p) + 1))]


def mp_sum(values, c):
    total = mpmath.mpc(0)
    for v in values:
        total += mpmath.expjpi(4 * mpmath.sqrt(v) / c)
    return complex(total)


def test_single_term():
    r = exp_sum_1(10, 4, 1)
    assert r.term_count == 1
    assert abs(r.value - mp_sum([5], 4)) < 1e-15


def test_empty_range():
    r = exp_sum_1(1, 3, 1)
    assert r.value == 0 and r.term_count == 0


def test_small_sum_against_mpmath():
    r = exp_sum_1(100, 5, 2)
    ps = [p for p in _primes(100) if p % 5 == 2]
    assert r.term_count == len(ps) == 7
    assert abs(r.value - mp_sum(ps, 5)) < 1e-13


def test_double_sum_values():
    r = exp_sum_2(3, 3, 2, 1, 1)
    assert r.term_count == 1
    assert abs(r.value - 1.0) < 1e-15
    r = exp_sum_2(50, 50, 7, 1, 2)
    a = [p for p in _primes(50) if p % 7 == 1]
    b = [p for p in _primes(50) if p % 7 == 2]
    assert abs(r.value - mp_sum([p * q for p in a for q in b], 7)) < 1e-12


def test_product_cutoff():
    r = exp_sum_2(100, 100, 3, 1, 2, product_cutoff=500)
    a = [p for p in _primes(100) if p % 3 == 1]
    b = [p for p in _primes(100) if p % 3 == 2]
    kept = [p * q for p in a for q in b if p * q <= 500]
    assert r.term_count == len(kept)
    assert abs(r.value - mp_sum(kept, 3)) < 1e-12


def test_triple_sum_modulus_one():
    r = exp_sum_n([3, 3, 3], 1, [0, 0, 0])
    assert r.term_count == 8
    prods = [a * b * c for a, b, c in itertools.product([2, 3], repeat=3)]
    assert abs(r.value - mp_sum(prods, 1)) < 1e-13


def test_n_level_validation():
    with pytest.raises(ValueError):
        exp_sum_n([], 3, [])
    with pytest.raises(ValueError):
        exp_sum_n([5, 5], 3, [1])
    with pytest.raises(ValueError):
        exp_sum_n([5] * 5, 3, [1] * 5)
    with pytest.raises(ValueError):
        exp_sum_1(10, 0, 0)
    with pytest.raises(ValueError):
        exp_sum_1(10, 4, 4)


@settings(max_examples=60, deadline=None)
@given(n=st.integers(0, 2**62 + 10**6), c=st.integers(1, 10**4))
def test_reduced_phase_against_mpmath(n, c):
    ref = float(mpmath.frac(2 * mpmath.sqrt(n) / c))
    got = float(reduced_phase(np.array([n], dtype=object if n >= 2**62 else np.int64), c)[0])
    d = abs(got - ref)
    assert min(d, 1 - d) < 1e-12


def test_lower_dimension_delegation():
    assert exp_sum_n([200], 5, [3]).value == exp_sum_1(200, 5, 3).value
    assert exp_sum_n([40, 60], 5, [1, 3]).value == exp_sum_2(40, 60, 5, 1, 3).value


def test_probe_matches_direct_bitwise():
    rows = probe_one([3, 7], [50, 1000, 5000], segment_size=700)
    for r in rows:
        direct = exp_sum_1(r.cutoffs[0], r.c, r.residues[0], segment_size=700)
        assert r.value == direct.value and r.term_count == direct.term_count


def test_probe_n_enumerates_residue_tuples():
    rows = probe_n(2, [3], [20])
    assert sorted(r.residues for r in rows) == [(1, 1), (1, 2), (2, 1), (2, 2)]
    with pytest.raises(ValueError):
        probe_n(2, [101], [20])
    with pytest.raises(ValueError):
        probe_n(3, [3], [20], product_cutoff=10)


def test_fit_recovers_synthetic_exponents():
    samples = {(c, x): 0.3 * x**0.6 * c**-0.25 for c in (3, 5, 8, 13) for x in (10**3, 10**4, 10**5)}
    fit = fit_power_law(samples)
    assert fit.alpha_hat == pytest.approx(0.6, abs=1e-12)
    assert fit.A_hat == pytest.approx(-0.25, abs=1e-12)
    assert fit.residual < 1e-20


def test_fit_needs_three_values_per_axis():
    with pytest.raises(ValueError):
        fit_power_law({(c, x): 1.0 + x for c in (3, 4, 5) for x in (10, 20)})
    with pytest.raises(ValueError):
        fit_exponents([3, 4], [10, 100, 1000])


def test_fit_exponents_on_real_sums():
    fit, rows = fit_exponents([3, 4, 5], [10**3, 10**4, 10**5])
    assert 0.2 < fit.alpha_hat < 1.0
    assert len(rows) == 3 * (2 + 2 + 4)


def test_geometric_checkpoints():
    assert geometric_checkpoints(1000, 16000) == [1000, 2000, 4000, 8000, 16000]


def test_abel_linear_weight():
    P = 100
    lhs, rhs = abel_identity_check(P, 4, 1, linear_psi(P))
    ref = sum(complex(mpmath.expjpi(4 * mpmath.sqrt(p) / 4)) * (P - p) / P for p in _primes(P) if p % 4 == 1)
    assert abs(lhs - ref) < 1e-12
    assert abs(lhs - rhs) < 1e-8


def test_abel_zero_weight_and_endpoint():
    lhs, rhs = abel_identity_check(50, 3, 1, zero_psi())
    assert lhs == 0 and rhs == 0
    with pytest.raises(ValueError, match="vanish"):
        abel_identity_check(50, 3, 1, linear_psi(60))


def test_abel_hbar_weight():
    K, v = 10.0, 1.0
    tf = make_fejer(v)
    P = math.ceil(K ** (2 * v))
    lhs, rhs = abel_identity_check(P, 1, 0, hbar_psi(K, 1, tf))
    assert abs(lhs - rhs) < 1e-8
