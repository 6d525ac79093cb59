import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from densitylab import qseries as qs
from densitylab.eigenforms import (SUPPORTED_WEIGHTS, UnsupportedWeight, cusp_form_series, eigenform, load_cache,
                                   save_cache, sym_square_L1, write_csv)

TAU = [1, -24, 252, -1472, 4830, -6048, -16744, 84480, -113643, -115920]


def test_ramanujan_tau():
    f = eigenform(12, 10)
    assert list(f.a[1:]) == TAU
    assert f.coefficient(2) == -24


def test_delta_from_eta_cubed():
    n = 400
    eta3 = qs.eta_cubed(n)
    alt = [0] + qs.pow_trunc(eta3, 8, n - 1)
    assert qs.delta_series(n) == alt


def test_weight_16_two_ways():
    # E4 * Delta against E4 (E4^3 - E6^2) / 1728, which never forms Delta
    n = 300
    e4, e6 = qs.eisenstein(4, n), qs.eisenstein(6, n)
    num = [a - b for a, b in zip(qs.mul_trunc(e4, qs.pow_trunc(e4, 3, n), n),
                                 qs.mul_trunc(e4, qs.mul_trunc(e6, e6, n), n))]
    assert all(x % 1728 == 0 for x in num)
    assert cusp_form_series(16, n - 1) == [x // 1728 for x in num]


@settings(max_examples=25, deadline=None)
@given(a=st.lists(st.integers(-10**6, 10**6), min_size=1, max_size=40),
       b=st.lists(st.integers(-10**6, 10**6), min_size=1, max_size=40), n=st.integers(1, 60))
def test_kronecker_product_matches_schoolbook(a, b, n):
    assert qs.mul_trunc(a, b, n) == qs.mul_naive(a, b, n)


def test_euler_product_small():
    assert qs.euler_product(13) == [1, -1, -1, 0, 0, 1, 0, 1, 0, 0, 0, 0, -1]


@pytest.mark.parametrize("k", sorted(SUPPORTED_WEIGHTS))
def test_hecke_relations(k):
    f = eigenform(k, 600)
    a = f.a
    for m in range(2, 25):
        for n in range(2, 25):
            if math.gcd(m, n) == 1:
                assert a[m * n] == a[m] * a[n]
    for p in [2, 3, 5, 7, 11, 13, 17, 19, 23]:
        assert a[p * p] == a[p] ** 2 - p ** (k - 1)
        assert abs(f.lam[p]) <= 2.0
    assert f.lam[1] == 1.0


@pytest.mark.parametrize("k", [2, 4, 10, 14, 24])
def test_unsupported_weight(k):
    with pytest.raises(UnsupportedWeight):
        eigenform(k, 10)


def test_bad_length():
    with pytest.raises(ValueError):
        eigenform(12, 0)
    with pytest.raises(IndexError):
        eigenform(12, 5).coefficient(6)
    with pytest.raises(ValueError):
        eigenform(12, 5).require(9)


def test_cache_round_trip(tmp_path):
    f = eigenform(26, 500)
    path = tmp_path / "f.bin"
    save_cache(f, path)
    g = load_cache(path)
    assert g.a == f.a and g.k == 26
    assert np.array_equal(g.lam, f.lam)


def test_cache_rejects_truncation_and_magic(tmp_path):
    f = eigenform(12, 50)
    path = tmp_path / "f.bin"
    save_cache(f, path)
    raw = path.read_bytes()
    path.write_bytes(raw[:-3])
    with pytest.raises(ValueError, match="truncated"):
        load_cache(path)
    path.write_bytes(b"XXXX" + raw[4:])
    with pytest.raises(ValueError, match="not a coefficient cache"):
        load_cache(path)


def test_csv(tmp_path):
    path = tmp_path / "f.csv"
    write_csv(eigenform(12, 4), path)
    lines = path.read_text().splitlines()
    assert lines[0] == "n,a_n,lambda_n"
    assert lines[2].startswith("2,-24,")


def test_sym_square_from_trace():
    assert sym_square_L1(12, lambda k: 2 * math.pi**2 / 11) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        sym_square_L1(12, lambda k: -1.0)
