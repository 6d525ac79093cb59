"""Acceptance criteria 1-13, one or more checks each; conftest prints a PASS/FAIL line per criterion."""

import csv
import io
import math
import time
from fractions import Fraction

import mpmath
import numpy as np
import pytest

from densitylab import cli
from densitylab.bessel import DEFAULT_WEIGHT
from densitylab.density import ZeroSet, density_from_zeros, diagonal_sum_check, family_average_one_level, inclusion_exclusion
from densitylab.eigenforms import SUPPORTED_WEIGHTS, eigenform
from densitylab.expsums import (abel_identity_check, fit_power_law, hbar_psi, linear_psi, phase_terms,
                                primitive_residues)
from densitylab.kloosterman import divisor_count, kloosterman, kloosterman_table, weil_bound
from densitylab.petersson import TraceRequest, approx_weighted_trace, spectral_trace, trace_delta, weighted_trace
from densitylab.primes import simple_sieve, sieve_block
from densitylab.qseries import delta_series, eisenstein, mul_trunc
from densitylab.rmt import KernelDensity, fourier_pair_1d, orthogonal_two_level_main_term, pair
from densitylab.support import HypothesisParams, support_n_level, support_one_level, support_two_level
from densitylab.testfunctions import custom_pair, make_fejer, square


def run_cli(args, tmp_path, name="out.txt"):
    out = tmp_path / name
    code = cli.main(list(args) + ["--out", str(out)])
    return code, out


def read_csv(path):
    lines = [ln for ln in path.read_text().splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(lines))))


# 1 ---------------------------------------------------------------------------


@pytest.mark.criterion(1, "rank-bound table")
def test_rank_bound_table(tmp_path):
    t = time.perf_counter()
    code, out = run_cli(["rank-bounds", "--v1", "2.5", "--v2", "1.2", "--r", "1..5"], tmp_path)
    elapsed = time.perf_counter() - t
    assert code == 0
    got = [float(r["bound"]) for r in read_csv(out)]
    expected = [0.9000, 0.4500, 0.1200, 0.0469, 0.0248]
    assert len(got) == 5
    assert max(abs(a - b) for a, b in zip(got, expected)) <= 5e-5
    assert elapsed < 1.0


# 2 ---------------------------------------------------------------------------


@pytest.mark.criterion(2, "support formulas")
def test_support_formulas():
    t = time.perf_counter()
    half = Fraction(1, 2)
    assert support_one_level(HypothesisParams(half, 0)) == Fraction(5, 2)
    total, per = support_two_level(HypothesisParams(half, 0, 2))
    assert total == Fraction(12, 5) and per == Fraction(6, 5)
    alphas = [Fraction(1, 2) + Fraction(j, 36) for j in range(10)]
    As = [Fraction(j, 2) for j in range(5)]
    grid = [(a, A) for a in alphas for A in As]
    assert len(grid) == 50
    for a, A in grid:
        assert support_n_level(HypothesisParams(a, A, 1))[0] == support_one_level(HypothesisParams(a, A, 1))
        assert support_n_level(HypothesisParams(a, A, 2))[0] == support_two_level(HypothesisParams(a, A, 2))[0]
        # float evaluation agrees with the exact rationals to rounding
        f1 = support_one_level(HypothesisParams(float(a), float(A), 1))
        assert abs(f1 - float(support_one_level(HypothesisParams(a, A, 1)))) < 1e-15
    assert time.perf_counter() - t < 1.0


# 3 ---------------------------------------------------------------------------


def _brute_kloosterman(m, n, c):
    if c == 1:
        return 1.0
    return math.fsum(math.cos(2 * math.pi * ((m * d + n * pow(d, -1, c)) % c) / c)
                     for d in range(1, c) if math.gcd(d, c) == 1)


@pytest.mark.slow
@pytest.mark.criterion(3, "Kloosterman correctness")
def test_kloosterman_oracle_weil_and_canary():
    t = time.perf_counter()
    for c in range(1, 201):
        for m in range(1, 11):
            for n in range(1, 11):
                assert abs(kloosterman(m, n, c) - _brute_kloosterman(m, n, c)) <= 1e-11 * max(1, c)
    worst_ratio, worst_canary = 0.0, 0.0
    mn_gcd = np.gcd.outer(np.arange(1, 51), np.arange(1, 51))
    for c in range(1, 10_001):
        table, imag = kloosterman_table(c, 50, 50, return_imag=True)
        dc = divisor_count(c)
        bound = dc * np.sqrt(np.gcd(mn_gcd, c)) * math.sqrt(c)
        worst_ratio = max(worst_ratio, float(np.max(np.abs(table) / bound)))
        worst_canary = max(worst_canary, imag / (dc * math.sqrt(c)))
    assert worst_ratio <= 1.0 + 1e-9
    assert worst_canary <= 1e-9
    assert time.perf_counter() - t < 120


# 4 ---------------------------------------------------------------------------


@pytest.mark.slow
@pytest.mark.criterion(4, "two-sided Petersson formula")
def test_two_sided_petersson():
    t = time.perf_counter()
    worst = 0.0
    for k in sorted(SUPPORTED_WEIGHTS):
        lam = eigenform(k, 20).lam
        d11 = trace_delta(TraceRequest(1, 1, k, tol=1e-9))
        L1 = 2 * math.pi**2 / ((k - 1) * d11.value)
        for m in range(1, 21):
            for n in range(1, 21):
                geo = trace_delta(TraceRequest(m, n, k, tol=1e-9))
                assert geo.tail_bound <= 1e-9
                worst = max(worst, abs(geo.value - spectral_trace(lam[m], lam[n], k, L1)))
    assert worst <= 1e-6
    assert time.perf_counter() - t < 300


# 5 ---------------------------------------------------------------------------


@pytest.mark.criterion(5, "Delta_k(1,1) tends to 1")
def test_trace_one_one_decay():
    t = time.perf_counter()
    ks = sorted(SUPPORTED_WEIGHTS)
    errs = [abs(trace_delta(TraceRequest(1, 1, k, tol=1e-14)).value - 1.0) for k in ks]
    for a, b in zip(errs, errs[1:]):
        assert b <= a / 2
    assert time.perf_counter() - t < 60


# 6 ---------------------------------------------------------------------------


@pytest.mark.slow
@pytest.mark.criterion(6, "hbar approximation trend")
@pytest.mark.parametrize("m,n", [(101, 1), (1009, 1), (101, 103)])
def test_hbar_approximation_trend(m, n):
    t = time.perf_counter()
    errs = []
    for K in (20, 40, 80):
        exact = weighted_trace(m, n, K, DEFAULT_WEIGHT).value
        approx = approx_weighted_trace(m, n, K, DEFAULT_WEIGHT)
        errs.append(abs(approx - exact) / max(1.0, abs(exact)))
    assert time.perf_counter() - t < 600
    for a, b in zip(errs, errs[1:]):
        assert b <= 1.2 * a, f"relative errors {errs}"


# 7 ---------------------------------------------------------------------------


@pytest.mark.criterion(7, "Abel summation identity")
def test_abel_identity_random_instances():
    t = time.perf_counter()
    rng = np.random.default_rng(20240601)
    kinds = ["linear", "quadratic", "hbar"] * 4
    rng.shuffle(kinds)
    for kind in kinds[:10]:
        c = int(rng.integers(1, 13))
        units = primitive_residues(c) if c > 1 else [0]
        a = int(units[rng.integers(len(units))])
        if kind == "hbar":
            K = float(rng.uniform(5.0, 10.0))
            v = float(rng.uniform(1.0, math.log(10**4) / (2 * math.log(K))))
            P = math.ceil(K ** (2 * v))
            psi = hbar_psi(K, c, make_fejer(v))
        else:
            P = int(rng.integers(100, 10**4 + 1))
            psi = linear_psi(P, 1 if kind == "linear" else 2)
        lhs, rhs = abel_identity_check(P, c, a, psi)
        assert abs(lhs - rhs) <= 1e-6, (kind, c, a, P)
    assert time.perf_counter() - t < 60


# 8 ---------------------------------------------------------------------------


@pytest.mark.slow
@pytest.mark.criterion(8, "Hecke eigenform exactness")
def test_eigenform_exactness():
    t = time.perf_counter()
    N = 10**4
    primes = simple_sieve(N).tolist()
    for k in sorted(SUPPORTED_WEIGHTS):
        a = eigenform(k, N).a
        assert a[1] == 1
        for p in primes:
            assert a[p] * a[p] <= 4 * p ** (k - 1)
            pk = p ** (k - 1)
            q, prev, cur = p, 1, a[p]
            while q * p <= N:
                nxt = a[p] * cur - pk * prev
                assert a[q * p] == nxt
                q, prev, cur = q * p, cur, nxt
        for m in range(2, 101):
            for n in range(m + 1, N // m + 1):
                if math.gcd(m, n) == 1:
                    assert a[m * n] == a[m] * a[n]
    n = N + 1
    e4, e6 = eisenstein(4, n), eisenstein(6, n)
    lhs = mul_trunc(mul_trunc(e4, e4, n), e4, n)
    rhs = mul_trunc(e6, e6, n)
    delta = delta_series(n)
    assert all(x - y == 1728 * d for x, y, d in zip(lhs, rhs, delta))
    assert time.perf_counter() - t < 120


# 9 ---------------------------------------------------------------------------


def _catalog():
    u = np.linspace(0.0, 0.8, 17)
    return [make_fejer(0.5), make_fejer(1.0), make_fejer(1.5), square(make_fejer(0.4)),
            custom_pair(u, (1.0 - (u / 0.8) ** 2) ** 2)]


@pytest.mark.criterion(9, "kernel pairings")
def test_unitary_pairing_is_phi_hat_zero():
    for tf in _catalog():
        assert abs(pair(KernelDensity("U", 1), tf).value - tf.phi_hat0) <= 1e-8


@pytest.mark.criterion(9, "kernel pairings")
@pytest.mark.parametrize("v", [0.25, 0.5, 0.75, 1.0])
def test_orthogonal_one_level_closed_form(v):
    tf = make_fejer(v)
    kd = KernelDensity("O", 1)
    x_space = pair(kd, tf).value
    assert abs(x_space - (1 / v + 0.5)) <= 1e-6
    assert abs(fourier_pair_1d(kd, tf) - (1 / v + 0.5)) <= 1e-6


@pytest.mark.slow
@pytest.mark.criterion(9, "kernel pairings")
@pytest.mark.parametrize("v", [0.2, 0.4])
def test_orthogonal_two_level_main_term(v):
    """The main-term expression with coefficient -3/4 on phi(0)^2, against direct quadrature."""
    tf = make_fejer(v)
    direct = pair(KernelDensity("O", 2), tf).value
    assert abs(orthogonal_two_level_main_term(tf) - direct) <= 1e-6


@pytest.mark.criterion(9, "kernel pairings")
@pytest.mark.parametrize("n", [1, 2])
def test_mixture_identity(n):
    tf = make_fejer(0.4)
    o = pair(KernelDensity("O", n), tf).value
    even = pair(KernelDensity("SO_even", n), tf).value
    odd = pair(KernelDensity("SO_odd", n), tf).value
    assert abs(o - 0.5 * (even + odd)) <= 1e-10


# 10 --------------------------------------------------------------------------


@pytest.mark.criterion(10, "density identity")
def test_inclusion_exclusion_synthetic():
    t = time.perf_counter()
    rng = np.random.default_rng(7)
    tfs = [make_fejer(0.5), make_fejer(1.3)]
    sqs = [square(tf) for tf in tfs]
    for trial in range(100):
        count = int(rng.integers(0, 51))
        ords = np.sort(rng.uniform(0.0, 30.0, count))
        central = int(rng.integers(0, 3))
        z = ZeroSet(tuple([0.0] * central + ords.tolist()), float(rng.uniform(1.0, 20.0)))
        i = trial % 2
        d2 = density_from_zeros(z, 2, tfs[i])
        assert abs(d2 - inclusion_exclusion(z, tfs[i], sqs[i])) <= 1e-10 * max(1.0, abs(d2))
    assert time.perf_counter() - t < 30


# 11 --------------------------------------------------------------------------


@pytest.mark.slow
@pytest.mark.criterion(11, "family-average convergence")
def test_family_average_convergence():
    t = time.perf_counter()
    tf = make_fejer(0.5)
    gaps, diag = [], []
    for K in (20, 40, 80):
        rep = family_average_one_level(tf, K)
        gaps.append(abs(rep.normalized - rep.rmt_target))
        s, integral = diagonal_sum_check(tf, K * K)
        diag.append(abs(s - integral))
    assert gaps[0] > gaps[1] > gaps[2], gaps
    assert diag[0] > diag[1] > diag[2], diag
    assert time.perf_counter() - t < 1800


# 12 --------------------------------------------------------------------------


@pytest.mark.criterion(12, "exponential-sum probe integrity")
def test_phase_against_extended_precision():
    rng = np.random.default_rng(12)
    base = simple_sieve(10**4)
    pool = []
    while len(pool) < 10**4:
        lo = int(rng.integers(2, 10**8 - 2000))
        pool.extend(sieve_block(lo, lo + 2000, base).tolist())
    ps = np.array(pool[: 10**4], dtype=np.int64)
    mpmath.mp.dps = 40
    for c in (1, 3, 7, 19):
        cs, sn = phase_terms(ps, c)
        ours = complex(math.fsum(cs.tolist()), math.fsum(sn.tolist()))
        ref = mpmath.fsum(mpmath.expjpi(4 * mpmath.sqrt(int(p)) / c) for p in ps)
        ref = complex(ref)
        assert abs(abs(ours) - abs(ref)) <= 1e-6 * abs(ref)
        assert abs(ours - ref) <= 1e-9


@pytest.mark.criterion(12, "exponential-sum probe integrity")
def test_synthetic_fits_exact():
    cs, xs = [3, 5, 8, 13], [10**4, 2 * 10**4, 4 * 10**4, 8 * 10**4]
    fit = fit_power_law({(c, x): 2.5 * x**0.5 for c in cs for x in xs})
    assert abs(fit.alpha_hat - 0.5) <= 1e-12
    fit = fit_power_law({(c, x): c**1.0 * 7.0 for c in cs for x in xs})
    assert abs(fit.A_hat - 1.0) <= 1e-12
    fit = fit_power_law({(c, x): c**0.3 * x**0.61 for c in cs for x in xs})
    assert abs(fit.alpha_hat - 0.61) <= 1e-12 and abs(fit.A_hat - 0.3) <= 1e-12


@pytest.mark.slow
@pytest.mark.criterion(12, "exponential-sum probe integrity")
def test_full_h1_probe(tmp_path):
    xs = ",".join(str(10**4 * 2**j) for j in range(11))
    t = time.perf_counter()
    code, out = run_cli(["probe-h1", "--c", "3..20", "--x", xs + ",10000000", "--residues", "worst"], tmp_path)
    assert code == 0
    assert time.perf_counter() - t < 600
    rows = read_csv(out)
    assert rows and all(float(r["abs"]) <= int(r["term_count"]) for r in rows)
    fit_line = [ln for ln in out.read_text().splitlines() if ln.startswith("# fit ")]
    assert fit_line and "alpha_hat" in fit_line[0]


@pytest.mark.criterion(12, "exponential-sum probe integrity")
def test_trivial_bound_small_probes(tmp_path):
    for args in (["probe-h2", "--c", "3..6", "--x", "50,100,200"],
                 ["probe-hn", "--n", "3", "--c", "3..5", "--x", "10,20,30"]):
        code, out = run_cli(args, tmp_path)
        assert code == 0
        rows = read_csv(out)
        assert rows and all(float(r["abs"]) <= int(r["term_count"]) * (1 + 1e-12) for r in rows)


# 13 --------------------------------------------------------------------------

CLI_RUNS = [
    ["probe-h1", "--c", "3..8", "--x", "1e4,3e4,1e5"],
    ["probe-h2", "--c", "3..5", "--x", "30,60,120"],
    ["probe-hn", "--n", "3", "--c", "3,4,5", "--x", "10,20,40"],
    ["kloosterman", "--m", "1..4", "--n", "1..4", "--c", "1..30"],
    ["petersson-verify", "--k", "12,16", "--mn-max", "4"],
    ["trace-table", "--k", "12,20", "--m", "1..3", "--n", "1..3"],
    ["density-1", "--K", "20", "--v", "0.5"],
    ["density-2", "--K", "12", "--v", "0.4"],
    ["kernels", "--n", "1", "--v", "0.6"],
    ["rank-bounds", "--v1", "2.5", "--v2", "1.2", "--r", "1..5"],
    ["abel-check", "--instances", "3", "--seed", "5"],
]


@pytest.mark.slow
@pytest.mark.criterion(13, "determinism across threads")
@pytest.mark.parametrize("args", CLI_RUNS, ids=[a[0] for a in CLI_RUNS])
def test_cli_thread_determinism(args, tmp_path):
    outputs = []
    for threads in (1, 4, 8):
        code, out = run_cli(args + ["--threads", str(threads)], tmp_path, f"t{threads}.out")
        assert code == 0
        outputs.append(out.read_bytes())
    assert outputs[0] == outputs[1] == outputs[2]
