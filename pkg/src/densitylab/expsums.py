"""Exponential sums E_n = sum e(2 sqrt(p_1 ... p_n) / c) over primes in residue classes.

Phase accuracy.  For an integer N with s = isqrt(N) and r = N - s^2,
  2 sqrt(N) / c = (2s mod c)/c + 2 (sqrt(N) - s)/c  (mod 1),  sqrt(N) - s = r / (sqrt(N) + s).
The first part is exact integer arithmetic and the second lies in [0, 2/c)
with relative error ~1e-16, so the reduced phase is accurate to ~1e-16
absolutely however large N is.  Evaluating 2 sqrt(N)/c in double and then
reducing mod 1 would instead lose log2(sqrt N) bits.

Summation.  Primes are consumed in fixed sieve blocks; each block is summed
with ``math.fsum`` (correctly rounded) and the block partials are combined
with ``math.fsum`` again.  Blocks do not depend on the thread count, so
results are bit-identical for any number of workers.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .parallel import ordered_map
from .primes import DEFAULT_SEGMENT, PrimeRange, ResidueFilter, primes_in_class, sieve_block
from .quadrature import integrate

TWO_PI = 2.0 * math.pi
_INT64_SAFE = 1 << 62


@dataclass(frozen=True)
class ExpSumResult:
    c: int
    residues: tuple[int, ...]
    cutoffs: tuple[int, ...]
    value: complex
    term_count: int

    @property
    def n(self) -> int:
        return len(self.residues)

    @property
    def abs(self) -> float:
        return abs(self.value)

    def csv_row(self) -> list[str]:
        return [str(self.n), str(self.c), ";".join(map(str, self.residues)),
                ";".join(map(str, self.cutoffs)), format(self.value.real, ".17g"),
                format(self.value.imag, ".17g"), format(abs(self.value), ".17g"), str(self.term_count)]


CSV_HEADER = ["n", "c", "residues", "cutoffs", "re", "im", "abs", "term_count"]


# ---------------------------------------------------------------------------
# phases


def _isqrt_int64(n: np.ndarray) -> np.ndarray:
    s = np.floor(np.sqrt(n.astype(np.float64))).astype(np.int64)
    # float sqrt can be off by one for n near 2^62
    s -= (s * s > n).astype(np.int64)
    s += ((s + 1) * (s + 1) <= n).astype(np.int64)
    return s


def reduced_phase(n, c: int) -> np.ndarray:
    """frac(2 sqrt(n) / c) for nonnegative integers n (array or scalar)."""
    arr = np.asarray(n)
    if arr.dtype == object or (arr.size and int(np.max(arr)) >= _INT64_SAFE):
        vals = [int(v) for v in np.ravel(arr)]
        s = [math.isqrt(v) for v in vals]
        two_s_mod = np.array([(2 * si) % c for si in s], dtype=float)
        r = np.array([float(v - si * si) for v, si in zip(vals, s)])
        root = np.sqrt(np.array([float(v) for v in vals]))
        s_f = np.array([float(si) for si in s])
        frac = np.divide(r, root + s_f, out=np.zeros_like(r), where=s_f > 0)
        return np.reshape(np.mod((two_s_mod + 2.0 * frac) / c, 1.0), arr.shape)
    arr = arr.astype(np.int64)
    s = _isqrt_int64(arr)
    r = (arr - s * s).astype(np.float64)
    frac = np.divide(r, np.sqrt(arr.astype(np.float64)) + s, out=np.zeros_like(r), where=s > 0)  # n = 0 has r = 0
    return np.mod((((2 * s) % c).astype(np.float64) + 2.0 * frac) / c, 1.0)


def phase_terms(n, c: int) -> tuple[np.ndarray, np.ndarray]:
    """cos and sin of 2 pi * 2 sqrt(n) / c."""
    theta = TWO_PI * reduced_phase(n, c)
    return np.cos(theta), np.sin(theta)


def _fsum_pair(cs: np.ndarray, sn: np.ndarray) -> tuple[float, float]:
    return math.fsum(cs.tolist()), math.fsum(sn.tolist())


def _combine(partials: Iterable[tuple[float, float]]) -> complex:
    re, im = [], []
    for a, b in partials:
        re.append(a)
        im.append(b)
    return complex(math.fsum(re), math.fsum(im))


# ---------------------------------------------------------------------------
# sums


def _check_class(c: int, a: int) -> ResidueFilter:
    if c < 1:
        raise ValueError("c must be positive")
    return ResidueFilter(c, a)


def exp_sum_1(x: int, c: int, a: int, *, threads: int | None = None,
              segment_size: int = DEFAULT_SEGMENT) -> ExpSumResult:
    """sum over p <= x, p = a (mod c) of e(2 sqrt(p) / c)."""
    filt = _check_class(c, a)

    def block(ps: np.ndarray):
        sel = ps[filt.mask(ps)]
        return _fsum_pair(*phase_terms(sel, c)), len(sel)

    if x < 2:
        return ExpSumResult(c, (a,), (x,), 0j, 0)
    pr = PrimeRange(x, segment_size)
    base = pr.base_primes()
    parts = list(ordered_map(lambda b: block(sieve_block(b[0], b[1], base)), pr.bounds(), threads))
    value = _combine(p for p, _ in parts)
    return ExpSumResult(c, (a,), (x,), value, sum(n for _, n in parts))


def _inner_sum(outer: int, inner: np.ndarray, c: int, limit: int | None) -> tuple[tuple[float, float], int]:
    if limit is not None:
        inner = inner[inner <= limit // outer]
    if len(inner) == 0:
        return (0.0, 0.0), 0
    if outer * int(inner[-1]) < _INT64_SAFE:
        prod = inner * np.int64(outer)
    else:
        prod = np.array([outer * int(q) for q in inner], dtype=object)
    return _fsum_pair(*phase_terms(prod, c)), len(inner)


def exp_sum_2(x1: int, x2: int, c: int, a1: int, a2: int, *, product_cutoff: int | None = None,
              threads: int | None = None) -> ExpSumResult:
    """Double sum of e(2 sqrt(p1 p2) / c) over p1 <= x1, p2 <= x2 in the given classes.

    With ``product_cutoff`` X only pairs with p1 p2 <= X are kept.
    """
    f1, f2 = _check_class(c, a1), _check_class(c, a2)
    outer = primes_in_class(x1, f1) if x1 >= 2 else np.zeros(0, dtype=np.int64)
    inner = primes_in_class(x2, f2) if x2 >= 2 else np.zeros(0, dtype=np.int64)
    parts = list(ordered_map(lambda p: _inner_sum(int(p), inner, c, product_cutoff), outer.tolist(), threads))
    value = _combine(p for p, _ in parts)
    return ExpSumResult(c, (a1, a2), (x1, x2), value, sum(n for _, n in parts))


def exp_sum_n(cutoffs: Sequence[int], c: int, residues: Sequence[int], *,
              threads: int | None = None) -> ExpSumResult:
    """n-fold sum of e(2 sqrt(p_1 ... p_n) / c), 1 <= n <= 4."""
    n = len(cutoffs)
    if n == 0:
        raise ValueError("need at least one cutoff")
    if n != len(residues):
        raise ValueError("cutoffs and residues differ in length")
    if n > 4:
        raise ValueError("n is limited to 4")
    if n == 1:
        return exp_sum_1(cutoffs[0], c, residues[0], threads=threads)
    if n == 2:
        return exp_sum_2(cutoffs[0], cutoffs[1], c, residues[0], residues[1], threads=threads)
    lists = [primes_in_class(x, _check_class(c, a)) if x >= 2 else np.zeros(0, dtype=np.int64)
             for x, a in zip(cutoffs, residues)]
    inner = lists[-1]
    heads = [math.prod(t) for t in itertools.product(*[lst.tolist() for lst in lists[:-1]])]
    parts = list(ordered_map(lambda h: _inner_sum(h, inner, c, None), heads, threads))
    value = _combine(p for p, _ in parts)
    return ExpSumResult(c, tuple(residues), tuple(cutoffs), value, sum(k for _, k in parts))


# ---------------------------------------------------------------------------
# probes and exponent fits


def primitive_residues(c: int) -> list[int]:
    return [a for a in range(c) if math.gcd(a, c) == 1]


def probe_one(c_grid: Sequence[int], x_grid: Sequence[int], residues: str | Sequence[int] = "worst",
              *, segment_size: int = DEFAULT_SEGMENT, threads: int | None = None) -> list[ExpSumResult]:
    """E_1 for every c in c_grid, x in x_grid and each requested residue.

    ``residues="worst"`` enumerates every primitive class.  Blocks and
    summation match :func:`exp_sum_1`, so each row equals a direct call bit for bit.
    """
    xs = sorted(set(int(x) for x in x_grid))
    xmax = xs[-1]
    pr = PrimeRange(xmax, segment_size)
    blocks = list(pr.segments(threads)) if xmax >= 2 else []
    bounds = pr.bounds()
    rows: list[ExpSumResult] = []

    def per_c(c: int) -> list[ExpSumResult]:
        classes = primitive_residues(c) if residues == "worst" else [int(a) for a in residues]
        acc = {(a, x): ([], [], 0) for a in classes for x in xs}
        for (lo, _), ps in zip(bounds, blocks):
            if len(ps) == 0:
                cs_all = sn_all = ps_f = ps
            else:
                cs_all, sn_all = phase_terms(ps, c)
                ps_f = ps
            mods = ps_f % c if len(ps_f) else ps_f
            for a in classes:
                m = mods == a
                cls_p, cls_c, cls_s = ps_f[m], cs_all[m], sn_all[m]
                for x in xs:
                    if lo > x:
                        continue
                    k = int(np.searchsorted(cls_p, x, side="right"))
                    re, im, cnt = acc[(a, x)]
                    re.append(math.fsum(cls_c[:k].tolist()))
                    im.append(math.fsum(cls_s[:k].tolist()))
                    acc[(a, x)] = (re, im, cnt + k)
        out = []
        for a in classes:
            for x in xs:
                re, im, cnt = acc[(a, x)]
                out.append(ExpSumResult(c, (a,), (x,), complex(math.fsum(re), math.fsum(im)), cnt))
        return out

    for res in ordered_map(per_c, list(c_grid), threads):
        rows.extend(res)
    return rows


def probe_n(n: int, c_grid: Sequence[int], x_grid: Sequence[int], residues: str | Sequence[int] = "worst",
            *, threads: int | None = None, product_cutoff: int | None = None) -> list[ExpSumResult]:
    """E_n on a grid with equal cutoffs x in every coordinate."""
    if product_cutoff is not None and n != 2:
        raise ValueError("product_cutoff applies to n = 2 only")
    if n == 1:
        return probe_one(c_grid, x_grid, residues, threads=threads)
    rows = []
    for c in c_grid:
        if residues == "worst":
            if c > 100:
                raise ValueError("worst-case residue enumeration is limited to c <= 100")
            tuples = list(itertools.product(primitive_residues(c), repeat=n))
        else:
            tuples = [tuple(int(a) for a in residues)]
        for x in sorted(set(int(v) for v in x_grid)):
            for t in tuples:
                if product_cutoff is not None:
                    rows.append(exp_sum_2(x, x, c, t[0], t[1], product_cutoff=product_cutoff, threads=threads))
                else:
                    rows.append(exp_sum_n([x] * n, c, list(t), threads=threads))
    return rows


@dataclass(frozen=True)
class ExponentFit:
    alpha_hat: float
    A_hat: float
    residual: float
    sample_grid: tuple[tuple[int, int], ...]
    residual_A: float = 0.0
    dropped: int = 0

    def as_dict(self) -> dict:
        return {"alpha_hat": self.alpha_hat, "A_hat": self.A_hat, "residual": self.residual,
                "residual_A": self.residual_A, "dropped_points": self.dropped,
                "sample_grid": [list(p) for p in self.sample_grid]}


def _within_slope(group: np.ndarray, x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Least-squares slope of y on x with a separate intercept per group; returns (slope, RSS)."""
    xd = x.copy()
    yd = y.copy()
    for g in np.unique(group):
        m = group == g
        xd[m] -= x[m].mean()
        yd[m] -= y[m].mean()
    sxx = float(np.dot(xd, xd))
    if sxx == 0.0:
        raise ValueError("no variation along the fitted axis")
    slope = float(np.dot(xd, yd)) / sxx
    resid = yd - slope * xd
    return slope, float(np.dot(resid, resid))


def fit_power_law(samples: dict[tuple[int, int], float]) -> ExponentFit:
    """Marginal log-log fits of |E|(c, x): alpha from x at fixed c, A from c at fixed x."""
    pts = sorted(samples.items())
    good = [(c, x, v) for (c, x), v in pts if v > 0]
    dropped = len(pts) - len(good)
    cs = np.array([g[0] for g in good], dtype=float)
    xs = np.array([g[1] for g in good], dtype=float)
    if len(set(xs.tolist())) < 3:
        raise ValueError("alpha needs at least 3 distinct x values")
    if len(set(cs.tolist())) < 3:
        raise ValueError("A needs at least 3 distinct c values")
    y = np.log([g[2] for g in good])
    alpha, rss_a = _within_slope(cs, np.log(xs), y)
    A, rss_c = _within_slope(xs, np.log(cs), y)
    return ExponentFit(alpha, A, rss_a, tuple((int(c), int(x)) for c, x, _ in good), rss_c, dropped)


def fit_exponents(c_grid: Sequence[int], x_grid: Sequence[int], n: int = 1,
                  residue_policy: str | Sequence[int] = "worst", *, threads: int | None = None,
                  rows: list[ExpSumResult] | None = None) -> tuple[ExponentFit, list[ExpSumResult]]:
    """Probe E_n on the grid and fit (alpha, A); worst-case policy takes max |E| over residues."""
    if not c_grid or not x_grid:
        raise ValueError("grids must be nonempty")
    if residue_policy == "worst" and max(c_grid) > 100:
        raise ValueError("worst-case residue enumeration is limited to c <= 100")
    if len(set(x_grid)) < 3 or len(set(c_grid)) < 3:
        raise ValueError("each fitted axis needs at least 3 distinct values")
    rows = rows if rows is not None else probe_n(n, c_grid, x_grid, residue_policy, threads=threads)
    best: dict[tuple[int, int], float] = {}
    for r in rows:
        key = (r.c, r.cutoffs[0])
        best[key] = max(best.get(key, 0.0), r.abs)
    return fit_power_law(best), rows


def geometric_checkpoints(x_min: int, x_max: int, factor: float = 2.0) -> list[int]:
    out = []
    x = float(x_min)
    while x <= x_max * (1 + 1e-12):
        out.append(int(round(x)))
        x *= factor
    return out


# ---------------------------------------------------------------------------
# Abel summation


@dataclass(frozen=True)
class SmoothFunction:
    """A weight psi on [2, P] with its derivative and any kinks."""

    f: Callable[[np.ndarray], np.ndarray]
    df: Callable[[np.ndarray], np.ndarray]
    breakpoints: tuple[float, ...] = ()
    name: str = "psi"


def zero_psi() -> SmoothFunction:
    z = lambda x: np.zeros(np.shape(x))  # noqa: E731
    return SmoothFunction(z, z, (), "zero")


def linear_psi(P: float, power: int = 1) -> SmoothFunction:
    """psi(x) = ((P - x)/P)^power."""
    return SmoothFunction(lambda x: ((P - np.asarray(x, dtype=float)) / P) ** power,
                          lambda x: -power * ((P - np.asarray(x, dtype=float)) / P) ** (power - 1) / P,
                          (), f"linear{power}")


def hbar_psi(K: float, c: int, tf, hbar=None) -> SmoothFunction:
    """psi(x) = hbar(c K^2/(8 pi sqrt x)) phi_hat(log x/(2 log K)) log x/(x^{3/4} log K)."""
    from .bessel import HslashEvaluator
    hb = hbar or HslashEvaluator()
    lk = math.log(K)
    k8 = c * K * K / (8.0 * math.pi)

    def parts(x):
        x = np.asarray(x, dtype=float)
        g = k8 / np.sqrt(x)
        u = np.log(x) / (2.0 * lk)
        lx = np.log(x)
        L = lx / (x**0.75 * lk)
        return x, g, u, lx, L

    def f(x):
        x, g, u, lx, L = parts(x)
        return hb(g) * tf.phi_hat(u) * L

    def df(x):
        x, g, u, lx, L = parts(x)
        dg = -g / (2.0 * x)
        dL = (1.0 - 0.75 * lx) / (x**1.75 * lk)
        dphi = tf.phi_hat_prime(u) / (2.0 * x * lk)
        h = hb(g)
        return hb.derivative(g) * dg * tf.phi_hat(u) * L + h * dphi * L + h * tf.phi_hat(u) * dL

    kinks = tuple(K ** (2.0 * b) for b in tf.breakpoints() if b >= 0)
    return SmoothFunction(f, df, kinks, "hbar_psi")


def abel_identity_check(P: int, c: int, a: int, psi: SmoothFunction, *, tol: float = 1e-10) -> tuple[complex, complex]:
    """(lhs, rhs) of sum_{p <= P, p = a (c)} e(2 sqrt p / c) psi(p) = -int_2^P E_1(x) psi'(x) dx.

    E_1 is the step function of partial sums; the integral is adaptive
    Gauss-Kronrod with a breakpoint at every jump.  Requires psi(P) = 0.
    Raises :class:`QuadratureError` if the integral does not converge.
    """
    filt = _check_class(c, a)
    end = complex(np.asarray(psi.f(np.array([float(P)])))[0])
    if abs(end) > 1e-14:
        raise ValueError(f"psi must vanish at P = {P}, got {end!r}")
    ps = primes_in_class(P, filt)
    cs, sn = phase_terms(ps, c)
    terms = (cs + 1j * sn) * psi.f(ps.astype(float)) if len(ps) else np.zeros(0, dtype=complex)
    lhs = complex(math.fsum(terms.real.tolist()), math.fsum(terms.imag.tolist()))
    cum = np.concatenate([[0j], np.cumsum(cs + 1j * sn)])

    def integrand(x):
        idx = np.searchsorted(ps, x, side="right")
        return cum[idx] * psi.df(x)

    bps = [float(p) for p in ps] + [b for b in psi.breakpoints if 2 < b < P]
    res = integrate(integrand, 2.0, float(P), tol=tol, breakpoints=bps)
    return lhs, -complex(res.value)


__all__ = [
    "ExpSumResult", "ExponentFit", "SmoothFunction", "CSV_HEADER", "exp_sum_1", "exp_sum_2", "exp_sum_n",
    "probe_one", "probe_n", "fit_exponents", "fit_power_law", "geometric_checkpoints", "reduced_phase",
    "phase_terms", "abel_identity_check", "zero_psi", "linear_psi", "hbar_psi", "primitive_residues",
]
