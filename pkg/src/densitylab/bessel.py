"""Integer-order Bessel functions J_n, the weight function h and its transform hbar.

``bessel_j_all`` runs Miller's backward recurrence for a whole vector of
arguments at once and returns every order up to ``nmax``.  The recurrence is
normalised by the identity J_0^2 + 2 sum J_k^2 = 1 (no cancellation), with
the sign taken from the Neumann sum J_0 + 2 sum J_2k = 1.  Small arguments
(x^2 below the order) go through the power series instead.

The transform hbar(v) = int_0^inf h(sqrt u) / sqrt(2 pi u) e^{iuv} du becomes,
after u = t^2, sqrt(2/pi) int h(t) e^{i v t^2} dt, an integral over the
compact support of h.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .quadrature import QuadratureError, gauss_legendre_panels, integrate

SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)
ZETA8_BAR = complex(math.cos(math.pi / 4), -math.sin(math.pi / 4))

_BIG = 1e100
_SMALL = 1e-100


def _start_order(nmax: int, xmax: float) -> int:
    n = max(nmax, int(math.ceil(xmax))) + 30 + int(math.ceil(20.0 * (xmax / 2.0) ** (1.0 / 3.0)))
    return n + (n % 2)


def bessel_j_all(nmax: int, x) -> np.ndarray:
    """J_0..J_nmax at every x; returns shape (len(x), nmax + 1)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(x < 0):
        raise ValueError("bessel_j_all needs x >= 0")
    out = np.zeros((len(x), nmax + 1))
    zero = x == 0.0
    out[zero, 0] = 1.0
    pos = np.flatnonzero(~zero)
    if len(pos) == 0:
        return out
    xs = x[pos]
    N = _start_order(nmax, float(xs.max()))
    m = len(xs)
    stored = np.zeros((m, nmax + 1))
    stored_cnt = np.zeros((m, nmax + 1), dtype=np.int64)
    cnt = np.zeros(m, dtype=np.int64)
    sumsq = np.zeros(m)
    neumann = np.zeros(m)
    b_hi = np.zeros(m)           # b_{k+1}
    b = np.full(m, 1e-30)        # b_k, starting at k = N
    two_over_x = 2.0 / xs
    for k in range(N, -1, -1):
        if k <= nmax:
            stored[:, k] = b
            stored_cnt[:, k] = cnt
        if k == 0:
            sumsq += b * b
            neumann += b
        else:
            sumsq += 2.0 * b * b
            if k % 2 == 0:
                neumann += 2.0 * b
            b_lo = k * two_over_x * b - b_hi
            b_hi, b = b, b_lo
            big = np.abs(b) > _BIG
            if big.any():
                b[big] *= _SMALL
                b_hi[big] *= _SMALL
                sumsq[big] *= _SMALL * _SMALL
                neumann[big] *= _SMALL
                cnt[big] += 1
    scale = np.sqrt(sumsq) * np.sign(neumann)
    lag = cnt[:, None] - stored_cnt
    factor = np.where(lag == 0, 1.0, np.where(lag <= 3, _SMALL ** np.minimum(lag, 3).astype(float), 0.0))
    out[pos] = stored * factor / scale[:, None]
    return out


def _series(order: int, x: np.ndarray) -> np.ndarray:
    """Power series, used only where x^2 <= order + 1 so terms decrease monotonically."""
    pref = np.exp(order * np.log(x / 2.0) - math.lgamma(order + 1))
    q = -(x * x) / 4.0
    total = np.ones_like(x)
    term = np.ones_like(x)
    for j in range(1, 200):
        term = term * q / (j * (order + j))
        total = total + term
        if np.all(np.abs(term) <= 1e-17 * np.abs(total)):
            break
    return pref * total


def bessel_j(order: int, x):
    """J_order(x) for integer order >= 0 and real x >= 0 (scalar or array)."""
    if order < 0:
        raise ValueError("order must be nonnegative")
    scalar = np.ndim(x) == 0
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(xa < 0):
        raise ValueError("bessel_j needs x >= 0")
    out = np.empty_like(xa)
    use_series = (xa * xa <= order + 1) & (xa > 0)
    out[xa == 0] = 1.0 if order == 0 else 0.0
    if use_series.any():
        out[use_series] = _series(order, xa[use_series])
    rest = ~use_series & (xa > 0)
    if rest.any():
        out[rest] = bessel_j_all(order, xa[rest])[:, order]
    return float(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# weight function and hbar


@dataclass(frozen=True)
class WeightFunction:
    """A smooth nonnegative bump h supported on [t0, t1] inside (0, inf)."""

    support: tuple[float, float]
    evaluator: Callable[[np.ndarray], np.ndarray]
    h_hat_0: float = field(default=float("nan"))

    def __post_init__(self):
        t0, t1 = self.support
        if not 0 < t0 < t1:
            raise ValueError(f"support must satisfy 0 < t0 < t1, got {self.support}")
        if math.isnan(self.h_hat_0):
            total = integrate(self.evaluator, t0, t1, tol=1e-14).value
            object.__setattr__(self, "h_hat_0", float(total))
        if not self.h_hat_0 > 0:
            raise ValueError("weight must have positive integral")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        t0, t1 = self.support
        inside = (t > t0) & (t < t1)
        out = np.zeros(np.shape(t))
        if np.ndim(t) == 0:
            return float(self.evaluator(t)) if inside else 0.0
        if inside.any():
            out[inside] = self.evaluator(t[inside])
        return out

    def k_range(self, K: float) -> list[int]:
        """Even k with (k - 1)/K inside the open support."""
        t0, t1 = self.support
        lo = math.floor(t0 * K + 1)
        hi = math.ceil(t1 * K + 1)
        return [k for k in range(lo, hi + 1) if k % 2 == 0 and t0 < (k - 1) / K < t1]


def smooth_bump(t0: float = 1.0, t1: float = 2.0) -> WeightFunction:
    """h(t) = exp(-1 / (1 - s^2)) with s the affine map of [t0, t1] onto [-1, 1]."""
    mid = 0.5 * (t0 + t1)
    half = 0.5 * (t1 - t0)

    def h(t):
        s = (np.asarray(t, dtype=float) - mid) / half
        with np.errstate(divide="ignore", over="ignore"):
            val = np.exp(-1.0 / (1.0 - s * s))
        return np.where(np.abs(s) < 1.0, val, 0.0)

    return WeightFunction((t0, t1), h)


DEFAULT_WEIGHT = smooth_bump()


def default_weight() -> WeightFunction:
    return DEFAULT_WEIGHT


def hslash(v: float, weight: WeightFunction = DEFAULT_WEIGHT, *, tol: float = 1e-10,
           derivative: bool = False) -> complex:
    """hbar(v) by adaptive Gauss-Kronrod on the substituted integral.

    With ``derivative`` set, returns hbar'(v) = sqrt(2/pi) int i t^2 h(t) e^{ivt^2} dt.
    Raises :class:`QuadratureError` with the achieved error on failure.
    """
    t0, t1 = weight.support
    panels = 4 + int(math.ceil(abs(v) * (t1 * t1 - t0 * t0) / math.pi))

    def f(t):
        val = weight(t) * np.exp(1j * v * t * t)
        return 1j * t * t * val if derivative else val

    res = integrate(f, t0, t1, tol=tol / SQRT_2_OVER_PI, panels=panels)
    return SQRT_2_OVER_PI * complex(res.value)


class HslashEvaluator:
    """Vectorised hbar on a composite Gauss-Legendre rule.

    The panel count grows linearly with |v| so each panel spans at most a
    fixed fraction of one oscillation of e^{ivt^2}.  Rules are cached per
    panel count; the cache is guarded so the evaluator can be shared across
    threads.
    """

    def __init__(self, weight: WeightFunction = DEFAULT_WEIGHT, tol: float = 1e-10,
                 order: int = 20, base_panels: int = 16):
        self.weight = weight
        self.tol = tol
        self.order = order
        self.base_panels = base_panels
        self._rules: dict[int, tuple[np.ndarray, np.ndarray]] = {}
        self._lock = threading.Lock()

    def _panels(self, vmax: float) -> int:
        t0, t1 = self.weight.support
        return self.base_panels + int(math.ceil(vmax * (t1 * t1 - t0 * t0) / math.pi))

    def _rule(self, panels: int):
        rule = self._rules.get(panels)
        if rule is None:
            t0, t1 = self.weight.support
            t, w = gauss_legendre_panels(t0, t1, panels, self.order)
            rule = (t * t, w * self.weight(t) * SQRT_2_OVER_PI)
            with self._lock:
                self._rules.setdefault(panels, rule)
        return rule

    def _eval(self, v: np.ndarray, power: int) -> np.ndarray:
        out = np.empty(len(v), dtype=complex)
        # bucket by panel count so small |v| do not pay for the largest one
        buckets = np.ceil(np.log2(1.0 + np.abs(v))).astype(int)
        for b in np.unique(buckets):
            idx = np.flatnonzero(buckets == b)
            tt, w = self._rule(self._panels(2.0 ** b))
            if power:
                w = w * 1j * tt
            for s in range(0, len(idx), 256):
                sl = idx[s : s + 256]
                out[sl] = np.exp(1j * np.outer(v[sl], tt)) @ w
        return out

    def __call__(self, v):
        scalar = np.ndim(v) == 0
        out = self._eval(np.atleast_1d(np.asarray(v, dtype=float)), 0)
        return complex(out[0]) if scalar else out

    def derivative(self, v):
        scalar = np.ndim(v) == 0
        out = self._eval(np.atleast_1d(np.asarray(v, dtype=float)), 1)
        return complex(out[0]) if scalar else out


def hslash_prime(v: float, weight: WeightFunction = DEFAULT_WEIGHT, *, tol: float = 1e-10) -> complex:
    return hslash(v, weight, tol=tol, derivative=True)


def weighted_bessel_sum(x: float, K: float, weight: WeightFunction = DEFAULT_WEIGHT) -> float:
    """I(x) = sum over even k of 2 h((k-1)/K) i^k J_{k-1}(x).

    i^k is +-1 for even k so the sum is real.  Terms are added in increasing k.
    """
    if K < 2:
        raise ValueError("K must be at least 2")
    ks = weight.k_range(K)
    if not ks or x == 0:
        return 0.0
    J = bessel_j_all(max(ks) - 1, [x])[0]
    terms = [2.0 * weight((k - 1) / K) * (1 if k % 4 == 0 else -1) * J[k - 1] for k in ks]
    return math.fsum(terms)


def bessel_sum_asymptotic(x: float, K: float, hbar: HslashEvaluator | None = None) -> float:
    """Leading-order approximation -(K / sqrt x) Im(zeta8_bar e^{ix} hbar(K^2 / 2x))."""
    hbar = hbar or HslashEvaluator()
    val = ZETA8_BAR * complex(math.cos(x), math.sin(x)) * hbar(K * K / (2.0 * x))
    return -(K / math.sqrt(x)) * val.imag


__all__ = [
    "QuadratureError", "WeightFunction", "HslashEvaluator", "bessel_j", "bessel_j_all",
    "smooth_bump", "default_weight", "hslash", "hslash_prime", "weighted_bessel_sum",
    "bessel_sum_asymptotic", "ZETA8_BAR", "DEFAULT_WEIGHT",
]
