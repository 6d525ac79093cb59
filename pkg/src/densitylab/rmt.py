"""Katz-Sarnak kernels W_{n,G} for n = 1, 2 and their pairings with test functions.

With K(x) = sin(pi x)/(pi x) and K_eps(x, y) = K(x - y) + eps K(x + y), every
group is a mixture of determinants det K_eps plus (for SO_odd) delta terms:

  SO_even  eps = +1
  SO_odd   eps = -1, plus sum_k delta_0(x_k) det(K_-1) with row/column k removed
  O        1/2 SO_even + 1/2 SO_odd
  U        eps = 0
  Sp       eps = -1

Pairings are computed in x-space: a box quadrature with the tail either
integrated exactly (n = 1, from the test function's tail terms) or bounded
(n = 2, connected part).  Fourier-side formulas are provided separately as
an independent check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .quadrature import QuadratureError, gauss_legendre_panels, integrate, trig_power_tail
from .testfunctions import TestFunction

GROUPS = ("SO_even", "SO_odd", "O", "U", "Sp")

# group -> [(mixture weight, eps, carries delta terms)]
_COMPONENTS = {
    "SO_even": ((1.0, 1, False),),
    "SO_odd": ((1.0, -1, True),),
    "O": ((0.5, 1, False), (0.5, -1, True)),
    "U": ((1.0, 0, False),),
    "Sp": ((1.0, -1, False),),
}


class TailCertificationError(RuntimeError):
    def __init__(self, message: str, bound: float):
        super().__init__(message)
        self.bound = bound


def sine_kernel(x):
    return np.sinc(np.asarray(x, dtype=float))


def k_eps(eps: int, x, y):
    return sine_kernel(np.subtract(x, y)) + eps * sine_kernel(np.add(x, y))


@dataclass(frozen=True)
class KernelDensity:
    group: str
    n: int

    def __post_init__(self):
        if self.group not in GROUPS:
            raise ValueError(f"unknown group {self.group!r}; expected one of {GROUPS}")
        if self.n not in (1, 2):
            raise ValueError("only n = 1 and n = 2 are supported")

    @property
    def components(self):
        return _COMPONENTS[self.group]

    @property
    def delta_terms(self) -> list[tuple[str, float]]:
        """(location, mixture coefficient) of the delta_0 contributions."""
        out = []
        for w, _, has_delta in self.components:
            if has_delta:
                out += [(f"x{k + 1}=0", w) for k in range(self.n)]
        return out

    def smooth(self, x) -> np.ndarray:
        return kernel_eval(self, x)


def _det_eps(eps: int, pts: np.ndarray) -> np.ndarray:
    """det(K_eps(x_i, x_j)) for points given along the last axis."""
    if pts.shape[-1] == 1:
        x = pts[..., 0]
        return k_eps(eps, x, x)
    x, y = pts[..., 0], pts[..., 1]
    kxy = k_eps(eps, x, y)
    return k_eps(eps, x, x) * k_eps(eps, y, y) - kxy * kxy


def kernel_eval(kd: KernelDensity, x) -> np.ndarray | float:
    """Smooth part of W_{n,G} at x (shape (..., n) or a scalar when n = 1)."""
    pts = np.asarray(x, dtype=float)
    scalar = pts.ndim == 0 or (kd.n > 1 and pts.ndim == 1)
    if kd.n == 1 and pts.shape[-1:] != (1,):
        pts = pts[..., None]
    if pts.shape[-1] != kd.n:
        raise ValueError(f"points must have last dimension {kd.n}")
    val = sum(w * _det_eps(eps, pts) for w, eps, _ in kd.components)
    return float(val) if scalar else val


@dataclass(frozen=True)
class Pairing:
    value: float
    tail_bound: float
    quad_error: float
    T: float


# ---------------------------------------------------------------------------
# one dimension


def _tail_1d(tf: TestFunction, eps: int, T: float) -> float:
    """int_T^inf phi(x) (1 + eps K(2x)) dx from the tail terms of phi."""
    total = []
    for t in tf.tail_terms:
        total.append(t.coef * trig_power_tail(t.kind, t.omega, t.power, T))
        if not eps:
            continue
        if t.kind == "cos":
            # cos(w x) sin(2 pi x) = (sin((2pi + w) x) + sin((2pi - w) x)) / 2
            parts = [("sin", 2 * math.pi + t.omega, 1.0), ("sin", 2 * math.pi - t.omega, 1.0)]
        else:
            # sin(w x) sin(2 pi x) = (cos((2pi - w) x) - cos((2pi + w) x)) / 2
            parts = [("cos", 2 * math.pi - t.omega, 1.0), ("cos", 2 * math.pi + t.omega, -1.0)]
        for kind, om, sgn in parts:
            total.append(sgn * eps * t.coef / (4 * math.pi) * trig_power_tail(kind, om, t.power + 1, T))
    return math.fsum(total)


def pair_smooth_1d(tf: TestFunction, eps: int, *, T: float = 40.0, tol: float = 1e-11) -> Pairing:
    """int phi(x) (1 + eps K(2x)) dx over the real line."""
    f = lambda x: tf.phi(x) * (1.0 + eps * sine_kernel(2.0 * x))  # noqa: E731
    if tf.tail_terms is not None:
        body = integrate(f, 0.0, T, tol=tol / 2, panels=int(4 * T) + 1)
        value = 2.0 * (body.value + _tail_1d(tf, eps, T))
        return Pairing(value, 0.0, 2.0 * body.error, T)
    if tf.envelope is None:
        raise TailCertificationError("test function has neither tail terms nor a decay envelope", math.inf)
    # |phi| <= C/x^2 for large x: tail <= 2 * 2 C / T (1 + |eps|/(2 pi T))
    C = float(tf.envelope(np.array([1e6]))[0]) * 1e12
    T = max(T, 4.0 * C * (1.0 + 1.0 / (2 * math.pi)) / tol)
    if T > 1e7:
        raise TailCertificationError(f"box of half-width {T:.3g} needed to certify the tail", 4 * C / 1e7)
    body = integrate(f, 0.0, T, tol=tol / 2, panels=int(2 * T) + 1, max_intervals=10**7)
    bound = 4.0 * C / T * (1.0 + abs(eps) / (2 * math.pi * T))
    return Pairing(2.0 * body.value, bound, 2.0 * body.error, T)


def _pair_1d(kd: KernelDensity, tf: TestFunction, **kw) -> Pairing:
    value, bound, err = [], 0.0, 0.0
    T = 0.0
    for w, eps, has_delta in kd.components:
        p = pair_smooth_1d(tf, eps, **kw)
        value.append(w * p.value)
        if has_delta:
            value.append(w * tf.phi0)
        bound += w * p.tail_bound
        err += w * p.quad_error
        T = max(T, p.T)
    return Pairing(math.fsum(value), bound, err, T)


# ---------------------------------------------------------------------------
# two dimensions


def _envelope_constants(tf: TestFunction) -> tuple[float, float]:
    """(E, A1) with |phi(x)| <= E / x^2 for large x and int |phi| <= A1."""
    if tf.envelope is None:
        raise TailCertificationError("no decay envelope for the 2-d tail bound", math.inf)
    E = float(tf.envelope(np.array([1e6]))[0]) * 1e12
    sup = float(tf.envelope(np.array([0.0]))[0])
    x0 = math.sqrt(E / sup)
    return E, 2.0 * (sup * x0 + E / x0)


def connected_tail_bound(tf1: TestFunction, tf2: TestFunction, T: float) -> float:
    """Bound on int int |phi1(x) phi2(y)| K_eps(x, y)^2 outside [-T, T]^2.

    For |x| > T, int |phi(y)| (K(x-y)^2 + K(x+y)^2) dy <= 2 (4 A1 / (pi^2 x^2) + env(x/2)),
    splitting at |y| = |x|/2, and |K_eps|^2 <= 2 (K(x-y)^2 + K(x+y)^2).
    """
    E1, A1 = _envelope_constants(tf1)
    E2, A2 = _envelope_constants(tf2)

    def one(Ex, Ey, Ay):
        c = 2.0 * (4.0 * Ay / math.pi**2 + 4.0 * Ey)
        return 2.0 * 2.0 * Ex * c / (3.0 * T**3)  # +-x, factor 2 from |K_eps|^2

    return one(E1, E2, A2) + one(E2, E1, A1)


def _sinc_from_parts(num: np.ndarray, d: np.ndarray) -> np.ndarray:
    """sin(pi d)/(pi d) given num = sin(pi d) from an addition formula.

    The addition formula loses absolute accuracy ~1e-16 |pi x|, which only
    matters where d is small; those entries are recomputed directly.
    """
    with np.errstate(divide="ignore", invalid="ignore"):
        out = num / (math.pi * d)
    near = np.nonzero(np.abs(d) < 0.05)
    out[near] = np.sinc(d[near])
    return out


def connected_moments(tf1: TestFunction, tf2: TestFunction, T: float, panel_width: float = 0.5,
                      order: int = 10, chunk: int = 4) -> tuple[float, float, float]:
    """Weighted sums of K(x-y)^2, K(x+y)^2 and K(x-y) K(x+y) against phi1(x) phi2(y) on [-T, T]^2.

    The connected integral for any eps is P + eps^2 Q + 2 eps X.  sin(pi (x +- y))
    comes from outer products of sin and cos at the nodes, so no transcendental
    is evaluated on the full grid.  (x, y) -> (-x, -y) symmetry halves the x range.
    """
    px = max(1, int(math.ceil(T / panel_width)))
    xn, xw = gauss_legendre_panels(0.0, T, px, order)
    yn, yw = gauss_legendre_panels(-T, T, 2 * px, order)
    wx = xw * tf1.phi(xn)
    wy = yw * tf2.phi(yn)
    sx, cx = np.sin(math.pi * xn), np.cos(math.pi * xn)
    sy, cy = np.sin(math.pi * yn), np.cos(math.pi * yn)
    P, Q, X = [], [], []
    for s in range(0, len(xn), chunk):
        sl = slice(s, s + chunk)
        a, b = np.outer(sx[sl], cy), np.outer(cx[sl], sy)
        xs = xn[sl, None]
        km = _sinc_from_parts(a - b, xs - yn[None, :])
        kp = _sinc_from_parts(a + b, xs + yn[None, :])
        P.append(math.fsum((wx[sl] * ((km * km) @ wy)).tolist()))
        Q.append(math.fsum((wx[sl] * ((kp * kp) @ wy)).tolist()))
        X.append(math.fsum((wx[sl] * ((km * kp) @ wy)).tolist()))
    return 2.0 * math.fsum(P), 2.0 * math.fsum(Q), 2.0 * math.fsum(X)


def connected_integral(tf1: TestFunction, tf2: TestFunction, eps: int, T: float, **kw) -> float:
    """int int_{[-T,T]^2} phi1(x) phi2(y) K_eps(x, y)^2 on a tensor Gauss-Legendre rule."""
    P, Q, X = connected_moments(tf1, tf2, T, **kw)
    return P + eps * eps * Q + 2.0 * eps * X


def _pair_2d(kd: KernelDensity, tf1: TestFunction, tf2: TestFunction, *, tol: float = 1e-7,
             T: float | None = None) -> Pairing:
    if T is None:
        unit = connected_tail_bound(tf1, tf2, 1.0)
        T = max(20.0, (unit / tol) ** (1.0 / 3.0))
    bound_one = connected_tail_bound(tf1, tf2, T)
    value, bound, err = [], 0.0, 0.0
    cache: dict[int, tuple[Pairing, Pairing, float]] = {}
    P, Q, X = connected_moments(tf1, tf2, T)
    for w, eps, has_delta in kd.components:
        if eps not in cache:
            a1 = pair_smooth_1d(tf1, eps)
            a2 = a1 if tf2 is tf1 else pair_smooth_1d(tf2, eps)
            cache[eps] = (a1, a2, P + eps * eps * Q + 2.0 * eps * X)
        a1, a2, conn = cache[eps]
        value.append(w * (a1.value * a2.value - conn))
        bound += w * (bound_one + a1.tail_bound * abs(a2.value) + a2.tail_bound * abs(a1.value))
        err += w * (a1.quad_error * abs(a2.value) + a2.quad_error * abs(a1.value))
        if has_delta:
            # delta_0(x1) K_-1(x2, x2) + delta_0(x2) K_-1(x1, x1)
            m1 = pair_smooth_1d(tf1, -1)
            m2 = m1 if tf2 is tf1 else pair_smooth_1d(tf2, -1)
            value.append(w * (tf1.phi0 * m2.value + tf2.phi0 * m1.value))
            bound += w * (abs(tf1.phi0) * m2.tail_bound + abs(tf2.phi0) * m1.tail_bound)
    return Pairing(math.fsum(value), bound, err, T)


def pair(kd: KernelDensity, tf, **kw) -> Pairing:
    """<Phi, W_{n,G}> with Phi = phi (n = 1) or phi1(x1) phi2(x2) (n = 2).

    For n = 2 pass either a single test function (Phi = phi(x1) phi(x2)) or a pair.
    """
    if kd.n == 1:
        if isinstance(tf, (tuple, list)):
            raise ValueError("n = 1 pairing takes a single test function")
        return _pair_1d(kd, tf, **kw)
    tf1, tf2 = (tf, tf) if isinstance(tf, TestFunction) else tuple(tf)
    return _pair_2d(kd, tf1, tf2, **kw)


# ---------------------------------------------------------------------------
# Fourier-side formulas


def _half_window(tf: TestFunction) -> float:
    """(1/2) int_{-1}^{1} phi_hat, the pairing of phi with K(2x)."""
    r = min(1.0, tf.support_radius)
    return tf.hat_integral(0.0, r)


def fourier_pair_1d(kd: KernelDensity, tf: TestFunction) -> float:
    """phi_hat(0) + eps (1/2) int_{-1}^{1} phi_hat + (delta coefficient) phi(0)."""
    if kd.n != 1:
        raise ValueError("n = 1 only")
    H = _half_window(tf)
    parts = []
    for w, eps, has_delta in kd.components:
        parts.append(w * (tf.phi_hat0 + eps * H))
        if has_delta:
            parts.append(w * tf.phi0)
    return math.fsum(parts)


def fourier_pair_2d(kd: KernelDensity, tf: TestFunction) -> float:
    """<phi x phi, W_{2,G}> on the Fourier side.

    Uses int int phi phi K(x-y)^2 = int phi_hat^2 (1 - |u|)_+ and
    int int phi phi K(x-y) K(x+y) = (1/2) int int_{|p|+|q|<=1} phi_hat(p) phi_hat(q).
    """
    if kd.n != 2:
        raise ValueError("n = 2 only")
    r = tf.support_radius
    bps = tf.breakpoints()
    lim = min(1.0, r)
    I1 = 2.0 * integrate(lambda u: tf.phi_hat(u) ** 2 * (1.0 - u), 0.0, lim, tol=1e-13,
                         breakpoints=[b for b in bps if b > 0]).value

    def inner(p):
        p = np.atleast_1d(p)
        return np.array([tf.hat_integral(-(1 - abs(t)), 1 - abs(t)) if abs(t) < 1 else 0.0 for t in p])

    I2 = 0.5 * 2.0 * integrate(lambda p: tf.phi_hat(p) * inner(p), 0.0, lim, tol=1e-12,
                               breakpoints=[b for b in bps if b > 0] + [1.0 - b for b in bps if 0 < b < 1]).value
    H = _half_window(tf)
    parts = []
    for w, eps, has_delta in kd.components:
        a = tf.phi_hat0 + eps * H
        parts.append(w * (a * a - (1 + eps * eps) * I1 - 2 * eps * I2))
        if has_delta:
            parts.append(w * 2.0 * tf.phi0 * (tf.phi_hat0 - H))
    return math.fsum(parts)


def orthogonal_two_level_main_term(tf: TestFunction, central_correction: bool = False) -> float:
    """2 int |u| phi_hat^2 + phi_hat(0)^2 - (3/4) phi(0)^2 + phi_hat(0) phi(0) - 2 (phi^2)^(0).

    With ``central_correction`` the coefficient of phi(0)^2 is -1/4 instead,
    which is what <phi x phi, W_{2,O}> equals for supp phi_hat inside (-1/2, 1/2).
    """
    r = tf.support_radius
    bps = [b for b in tf.breakpoints() if b > 0]
    first = 2.0 * 2.0 * integrate(lambda u: u * tf.phi_hat(u) ** 2, 0.0, r, tol=1e-13, breakpoints=bps).value
    sq = 2.0 * integrate(lambda u: tf.phi_hat(u) ** 2, 0.0, r, tol=1e-13, breakpoints=bps).value
    c0 = -0.25 if central_correction else -0.75
    p0, h0 = tf.phi0, tf.phi_hat0
    return math.fsum([first, h0 * h0, c0 * p0 * p0, h0 * p0, -2.0 * sq])


__all__ = [
    "GROUPS", "KernelDensity", "Pairing", "TailCertificationError", "QuadratureError",
    "kernel_eval", "pair", "pair_smooth_1d", "connected_integral", "connected_moments", "connected_tail_bound",
    "fourier_pair_1d", "fourier_pair_2d", "orthogonal_two_level_main_term", "sine_kernel", "k_eps",
]
