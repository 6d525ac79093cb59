"""Even test functions phi with compactly supported Fourier transforms.

Convention: phi_hat(u) = int phi(x) e(-ux) dx with e(z) = exp(2 pi i z), so
phi(x) = 2 int_0^r phi_hat(u) cos(2 pi u x) du when supp phi_hat = [-r, r].

Where it is known in closed form, the large-|x| behaviour of phi is stored
as ``tail_terms``: phi(x) = sum coef * trig(omega x) / x**power for x > 0,
with trig = cos or sin.
Kernel pairings integrate those tails exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .quadrature import gauss_legendre_panels, integrate


@dataclass(frozen=True)
class TailTerm:
    """coef * trig(omega x) / x**power, trig being cos or sin."""

    coef: float
    power: int
    omega: float
    kind: str = "cos"


def _product_terms(s: TailTerm, t: TailTerm) -> list[tuple[str, float, float]]:
    """trig(a x) trig(b x) split into (kind, frequency >= 0, factor) pieces."""
    a, b = s.omega, t.omega
    if s.kind == "cos" and t.kind == "cos":
        raw = [("cos", a - b, 0.5), ("cos", a + b, 0.5)]
    elif s.kind == "sin" and t.kind == "sin":
        raw = [("cos", a - b, 0.5), ("cos", a + b, -0.5)]
    elif s.kind == "sin":
        raw = [("sin", a + b, 0.5), ("sin", a - b, 0.5)]
    else:
        raw = [("sin", a + b, 0.5), ("sin", a - b, -0.5)]
    out = []
    for kind, w, f in raw:
        if w < 0:
            w, f = -w, (f if kind == "cos" else -f)
        if kind == "sin" and w < 1e-12:
            continue
        out.append((kind, w, f))
    return out


def _tail_product(a: Sequence[TailTerm], b: Sequence[TailTerm]) -> tuple[TailTerm, ...]:
    merged: dict[tuple[str, int, float], float] = {}
    for s in a:
        for t in b:
            for kind, omega, f in _product_terms(s, t):
                key = (kind, s.power + t.power, round(omega, 12))
                merged[key] = merged.get(key, 0.0) + f * s.coef * t.coef
    return tuple(TailTerm(c, p, w, k) for (k, p, w), c in sorted(merged.items()) if c != 0.0)


@dataclass(frozen=True)
class TestFunction:
    """A Fourier pair (phi, phi_hat) with supp phi_hat inside [-support_radius, support_radius]."""

    __test__ = False  # keep pytest from collecting this class

    kind: str
    phi: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    phi_hat: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    support_radius: float
    phi_hat_prime: Callable[[np.ndarray], np.ndarray] | None = field(default=None, repr=False)
    tail_terms: tuple[TailTerm, ...] | None = None
    envelope: Callable[[np.ndarray], np.ndarray] | None = field(default=None, repr=False)
    v: float | None = None
    kinks: tuple[float, ...] = ()

    @property
    def phi0(self) -> float:
        return float(self.phi(np.array([0.0]))[0])

    @property
    def phi_hat0(self) -> float:
        return float(self.phi_hat(np.array([0.0]))[0])

    def breakpoints(self) -> tuple[float, ...]:
        """Points where phi_hat may fail to be smooth, on [-r, r]."""
        r = self.support_radius
        pts = {-r, r, *self.kinks, *(-k for k in self.kinks)}
        return tuple(sorted(pts))

    def hat_integral(self, a: float, b: float, tol: float = 1e-13) -> float:
        """int_a^b phi_hat(u) du."""
        return float(integrate(self.phi_hat, a, b, tol=tol, breakpoints=self.breakpoints()).value)

    def from_hat(self, x, tol: float = 1e-12) -> np.ndarray:
        """phi(x) recomputed from phi_hat by quadrature (used as an independent path)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        r = self.support_radius
        cuts = sorted({0.0, r, *(k for k in self.kinks if 0 < k < r)})
        panels = 8 + int(math.ceil(4 * r * float(np.max(np.abs(x), initial=0.0))))
        total = np.zeros_like(x)
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            u, w = gauss_legendre_panels(lo, hi, panels, 20)
            total += np.cos(2 * np.pi * np.outer(x, u)) @ (w * self.phi_hat(u))
        return 2.0 * total


def _fejer_hat(v: float):
    def phi_hat(u):
        u = np.asarray(u, dtype=float)
        return np.maximum(0.0, 1.0 - np.abs(u) / v) / v
    return phi_hat


def make_fejer(v: float) -> TestFunction:
    """phi(x) = (sin(pi v x) / (pi v x))^2, phi_hat(u) = (1/v)(1 - |u|/v)_+."""
    if not v > 0:
        raise ValueError("v must be positive")
    c = 1.0 / (2.0 * math.pi**2 * v * v)

    def phi(x):
        return np.sinc(v * np.asarray(x, dtype=float)) ** 2

    def phi_hat_prime(u):
        u = np.asarray(u, dtype=float)
        return np.where(np.abs(u) < v, -np.sign(u) / (v * v), 0.0)

    def envelope(x):
        with np.errstate(divide="ignore"):
            return np.minimum(1.0, 1.0 / (math.pi * v * np.abs(np.asarray(x, dtype=float))) ** 2)

    tails = (TailTerm(c, 2, 0.0), TailTerm(-c, 2, 2.0 * math.pi * v))
    return TestFunction("fejer", phi, _fejer_hat(v), float(v), phi_hat_prime, tails, envelope, float(v), (0.0,))


def _bspline(t):
    a = np.abs(t)
    return np.where(a <= 1.0, 2.0 / 3.0 - a * a + 0.5 * a**3,
                    np.where(a <= 2.0, (2.0 - np.minimum(a, 2.0)) ** 3 / 6.0, 0.0))


def _bspline_prime(t):
    a = np.abs(t)
    s = np.sign(t)
    return s * np.where(a <= 1.0, -2.0 * a + 1.5 * a * a,
                        np.where(a <= 2.0, -0.5 * (2.0 - np.minimum(a, 2.0)) ** 2, 0.0))


@dataclass(frozen=True)
class SquaredTestFunction(TestFunction):
    """phi^2 with transform phi_hat * phi_hat; the support radius doubles."""

    base: TestFunction | None = None


def square(tf: TestFunction) -> SquaredTestFunction:
    r2 = 2.0 * tf.support_radius

    def phi(x):
        return tf.phi(x) ** 2

    tails = _tail_product(tf.tail_terms, tf.tail_terms) if tf.tail_terms is not None else None
    envelope = (lambda x: tf.envelope(x) ** 2) if tf.envelope is not None else None

    if tf.kind == "fejer":
        v = tf.v

        def phi_hat(u):
            return _bspline(np.asarray(u, dtype=float) / v) / v

        def phi_hat_prime(u):
            return _bspline_prime(np.asarray(u, dtype=float) / v) / (v * v)

        return SquaredTestFunction("fejer_squared", phi, phi_hat, r2, phi_hat_prime, tails,
                                   envelope, v, (0.0, v), base=tf)

    # numerical self-convolution on a grid, then a cubic spline through the samples
    grid = np.linspace(0.0, r2, 257)
    r = tf.support_radius
    conv = np.empty_like(grid)
    for i, u in enumerate(grid):
        lo, hi = max(-r, u - r), min(r, u + r)
        if hi <= lo:
            conv[i] = 0.0
            continue
        bps = [b for b in tf.breakpoints() + tuple(u - b for b in tf.breakpoints()) if lo < b < hi]
        conv[i] = integrate(lambda s, u=u: tf.phi_hat(s) * tf.phi_hat(u - s), lo, hi,
                            tol=1e-13, breakpoints=bps).value
    spline = CubicSpline(grid, conv, bc_type=((1, 0.0), "not-a-knot"))

    def phi_hat_num(u):
        a = np.abs(np.asarray(u, dtype=float))
        return np.where(a < r2, spline(np.minimum(a, r2)), 0.0)

    def phi_hat_prime_num(u):
        u = np.asarray(u, dtype=float)
        a = np.abs(u)
        return np.where(a < r2, np.sign(u) * spline(np.minimum(a, r2), 1), 0.0)

    return SquaredTestFunction("squared", phi, phi_hat_num, r2, phi_hat_prime_num, tails,
                               envelope, None, (), base=tf)


def custom_pair(u_grid: Sequence[float], hat_samples: Sequence[float]) -> TestFunction:
    """A test function from phi_hat sampled on a uniform grid 0 = u_0 < ... < u_M = r.

    phi_hat is the clamped cubic spline through the samples (slope 0 at the
    origin, so the even extension is C^1); phi is reconstructed by quadrature.
    The last sample must be 0 so phi_hat is continuous.
    """
    u = np.asarray(u_grid, dtype=float)
    y = np.asarray(hat_samples, dtype=float)
    if u.ndim != 1 or len(u) < 4 or len(u) != len(y):
        raise ValueError("need at least 4 matching grid points and samples")
    if u[0] != 0.0 or np.any(np.diff(u) <= 0):
        raise ValueError("grid must start at 0 and increase")
    if not np.allclose(np.diff(u), u[1] - u[0], rtol=1e-9, atol=0.0):
        raise ValueError("grid must be uniform")
    if y[-1] != 0.0:
        raise ValueError("phi_hat must vanish at the end of the grid")
    r = float(u[-1])
    spline = CubicSpline(u, y, bc_type=((1, 0.0), "not-a-knot"))

    def phi_hat(t):
        a = np.abs(np.asarray(t, dtype=float))
        return np.where(a < r, spline(np.minimum(a, r)), 0.0)

    def phi_hat_prime(t):
        t = np.asarray(t, dtype=float)
        a = np.abs(t)
        return np.where(a < r, np.sign(t) * spline(np.minimum(a, r), 1), 0.0)

    nodes, weights = gauss_legendre_panels(0.0, r, len(u) - 1, 8)  # exact on each cubic piece
    hat_nodes = spline(nodes)

    def phi(x):
        x = np.asarray(x, dtype=float)
        flat = np.atleast_1d(x).ravel()
        out = np.empty_like(flat)
        for s in range(0, len(flat), 512):
            xs = flat[s : s + 512]
            # oscillation within a cell is bounded by the cell size times |x|; refine when needed
            m = 1 + int(math.ceil(2.0 * (u[1] - u[0]) * float(np.max(np.abs(xs), initial=0.0))))
            if m == 1:
                out[s : s + 512] = 2.0 * np.cos(2 * np.pi * np.outer(xs, nodes)) @ (weights * hat_nodes)
            else:
                nn, ww = gauss_legendre_panels(0.0, r, (len(u) - 1) * m, 8)
                out[s : s + 512] = 2.0 * np.cos(2 * np.pi * np.outer(xs, nn)) @ (ww * spline(nn))
        return out.reshape(np.shape(x))

    # two integrations by parts: |phi(x)| <= (2|phi_hat'(r)| + 2 int_0^r |phi_hat''|) / (4 pi^2 x^2)
    second = spline.derivative(2)
    gn, gw = gauss_legendre_panels(0.0, r, len(u) - 1, 8)
    total_var = float(np.sum(gw * np.abs(second(gn))))
    const = (2.0 * abs(float(spline(r, 1))) + 2.0 * total_var) / (4.0 * math.pi**2)
    sup = 2.0 * float(np.sum(gw * np.abs(spline(gn))))  # |phi| <= int |phi_hat|

    def envelope(x):
        x = np.abs(np.asarray(x, dtype=float))
        with np.errstate(divide="ignore"):
            return np.minimum(sup, const / (x * x))

    return TestFunction("custom_pair", phi, phi_hat, r, phi_hat_prime, _spline_tails(spline, u), envelope,
                        None, tuple(float(k) for k in u[1:-1]))


def _spline_tails(spline: CubicSpline, u: np.ndarray) -> tuple[TailTerm, ...]:
    """Exact form of phi for x > 0 when phi_hat is a cubic spline with g'(0) = 0 and g(r) = 0.

    Integrating 2 int_0^r g(u) cos(2 pi u x) du by parts four times leaves the
    boundary values g'(r), g''(r) and the jumps of the piecewise constant g'''.
    """
    r = float(u[-1])
    w = 2.0 * math.pi
    g3 = 6.0 * spline.c[0]
    jumps = np.concatenate([[0.0], g3]) - np.concatenate([g3, [0.0]])  # g3(u_k-) - g3(u_k+)
    terms = [TailTerm(2.0 * float(spline(r, 1)) / w**2, 2, w * r, "cos"),
             TailTerm(-2.0 * float(spline(r, 2)) / w**3, 3, w * r, "sin")]
    terms += [TailTerm(-2.0 * float(j) / w**4, 4, w * float(k), "cos") for k, j in zip(u, jumps)]
    return tuple(t for t in terms if t.coef != 0.0)


def linear_combination(parts: Sequence[tuple[float, TestFunction]]) -> TestFunction:
    """sum a_i phi_i as a test function (used for superposition checks)."""
    if not parts:
        raise ValueError("empty combination")

    def phi(x):
        return sum(a * tf.phi(x) for a, tf in parts)

    def phi_hat(u):
        return sum(a * tf.phi_hat(u) for a, tf in parts)

    def phi_hat_prime(u):
        return sum(a * tf.phi_hat_prime(u) for a, tf in parts)

    tails = None
    if all(tf.tail_terms is not None for _, tf in parts):
        tails = tuple(TailTerm(a * t.coef, t.power, t.omega, t.kind) for a, tf in parts for t in tf.tail_terms)
    envelope = None
    if all(tf.envelope is not None for _, tf in parts):
        envelope = lambda x: sum(abs(a) * tf.envelope(x) for a, tf in parts)  # noqa: E731
    kinks = tuple(sorted({k for _, tf in parts for k in tf.breakpoints() if k >= 0}))
    radius = max(tf.support_radius for _, tf in parts)
    return TestFunction("combination", phi, phi_hat, radius, phi_hat_prime, tails, envelope, None, kinks)


def zero_function() -> TestFunction:
    zero = lambda x: np.zeros(np.shape(x))  # noqa: E731
    return TestFunction("zero", zero, zero, 1.0, zero, (), zero, None, ())


def scaled(tf: TestFunction, a: float) -> TestFunction:
    return linear_combination([(a, tf)]) if a != 1 else replace(tf)
