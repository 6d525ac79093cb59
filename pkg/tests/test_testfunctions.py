import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from densitylab.quadrature import integrate
from densitylab.testfunctions import custom_pair, linear_combination, make_fejer, scaled, square, zero_function


def _custom():
    u = np.linspace(0.0, 0.8, 17)
    return custom_pair(u, (1 - (u / 0.8) ** 2) ** 2)


def _tail_value(tf, x):
    trig = {"cos": np.cos, "sin": np.sin}
    return sum(t.coef * trig[t.kind](t.omega * x) / x**t.power for t in tf.tail_terms)


@pytest.mark.parametrize("make", [lambda: make_fejer(0.7), lambda: square(make_fejer(0.4)), _custom,
                                  lambda: square(_custom())])
def test_fourier_round_trip(make):
    tf = make()
    x = np.array([0.0, 0.37, 1.5, 4.2, 11.0])
    assert np.max(np.abs(tf.phi(x) - tf.from_hat(x))) < 1e-10


@settings(max_examples=30, deadline=None)
@given(v=st.floats(0.05, 3.0))
def test_fejer_support_and_values(v):
    tf = make_fejer(v)
    assert tf.phi_hat(np.array([v + 1e-9]))[0] == 0.0
    assert tf.phi_hat0 == pytest.approx(1.0 / v)
    assert tf.phi0 == 1.0


def test_fejer_rejects_nonpositive():
    with pytest.raises(ValueError):
        make_fejer(0.0)


def test_square_doubles_radius_and_plancherel():
    for base in (make_fejer(0.6), _custom()):
        sq = square(base)
        assert sq.support_radius == pytest.approx(2 * base.support_radius)
        # (phi^2)^(0) = int phi^2 = int phi_hat^2
        r = base.support_radius
        l2 = 2 * integrate(lambda u: base.phi_hat(u) ** 2, 0, r, tol=1e-14,
                           breakpoints=[b for b in base.breakpoints() if b > 0]).value
        assert sq.phi_hat0 == pytest.approx(l2, rel=1e-9)


def test_squared_fejer_is_convolution():
    v = 0.5
    sq = square(make_fejer(v))
    base = make_fejer(v)
    u = np.linspace(-1.2, 1.2, 13)
    s, w = np.polynomial.legendre.leggauss(60)
    conv = []
    for ui in u:
        # piecewise linear integrand: split at the kinks
        cuts = sorted({-v, v, ui - v, ui, ui + v, 0.0})
        total = 0.0
        for a, b in zip(cuts[:-1], cuts[1:]):
            t = 0.5 * (b - a) * s + 0.5 * (a + b)
            total += 0.5 * (b - a) * np.sum(w * base.phi_hat(t) * base.phi_hat(ui - t))
        conv.append(total)
    assert np.max(np.abs(sq.phi_hat(u) - np.array(conv))) < 1e-12


@pytest.mark.parametrize("make", [lambda: make_fejer(0.9), lambda: square(make_fejer(0.3)), _custom,
                                  lambda: square(_custom())])
def test_tail_terms_are_exact(make):
    tf = make()
    x = np.array([6.1, 13.3, 27.0])
    assert np.max(np.abs(tf.phi(x) - _tail_value(tf, x))) < 1e-14


def test_custom_pair_validation():
    u = np.linspace(0, 1, 5)
    with pytest.raises(ValueError):
        custom_pair(u, 1 - u**2 + 0.1)
    with pytest.raises(ValueError):
        custom_pair(u[::-1], 1 - u[::-1] ** 2)


def test_envelope_dominates():
    for tf in (make_fejer(0.5), _custom()):
        x = np.linspace(0.0, 60.0, 3001)
        assert np.all(np.abs(tf.phi(x)) <= tf.envelope(x) * (1 + 1e-12) + 1e-15)


def test_linear_combination_and_zero():
    a, b = make_fejer(0.5), make_fejer(1.0)
    c = linear_combination([(2.0, a), (-0.5, b)])
    x = np.array([0.0, 1.3, 9.0])
    assert np.allclose(c.phi(x), 2 * a.phi(x) - 0.5 * b.phi(x))
    assert c.support_radius == 1.0
    assert np.allclose(_tail_value(c, x[1:]), c.phi(x[1:]), rtol=0, atol=1e-14)
    assert np.all(zero_function().phi(x) == 0)
    assert scaled(a, 3.0).phi0 == pytest.approx(3.0)
    with pytest.raises(ValueError):
        linear_combination([])
