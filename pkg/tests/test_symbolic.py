from __future__ import annotations

from fractions import Fraction

import mpmath
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qvf.symbolic import (
    VARS,
    GaussRational,
    ParamPoly,
    QuasiTrigPoly,
    build_fg,
    pp_reduce,
    qt_derivative,
    qt_eval_2pi,
    qt_integrate,
)

small = st.integers(-5, 5)
names = st.sampled_from(VARS[:-1])


@st.composite
def polys(draw, max_terms=4, max_deg=2):
    out = ParamPoly.zero()
    for _ in range(draw(st.integers(0, max_terms))):
        mono = ParamPoly.one()
        for _ in range(draw(st.integers(0, max_deg))):
            mono = mono * ParamPoly.var(draw(names))
        c = GaussRational(Fraction(draw(small), draw(st.integers(1, 4))), draw(small))
        out = out + mono.scale(c)
    return out


@st.composite
def qts(draw):
    out = QuasiTrigPoly.zero()
    for _ in range(draw(st.integers(0, 3))):
        out = out + QuasiTrigPoly.exp(draw(st.integers(-3, 3)), draw(polys(2, 1)), draw(st.integers(0, 2)))
    return out


POINT = {"a1": 0.3, "a2": -0.7, "b1": 1.1, "b2": 0.2, "c1": -0.4, "c2": 0.9}


def test_gauss_rational_field_ops():
    z = GaussRational(Fraction(1, 2), 3)
    w = GaussRational(-2, Fraction(5, 7))
    assert (z * w) / w == z
    assert (z + w) - w == z
    assert z.conjugate().conjugate() == z


@given(polys(), polys(), polys())
def test_ring_axioms(p, q, r):
    assert p + q == q + p
    assert p * q == q * p
    assert (p * q) * r == p * (q * r)
    assert p * (q + r) == p * q + p * r
    assert (p - p).is_zero()


@given(polys())
def test_serialize_roundtrip(p):
    assert ParamPoly.deserialize(p.serialize()) == p
    assert ParamPoly.deserialize(p.serialize()).serialize() == p.serialize()


@given(polys(), polys())
def test_evaluation_is_a_homomorphism(p, q):
    with mpmath.workdps(40):
        lhs = (p * q).evaluate(POINT)
        rhs = p.evaluate(POINT) * q.evaluate(POINT)
        assert abs(lhs - rhs) <= mpmath.mpf(10) ** -30 * (1 + abs(rhs))


def test_parse_matches_construction():
    a1, b2 = ParamPoly.var("a1"), ParamPoly.var("b2")
    expected = (a1 * a1 * 3 - b2 * GaussRational(0, 2)) * Fraction(1, 2)
    assert ParamPoly.parse("(3*a1^2 - 2*I*b2)/2") == expected
    with pytest.raises(ValueError):
        ParamPoly.parse("cos(theta)")


@given(qts())
def test_integrate_then_differentiate(q):
    Q = qt_integrate(q)
    assert qt_derivative(Q) == q
    assert Q.at_zero().is_zero()


@given(qts())
def test_qt_serialize_roundtrip(q):
    assert QuasiTrigPoly.deserialize(q.serialize()).serialize() == q.serialize()


def test_integral_over_period_matches_quadrature():
    # int_0^{2pi} theta e^{i theta} d theta = -2 pi i
    q = qt_integrate(QuasiTrigPoly.exp(1, 1, m=1))
    val = qt_eval_2pi(q).evaluate({})
    assert abs(val - mpmath.mpc(0, -2 * mpmath.pi)) < 1e-30
    # a generic block against numerical quadrature
    p = ParamPoly.parse("a1 + 2*I*b2")
    q = qt_integrate(QuasiTrigPoly.exp(-3, p, m=2))
    exact = qt_eval_2pi(q).evaluate(POINT)
    c = p.evaluate(POINT)
    numeric = mpmath.quad(lambda t: c * t**2 * mpmath.expj(-3 * t), [0, 2 * mpmath.pi])
    assert abs(exact - numeric) < 1e-12


def test_build_fg_matches_direct_evaluation():
    f, g = build_fg()
    assert f.check_real_valued() and g.check_real_valued()
    A = complex(POINT["a1"], POINT["a2"])
    B = complex(POINT["b1"], POINT["b2"])
    C = complex(POINT["c1"], POINT["c2"])
    for t in (0.0, 0.7, 2.9, 5.5):
        h = A * mpmath.expj(t) + B * mpmath.expj(-t) + C * mpmath.expj(-3 * t)
        assert abs(f.evaluate(t, POINT) - h.real) < 1e-14
        assert abs(g.evaluate(t, POINT) - h.imag) < 1e-14


def test_reduce_exact_multiple_has_zero_remainder():
    g1 = ParamPoly.parse("a1*b2 - a2*b1")
    g2 = ParamPoly.parse("c1^2 + c2")
    target = g1 * ParamPoly.parse("3*b1 + 1") + g2 * ParamPoly.parse("a2^2 - 7")
    _, rem = pp_reduce(target, [g1, g2])
    assert rem.is_zero()
    _, rem = pp_reduce(target + ParamPoly.var("a1"), [g1, g2])
    assert not rem.is_zero()
