from __future__ import annotations

import time

import mpmath
import pytest

from qvf.bautin import (
    appendix_cofactors,
    appendix_v2,
    center_polys,
    jet,
    listed_rhs,
    variational_coefficients,
    verify_appendix,
    verify_constant_bounds,
    verify_splitting_constants,
)
from qvf.field import FieldParams, center_residuals
from qvf.poincare import poincare_map_hp
from qvf.symbolic import ParamPoly, qt_derivative

POINT = {"a1": 0.4, "a2": -0.3, "b1": 0.9, "b2": 0.6, "c1": 0.2, "c2": -0.5}


def test_jet_low_orders():
    a = jet()
    assert a[1] == ParamPoly.one()
    assert a[2].is_zero()


def test_jet_runtime_and_identities():
    t0 = time.perf_counter()
    rep = verify_appendix()
    assert time.perf_counter() - t0 < 120
    for j, r in rep.residuals.items():
        assert r.is_zero(), f"a_{j} residual"
    for j, r in rep.remainders.items():
        assert r.is_zero(), f"a_{j} remainder"
    assert rep.identities_pass


def test_generic_recursion_matches_listed_right_hand_sides():
    vs = variational_coefficients()
    for n in range(2, 8):
        assert qt_derivative(vs[n - 1]) == listed_rhs(vs[: n - 1], n)


def test_v2_golden_serialization():
    assert variational_coefficients()[1].serialize() == appendix_v2().serialize()


def test_cofactor_golden_serialization_is_canonical():
    cf = appendix_cofactors()
    for name in ("alpha0", "beta0", "beta1", "gamma0", "gamma1", "gamma2"):
        p = getattr(cf, name)
        assert ParamPoly.deserialize(p.serialize()).serialize() == p.serialize()
        assert p.is_real()


def test_a3_numeric_equals_minus_two_pi_g2():
    a = jet()
    g2 = center_polys()[0]
    with mpmath.workdps(40):
        lhs = a[3].evaluate(POINT)
        rhs = -2 * mpmath.pi * g2.evaluate(POINT)
        assert abs(lhs - rhs) < 1e-30


def test_symbolic_center_polys_match_numeric():
    A = complex(POINT["a1"], POINT["a2"])
    B = complex(POINT["b1"], POINT["b2"])
    C = complex(POINT["c1"], POINT["c2"])
    g = center_residuals(FieldParams(0.0, A, B, C))
    for sym, num in zip(center_polys(), (g.g2, g.g3, g.g4)):
        assert abs(float(sym.evaluate(POINT).real) - num) < 1e-12


def test_jet_agrees_with_high_precision_return_map():
    # independent route: Taylor integration of the radial equation in 60 digits
    lam = FieldParams(0.0, complex(POINT["a1"], POINT["a2"]), complex(POINT["b1"], POINT["b2"]), complex(POINT["c1"], POINT["c2"]))
    x = mpmath.mpf("1e-3")
    with mpmath.workdps(60):
        a = jet().numeric(POINT, 60)
        series = sum(a[j] * x ** (j + 1) for j in range(7))
        P = poincare_map_hp(lam, x, digits=60).real
        # the remainder is O(x^8); a_3 x^3 alone is ~2e-10 here
        assert abs(P - series) < 1e-21
        assert abs(a[2] * x**3) > 1e-11


def test_constant_claims():
    rep = verify_constant_bounds(step=0.1)
    c = rep.constants
    assert abs(float(c["B1"]["value"]) - 435.1) / 435.1 < 1e-3
    assert abs(float(c["C1"]["value"]) - 464.3) / 464.3 < 1e-3
    assert all(v["pass"] for v in c.values())
    # |g2| <= 2 holds on the normalization cells; |g3| <= 30 too
    assert rep.sup_estimates["g2"]["pass"]
    assert rep.sup_estimates["g3"]["pass"]
    # grid maxima never exceed the triangle-inequality caps
    for v in rep.sup_estimates.values():
        assert v["grid_max"] <= v["triangle_cap"] * (1 + 1e-12)


def test_g4_sup_exceeds_published_cap():
    # the grid maximum of |g4| over the three cells is 48
    rep = verify_constant_bounds(step=0.1)
    assert rep.sup_estimates["g4"]["grid_max"] > 36
    assert not rep.sup_estimates["g4"]["pass"]


def test_splitting_constants():
    s = verify_splitting_constants()
    assert s["ineq_alpha"]["pass"] and s["ineq_beta"]["pass"]
    assert s["ordering_pass"]
    assert s["m4"] == pytest.approx(5 * mpmath.pi / 8 * 5e-4**7, rel=1e-12)
