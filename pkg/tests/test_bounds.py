from __future__ import annotations

import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qvf.bounds import (
    LogLogMagnitude,
    TrigCubic,
    bernstein_cap,
    beta,
    bound_report,
    chaining_check,
    gap_eps,
    gap_L,
    geom_exponent,
    hilbert_bound,
    hilbert_exponent,
    kappa_prime,
    ln_zero_bound,
    lower_m,
    polar_distance_threshold,
    root_distance,
    root_distance_threshold,
    trig_min_bound,
    trig_roots,
    zero_bound,
)
from qvf.errors import DomainError, EmptyRegion, ZeroPolynomial

unit = st.floats(1e-3, 0.1)


# ----------------------------------------------------------------------------
# zero counting
# ----------------------------------------------------------------------------


def test_zero_bound_examples():
    assert zero_bound(2.0, 2.0, 0.5, 0.5) == 0
    assert zero_bound(math.e, 1.0, 0.5, 0.5) == pytest.approx(math.exp(2))
    for n in range(1, 12):
        # z^n on K = [0, 1/2] inside the unit disc: M = 1, m = 2^-n, n zeros at 0
        b = zero_bound(1.0, 2.0**-n, 0.5, 0.5)
        assert b == pytest.approx(n * math.log(2) * math.exp(2))
        assert b >= n
    assert ln_zero_bound(10.0, 1.0, 0.5, 0.5) == pytest.approx(math.log(math.log(10)) + 2)
    assert zero_bound(10.0, 1.0, 1000.0, 1.0) == math.inf
    with pytest.raises(DomainError):
        zero_bound(1.0, 2.0, 0.5, 0.5)
    with pytest.raises(DomainError):
        zero_bound(1.0, 0.0, 0.5, 0.5)


@given(st.lists(st.floats(0, 0.5), min_size=1, max_size=5))
def test_zero_bound_dominates_real_zero_count(roots):
    p = np.poly(roots)
    circle = np.exp(2j * np.pi * np.arange(2048) / 2048)
    M = float(np.max(np.abs(np.polyval(p, circle))))
    m = float(np.max(np.abs(np.polyval(p, np.linspace(0, 0.5, 2049)))))
    assert zero_bound(M, m, 0.5, 0.5) >= len(roots)


# ----------------------------------------------------------------------------
# closed forms
# ----------------------------------------------------------------------------


def test_lower_m_examples():
    assert lower_m(0.0, 0.1, 0.05) == mpmath.mpf("5e-28")
    with mpmath.workdps(30):
        assert lower_m(1.0, 0.1, 0.05) == mpmath.mpf(10) ** -260
    assert lower_m(0.1, 0.1, 0.1) == mpmath.mpf("1e-27")
    with pytest.raises(DomainError):
        lower_m(-1.0, 0.1, 0.1)


def test_beta_and_kappa_prime():
    assert beta(0.1, 0.1) == pytest.approx(1e-25, rel=1e-12)
    assert kappa_prime(0.1, 0.1) == pytest.approx(2.946e-21, rel=1e-3)
    assert beta(0.1, 0.05) == pytest.approx(beta(0.1, 0.1) / 2, rel=1e-12)


def test_gap_and_geometric_factor():
    assert gap_L(0.1, 0.1) == pytest.approx(6.145e8, rel=1e-12)
    assert geom_exponent(0.1, 0.1) == pytest.approx((1e5 - 1) * 1e3 * 1e2, rel=1e-12)
    assert gap_eps(0.1, 0.1) == pytest.approx(math.log(0.01 / 32) - 2 * math.pi * 6.145e8, rel=1e-12)


def test_bernstein_cap():
    expected = math.log(2) + math.log(10) + 260 * math.log(10) + math.log(10)
    assert bernstein_cap(0.1, 0.1) == pytest.approx(expected, rel=1e-12)
    assert bernstein_cap(0.1, 0.1) == pytest.approx(603.8, rel=1e-3)
    # cap >= ln(M / m) with M <= 1/delta + 1 and m from lower_m
    for lam1 in (0.0, 0.05, 1.0):
        M = 1 / 0.1 + 1
        m = lower_m(lam1, 0.1, 0.1)
        assert bernstein_cap(0.1, 0.1) >= float(mpmath.log(M / m))


def test_hilbert_bound_value():
    H = hilbert_bound(0.1, 0.1, 0.1)
    with mpmath.workdps(50):
        assert abs(H.lnln / mpmath.mpf(10) ** 58 - 1) < 1e-12
    assert H.linear_correction == pytest.approx(math.log(math.log(10)))
    assert bound_report(0.1, 0.1, 0.1).to_json()["lnlnH"] == 1e58


@given(unit, unit)
def test_closed_forms_are_monotone(a, b):
    lo, hi = sorted((a, b))
    if lo == hi:
        return
    assert geom_exponent(lo, 0.05) > geom_exponent(hi, 0.05)
    assert geom_exponent(0.05, lo) > geom_exponent(0.05, hi)
    assert gap_L(lo, 0.05) > gap_L(hi, 0.05)
    assert beta(lo, 0.05) < beta(hi, 0.05)
    assert beta(0.05, lo) < beta(0.05, hi)
    assert kappa_prime(lo, 0.05) < kappa_prime(hi, 0.05)
    assert bernstein_cap(lo, 0.05) > bernstein_cap(hi, 0.05)
    assert bernstein_cap(0.05, lo) > bernstein_cap(0.05, hi)
    assert hilbert_exponent(lo, 0.05) > hilbert_exponent(hi, 0.05)
    assert hilbert_exponent(0.05, lo) > hilbert_exponent(0.05, hi)
    assert hilbert_bound(lo, 0.05, 0.05) > hilbert_bound(hi, 0.05, 0.05)
    assert lower_m(0.0, 0.05, lo) < lower_m(0.0, 0.05, hi)


def test_hilbert_order_matches_high_precision_evaluation():
    grid = [(d, s, k) for d, s, k in zip(np.linspace(0.02, 0.1, 10), np.linspace(0.1, 0.01, 10), np.linspace(0.05, 0.09, 10)[::-1])]
    mags = [hilbert_bound(float(d), float(s), float(k)) for d, s, k in grid]
    exact = [m.exact_lnln(60) for m in mags]
    for i in range(len(mags)):
        for j in range(len(mags)):
            assert (mags[i] < mags[j]) == (exact[i] < exact[j])


def test_sigma_enters_only_through_the_prefactor():
    a = hilbert_bound(0.1, 0.1, 0.1)
    b = hilbert_bound(0.1, 0.01, 0.1)
    assert a.lnln == b.lnln
    assert b.linear_correction - a.linear_correction == pytest.approx(math.log(2))
    assert b > a


def test_domain_checks():
    for bad in (0.0, -0.1, 0.2):
        with pytest.raises(DomainError):
            beta(bad, 0.1)
        with pytest.raises(DomainError):
            hilbert_bound(0.1, bad, 0.1)


# ----------------------------------------------------------------------------
# trigonometric cubics
# ----------------------------------------------------------------------------


def test_sin_cubed():
    H = TrigCubic((0, 0, 0, 1))
    roots = trig_roots(H)
    assert roots.A == pytest.approx(1)
    assert all(abs(t) < 1e-12 for t in roots.thetas)
    lower, emp = trig_min_bound(H, 0.5)
    norm = math.sqrt(5 * math.pi / 8)  # int_0^{2 pi} sin^6 = 5 pi / 8
    assert H.l2_norm == pytest.approx(norm, rel=1e-12)
    assert lower == pytest.approx(0.125 / 24 * norm, rel=1e-12)
    assert emp == pytest.approx(math.sin(0.5) ** 3, rel=1e-3)
    assert emp >= lower


def test_sin_cos_squared_reconstructs():
    roots = trig_roots(TrigCubic((0, 1, 0, 0)))
    assert roots.reconstruction_error < 1e-12


def test_zero_form_and_alpha_limits():
    with pytest.raises(ZeroPolynomial):
        trig_roots(TrigCubic((0, 0, 0, 0)))
    H = TrigCubic((1, -2, 0.5, 3))
    lows = [trig_min_bound(H, a)[0] for a in (0.1, 0.01, 0.001)]
    assert lows[0] > lows[1] > lows[2] and lows[2] < 1e-8
    # -sin(3t)/4 has roots every pi/3, so no theta is 0.6 away from all of them
    with pytest.raises(EmptyRegion):
        trig_min_bound(TrigCubic((0, 3, 0, -1)), 0.6)


def test_root_pair_at_infinity():
    # cos^3 + cos sin^2 = cos: only the root pi/2 is finite
    r = trig_roots(TrigCubic((1, 0, 1, 0)))
    assert len(r.thetas) == 1 and r.thetas[0].real == pytest.approx(math.pi / 2)
    assert r.A == pytest.approx(-1) and r.reconstruction_error < 1e-12
    lower, emp = trig_min_bound(TrigCubic((1, 0, 1, 0)), 0.5)
    assert emp == pytest.approx(math.sin(0.5), rel=1e-3) and emp >= lower


coefs = st.tuples(*[st.floats(-5, 5)] * 4).filter(lambda c: max(map(abs, c)) > 1e-3)


@given(coefs, st.floats(0.001, 0.9))
def test_trig_lower_bound_contract(c, alpha):
    H = TrigCubic(c)
    try:
        lower, emp = trig_min_bound(H, alpha)
    except EmptyRegion:
        return
    assert emp >= lower


@given(coefs)
def test_trig_roots_contracts(c):
    H = TrigCubic(c)
    r = trig_roots(H)
    assert r.reconstruction_error < 1e-6
    # roots of a real form are closed under conjugation (mod pi)
    for t in r.thetas:
        if abs(t.imag) > 1e-9:
            assert min(abs(np.sin(t.conjugate() - u)) for u in r.thetas) < 1e-6


@given(coefs)
def test_parseval_against_quadrature(c):
    H = TrigCubic(c)
    assert H.l2_norm == pytest.approx(H.l2_quadrature(), rel=1e-10)


def test_fit_recovers_coefficients():
    H = TrigCubic((0.3, -1.2, 2.0, 0.7))
    assert np.allclose(TrigCubic.fit(H).c, H.c)


def test_root_distance_is_periodic():
    roots = (complex(0.3, 0.0), complex(1.0, 0.2))
    t = np.array([0.1, 1.5, 2.9])
    assert np.allclose(root_distance(t, roots), root_distance(t + math.pi, roots))


def test_thresholds_and_chaining():
    assert root_distance_threshold(0.1) == pytest.approx(1e-6)
    assert root_distance_threshold(0.0) == 0
    assert polar_distance_threshold(0.1) == pytest.approx(2 * 0.01 / 3)
    ch = chaining_check(0.1)
    assert ch["slope_pass"] and ch["g_floor_pass"] and ch["triangle_pass"]
    assert ch["alpha_sqrt_L2p1"] < ch["delta2_over_6"]
