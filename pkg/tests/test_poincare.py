from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qvf.bounds import beta
from qvf.errors import EmptyArc, Escape, InputError, PreconditionViolation, SingularCrossing
from qvf.field import FieldParams, normalize, singular_field
from qvf.poincare import (
    IntegratorOptions,
    admissible_radius,
    classify_tame,
    cycle_orbit,
    displacement,
    divergence_check,
    find_cycles,
    gronwall_check,
    integrate,
    integrate_batch,
    isocline_H,
    isocline_H_reduced,
    lipschitz_bound,
    max_displacement,
    poincare_map,
    strip_gap_check,
    strip_hits,
)

CENTER = FieldParams(0.0, 1, 2, 1, "N1")
TEST_FIELD = normalize(complex(1e-4, 1), 1j, 1, 0)[0]

coef = st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False)


@st.composite
def fields(draw, lambda1=st.floats(0, 0.5)):
    A, B, C = draw(coef), draw(coef), draw(coef)
    if max(abs(A), abs(B), abs(C)) < 1e-3:
        A = 1
    return normalize(complex(draw(lambda1), 1), A, B, C)[0]


# ----------------------------------------------------------------------------
# integration
# ----------------------------------------------------------------------------


@pytest.mark.parametrize("lam1", [0.0, 0.05, 0.5])
@pytest.mark.parametrize("x", [1e-4, 5e-4, 1e-3])
def test_linear_field_is_exponential(lam1, x):
    lam = FieldParams(lam1, 0, 0, 0, "Linear")
    exact = x * math.exp(2 * math.pi * lam1)
    assert abs(poincare_map(lam, x) - exact) <= 1e-9 * exact
    assert displacement(lam, x) == pytest.approx(x * (math.exp(2 * math.pi * lam1) - 1), rel=1e-8, abs=1e-15)


def test_zero_start_stays_zero():
    traj = integrate(TEST_FIELD.with_lambda1(0.0), 0j)
    assert np.all(traj.w == 0)


def test_trajectory_csv_format(tmp_path):
    traj = integrate(TEST_FIELD, 0.01 + 0j)
    path = tmp_path / "t.csv"
    traj.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "theta,re_w,im_w"
    assert len(lines) == len(traj.theta) + 1
    t, re, im = (float(v) for v in lines[-1].split(","))
    assert t == pytest.approx(2 * math.pi) and complex(re, im) == traj.end


@given(fields(), st.floats(0, 1), st.floats(0, 2 * math.pi))
def test_admissible_start_stays_in_small_disc(lam, r, phi):
    w0 = admissible_radius(lam) * r * complex(math.cos(phi), math.sin(phi))
    traj = integrate(lam, w0)
    assert np.max(np.abs(traj.w)) <= 0.01


@given(fields(st.floats(0, 0.1)))
def test_map_is_monotone_on_the_admissible_segment(lam):
    xs = np.linspace(admissible_radius(lam) / 64, admissible_radius(lam), 64)
    P = integrate_batch(lam, xs).w_end.real
    assert np.all(np.diff(P) > 0)


def test_batch_matches_single():
    xs = np.array([1e-3, 3e-3, 1e-2])
    batch = integrate_batch(TEST_FIELD, xs)
    for x, p in zip(xs, batch.w_end):
        assert p.real == pytest.approx(poincare_map(TEST_FIELD, x), rel=1e-9)


def test_center_field_has_zero_displacement():
    for x in (1e-4, 1e-3, 1e-2):
        assert abs(displacement(CENTER, x)) <= 1e-8


def test_cubic_term_of_weak_focus():
    lam = normalize(1j, 1j, 1, 0)[0]  # |c| = 1 keeps g2 = Im(AB) = 1
    ratios = [displacement(lam, x) / x**3 for x in (2e-3, 1e-3)]
    assert ratios[-1] == pytest.approx(-2 * math.pi, rel=5e-3)
    assert abs(ratios[-1] + 2 * math.pi) < abs(ratios[0] + 2 * math.pi)


def test_failures_are_reported():
    with pytest.raises(Escape):
        integrate(FieldParams(0.0, 1, 0, 0), 50 + 0j, options=IntegratorOptions(escape_cap=10))
    # the orbit through (1, 0) of z' = i z + z^2 hits the singular point at -i's isocline
    res = integrate_batch(FieldParams(0.0, 1, 0, 0), np.array([1e-3, 0.99, 5.0]), IntegratorOptions(escape_cap=10))
    assert res.failures[0] is None
    assert any(isinstance(f, (Escape, SingularCrossing)) for f in res.failures[1:])
    assert np.isnan(res.w_end[~res.ok]).all()


def test_integrator_options_validation():
    with pytest.raises(InputError):
        IntegratorOptions(rel_tol=0)


def test_admissible_radius_and_lipschitz():
    assert admissible_radius(FieldParams(0.0, 1, 0, 0)) == 0.0005
    assert admissible_radius(FieldParams(0.1, 1, 0, 0)) == 0.0005
    assert admissible_radius(FieldParams(1.0, 1, 0, 0)) == pytest.approx(0.005 * math.exp(-4 * math.pi))
    assert lipschitz_bound(FieldParams(0.05, 1, 0, 0)) == 0.2
    assert lipschitz_bound(FieldParams(0.7, 1, 0, 0)) == pytest.approx(1.4)


# ----------------------------------------------------------------------------
# cycles
# ----------------------------------------------------------------------------


def test_weak_focus_test_field_has_one_tame_cycle():
    res = find_cycles(TEST_FIELD, 0.1)
    tame = [c for c in res.cycles if c.tame]
    assert len(tame) == 1
    c = tame[0]
    assert c.x_star == pytest.approx(1e-2, rel=0.2)
    assert abs(displacement(TEST_FIELD, c.x_star)) <= 1e-9
    h = 1e-6 * c.x_star
    assert displacement(TEST_FIELD, c.x_star - h) * displacement(TEST_FIELD, c.x_star + h) < 0
    assert c.stability == -1
    assert res.a_lambda == c.x_star


def test_center_field_reports_degenerate_zero():
    res = find_cycles(CENTER, 0.1, grid_points=256)
    assert res.cycles == []
    assert res.degenerate_zero
    assert res.a_lambda is None


def test_strong_focus_linear_field_has_no_cycles():
    res = find_cycles(FieldParams(0.2, 0, 0, 0, "Linear"), 0.1, grid_points=256)
    assert res.cycles == [] and not res.degenerate_zero


def test_gate_blocks_fast_foci():
    with pytest.raises(PreconditionViolation):
        find_cycles(FieldParams(41.0, 1, 0, 0), 0.1)


def test_classification():
    # a closed orbit of the linear center leaving the disc |z| <= 1/delta
    lin = FieldParams(0.0, 0, 0, 0, "Linear")
    tame, _, rmax = classify_tame(lin, 0.1, 15.0)
    assert not tame and rmax == pytest.approx(15.0)
    # the orbit passes within delta of the singular point -i
    lam = FieldParams(0.0, 1, 0, 0)
    tame, dist, _ = classify_tame(lam, 0.9, 0.3)
    assert not tame and dist < 0.9
    tame, dist, _ = classify_tame(lam, 0.1, 0.3)
    assert tame and dist >= 0.1


# ----------------------------------------------------------------------------
# maxima, Gronwall and divergence
# ----------------------------------------------------------------------------


def test_max_displacement_examples():
    assert max_displacement(CENTER, "K", n=64).value <= 1e-8
    lam = FieldParams(0.5, 1, 0.3j, 0.2, "N1")
    rep = max_displacement(lam, "K", n=64)
    assert rep.value >= rep.eps * abs(math.exp(math.pi) - 1)
    rep = max_displacement(TEST_FIELD, "U", a_lambda=0.0099, gap=0.001, n=64)
    assert rep.value <= 1 / 0.1 + 1
    with pytest.raises(InputError):
        max_displacement(TEST_FIELD, "U", a_lambda=0.0099)


def test_gronwall_examples():
    lam = FieldParams(0.0, 1, 0.5, 0.5j)
    rep = gronwall_check(lam, 0.0005 + 0j)
    assert rep.bound == pytest.approx(0.0005 * math.exp(0.4 * math.pi))
    assert rep.bound < 0.01 and rep.ok and rep.contained
    zero = gronwall_check(lam, 0j)
    assert zero.sup_actual == 0 and zero.bound == 0
    with pytest.raises(PreconditionViolation):
        gronwall_check(lam, 0.001 + 0j)


def test_divergence_examples():
    lam = FieldParams(0.0, 1, 0.5, 0.5j)
    assert divergence_check(lam, 0.0004 + 0j).actual == 0
    slow = lam.with_lambda1(1e-24)
    rep = divergence_check(slow, 0.0005 + 0j)
    m0 = 2e-23 * 0.1
    assert 0 < rep.actual < 0.4 * m0
    assert rep.actual == pytest.approx(0.0005 * (math.exp(2 * math.pi * 1e-24) - 1), rel=0.5)
    assert rep.ok
    with pytest.raises(PreconditionViolation):
        divergence_check(lam.with_lambda1(0.5), 0.0001 + 0j)


@given(fields(st.floats(0, 0.1)), st.floats(0, 1), st.floats(0, 2 * math.pi))
def test_divergence_contract(lam, r, phi):
    w0 = 0.0005 * r * complex(math.cos(phi), math.sin(phi))
    assert divergence_check(lam, w0).ok


# ----------------------------------------------------------------------------
# the strip below the zero isocline
# ----------------------------------------------------------------------------


def test_strip_rejects_singular_field():
    with pytest.raises(PreconditionViolation):
        strip_gap_check(singular_field(0.0), 0.1, 0.1)


def test_strip_report_on_test_field():
    rep = strip_gap_check(TEST_FIELD, 0.1, 0.05)
    assert rep.beta == beta(0.1, 0.05)
    assert rep.H_l2 == pytest.approx(rep.H_l2_quadrature, rel=1e-10)
    assert rep.corollary_pass and rep.slope_pass
    assert rep.reduced_residual < 1e-12
    assert rep.isocline_residual < 1e-9
    # the closed-form floor for S (about 3.68 / delta^2) stays below the cap 7 / delta^2 for s
    assert rep.S_lower == pytest.approx(3.68 / 0.1**2 - 0.2, rel=1e-3)
    assert rep.s_upper == pytest.approx(7 / 0.1**2)
    assert not rep.bound_chain_pass


def test_strip_empty_arc():
    # A = B = 1 gives h = 2 cos(theta), so g vanishes and the isocline is empty
    with pytest.raises(EmptyArc):
        strip_gap_check(FieldParams(0.0, 1, 1, 0), 0.1, 0.1)


@given(fields(st.floats(0, 2)), st.floats(0, 2 * math.pi))
def test_isocline_identity(lam, theta):
    from qvf.field import polar_data

    p = polar_data(lam, theta)
    if abs(p.g) < 1e-3:
        return
    r = -1 / p.g
    rdot = r * (lam.lambda1 + r * p.f)
    H = isocline_H(lam, theta)
    assert abs(rdot * p.g**2 + H) <= 1e-9 * (1 + abs(H))
    if abs(lam.A) >= 1e-3:
        assert isocline_H_reduced(lam, theta) == pytest.approx(H, abs=1e-12)


def test_tame_cycle_avoids_strip():
    res = find_cycles(TEST_FIELD, 0.1)
    b = beta(0.1, 0.1)
    for c in res.cycles:
        if c.tame:
            assert strip_hits(TEST_FIELD, b, cycle_orbit(TEST_FIELD, c.x_star)) == 0
