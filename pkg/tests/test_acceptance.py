"""Acceptance suite: one test per criterion, summarized as PASS/FAIL lines.

Run with ``pytest tests/test_acceptance.py -v`` or as a script.
"""

from __future__ import annotations

import json
import math
import subprocess
import sys
import time

import mpmath
import numpy as np
import pytest

from qvf.bautin import appendix_v2, jet, variational_coefficients, verify_constant_bounds, verify_splitting_constants
from qvf.bounds import beta, bernstein_cap, geom_exponent, hilbert_bound
from qvf.field import FieldParams, normalize, singular_decomposition
from qvf.poincare import cycle_orbit, find_cycles, poincare_map, poincare_map_hp, strip_hits
from qvf.properties import random_field, run_suites


def _detail(record, text: str) -> None:
    record("detail", text)


@pytest.mark.criterion(1, "symbolic jet identities")
def test_criterion_1_jet_identities(record_property):
    # fresh interpreter so the timing includes building the jet from scratch
    script = (
        "import json, time\n"
        "t = time.perf_counter()\n"
        "from qvf.bautin import verify_appendix\n"
        "doc = verify_appendix().to_json()\n"
        "doc['seconds'] = time.perf_counter() - t\n"
        "print(json.dumps(doc, default=str))\n"
    )
    out = subprocess.run([sys.executable, "-c", script], capture_output=True, text=True, check=True)
    doc = json.loads(out.stdout)
    _detail(record_property, f"{doc['seconds']:.1f} s")
    assert doc["a1_is_one"] and doc["a2_is_zero"]
    assert all(r["zero"] for r in doc["residuals"].values()) and set(doc["residuals"]) == {"3", "5", "7"}
    assert all(r["zero"] for r in doc["remainders"].values()) and set(doc["remainders"]) == {"4", "6"}
    assert doc["pass"]
    assert doc["seconds"] < 120


@pytest.mark.criterion(2, "v2 closed form")
def test_criterion_2_v2_closed_form(record_property):
    computed = variational_coefficients()[1].serialize()
    printed = appendix_v2().serialize()
    _detail(record_property, f"{len(computed)} chars")
    assert computed == printed


@pytest.mark.criterion(3, "constant checks")
def test_criterion_3_constants(record_property):
    rep50 = verify_constant_bounds(step=0.25, digits=50).constants
    rep80 = verify_constant_bounds(step=0.25, digits=80).constants
    vals = {k: mpmath.mpf(v["value"]) for k, v in rep50.items()}
    for k in vals:
        # the 50-digit value is accurate to far better than 1e-6 relative
        assert abs(vals[k] / mpmath.mpf(rep80[k]["value"]) - 1) < 1e-6
    assert abs(vals["B1"] - mpmath.mpf("435.1")) < 0.05 and vals["B1"] < 500
    assert abs(vals["C1"] - mpmath.mpf("464.3")) < 0.05 and vals["C1"] < 500
    assert 4e4 <= vals["C2"] <= 1e5
    assert all(v["pass"] for v in rep50.values())
    split = verify_splitting_constants(alpha=2e-8, beta=1e-5, digits=50)
    assert split["ineq_alpha"]["pass"] and split["ineq_beta"]["pass"]
    assert split["m2"] > split["m3"] > split["m4"]
    assert split["ordering_pass"]
    _detail(
        record_property,
        f"B1={float(vals['B1']):.4f} C1={float(vals['C1']):.4f} C2={float(vals['C2']):.1f} "
        f"m4={split['m4']:.4e} (ratio to 2e-23: {split['m4_over_stated_floor']:.4f})",
    )


@pytest.mark.criterion(4, "numeric return map")
def test_criterion_4_return_map(record_property):
    worst = 0.0
    for lam1 in (0.0, 0.05, 0.5):
        lin = FieldParams(lam1, 0, 0, 0, "Linear")
        for x in (1e-6, 1e-5, 1e-4, 5e-4, 1e-3):
            err = abs(poincare_map(lin, x) - x * math.exp(2 * math.pi * lam1))
            worst = max(worst, err)
    assert worst <= 1e-9

    rng = np.random.default_rng(20240611)
    a = jet()
    ratios = []
    for _ in range(10):
        lam = random_field(rng, lambda1=0.0)
        vals = {
            "a1": lam.A.real, "a2": lam.A.imag,
            "b1": lam.B.real, "b2": lam.B.imag,
            "c1": lam.C.real, "c2": lam.C.imag,
        }
        with mpmath.workdps(60):
            coeffs = a.numeric(vals, 60)

            def E(x):
                x = mpmath.mpf(x)
                series = sum(coeffs[j] * x ** (j + 1) for j in range(7))
                return abs(poincare_map_hp(lam, x, digits=60).real - series)

            ratios.append(float(E("1e-3") / E("5e-4")))
    _detail(record_property, f"linear max err {worst:.2e}; jet ratios {min(ratios):.1f}..{max(ratios):.1f}")
    assert all(64 <= r <= 1024 for r in ratios)


@pytest.mark.criterion(5, "cycle detection")
def test_criterion_5_cycle_detection(record_property):
    lam, _ = normalize(complex(1e-4, 1), 1j, 1, 0)
    res = find_cycles(lam, 0.1)
    tame = [c for c in res.cycles if c.tame]
    assert len(tame) == 1
    x_star = tame[0].x_star
    assert x_star == pytest.approx(1e-2, rel=0.2)

    center = FieldParams(0.0, 1, 2, 1, "N1")
    cres = find_cycles(center, 0.1, grid_points=256)
    _detail(record_property, f"x*={x_star:.6g}; center: {len(cres.degenerate_zero)} degenerate interval(s)")
    assert cres.cycles == []
    assert cres.degenerate_zero


@pytest.mark.criterion(6, "property suites")
def test_criterion_6_property_suites(record_property):
    t0 = time.perf_counter()
    doc = run_suites(seed=16)
    elapsed = time.perf_counter() - t0
    suites = doc["suites"]
    summary = ", ".join(f"{k} {v['cases'] - v['skipped']}/{v['cases']}" for k, v in suites.items())
    _detail(record_property, f"{elapsed:.0f} s; {summary}; isocline checked as r' g^2 = -H")
    assert set(suites) == {"gronwall", "divergence", "trig_lower_bound", "zero_bound", "parseval", "isocline"}
    assert all(100 <= v["cases"] <= 1000 for v in suites.values())
    for name, v in suites.items():
        assert v["pass"], (name, v["examples"])
    assert elapsed < 600


@pytest.mark.criterion(7, "bound evaluator")
def test_criterion_7_bound_evaluator(record_property):
    H = hilbert_bound(0.1, 0.1, 0.1)
    with mpmath.workdps(50):
        rel = abs(H.lnln / mpmath.mpf(10) ** 58 - 1)
    g = geom_exponent(0.1, 0.1)
    cap = bernstein_cap(0.1, 0.1)
    _detail(record_property, f"lnlnH rel err {float(rel):.1e}; geom {g:.6e}; cap {cap:.3f}")
    assert rel < 1e-12
    assert g == pytest.approx(1e10, rel=1e-4)
    assert cap == pytest.approx(603.8, rel=1e-3)


def _strip_family(n: int = 20, seed: int = 8):
    """N1 fields with ``g2 > 0``, kappa-distance >= 0.05 and a cycle near ``x`` in [0.005, 0.02]."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        B = complex(rng.uniform(-1.2, 1.2), rng.uniform(0.2, 1.2))
        C = complex(*rng.uniform(-0.6, 0.6, 2))
        x_target = rng.uniform(0.005, 0.02)
        lam = FieldParams(B.imag * x_target**2, 1, B, C, "N1")
        if singular_decomposition(lam).kappa_distance >= 0.05:
            out.append(lam)
    return out


@pytest.mark.criterion(8, "tame cycles avoid the strip")
def test_criterion_8_strip_avoidance(record_property):
    delta, kappa = 0.1, 0.05
    b = beta(delta, kappa)
    checked = 0
    hits = 0
    for lam in _strip_family():
        res = find_cycles(lam, delta)
        for c in res.cycles:
            if c.tame:
                checked += 1
                hits += strip_hits(lam, b, cycle_orbit(lam, c.x_star))
    _detail(record_property, f"beta={b:.1e}; {checked} tame cycles, {hits} strip samples")
    assert checked > 0
    assert hits == 0


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v", "-p", "no:cacheprovider"]))
