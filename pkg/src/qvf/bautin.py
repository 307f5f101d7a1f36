"""Seven-jet of the return map at a weak focus, computed exactly.

With ``lambda1 = 0`` the complexified radial equation expands as
``dw/dtheta = sum_{i>=2} R_i(theta) w^i`` where ``R_i = (-1)^i f g^(i-2)``.
Writing ``w(theta) = sum v_i(theta) x^i`` with ``v_1 = 1`` and ``v_i(0) = 0``
gives a triangular system for the ``v_i``; each is an exact antiderivative of
products of earlier ones.  The jet coefficients are ``a_j = v_j(2 pi)``.

The decomposition of the jet in the ideal ``(g2, g3, g4)`` is checked against
cofactors transcribed from the published closed forms (``golden/``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

import mpmath
import numpy as np

from .symbolic import (
    GaussRational,
    ParamPoly,
    QuasiTrigPoly,
    build_fg,
    pp_reduce,
    qt_eval_2pi,
    qt_integrate,
)

__all__ = [
    "TranscriptionMismatch",
    "JetCoefficients",
    "AppendixCofactors",
    "DecompositionReport",
    "center_polys",
    "radial_coefficient",
    "variational_coefficients",
    "listed_rhs",
    "jet",
    "appendix_cofactors",
    "appendix_v2",
    "verify_appendix",
    "verify_constant_bounds",
    "verify_splitting_constants",
    "B1_EXPR",
    "C1_EXPR",
    "C2_EXPR",
]

MAX_ORDER = 7


class TranscriptionMismatch(Exception):
    """A jet identity with transcribed cofactors left a non-zero residual."""

    def __init__(self, j: int, residual: ParamPoly):
        super().__init__(f"a_{j} identity fails: residual has {len(residual)} terms")
        self.j = j
        self.residual = residual


# ----------------------------------------------------------------------------
# center polynomials
# ----------------------------------------------------------------------------


@lru_cache(maxsize=None)
def center_polys() -> tuple[ParamPoly, ParamPoly, ParamPoly]:
    """Symbolic ``g2 = Im(AB)``, ``g3``, ``g4`` in (a1, ..., c2)."""
    v = {n: ParamPoly.var(n) for n in ("a1", "a2", "b1", "b2", "c1", "c2")}
    I = GaussRational(0, 1)
    A = v["a1"] + v["a2"] * I
    B = v["b1"] + v["b2"] * I
    C = v["c1"] + v["c2"] * I
    Bc = B.conjugate()
    Cc = C.conjugate()
    g2 = (A * B).imag_part()
    g3 = ((A * 2 + Bc) * (A - Bc * 2) * Bc * C).imag_part()
    g4 = ((A * 2 + Bc) * (B * Bc - C * Cc) * Bc * Bc * C).imag_part()
    return g2, g3, g4


# ----------------------------------------------------------------------------
# recursion
# ----------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _fg():
    return build_fg()


@lru_cache(maxsize=None)
def _g_power(n: int) -> QuasiTrigPoly:
    if n == 0:
        return QuasiTrigPoly.one()
    return _g_power(n - 1) * _fg()[1]


@lru_cache(maxsize=None)
def radial_coefficient(i: int) -> QuasiTrigPoly:
    """``R_i`` at ``lambda1 = 0``: ``R_1 = 0`` and ``R_i = (-1)^i f g^(i-2)``."""
    if i < 1:
        raise ValueError("i must be >= 1")
    if i == 1:
        return QuasiTrigPoly.zero()
    f, _ = _fg()
    r = f * _g_power(i - 2)
    return r if i % 2 == 0 else -r


def _power_coefficient(vs: list[QuasiTrigPoly], j: int, n: int) -> QuasiTrigPoly:
    """Coefficient of ``x^n`` in ``(sum_i v_i x^i)^j`` using ``vs[i-1] = v_i``."""
    # sum over compositions n = i_1 + ... + i_j with i_k >= 1, grouped as multisets
    total = QuasiTrigPoly.zero()
    for parts in _partitions(n, j):
        counts: dict[int, int] = {}
        for p in parts:
            counts[p] = counts.get(p, 0) + 1
        mult = math.factorial(j)
        for c in counts.values():
            mult //= math.factorial(c)
        term = QuasiTrigPoly.const(mult)
        for p, c in counts.items():
            if p == 1:
                continue  # v_1 = 1
            term = term * _pow_cached(vs, p, c)
        total = total + term
    return total


_POW_CACHE: dict = {}


def _pow_cached(vs, p, c):
    key = (id(vs), p, c)
    if key not in _POW_CACHE:
        _POW_CACHE[key] = vs[p - 1] ** c
    return _POW_CACHE[key]


def _partitions(n: int, j: int, largest: int | None = None):
    """Partitions of ``n`` into exactly ``j`` positive parts, non-increasing."""
    if largest is None:
        largest = n
    if j == 0:
        if n == 0:
            yield ()
        return
    for first in range(min(n - (j - 1), largest), 0, -1):
        for rest in _partitions(n - first, j - 1, first):
            yield (first,) + rest


@lru_cache(maxsize=None)
def _variational(n: int) -> tuple[QuasiTrigPoly, ...]:
    if n == 1:
        return (QuasiTrigPoly.one(),)
    prev = list(_variational(n - 1))
    rhs = QuasiTrigPoly.zero()
    for j in range(2, n + 1):
        rhs = rhs + radial_coefficient(j) * _power_coefficient(prev, j, n)
    v_n = qt_integrate(rhs)
    v_n.real_valued = True
    return tuple(prev) + (v_n,)


def variational_coefficients(n: int = MAX_ORDER) -> list[QuasiTrigPoly]:
    """``v_1 .. v_n`` of the expansion ``w(theta) = sum v_i(theta) x^i``."""
    if not 1 <= n <= MAX_ORDER:
        raise ValueError(f"n must be in 1..{MAX_ORDER}")
    return list(_variational(n))


def listed_rhs(vs: list[QuasiTrigPoly], n: int) -> QuasiTrigPoly:
    """Right-hand side of ``dv_n/dtheta`` written out term by term (n = 2..7).

    Kept separate from the generic power-coefficient code so the two can be
    checked against each other.
    """
    R = radial_coefficient
    v = [None] + list(vs)
    if n == 2:
        return v[1] * v[1] * R(2)
    if n == 3:
        return v[1] * v[2] * R(2) * 2 + v[1] ** 3 * R(3)
    if n == 4:
        return (v[1] * v[3] * 2 + v[2] * v[2]) * R(2) + v[1] * v[1] * v[2] * R(3) * 3 + v[1] ** 4 * R(4)
    if n == 5:
        return (
            (v[1] * v[4] + v[2] * v[3]) * R(2) * 2
            + v[1] * (v[1] * v[3] + v[2] * v[2]) * R(3) * 3
            + v[1] ** 3 * v[2] * R(4) * 4
            + v[1] ** 5 * R(5)
        )
    if n == 6:
        return (
            (v[1] * v[5] * 2 + v[2] * v[4] * 2 + v[3] * v[3]) * R(2)
            + (v[1] * v[1] * v[4] * 3 + v[1] * v[2] * v[3] * 6 + v[2] ** 3) * R(3)
            + v[1] * v[1] * (v[1] * v[3] * 2 + v[2] * v[2] * 3) * R(4) * 2
            + v[1] ** 4 * v[2] * R(5) * 5
            + v[1] ** 6 * R(6)
        )
    if n == 7:
        return (
            (v[1] * v[6] + v[2] * v[5] + v[3] * v[4]) * R(2) * 2
            + (v[1] * v[1] * v[5] + v[1] * v[2] * v[4] * 2 + v[1] * v[3] * v[3] + v[2] * v[2] * v[3]) * R(3) * 3
            + v[1] * (v[1] * v[1] * v[4] + v[1] * v[2] * v[3] * 3 + v[2] ** 3) * R(4) * 4
            + v[1] ** 3 * (v[2] * v[2] * 2 + v[1] * v[3]) * R(5) * 5
            + v[1] ** 5 * v[2] * R(6) * 6
            + v[1] ** 7 * R(7)
        )
    raise ValueError("listed right-hand sides exist for n = 2..7")


@dataclass(frozen=True)
class JetCoefficients:
    """``a_1 .. a_7`` of ``P(x) = sum a_j x^j`` at ``lambda1 = 0``."""

    a: tuple[ParamPoly, ...]

    def __getitem__(self, j: int) -> ParamPoly:
        """1-based access: ``jet[3]`` is ``a_3``."""
        return self.a[j - 1]

    def numeric(self, values: dict, digits: int = 50) -> list:
        with mpmath.workdps(digits):
            return [p.evaluate(values).real for p in self.a]


@lru_cache(maxsize=None)
def jet() -> JetCoefficients:
    vs = variational_coefficients(MAX_ORDER)
    return JetCoefficients(tuple(qt_eval_2pi(v) for v in vs))


# ----------------------------------------------------------------------------
# transcribed closed forms
# ----------------------------------------------------------------------------

_COFACTOR_NAMES = ("alpha0", "beta0", "beta1", "gamma0", "gamma1", "gamma2")


def _read_resource(name: str) -> str:
    return resources.files("qvf").joinpath("golden", name).read_text()


@dataclass(frozen=True)
class AppendixCofactors:
    alpha0: ParamPoly
    beta0: ParamPoly
    beta1: ParamPoly
    gamma0: ParamPoly
    gamma1: ParamPoly
    gamma2: ParamPoly


def transcription_source() -> dict[str, str]:
    """The cofactor expressions as typed from the printed closed forms."""
    out = {}
    for line in _read_resource("cofactors.expr").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            name, _, expr = line.partition("=")
            out[name.strip()] = expr.strip()
    return out


@lru_cache(maxsize=None)
def appendix_cofactors() -> AppendixCofactors:
    src = transcription_source()
    return AppendixCofactors(**{n: ParamPoly.parse(src[n]) for n in _COFACTOR_NAMES})


def appendix_v2() -> QuasiTrigPoly:
    return QuasiTrigPoly.parse(_read_resource("v2.expr").strip())


# ----------------------------------------------------------------------------
# verification
# ----------------------------------------------------------------------------


@dataclass
class DecompositionReport:
    residuals: dict[int, ParamPoly] = field(default_factory=dict)
    remainders: dict[int, ParamPoly] = field(default_factory=dict)
    constants: dict[str, dict] = field(default_factory=dict)
    sup_estimates: dict[str, dict] = field(default_factory=dict)

    @property
    def identities_pass(self) -> bool:
        return all(r.is_zero() for r in self.residuals.values()) and all(
            r.is_zero() for r in self.remainders.values()
        )

    def to_json(self) -> dict:
        return {
            "a1_is_one": jet()[1] == ParamPoly.one(),
            "a2_is_zero": jet()[2].is_zero(),
            "residuals": {
                str(j): {"zero": r.is_zero(), "terms": len(r)} for j, r in sorted(self.residuals.items())
            },
            "remainders": {
                str(j): {"zero": r.is_zero(), "terms": len(r)} for j, r in sorted(self.remainders.items())
            },
            "constants": self.constants,
            "sup_estimates": self.sup_estimates,
            "pass": self.identities_pass,
        }


def verify_appendix(raise_on_mismatch: bool = False) -> DecompositionReport:
    """Test the printed decompositions of ``a_3, a_5, a_7`` and membership of ``a_4, a_6``."""
    a = jet()
    g2, g3, g4 = center_polys()
    cf = appendix_cofactors()
    report = DecompositionReport()
    report.residuals[3] = a[3] - cf.alpha0 * g2
    report.residuals[5] = a[5] - (cf.beta0 * g3 + cf.beta1 * g2)
    report.residuals[7] = a[7] - (cf.gamma0 * g4 + cf.gamma1 * g3 + cf.gamma2 * g2)
    for j in (4, 6):
        _, rem = pp_reduce(a[j], [g2, g3, g4])
        report.remainders[j] = rem
    if raise_on_mismatch:
        for j, r in report.residuals.items():
            if not r.is_zero():
                raise TranscriptionMismatch(j, r)
    return report


# Closed forms of the cofactor bounds, as printed.
B1_EXPR = "2*pi/9*(284 + 108*pi)"
C1_EXPR = "pi/72*(5816 + 1536*pi)"
C2_EXPR = "pi*(5019144 + 2565120*pi + 345600*pi^2)/1080"


def _eval_const(expr: str, digits: int):
    with mpmath.workdps(digits):
        return ParamPoly.parse(expr).evaluate({}).real


def _cell_grids(step: float):
    """Parameter grids (A, B, C) over the three normalized cells."""
    def disc(radius):
        n = int(round(radius / step))
        xs = np.arange(-n, n + 1) * step
        X, Y = np.meshgrid(xs, xs, indexing="ij")
        Z = (X + 1j * Y).ravel()
        return Z[np.abs(Z) <= radius + 1e-12]

    unit = disc(1.0)
    big = disc(2.0)
    return {
        "N1": ("B", big, "C", unit, {"A": 1.0}),
        "N2": ("A", unit, "C", unit, {"B": 2.0}),
        "N3": ("A", unit, "B", big, {"C": 1.0}),
    }


def _g_numeric(A, B, C):
    Bc = np.conj(B)
    g2 = np.imag(A * B)
    g3 = np.imag((2 * A + Bc) * (A - 2 * Bc) * Bc * C)
    g4 = np.imag((2 * A + Bc) * (np.abs(B) ** 2 - np.abs(C) ** 2) * Bc**2 * C)
    return g2, g3, g4


def verify_constant_bounds(step: float = 0.05, digits: int = 50) -> DecompositionReport:
    """Numeric constants ``B1, C1, C2`` and grid sups of ``|g2|, |g3|, |g4|`` per cell."""
    report = DecompositionReport()
    B1 = _eval_const(B1_EXPR, digits)
    C1 = _eval_const(C1_EXPR, digits)
    C2 = _eval_const(C2_EXPR, digits)
    report.constants = {
        "B1": {"value": mpmath.nstr(B1, 15), "claim": "< 500", "pass": bool(B1 < 500)},
        "C1": {"value": mpmath.nstr(C1, 15), "claim": "< 500", "pass": bool(C1 < 500)},
        "C2": {"value": mpmath.nstr(C2, 15), "claim": "in [4e4, 1e5]", "pass": bool(4e4 <= C2 <= 1e5)},
    }
    claims = {"g2": 2.0, "g3": 30.0, "g4": 36.0}
    sups = {name: {} for name in claims}
    for cell, (n1, z1, n2, z2, fixed) in _cell_grids(step).items():
        best = {name: (0.0, None) for name in claims}
        for chunk in np.array_split(z1, max(1, len(z1) // 256)):
            P = chunk[:, None]
            Q = z2[None, :]
            vals = {n1: P, n2: Q}
            A = vals.get("A", fixed.get("A"))
            B = vals.get("B", fixed.get("B"))
            C = vals.get("C", fixed.get("C"))
            A, B, C = np.broadcast_arrays(np.asarray(A, dtype=complex), np.asarray(B, dtype=complex), np.asarray(C, dtype=complex))
            for name, arr in zip(claims, _g_numeric(A, B, C)):
                idx = np.unravel_index(np.argmax(np.abs(arr)), arr.shape)
                val = float(np.abs(arr[idx]))
                if val > best[name][0]:
                    best[name] = (val, (complex(A[idx]), complex(B[idx]), complex(C[idx])))
        for name in claims:
            val, arg = best[name]
            sups[name][cell] = {"grid_max": val, "argmax": [[z.real, z.imag] for z in arg] if arg else None}
    caps = {"g2": 1.0 * 2.0, "g3": 4.0 * 5.0 * 2.0 * 1.0, "g4": 4.0 * 4.0 * 4.0 * 1.0}
    for name, claim in claims.items():
        grid_max = max(v["grid_max"] for v in sups[name].values())
        report.sup_estimates[name] = {
            "claim": claim,
            "grid_max": grid_max,
            "triangle_cap": caps[name],
            "grid_step": step,
            "pass": grid_max <= claim * (1 + 1e-12),
            "cells": sups[name],
        }
    return report


def verify_splitting_constants(alpha: float = 2e-8, beta: float = 1e-5, eps: float = 5e-4, digits: int = 50) -> dict:
    """Check the inequalities that choose the split of the sigma-distant set.

    ``alpha (1 + B1/|beta0|) <= beta/2`` and ``beta (1 + C2/|gamma0|) <= 1/2``,
    then the per-piece lower constants ``m2, m3, m4``.
    """
    with mpmath.workdps(digits):
        a = mpmath.mpf(alpha)
        b = mpmath.mpf(beta)
        e = mpmath.mpf(eps)
        B1 = _eval_const(B1_EXPR, digits)
        C2 = _eval_const(C2_EXPR, digits)
        alpha0 = 2 * mpmath.pi
        beta0 = 2 * mpmath.pi / 3
        gamma0 = 5 * mpmath.pi / 4
        lhs_alpha = a * (1 + B1 / beta0)
        lhs_beta = b * (1 + C2 / gamma0)
        m2 = alpha0 * a * e**3
        m3 = beta0 * b / 2 * e**5
        m4 = gamma0 / 2 * e**7
        stated = mpmath.mpf("2e-23")
        return {
            "alpha": alpha,
            "beta": beta,
            "eps": eps,
            "ineq_alpha": {"lhs": float(lhs_alpha), "rhs": float(b / 2), "pass": bool(lhs_alpha <= b / 2)},
            "ineq_beta": {"lhs": float(lhs_beta), "rhs": 0.5, "pass": bool(lhs_beta <= mpmath.mpf("0.5"))},
            "m2": float(m2),
            "m3": float(m3),
            "m4": float(m4),
            "ordering_pass": bool(m2 > m3 > m4),
            "stated_floor": float(stated),
            "m4_over_stated_floor": float(m4 / stated),
            "m4_exceeds_stated_floor": bool(m4 > stated),
        }
