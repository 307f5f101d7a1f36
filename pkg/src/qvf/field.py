"""Quadratic vector fields ``z' = mu z + A z^2 + B z zbar + C zbar^2``.

A field is *normalized* when ``mu = lambda1 + i`` with ``lambda1 >= 0`` and
the quadratic part sits in one of three cells:

* ``N1``: ``A = 1``, ``|B| <= 2``, ``|C| <= 1``
* ``N2``: ``B = 2``, ``|A| <= 1``, ``|C| <= 1``
* ``N3``: ``C = 1``, ``|A| <= 1``, ``|B| <= 2``

Complex numbers are plain Python ``complex`` values throughout.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import Degenerate, FormMismatch, InputError, ZeroImaginaryPart

__all__ = [
    "FORMS",
    "FieldParams",
    "Transform",
    "CenterResiduals",
    "SingularDecomposition",
    "SingularPoint",
    "SingularPointSet",
    "PolarData",
    "normalize",
    "center_residuals",
    "sigma_distance",
    "singular_decomposition",
    "singular_field",
    "singular_points",
    "singular_set_or_degenerate",
    "relative_residual",
    "singular_distance",
    "in_tame_region",
    "tame_region_mask",
    "polar_data",
    "lambda1_gate",
    "field_from_json",
    "field_to_json",
]

FORMS = ("N1", "N2", "N3", "Linear", "raw")
_BOUND_SLACK = 1e-12


@dataclass(frozen=True)
class FieldParams:
    """Field with ``mu = lambda1 + i``.

    ``form`` is one of the normalized cells, ``"Linear"`` (no quadratic part,
    numeric tests only) or ``"raw"`` for unnormalized coefficients that still
    have ``Im mu = 1``.
    """

    lambda1: float
    A: complex
    B: complex
    C: complex
    form: str = "raw"

    def __post_init__(self):
        object.__setattr__(self, "lambda1", float(self.lambda1))
        for name in ("A", "B", "C"):
            object.__setattr__(self, name, complex(getattr(self, name)))
        self._validate()

    def _validate(self):
        vals = (self.lambda1, self.A.real, self.A.imag, self.B.real, self.B.imag, self.C.real, self.C.imag)
        if not all(math.isfinite(v) for v in vals):
            raise InputError("field coefficients must be finite")
        if self.form not in FORMS:
            raise InputError(f"unknown form {self.form!r}")
        if self.lambda1 < 0 and self.form != "raw":
            raise InputError("lambda1 must be >= 0")
        lim = 1 + _BOUND_SLACK
        A, B, C = abs(self.A), abs(self.B), abs(self.C)
        ok = {
            "N1": self.A == 1 and B <= 2 * lim and C <= lim,
            "N2": self.B == 2 and A <= lim and C <= lim,
            "N3": self.C == 1 and A <= lim and B <= 2 * lim,
            "Linear": self.A == 0 and self.B == 0 and self.C == 0,
            "raw": True,
        }[self.form]
        if not ok:
            raise InputError(f"coefficients violate the {self.form} cell bounds")

    @property
    def mu(self) -> complex:
        return complex(self.lambda1, 1.0)

    @property
    def coefficients(self) -> tuple[complex, complex, complex, complex]:
        return self.mu, self.A, self.B, self.C

    @classmethod
    def infer(cls, lambda1: float, A: complex, B: complex, C: complex) -> "FieldParams":
        """Tag coefficients with the first cell (N1, N2, N3) they satisfy."""
        for form in ("Linear", "N1", "N2", "N3"):
            try:
                return cls(lambda1, A, B, C, form)
            except InputError:
                continue
        raise FormMismatch("coefficients are not in a normalized cell; use normalize()")

    def with_lambda1(self, lambda1: float) -> "FieldParams":
        return FieldParams(lambda1, self.A, self.B, self.C, self.form)

    def vector(self, z):
        """Value of the field at ``z`` (scalar or array)."""
        zb = np.conj(z)
        return self.mu * z + self.A * z * z + self.B * z * zb + self.C * zb * zb


@dataclass(frozen=True)
class Transform:
    """Substitute ``z = c w`` and ``t = c' tau``, then optionally ``tau -> -tau`` with ``w -> conj w``.

    The flip maps ``(mu, A, B, C)`` to ``(-conj mu, -conj A, -conj B, -conj C)``.
    """

    c: complex = 1 + 0j
    c_prime: float = 1.0
    conjugated: bool = False
    time_reversed: bool = False

    def apply(self, mu: complex, A: complex, B: complex, C: complex) -> tuple[complex, complex, complex, complex]:
        c, cp = self.c, self.c_prime
        cb = c.conjugate()
        mu1, A1, B1, C1 = cp * mu, cp * c * A, cp * cb * B, cp * (cb * cb / c) * C
        if self.time_reversed:
            mu1, A1, B1, C1 = -mu1, -A1, -B1, -C1
        if self.conjugated:
            mu1, A1, B1, C1 = mu1.conjugate(), A1.conjugate(), B1.conjugate(), C1.conjugate()
        return mu1, A1, B1, C1

    def to_json(self) -> dict:
        return {
            "c": [self.c.real, self.c.imag],
            "c_prime": self.c_prime,
            "conjugated": self.conjugated,
            "time_reversed": self.time_reversed,
        }


def normalize(mu: complex, A: complex, B: complex, C: complex) -> tuple[FieldParams, Transform]:
    """Bring a field with a focus at 0 to one of the normalized cells.

    The cell is picked by the largest of ``|A|, |B|/2, |C|`` (ties favour
    N1, then N2).  The rotation of ``c`` makes the defining coefficient real
    and positive; for the ``C`` cell the cube root uses the principal branch.
    """
    mu, A, B, C = complex(mu), complex(A), complex(B), complex(C)
    if mu.imag == 0:
        raise ZeroImaginaryPart("Im(mu) = 0: the origin is not a focus of the assumed form")
    cp = 1.0 / mu.imag
    lam = cp * mu.real
    flip = lam < 0
    # slot -> (coefficient seen by the scaling, power n with c-factor r e^{i n phi})
    if flip:
        # the conjugation acts after the scaling, so the phase of c enters reversed
        slots = {"A": (-cp * A.conjugate(), -1), "B": (-cp * B.conjugate(), 1), "C": (-cp * C.conjugate(), 3)}
    else:
        slots = {"A": (cp * A, 1), "B": (cp * B, -1), "C": (cp * C, -3)}
    sizes = {"N1": abs(slots["A"][0]), "N2": abs(slots["B"][0]) / 2, "N3": abs(slots["C"][0])}
    if max(sizes.values()) == 0:
        form = "Linear"
        c = 1 + 0j
    else:
        form = max(("N1", "N2", "N3"), key=lambda k: (sizes[k], -("N1", "N2", "N3").index(k)))
        slot = {"N1": "A", "N2": "B", "N3": "C"}[form]
        target = 2.0 if form == "N2" else 1.0
        X, n = slots[slot]
        r = target / abs(X)
        phi = -math.atan2(X.imag, X.real) / n  # cmath.phase raises on subnormal parts
        c = _clean(cmath.rect(r, phi)) if phi != 0 else complex(r, 0.0)
    tr = Transform(c=c, c_prime=cp, conjugated=flip, time_reversed=flip)
    mu1, A1, B1, C1 = tr.apply(mu, A, B, C)
    lam1 = abs(lam) + 0.0
    if form == "N1":
        A1 = 1 + 0j
    elif form == "N2":
        B1 = 2 + 0j
    elif form == "N3":
        C1 = 1 + 0j
    # clip rounding excursions just outside the cell
    A1, B1, C1 = (_clean(_clip(z, r)) for z, r in ((A1, 1.0), (B1, 2.0), (C1, 1.0)))
    return FieldParams(lam1, A1, B1, C1, form), tr


def _clean(z: complex) -> complex:
    """Drop signed zeros so equal fields compare and serialize identically."""
    return complex(z.real + 0.0, z.imag + 0.0)


def _clip(z: complex, radius: float) -> complex:
    a = abs(z)
    if radius < a <= radius * (1 + 1e-9):
        return z * (radius / a)
    return z


# ----------------------------------------------------------------------------
# center conditions and distances
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class CenterResiduals:
    g1: float
    g2: float
    g3: float
    g4: float

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.g1, self.g2, self.g3, self.g4)


def center_residuals(lam: FieldParams) -> CenterResiduals:
    A, B, C = lam.A, lam.B, lam.C
    Bc = B.conjugate()
    g2 = (A * B).imag
    g3 = ((2 * A + Bc) * (A - 2 * Bc) * Bc * C).imag
    g4 = ((2 * A + Bc) * (abs(B) ** 2 - abs(C) ** 2) * Bc * Bc * C).imag
    return CenterResiduals(lam.lambda1, g2 + 0.0, g3 + 0.0, g4 + 0.0)


def sigma_distance(lam: FieldParams) -> float:
    """``sum |g_j|``; the field is sigma-distant from centers iff this is >= sigma."""
    return float(sum(abs(g) for g in center_residuals(lam).as_tuple()))


@dataclass(frozen=True)
class SingularDecomposition:
    """``v = v_s + b z zbar + c zbar^2`` with ``v_s = mu z + z^2 + (mu/conj mu) z zbar``.

    ``scale`` is the ``c`` of the rescaling ``z -> scale z`` used when the
    input did not already have ``A = 1`` (1 otherwise).
    """

    b: complex
    c: complex
    kappa_distance: float
    scale: complex = 1 + 0j

    def to_json(self) -> dict:
        return {
            "b": [self.b.real, self.b.imag],
            "c": [self.c.real, self.c.imag],
            "kappa_distance": self.kappa_distance,
            "scale": [self.scale.real, self.scale.imag],
        }


def singular_field(lambda1: float) -> FieldParams:
    """The singular field ``mu z + z^2 + (mu/conj mu) z zbar`` (form N1)."""
    mu = complex(lambda1, 1.0)
    return FieldParams(lambda1, 1, mu / mu.conjugate(), 0, "N1")


def singular_decomposition(lam: FieldParams) -> SingularDecomposition:
    A, B, C = lam.A, lam.B, lam.C
    scale = 1 + 0j
    if A != 1:
        if A == 0:
            raise FormMismatch("A = 0: the field has no (n1) representation")
        # z -> z/A makes A = 1
        scale = 1 / A
        sb = scale.conjugate()
        B, C = sb * B, (sb * sb / scale) * C
    mu = lam.mu
    b = B - mu / mu.conjugate()
    c = C
    return SingularDecomposition(b, c, math.hypot(abs(b), abs(c)), scale)


# ----------------------------------------------------------------------------
# singular points
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class SingularPoint:
    """Solution ``(u, v)`` of the complexified system; real when ``v = conj(u)``."""

    u: complex
    v: complex
    is_real: bool

    @property
    def z(self) -> complex:
        return self.u

    def to_json(self) -> dict:
        return {"u": [self.u.real, self.u.imag], "v": [self.v.real, self.v.imag], "is_real": self.is_real}


@dataclass(frozen=True)
class SingularPointSet:
    points: tuple[SingularPoint, ...] = ()
    degenerate: bool = False
    # for degenerate sets: real line {z : Re(conj(n) z) = d} with |n| = 1, if identified
    line: tuple[complex, float] | None = None

    def to_json(self) -> dict:
        out = {"points": [p.to_json() for p in self.points], "degenerate": self.degenerate}
        if self.line is not None:
            out["line"] = {"normal": [self.line[0].real, self.line[0].imag], "offset": self.line[1]}
        return out


def _system(lam: FieldParams, u, v):
    mu, A, B, C = lam.coefficients
    p1 = mu * u + A * u * u + B * u * v + C * v * v
    p2 = mu.conjugate() * v + A.conjugate() * v * v + B.conjugate() * u * v + C.conjugate() * u * u
    return p1, p2


def relative_residual(lam: FieldParams, u: complex, v: complex) -> float:
    """``(|P1| + |P2|) / ((1 + |u| + |v|)^2 (|mu| + |A| + |B| + |C|))``, the float-meaningful residual."""
    r1, r2 = _system(lam, u, v)
    size = abs(lam.mu) + abs(lam.A) + abs(lam.B) + abs(lam.C)
    return float((abs(r1) + abs(r2)) / ((1 + abs(u) + abs(v)) ** 2 * size))


def _jacobian(lam: FieldParams, u, v):
    mu, A, B, C = lam.coefficients
    Ab, Bb, Cb = A.conjugate(), B.conjugate(), C.conjugate()
    return np.array(
        [[mu + 2 * A * u + B * v, B * u + 2 * C * v], [Bb * v + 2 * Cb * u, mu.conjugate() + 2 * Ab * v + Bb * u]]
    )


def _v_polys(lam: FieldParams, u: complex) -> tuple[list[complex], list[complex]]:
    """Both equations as polynomials in v (descending powers) at fixed u."""
    mu, A, B, C = lam.coefficients
    p1 = [C, B * u, A * u * u + mu * u]
    p2 = [A.conjugate(), B.conjugate() * u + mu.conjugate(), C.conjugate() * u * u]
    return p1, p2


def _formal_degrees(lam: FieldParams) -> tuple[int, int]:
    d1 = 2 if lam.C != 0 else (1 if lam.B != 0 else 0)
    d2 = 2 if lam.A != 0 else 1
    return d1, d2


def _sylvester_det(p: Sequence[complex], q: Sequence[complex]) -> complex:
    """Resultant of two polynomials (descending coefficients, formal degrees len-1)."""
    m, n = len(p) - 1, len(q) - 1
    if m == 0:
        return p[0] ** n
    if n == 0:
        return q[0] ** m
    S = np.zeros((m + n, m + n), dtype=complex)
    for i in range(n):
        S[i, i : i + m + 1] = p
    for i in range(m):
        S[n + i, i : i + n + 1] = q
    return complex(np.linalg.det(S))


def _root_scale(lam: FieldParams) -> float:
    """Typical modulus of the non-origin singular points, ``|mu| / (|A| + |B| + |C|)``."""
    return max(abs(lam.mu) / (abs(lam.A) + abs(lam.B) + abs(lam.C)), 1e-300)


def _resultant_poly(lam: FieldParams, rho: float = 1.0) -> tuple[np.ndarray, float]:
    """Ascending coefficients of ``s -> Res_v(P1, P2)(u = rho s)``.

    Sampled at 16 points of the circle ``|u| = rho`` and fitted by FFT, so
    roots of size ``~rho`` are resolved without huge coefficient ratios.
    Also returns the largest Hadamard bound of the sampled Sylvester
    determinants, the yardstick for rounding noise.
    """
    d1, d2 = _formal_degrees(lam)
    N = 16
    roots = rho * np.exp(2j * np.pi * np.arange(N) / N)
    vals = np.empty(N, dtype=complex)
    hadamard = 0.0
    for k, u in enumerate(roots):
        p1, p2 = _v_polys(lam, complex(u))
        p1, p2 = p1[2 - d1 :], p2[2 - d2 :]
        vals[k] = _sylvester_det(p1, p2)
        hadamard = max(hadamard, float(np.linalg.norm(p1)) ** d2 * float(np.linalg.norm(p2)) ** d1)
    return np.fft.fft(vals) / N, hadamard


def _newton(lam: FieldParams, u: complex, v: complex, tol: float, maxit: int = 60) -> tuple[complex, complex]:
    for _ in range(maxit):
        F = np.array(_system(lam, u, v))
        J = _jacobian(lam, u, v)
        try:
            step = np.linalg.solve(J, F)
        except np.linalg.LinAlgError:
            break
        u, v = u - step[0], v - step[1]
        if abs(step[0]) + abs(step[1]) <= tol * 1e-3:
            break
    return complex(u), complex(v)


def _degenerate_line(lam: FieldParams) -> tuple[complex, float] | None:
    """Real line of zeros of ``mu + A z + B zbar`` when ``C = 0`` and ``|A| = |B|``."""
    if lam.C != 0:
        return None
    mu, A, B = lam.mu, lam.A, lam.B
    # z -> A z + B zbar as a real 2x2 map
    M = np.array([[A.real + B.real, -A.imag + B.imag], [A.imag + B.imag, A.real - B.real]])
    rhs = np.array([-mu.real, -mu.imag])
    U, s, Vt = np.linalg.svd(M)
    if s[0] == 0 or s[1] > 1e-9 * s[0]:
        return None
    # range of M is spanned by U[:,0]; the line is {x : U0 . M x = U0 . rhs}
    row = U[:, 0] @ M
    scale = np.linalg.norm(row)
    n = complex(row[0], row[1]) / scale
    return n, float(U[:, 0] @ rhs / scale)


def singular_points(lam: FieldParams, tol: float = 1e-12) -> SingularPointSet:
    """Non-origin solutions of the complexified system ``P1 = P2 = 0`` over C^2.

    Eliminates ``v`` by a resultant (a polynomial in ``u`` of degree <= 4 for
    non-degenerate fields), then recovers ``v`` and polishes each pair with
    Newton's method.  Raises ``Degenerate`` when the resultant vanishes
    identically.
    """
    if tol <= 0:
        raise InputError("tol must be positive")
    if lam.A == 0 and lam.B == 0 and lam.C == 0:
        return SingularPointSet()
    rho = _root_scale(lam)
    coeffs, hadamard = _resultant_poly(lam, rho)
    # the resultant has degree <= 4; the fitted coefficients above 4 are pure rounding noise
    signal, noise = np.max(np.abs(coeffs[:5])), np.max(np.abs(coeffs[5:]))
    if signal <= 1e3 * noise or signal <= 1e-14 * hadamard:
        raise Degenerate("resultant vanishes identically: line of singular points")
    coeffs = coeffs[:5]
    coeffs = np.where(np.abs(coeffs) <= max(1e-12 * signal, 10 * noise), 0, coeffs)
    nz = np.nonzero(coeffs)[0]
    poly = coeffs[: nz[-1] + 1]
    s_roots = np.roots(poly[::-1]) if len(poly) > 1 else np.array([], dtype=complex)
    # u = 0 is always a root (the origin); keep it so (0, v) points are found
    u_roots = [complex(rho * r) for r in s_roots] + [0j]
    candidates: list[tuple[complex, complex]] = []
    for u in u_roots:
        p1, p2 = _v_polys(lam, u)
        vs: list[complex] = []
        for p in (p1, p2):
            arr = np.array(p)
            arr_nz = np.nonzero(np.abs(arr) > 1e-12 * np.max(np.abs(arr)))[0] if np.any(arr) else []
            if len(arr_nz) == 0:
                continue
            trimmed = arr[arr_nz[0] :]
            if len(trimmed) > 1:
                vs.extend(complex(r) for r in np.roots(trimmed))
        for v in vs:
            if relative_residual(lam, u, v) <= 1e-4:
                candidates.append(_newton(lam, u, v, tol * rho))
    points: list[SingularPoint] = []
    for u, v in candidates:
        u, v = _snap(u), _snap(v)
        if relative_residual(lam, u, v) > max(10 * tol, 1e-9):
            continue
        if abs(u) + abs(v) <= 1e-8 * rho:
            continue
        if any(abs(u - p.u) + abs(v - p.v) <= 1e-7 * (1 + abs(u) + abs(v)) for p in points):
            continue
        is_real = abs(v - u.conjugate()) <= max(tol, 1e-9) * 10 * (1 + abs(u))
        if is_real:
            # snap to the real plane: average the two copies of z
            z = (u + v.conjugate()) / 2
            u, v = z, z.conjugate()
        points.append(SingularPoint(u, v, bool(is_real)))
    points.sort(key=lambda p: (round(p.u.real, 9), round(p.u.imag, 9), round(p.v.real, 9), round(p.v.imag, 9)))
    return SingularPointSet(tuple(points))


def _snap(z: complex, floor: float = 1e-15) -> complex:
    re = 0.0 if abs(z.real) <= floor * (1 + abs(z)) else z.real
    im = 0.0 if abs(z.imag) <= floor * (1 + abs(z)) else z.imag
    return complex(re, im)


def singular_set_or_degenerate(lam: FieldParams, tol: float = 1e-12) -> SingularPointSet:
    """Like ``singular_points`` but returns a degenerate set (with its line when found)."""
    try:
        return singular_points(lam, tol)
    except Degenerate:
        return SingularPointSet((), degenerate=True, line=_degenerate_line(lam))


def singular_distance(z, pts: SingularPointSet):
    """Distance from the real point(s) ``z`` to the nearest non-origin singular point.

    ``z`` is embedded as ``(z, conj z)`` and distances are taken in the
    complexified real coordinates ``(x, y) in C^2``, i.e.
    ``sqrt((|z - u|^2 + |conj z - v|^2) / 2)``; for real singular points this is
    the ordinary planar distance.
    """
    z = np.asarray(z, dtype=complex)
    best = np.full(z.shape, np.inf)
    for p in pts.points:
        d = np.sqrt((np.abs(z - p.u) ** 2 + np.abs(np.conj(z) - p.v) ** 2) / 2)
        best = np.minimum(best, d)
    if pts.degenerate and pts.line is not None:
        n, off = pts.line
        d = np.abs((np.conj(n) * z).real - off)
        best = np.minimum(best, d)
    return best


def tame_region_mask(lam: FieldParams, delta: float, z, pts: SingularPointSet | None = None):
    """Vectorized membership in the disc ``|z| <= 1/delta`` minus open delta-balls."""
    if not 0 < delta < 1:
        raise InputError("delta must lie in (0, 1)")
    if pts is None:
        pts = singular_set_or_degenerate(lam)
    z = np.asarray(z, dtype=complex)
    return (np.abs(z) <= 1 / delta) & ((singular_distance(z, pts) >= delta) | (z == 0))


def in_tame_region(lam: FieldParams, delta: float, z: complex, pts: SingularPointSet | None = None) -> bool:
    return bool(tame_region_mask(lam, delta, np.array([z]), pts)[0])


# ----------------------------------------------------------------------------
# polar form
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class PolarData:
    h: np.ndarray | complex
    f: np.ndarray | float
    g: np.ndarray | float


def polar_data(lam: FieldParams, theta) -> PolarData:
    """``h = A e^{i t} + B e^{-i t} + C e^{-3 i t}``, ``f = Re h``, ``g = Im h``."""
    t = np.asarray(theta, dtype=float)
    e = np.exp(1j * t)
    ei = np.conj(e)
    h = lam.A * e + lam.B * ei + lam.C * ei**3
    if h.ndim == 0:
        h = complex(h)
        return PolarData(h, h.real, h.imag)
    return PolarData(h, h.real, h.imag)


def lambda1_gate(lam: FieldParams, delta: float) -> bool:
    """False when ``lambda1 > 4/delta`` (no tame cycles possible); the boundary is admissible."""
    if not 0 < delta < 1:
        raise InputError("delta must lie in (0, 1)")
    return lam.lambda1 <= 4 / delta


# ----------------------------------------------------------------------------
# JSON
# ----------------------------------------------------------------------------


def _cx(v) -> complex:
    if isinstance(v, (list, tuple)) and len(v) == 2:
        return complex(float(v[0]), float(v[1]))
    if isinstance(v, (int, float)):
        return complex(float(v), 0.0)
    raise InputError(f"expected [re, im], got {v!r}")


def field_from_json(doc: dict) -> tuple[FieldParams, Transform | None]:
    """Parse the field document; ``"form": "raw"`` runs ``normalize``.

    A raw document may carry ``"mu": [re, im]``; otherwise ``mu = lambda1 + i``.
    """
    if not isinstance(doc, dict):
        raise InputError("field must be a JSON object")
    try:
        form = doc.get("form", "raw")
        A, B, C = _cx(doc["A"]), _cx(doc["B"]), _cx(doc["C"])
        if form == "raw":
            mu = _cx(doc["mu"]) if "mu" in doc else complex(float(doc["lambda1"]), 1.0)
            return normalize(mu, A, B, C)
        lam1 = float(doc["lambda1"])
    except KeyError as exc:
        raise InputError(f"missing field key {exc}") from None
    if form == "Linear" or form in ("N1", "N2", "N3"):
        return FieldParams(lam1, A, B, C, form), None
    raise InputError(f"unknown form {form!r}")


def field_to_json(lam: FieldParams) -> dict:
    return {
        "lambda1": lam.lambda1,
        "A": [lam.A.real, lam.A.imag],
        "B": [lam.B.real, lam.B.imag],
        "C": [lam.C.real, lam.C.imag],
        "form": lam.form,
    }
