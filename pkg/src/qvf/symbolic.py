"""Exact polynomial arithmetic for the Poincare-map jet computation.

Two rings live here:

``ParamPoly``
    Polynomials in the real field parameters ``a1, a2, b1, b2, c1, c2`` and a
    free commuting symbol ``pi``, with Gaussian-rational coefficients.  The
    complex field coefficients are ``A = a1 + i a2``, ``B = b1 + i b2`` and
    ``C = c1 + i c2``.

``QuasiTrigPoly``
    Finite sums ``sum p_{k,m} * theta**m * exp(i*k*theta)`` with ``ParamPoly``
    coefficients.  Closed under products, differentiation and integration
    from 0, which is all the variational recursion needs.

Monomials are packed into a single integer, one byte per variable, ``a1`` in
the lowest byte and ``pi`` in the highest.  Monomial multiplication is then
integer addition, and comparing packed integers of equal total degree is
lexicographic comparison with ``pi`` as the most significant variable, i.e.
graded lex with ``a1 < a2 < b1 < b2 < c1 < c2 < pi``.
"""

from __future__ import annotations

import ast
from dataclasses import dataclass
from fractions import Fraction
from math import factorial
from typing import Iterable, Mapping, Union

import gmpy2
import mpmath
from gmpy2 import mpq

__all__ = [
    "VARS",
    "GaussRational",
    "ParamPoly",
    "QuasiTrigPoly",
    "pp_add",
    "pp_mul",
    "pp_eval",
    "pp_reduce",
    "qt_mul",
    "qt_integrate",
    "qt_eval_2pi",
    "qt_derivative",
    "build_fg",
]

VARS = ("a1", "a2", "b1", "b2", "c1", "c2", "pi")
_VAR_INDEX = {name: i for i, name in enumerate(VARS)}
_BITS = 8
_MASK = (1 << _BITS) - 1
_PI_MONO = 1 << (_BITS * _VAR_INDEX["pi"])

_ZERO = mpq(0)
_ONE = mpq(1)

Scalar = Union[int, Fraction, "GaussRational", complex]


def _to_mpq(x) -> mpq:
    if isinstance(x, Fraction):
        return mpq(x.numerator, x.denominator)
    return mpq(x)


@dataclass(frozen=True)
class GaussRational:
    """Exact element of Q(i)."""

    re: mpq = _ZERO
    im: mpq = _ZERO

    def __post_init__(self):
        object.__setattr__(self, "re", _to_mpq(self.re))
        object.__setattr__(self, "im", _to_mpq(self.im))

    @classmethod
    def coerce(cls, x) -> "GaussRational":
        if isinstance(x, GaussRational):
            return x
        if isinstance(x, complex):
            # only exact small values make sense here; floats are rejected upstream
            return cls(Fraction(x.real), Fraction(x.imag))
        return cls(x, 0)

    def __add__(self, other):
        o = GaussRational.coerce(other)
        return GaussRational(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __neg__(self):
        return GaussRational(-self.re, -self.im)

    def __sub__(self, other):
        return self + (-GaussRational.coerce(other))

    def __rsub__(self, other):
        return GaussRational.coerce(other) - self

    def __mul__(self, other):
        o = GaussRational.coerce(other)
        return GaussRational(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = GaussRational.coerce(other)
        den = o.re * o.re + o.im * o.im
        if den == 0:
            raise ZeroDivisionError("division by zero Gaussian rational")
        return self * GaussRational(o.re / den, -o.im / den)

    def conjugate(self) -> "GaussRational":
        return GaussRational(self.re, -self.im)

    def is_zero(self) -> bool:
        return self.re == 0 and self.im == 0

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __str__(self):
        return f"{_fmt_q(self.re)}|{_fmt_q(self.im)}"


def _fmt_q(q: mpq) -> str:
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


# ----------------------------------------------------------------------------
# monomials
# ----------------------------------------------------------------------------


def _mono_exps(m: int) -> tuple[int, ...]:
    return tuple((m >> (_BITS * i)) & _MASK for i in range(len(VARS)))


def _mono_from_exps(exps: Iterable[int]) -> int:
    m = 0
    for i, e in enumerate(exps):
        if e < 0 or e > _MASK:
            raise ValueError(f"exponent {e} out of range")
        m |= e << (_BITS * i)
    return m


def _mono_degree(m: int) -> int:
    d = 0
    while m:
        d += m & _MASK
        m >>= _BITS
    return d


def _mono_key(m: int) -> tuple[int, int]:
    """Graded-lex sort key (larger key = larger monomial)."""
    return (_mono_degree(m), m)


def _mono_divides(d: int, m: int) -> bool:
    for i in range(len(VARS)):
        sh = _BITS * i
        if ((d >> sh) & _MASK) > ((m >> sh) & _MASK):
            return False
    return True


def _mono_str(m: int) -> str:
    if m == 0:
        return "1"
    parts = []
    for name, e in zip(VARS, _mono_exps(m)):
        if e == 1:
            parts.append(name)
        elif e > 1:
            parts.append(f"{name}^{e}")
    return "*".join(parts)


def _mono_parse(s: str) -> int:
    if s == "1":
        return 0
    exps = [0] * len(VARS)
    for factor in s.split("*"):
        name, _, e = factor.partition("^")
        exps[_VAR_INDEX[name]] += int(e) if e else 1
    return _mono_from_exps(exps)


# ----------------------------------------------------------------------------
# ParamPoly
# ----------------------------------------------------------------------------


class ParamPoly:
    """Polynomial in (a1, a2, b1, b2, c1, c2, pi) over Q(i).

    ``terms`` maps packed monomials to ``(re, im)`` pairs of ``mpq``.  Zero
    coefficients are never stored.  Instances are treated as immutable.
    """

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[int, tuple] | None = None):
        clean = {}
        if terms:
            for m, (re, im) in terms.items():
                if re != 0 or im != 0:
                    clean[m] = (_to_mpq(re), _to_mpq(im))
        self.terms = clean

    @classmethod
    def _raw(cls, terms: dict) -> "ParamPoly":
        p = cls.__new__(cls)
        p.terms = terms
        return p

    @classmethod
    def const(cls, value: Scalar) -> "ParamPoly":
        g = GaussRational.coerce(value)
        return cls({0: (g.re, g.im)})

    @classmethod
    def var(cls, name: str) -> "ParamPoly":
        exps = [0] * len(VARS)
        exps[_VAR_INDEX[name]] = 1
        return cls._raw({_mono_from_exps(exps): (_ONE, _ZERO)})

    @classmethod
    def zero(cls) -> "ParamPoly":
        return cls._raw({})

    @classmethod
    def one(cls) -> "ParamPoly":
        return cls._raw({0: (_ONE, _ZERO)})

    # -- ring operations ---------------------------------------------------

    def __add__(self, other) -> "ParamPoly":
        other = _as_pp(other)
        out = dict(self.terms)
        _acc(out, other.terms)
        return ParamPoly._raw(out)

    __radd__ = __add__

    def __neg__(self) -> "ParamPoly":
        return ParamPoly._raw({m: (-r, -i) for m, (r, i) in self.terms.items()})

    def __sub__(self, other) -> "ParamPoly":
        return self + (-_as_pp(other))

    def __rsub__(self, other) -> "ParamPoly":
        return _as_pp(other) - self

    def __mul__(self, other) -> "ParamPoly":
        if isinstance(other, ParamPoly):
            return ParamPoly._raw(_mul_terms(self.terms, other.terms))
        return self.scale(other)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "ParamPoly":
        g = GaussRational.coerce(other)
        return self.scale(GaussRational(1) / g)

    def __pow__(self, n: int) -> "ParamPoly":
        if n < 0:
            raise ValueError("negative power")
        out = ParamPoly.one()
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def scale(self, c: Scalar) -> "ParamPoly":
        g = GaussRational.coerce(c)
        if g.is_zero():
            return ParamPoly.zero()
        cr, ci = g.re, g.im
        out = {}
        for m, (r, i) in self.terms.items():
            nr = r * cr - i * ci
            ni = r * ci + i * cr
            if nr != 0 or ni != 0:
                out[m] = (nr, ni)
        return ParamPoly._raw(out)

    def mul_mono(self, mono: int) -> "ParamPoly":
        return ParamPoly._raw({m + mono: c for m, c in self.terms.items()})

    def __eq__(self, other) -> bool:
        if not isinstance(other, ParamPoly):
            try:
                other = _as_pp(other)
            except TypeError:
                return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __len__(self) -> int:
        return len(self.terms)

    # -- structure ---------------------------------------------------------

    def conjugate(self) -> "ParamPoly":
        """Complex conjugate for real values of the variables."""
        return ParamPoly._raw({m: (r, -i) for m, (r, i) in self.terms.items()})

    def real_part(self) -> "ParamPoly":
        return ParamPoly({m: (r, 0) for m, (r, i) in self.terms.items()})

    def imag_part(self) -> "ParamPoly":
        return ParamPoly({m: (i, 0) for m, (r, i) in self.terms.items()})

    def is_real(self) -> bool:
        return all(i == 0 for _, i in self.terms.values())

    def degree(self) -> int:
        return max((_mono_degree(m) for m in self.terms), default=-1)

    def pi_degrees(self) -> set[int]:
        return {(m >> (_BITS * _VAR_INDEX["pi"])) & _MASK for m in self.terms}

    def monomials(self) -> list[tuple[tuple[int, ...], GaussRational]]:
        """Terms in descending graded-lex order as (exponents, coefficient)."""
        return [
            (_mono_exps(m), GaussRational(*self.terms[m]))
            for m in sorted(self.terms, key=_mono_key, reverse=True)
        ]

    def leading(self) -> tuple[int, tuple]:
        m = max(self.terms, key=_mono_key)
        return m, self.terms[m]

    def subs_pi_free(self) -> bool:
        return all(((m >> (_BITS * _VAR_INDEX["pi"])) & _MASK) == 0 for m in self.terms)

    # -- numeric evaluation ------------------------------------------------

    def evaluate(self, values: Mapping[str, object], pi=None):
        """Evaluate at numeric parameter values.

        ``values`` maps variable names to numbers (float, mpf, ...); ``pi``
        defaults to ``mpmath.pi`` at the current mpmath precision.  Returns an
        ``mpc``.
        """
        vals = [mpmath.mpf(values.get(name, 0)) if name != "pi" else None for name in VARS]
        vals[-1] = mpmath.mpf(mpmath.pi if pi is None else pi)
        total = mpmath.mpc(0)
        powers: dict[tuple[int, int], object] = {}
        for m, (r, i) in self.terms.items():
            t = mpmath.mpc(mpmath.mpf(r.numerator) / r.denominator, mpmath.mpf(i.numerator) / i.denominator)
            for k, e in enumerate(_mono_exps(m)):
                if e:
                    key = (k, e)
                    if key not in powers:
                        powers[key] = vals[k] ** e
                    t *= powers[key]
            total += t
        return total

    # -- text forms --------------------------------------------------------

    def serialize(self) -> str:
        """Canonical text: one ``re|im|monomial`` line per term, grlex descending."""
        lines = []
        for m in sorted(self.terms, key=_mono_key, reverse=True):
            r, i = self.terms[m]
            lines.append(f"{_fmt_q(r)}|{_fmt_q(i)}|{_mono_str(m)}")
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def deserialize(cls, text: str) -> "ParamPoly":
        terms = {}
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            re, im, mono = line.split("|")
            terms[_mono_parse(mono)] = (mpq(re), mpq(im))
        return cls(terms)

    @classmethod
    def parse(cls, expr: str) -> "ParamPoly":
        """Parse an arithmetic expression in the variables, ``I`` and integers."""
        q = _ExprEval().run(expr)
        if any(key != (0, 0) for key in q.terms):
            raise ValueError("expression depends on theta")
        return q.terms.get((0, 0), ParamPoly.zero())

    def __repr__(self):
        if not self.terms:
            return "ParamPoly(0)"
        shown = " + ".join(
            f"({_fmt_q(r)}{'+' if i >= 0 else '-'}{_fmt_q(abs(i))}i)*{_mono_str(m)}"
            for m, (r, i) in list(sorted(self.terms.items(), key=lambda t: _mono_key(t[0]), reverse=True))[:6]
        )
        more = "" if len(self.terms) <= 6 else f" + ... ({len(self.terms)} terms)"
        return f"ParamPoly({shown}{more})"


def _as_pp(x) -> ParamPoly:
    if isinstance(x, ParamPoly):
        return x
    if isinstance(x, (int, Fraction, GaussRational)) or isinstance(x, type(mpq(0))):
        return ParamPoly.const(x)
    raise TypeError(f"cannot convert {type(x).__name__} to ParamPoly")


def _acc(dst: dict, src: Mapping[int, tuple], sign: int = 1) -> None:
    """dst += sign * src, in place, dropping zeros."""
    get = dst.get
    for m, (r, i) in src.items():
        cur = get(m)
        if cur is None:
            dst[m] = (r, i) if sign > 0 else (-r, -i)
        else:
            if sign > 0:
                nr, ni = cur[0] + r, cur[1] + i
            else:
                nr, ni = cur[0] - r, cur[1] - i
            if nr == 0 and ni == 0:
                del dst[m]
            else:
                dst[m] = (nr, ni)


def _mul_terms(a: Mapping[int, tuple], b: Mapping[int, tuple]) -> dict:
    if len(a) < len(b):
        a, b = b, a
    out: dict = {}
    get = out.get
    b_items = list(b.items())
    for m1, (r1, i1) in a.items():
        if i1 == 0:
            for m2, (r2, i2) in b_items:
                m = m1 + m2
                nr = r1 * r2
                ni = r1 * i2
                cur = get(m)
                if cur is not None:
                    nr += cur[0]
                    ni += cur[1]
                out[m] = (nr, ni)
        elif r1 == 0:
            for m2, (r2, i2) in b_items:
                m = m1 + m2
                nr = -i1 * i2
                ni = i1 * r2
                cur = get(m)
                if cur is not None:
                    nr += cur[0]
                    ni += cur[1]
                out[m] = (nr, ni)
        else:
            for m2, (r2, i2) in b_items:
                m = m1 + m2
                nr = r1 * r2 - i1 * i2
                ni = r1 * i2 + i1 * r2
                cur = get(m)
                if cur is not None:
                    nr += cur[0]
                    ni += cur[1]
                out[m] = (nr, ni)
    return {m: c for m, c in out.items() if c[0] != 0 or c[1] != 0}


def pp_add(p: ParamPoly, q: ParamPoly) -> ParamPoly:
    return p + q


def pp_mul(p: ParamPoly, q: ParamPoly) -> ParamPoly:
    return p * q


def pp_eval(p: ParamPoly, values: Mapping[str, object], digits: int = 50):
    """Numeric value of ``p`` with ``pi`` substituted at ``digits`` precision."""
    with mpmath.workdps(digits):
        return p.evaluate(values)


def pp_reduce(p: ParamPoly, generators: list[ParamPoly]) -> tuple[list[ParamPoly], ParamPoly]:
    """Multivariate division of ``p`` by ``generators`` in graded-lex order.

    Returns ``(cofactors, remainder)`` with ``p = sum(c*g) + remainder`` and no
    term of the remainder divisible by any generator's leading monomial.
    Generators are tried in the order given.
    """
    gens = [g for g in generators]
    if any(g.is_zero() for g in gens):
        raise ValueError("zero generator")
    leads = []
    for g in gens:
        m, c = g.leading()
        leads.append((m, GaussRational(*c)))
    cof_terms: list[dict] = [{} for _ in gens]
    rem: dict = {}
    work = dict(p.terms)
    while work:
        m = max(work, key=_mono_key)
        c = GaussRational(*work[m])
        for idx, (lm, lc) in enumerate(leads):
            if _mono_divides(lm, m):
                q_mono = m - lm
                q_coef = c / lc
                _acc(cof_terms[idx], {q_mono: (q_coef.re, q_coef.im)})
                prod = gens[idx].scale(q_coef).mul_mono(q_mono)
                _acc(work, prod.terms, sign=-1)
                break
        else:
            rem[m] = work.pop(m)
    return [ParamPoly._raw(t) for t in cof_terms], ParamPoly._raw(rem)


# ----------------------------------------------------------------------------
# QuasiTrigPoly
# ----------------------------------------------------------------------------


def _inv_ik_power(k: int, n: int) -> GaussRational:
    """(i k)^(-n) exactly."""
    # (ik)^-1 = -i/k
    base = GaussRational(0, Fraction(-1, k))
    out = GaussRational(1)
    for _ in range(n):
        out = out * base
    return out


class QuasiTrigPoly:
    """``sum p_{k,m} theta^m e^{i k theta}`` with ``ParamPoly`` coefficients.

    ``terms`` maps ``(k, m)`` to a non-zero ``ParamPoly``.  ``real_valued`` is
    an asserted flag (conjugate symmetry ``p_{-k,m} = conj(p_{k,m})``), kept
    through operations that preserve it; ``check_real_valued`` verifies it.
    """

    __slots__ = ("terms", "real_valued")

    def __init__(self, terms: Mapping[tuple[int, int], ParamPoly] | None = None, real_valued: bool = False):
        self.terms = {key: p for key, p in (terms or {}).items() if not p.is_zero()}
        self.real_valued = real_valued

    @classmethod
    def const(cls, p: ParamPoly | Scalar) -> "QuasiTrigPoly":
        p = _as_pp(p)
        return cls({(0, 0): p}, real_valued=p.is_real())

    @classmethod
    def exp(cls, k: int, coef: ParamPoly | Scalar = 1, m: int = 0) -> "QuasiTrigPoly":
        """``coef * theta^m * e^{i k theta}``."""
        return cls({(k, m): _as_pp(coef)})

    @classmethod
    def zero(cls) -> "QuasiTrigPoly":
        return cls({}, real_valued=True)

    @classmethod
    def one(cls) -> "QuasiTrigPoly":
        return cls.const(1)

    def __add__(self, other) -> "QuasiTrigPoly":
        other = _as_qt(other)
        out = dict(self.terms)
        for key, p in other.terms.items():
            cur = out.get(key)
            s = p if cur is None else cur + p
            if s.is_zero():
                out.pop(key, None)
            else:
                out[key] = s
        return QuasiTrigPoly(out, real_valued=self.real_valued and other.real_valued)

    __radd__ = __add__

    def __neg__(self) -> "QuasiTrigPoly":
        return QuasiTrigPoly({k: -p for k, p in self.terms.items()}, real_valued=self.real_valued)

    def __sub__(self, other) -> "QuasiTrigPoly":
        return self + (-_as_qt(other))

    def __rsub__(self, other) -> "QuasiTrigPoly":
        return _as_qt(other) - self

    def __mul__(self, other) -> "QuasiTrigPoly":
        if isinstance(other, QuasiTrigPoly):
            return qt_mul(self, other)
        if isinstance(other, ParamPoly):
            return QuasiTrigPoly(
                {k: p * other for k, p in self.terms.items()},
                real_valued=self.real_valued and other.is_real(),
            )
        g = GaussRational.coerce(other)
        return QuasiTrigPoly(
            {k: p.scale(g) for k, p in self.terms.items()},
            real_valued=self.real_valued and g.im == 0,
        )

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "QuasiTrigPoly":
        out = QuasiTrigPoly.one()
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, QuasiTrigPoly):
            return NotImplemented
        return self.terms == other.terms

    def is_zero(self) -> bool:
        return not self.terms

    def frequencies(self) -> set[int]:
        return {k for k, _ in self.terms}

    def theta_degree(self) -> int:
        return max((m for _, m in self.terms), default=-1)

    def conjugate(self) -> "QuasiTrigPoly":
        """Complex conjugate for real theta and real parameters."""
        return QuasiTrigPoly({(-k, m): p.conjugate() for (k, m), p in self.terms.items()}, self.real_valued)

    def check_real_valued(self) -> bool:
        return self.terms == self.conjugate().terms

    def at_zero(self) -> ParamPoly:
        """Value at theta = 0."""
        out = ParamPoly.zero()
        for (k, m), p in self.terms.items():
            if m == 0:
                out = out + p
        return out

    def evaluate(self, theta, values: Mapping[str, object]):
        """Numeric value at real ``theta`` (mpmath)."""
        th = mpmath.mpf(theta)
        total = mpmath.mpc(0)
        for (k, m), p in self.terms.items():
            total += p.evaluate(values) * th**m * mpmath.expj(k * th)
        return total

    def serialize(self) -> str:
        """Canonical text: ``k|m|re|im|monomial`` per line, sorted by (k, m, grlex desc)."""
        lines = []
        for k, m in sorted(self.terms):
            p = self.terms[(k, m)]
            for mono in sorted(p.terms, key=_mono_key, reverse=True):
                r, i = p.terms[mono]
                lines.append(f"{k}|{m}|{_fmt_q(r)}|{_fmt_q(i)}|{_mono_str(mono)}")
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def deserialize(cls, text: str) -> "QuasiTrigPoly":
        groups: dict = {}
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            k, m, re, im, mono = line.split("|")
            groups.setdefault((int(k), int(m)), {})[_mono_parse(mono)] = (mpq(re), mpq(im))
        q = cls({key: ParamPoly(t) for key, t in groups.items()})
        q.real_valued = q.check_real_valued()
        return q

    @classmethod
    def parse(cls, expr: str) -> "QuasiTrigPoly":
        """Parse an expression that may use ``theta``, ``cos(n*theta)``, ``sin(n*theta)``."""
        q = _ExprEval().run(expr)
        q.real_valued = q.check_real_valued()
        return q

    def __repr__(self):
        return f"QuasiTrigPoly({len(self.terms)} (k,m) blocks, freqs={sorted(self.frequencies())})"


def _as_qt(x) -> QuasiTrigPoly:
    if isinstance(x, QuasiTrigPoly):
        return x
    return QuasiTrigPoly.const(_as_pp(x))


def qt_mul(p: QuasiTrigPoly, q: QuasiTrigPoly) -> QuasiTrigPoly:
    acc: dict[tuple[int, int], dict] = {}
    for (k1, m1), p1 in p.terms.items():
        for (k2, m2), p2 in q.terms.items():
            key = (k1 + k2, m1 + m2)
            prod = _mul_terms(p1.terms, p2.terms)
            slot = acc.get(key)
            if slot is None:
                acc[key] = prod
            else:
                _acc(slot, prod)
    return QuasiTrigPoly(
        {key: ParamPoly._raw(t) for key, t in acc.items() if t},
        real_valued=p.real_valued and q.real_valued,
    )


def qt_integrate(q: QuasiTrigPoly) -> QuasiTrigPoly:
    """Antiderivative ``Q`` with ``Q(0) = 0``.

    For ``k != 0``::

        int_0^t s^m e^{iks} ds = e^{ikt} sum_j (-1)^j m!/(m-j)! t^(m-j) (ik)^-(j+1)
                                 - (-1)^m m! (ik)^-(m+1)
    """
    acc: dict[tuple[int, int], dict] = {}

    def put(key, poly: ParamPoly):
        slot = acc.setdefault(key, {})
        _acc(slot, poly.terms)

    for (k, m), p in q.terms.items():
        if k == 0:
            put((0, m + 1), p.scale(Fraction(1, m + 1)))
            continue
        for j in range(m + 1):
            c = _inv_ik_power(k, j + 1) * Fraction((-1) ** j * factorial(m), factorial(m - j))
            put((k, m - j), p.scale(c))
        c0 = _inv_ik_power(k, m + 1) * Fraction(-((-1) ** m) * factorial(m))
        put((0, 0), p.scale(c0))
    return QuasiTrigPoly({key: ParamPoly._raw(t) for key, t in acc.items() if t}, real_valued=q.real_valued)


def qt_derivative(q: QuasiTrigPoly) -> QuasiTrigPoly:
    acc: dict[tuple[int, int], dict] = {}
    for (k, m), p in q.terms.items():
        if m:
            _acc(acc.setdefault((k, m - 1), {}), p.scale(m).terms)
        if k:
            _acc(acc.setdefault((k, m), {}), p.scale(GaussRational(0, k)).terms)
    return QuasiTrigPoly({key: ParamPoly._raw(t) for key, t in acc.items() if t}, real_valued=q.real_valued)


def qt_eval_2pi(q: QuasiTrigPoly) -> ParamPoly:
    """Value at theta = 2 pi: ``e^{2 pi i k} = 1`` and ``theta^m = 2^m pi^m``."""
    acc: dict = {}
    for (k, m), p in q.terms.items():
        _acc(acc, p.scale(2**m).mul_mono(_PI_MONO * m).terms)
    return ParamPoly._raw(acc)


def build_fg() -> tuple[QuasiTrigPoly, QuasiTrigPoly]:
    """Symbolic ``f = Re h`` and ``g = Im h`` for ``h = A e^{i t} + B e^{-i t} + C e^{-3 i t}``."""
    v = {name: ParamPoly.var(name) for name in VARS[:-1]}
    I = GaussRational(0, 1)
    A = v["a1"] + v["a2"] * I
    B = v["b1"] + v["b2"] * I
    C = v["c1"] + v["c2"] * I
    h = QuasiTrigPoly({(1, 0): A, (-1, 0): B, (-3, 0): C})
    hbar = h.conjugate()
    f = (h + hbar) * Fraction(1, 2)
    g = (h - hbar) * GaussRational(0, Fraction(-1, 2))
    f.real_valued = True
    g.real_valued = True
    return f, g


# ----------------------------------------------------------------------------
# expression parsing (transcriptions of closed forms)
# ----------------------------------------------------------------------------


class _ExprEval:
    """Evaluate a restricted Python expression into a QuasiTrigPoly."""

    def run(self, expr: str) -> QuasiTrigPoly:
        tree = ast.parse(expr.replace("^", "**"), mode="eval")
        out = self.visit(tree.body)
        return _as_qt(out) if not isinstance(out, QuasiTrigPoly) else out

    def visit(self, node):
        if isinstance(node, ast.BinOp):
            left, right = self.visit(node.left), self.visit(node.right)
            if isinstance(node.op, ast.Add):
                return _as_qt(left) + _as_qt(right)
            if isinstance(node.op, ast.Sub):
                return _as_qt(left) - _as_qt(right)
            if isinstance(node.op, ast.Mult):
                return _as_qt(left) * _as_qt(right)
            if isinstance(node.op, ast.Div):
                den = self._constant(right)
                return _as_qt(left) * (GaussRational(1) / den)
            if isinstance(node.op, ast.Pow):
                n = self._constant(right)
                if n.im != 0 or n.re.denominator != 1 or n.re < 0:
                    raise ValueError("only non-negative integer powers")
                return _as_qt(left) ** int(n.re)
            raise ValueError(f"unsupported operator {type(node.op).__name__}")
        if isinstance(node, ast.UnaryOp):
            val = _as_qt(self.visit(node.operand))
            if isinstance(node.op, ast.USub):
                return -val
            if isinstance(node.op, ast.UAdd):
                return val
            raise ValueError("unsupported unary operator")
        if isinstance(node, ast.Constant) and isinstance(node.value, int):
            return QuasiTrigPoly.const(node.value)
        if isinstance(node, ast.Name):
            if node.id == "I":
                return QuasiTrigPoly.const(GaussRational(0, 1))
            if node.id == "theta":
                return QuasiTrigPoly.exp(0, 1, m=1)
            if node.id in _VAR_INDEX:
                return QuasiTrigPoly.const(ParamPoly.var(node.id))
            raise ValueError(f"unknown name {node.id}")
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in ("cos", "sin"):
            if len(node.args) != 1:
                raise ValueError("cos/sin take one argument")
            k = self._frequency(node.args[0])
            if node.func.id == "cos":
                return QuasiTrigPoly({(k, 0): ParamPoly.const(Fraction(1, 2)), (-k, 0): ParamPoly.const(Fraction(1, 2))})
            return QuasiTrigPoly(
                {(k, 0): ParamPoly.const(GaussRational(0, Fraction(-1, 2))),
                 (-k, 0): ParamPoly.const(GaussRational(0, Fraction(1, 2)))}
            )
        raise ValueError(f"unsupported syntax: {ast.dump(node)}")

    def _constant(self, q) -> GaussRational:
        q = _as_qt(q)
        if any(key != (0, 0) for key in q.terms):
            raise ValueError("expected a constant")
        p = q.terms.get((0, 0), ParamPoly.zero())
        if any(m != 0 for m in p.terms):
            raise ValueError("expected a numeric constant")
        return GaussRational(*p.terms.get(0, (0, 0)))

    def _frequency(self, node) -> int:
        if isinstance(node, ast.Name) and node.id == "theta":
            return 1
        if (
            isinstance(node, ast.BinOp)
            and isinstance(node.op, ast.Mult)
            and isinstance(node.left, ast.Constant)
            and isinstance(node.right, ast.Name)
            and node.right.id == "theta"
        ):
            return int(node.left.value)
        raise ValueError("trig arguments must be theta or n*theta")
