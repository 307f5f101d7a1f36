"""Closed-form bounds: zero counting, bound constants, the gap composition,
degree-three trigonometric forms and the final cycle-count bound.

Logarithms are natural except where a base-10 power is explicit.  Quantities
that overflow every float format (the final bound, the gap ``eps``) are
returned on a logarithmic scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import total_ordering

import mpmath
import numpy as np

from .errors import DomainError, EmptyRegion, InputError, ZeroPolynomial

LN10 = math.log(10.0)


def _unit_interval(name: str, value: float, upper: float = 0.1) -> None:
    if not (0 < value <= upper):
        raise DomainError(f"{name} must lie in (0, {upper}], got {value}")


# ----------------------------------------------------------------------------
# zero counting
# ----------------------------------------------------------------------------


def zero_bound(M: float, m: float, D: float, eps: float) -> float:
    """``ln(M/m) e^{2D/eps}``; ``inf`` when the geometric factor overflows."""
    if not m > 0:
        raise DomainError("m must be positive")
    if M < m:
        raise DomainError("need M >= m")
    if not (D > 0 and eps > 0):
        raise DomainError("D and eps must be positive")
    index = math.log(M / m)
    if index == 0:
        return 0.0
    try:
        return index * math.exp(2 * D / eps)
    except OverflowError:
        return math.inf


def ln_zero_bound(M: float, m: float, D: float, eps: float) -> float:
    """Natural log of ``zero_bound`` (``-inf`` when the index vanishes)."""
    if not m > 0 or M < m or not (D > 0 and eps > 0):
        raise DomainError("need M >= m > 0 and D, eps > 0")
    index = math.log(M / m)
    return math.log(index) + 2 * D / eps if index > 0 else -math.inf


# ----------------------------------------------------------------------------
# constants of the main estimate
# ----------------------------------------------------------------------------


def lower_m(lambda1: float, delta: float, sigma: float) -> mpmath.mpf:
    """Lower bound for ``max_K |P - id|``: ``1e-26 sigma`` for ``lambda1 <= 0.1``, else ``10^(-26/delta)``."""
    _unit_interval("delta", delta)
    _unit_interval("sigma", sigma)
    if lambda1 < 0:
        raise DomainError("lambda1 must be >= 0")
    if lambda1 <= 0.1:
        return mpmath.mpf("1e-26") * mpmath.mpf(repr(float(sigma)))
    return mpmath.power(10, -mpmath.mpf(26) / mpmath.mpf(repr(float(delta))))


def beta(delta: float, kappa: float) -> float:
    """Width of the strip below the zero isocline, ``delta^14 kappa / 1e10``."""
    _unit_interval("delta", delta)
    _unit_interval("kappa", kappa)
    return delta**14 * kappa / 1e10


def kappa_prime(delta: float, kappa: float) -> float:
    """``delta^12 kappa / (1e6 * 24 sqrt 2)``, a floor for ``|H|`` on the strip boundary."""
    _unit_interval("delta", delta)
    _unit_interval("kappa", kappa)
    return delta**12 * kappa / (1e6 * 24 * math.sqrt(2))


def gap_L(delta: float, beta_: float) -> float:
    """``6145 delta^-3 beta^-2``."""
    _unit_interval("delta", delta)
    _unit_interval("beta", beta_)
    return 6145.0 / (delta**3 * beta_**2)


def gap_eps(delta: float, beta_: float) -> float:
    """``ln eps`` for ``eps = (beta delta / 32) e^{-2 pi L}``."""
    L = gap_L(delta, beta_)
    return math.log(beta_ * delta / 32) - 2 * math.pi * L


def geom_exponent(delta: float, beta_: float) -> float:
    """``ln`` of the geometric factor cap: ``(1e5 - 1) delta^-3 beta^-2``."""
    _unit_interval("delta", delta)
    _unit_interval("beta", beta_)
    return (1e5 - 1) / (delta**3 * beta_**2)


def bernstein_cap(delta: float, sigma: float) -> float:
    """``ln 2 - ln delta + (26/delta) ln 10 - ln sigma``."""
    _unit_interval("delta", delta)
    _unit_interval("sigma", sigma)
    return math.log(2) - math.log(delta) + (26 / delta) * LN10 - math.log(sigma)


# ----------------------------------------------------------------------------
# the final bound
# ----------------------------------------------------------------------------


@total_ordering
@dataclass(frozen=True)
class LogLogMagnitude:
    """``X = e^{linear_correction} exp(exp(lnln))``; compared by ``lnln`` then correction."""

    lnln: mpmath.mpf
    linear_correction: float

    def _key(self):
        return (self.lnln, self.linear_correction)

    def __eq__(self, other):
        return isinstance(other, LogLogMagnitude) and self._key() == other._key()

    def __lt__(self, other):
        return self._key() < other._key()

    def __hash__(self):
        return hash((str(self.lnln), self.linear_correction))

    def exact_lnln(self, digits: int = 50) -> mpmath.mpf:
        """``ln ln X`` including the correction, in ``digits`` precision."""
        with mpmath.workdps(digits):
            return mpmath.log(self.linear_correction + mpmath.exp(self.lnln))

    def to_json(self, digits: int = 17) -> dict:
        return {"lnln": float(self.lnln), "lnln_str": mpmath.nstr(self.lnln, digits), "linear_correction": self.linear_correction}


def hilbert_exponent(delta: float, kappa: float, digits: int = 50) -> mpmath.mpf:
    """``1e25 delta^-31 kappa^-2``."""
    _unit_interval("delta", delta)
    _unit_interval("kappa", kappa)
    with mpmath.workdps(digits):
        # decimal reading of the inputs, so 0.1 means 1/10 and not its binary neighbour
        d, k = mpmath.mpf(repr(float(delta))), mpmath.mpf(repr(float(kappa)))
        return mpmath.mpf(10) ** 25 / (d**31 * k**2)


def hilbert_bound(delta: float, sigma: float, kappa: float, digits: int = 50) -> LogLogMagnitude:
    """``|ln sigma| exp(exp(1e25 delta^-31 kappa^-2))`` as a ``LogLogMagnitude``."""
    _unit_interval("sigma", sigma)
    lnln = hilbert_exponent(delta, kappa, digits)
    return LogLogMagnitude(lnln, math.log(abs(math.log(sigma))))


@dataclass(frozen=True)
class BoundReport:
    delta: float
    sigma: float
    kappa: float
    lambda1: float
    eps_lambda: float
    diameter_cap: float
    L_cap: float
    m_lower: mpmath.mpf
    beta: float
    kappa_prime: float
    gap_eps: float  # natural log of eps
    geom_exponent: float
    bernstein_cap: float
    H: LogLogMagnitude

    def to_json(self, digits: int = 17) -> dict:
        return {
            "delta": self.delta,
            "sigma": self.sigma,
            "kappa": self.kappa,
            "lambda1": self.lambda1,
            "eps_lambda": self.eps_lambda,
            "diameter_cap": self.diameter_cap,
            "L_cap": self.L_cap,
            "m_lower": mpmath.nstr(self.m_lower, digits),
            "log10_m_lower": float(mpmath.log10(self.m_lower)),
            "beta": self.beta,
            "kappa_prime": self.kappa_prime,
            "ln_gap_eps": self.gap_eps,
            "geom_exponent": self.geom_exponent,
            "bernstein_cap": self.bernstein_cap,
            "lnlnH": float(self.H.lnln),
            "lnlnH_str": mpmath.nstr(self.H.lnln, digits),
            "linear_correction": self.H.linear_correction,
        }


def bound_report(delta: float, sigma: float, kappa: float, lambda1: float = 0.0, digits: int = 50) -> BoundReport:
    from .poincare import admissible_radius
    from .field import FieldParams

    b = beta(delta, kappa)
    eps_lam = admissible_radius(FieldParams(lambda1, 0, 0, 0, "Linear"))
    with mpmath.workdps(digits):
        return BoundReport(
            delta=delta,
            sigma=sigma,
            kappa=kappa,
            lambda1=lambda1,
            eps_lambda=eps_lam,
            diameter_cap=2 / delta,
            L_cap=gap_L(delta, b),
            m_lower=lower_m(lambda1, delta, sigma),
            beta=b,
            kappa_prime=kappa_prime(delta, kappa),
            gap_eps=gap_eps(delta, b),
            geom_exponent=geom_exponent(delta, b),
            bernstein_cap=bernstein_cap(delta, sigma),
            H=hilbert_bound(delta, sigma, kappa, digits),
        )


# ----------------------------------------------------------------------------
# homogeneous cubic forms in (cos, sin)
# ----------------------------------------------------------------------------


def _basis(theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.stack([c**3, c**2 * s, c * s**2, s**3], axis=-1)


@dataclass(frozen=True)
class TrigCubic:
    """``H(t) = c0 cos^3 + c1 cos^2 sin + c2 cos sin^2 + c3 sin^3``."""

    c: tuple[float, float, float, float]

    def __post_init__(self):
        object.__setattr__(self, "c", tuple(float(v) for v in self.c))
        if len(self.c) != 4:
            raise InputError("a cubic form has four coefficients")

    def __call__(self, theta):
        return _basis(np.asarray(theta)) @ np.array(self.c)

    @classmethod
    def fit(cls, func, samples: int = 16) -> "TrigCubic":
        """Coefficients of a function known to be a real cubic form (least squares on samples)."""
        t = np.linspace(0, 2 * np.pi, samples, endpoint=False)
        coef, *_ = np.linalg.lstsq(_basis(t), np.asarray(func(t), dtype=float), rcond=None)
        return cls(tuple(coef))

    def fourier(self) -> dict[int, complex]:
        """Coefficients ``h_n`` of ``H = sum h_n e^{i n t}``."""
        cos = {1: 0.5, -1: 0.5}
        sin = {1: -0.5j, -1: 0.5j}

        def mul(p, q):
            out: dict[int, complex] = {}
            for a, x in p.items():
                for b, y in q.items():
                    out[a + b] = out.get(a + b, 0) + x * y
            return out

        out: dict[int, complex] = {}
        for k, ck in enumerate(self.c):
            term = {0: 1.0 + 0j}
            for _ in range(3 - k):
                term = mul(term, cos)
            for _ in range(k):
                term = mul(term, sin)
            for n, v in term.items():
                out[n] = out.get(n, 0) + ck * v
        return {n: v for n, v in out.items() if v != 0}

    @property
    def l2_norm(self) -> float:
        """Unnormalized ``(int_0^{2 pi} H^2)^{1/2}`` via Parseval."""
        return math.sqrt(2 * math.pi * sum(abs(v) ** 2 for v in self.fourier().values()))

    def l2_quadrature(self, digits: int = 30) -> float:
        with mpmath.workdps(digits):
            c = [mpmath.mpf(v) for v in self.c]

            def sq(t):
                co, si = mpmath.cos(t), mpmath.sin(t)
                return (c[0] * co**3 + c[1] * co**2 * si + c[2] * co * si**2 + c[3] * si**3) ** 2

            return float(mpmath.sqrt(mpmath.quad(sq, mpmath.linspace(0, 2 * mpmath.pi, 9))))

    def is_zero(self) -> bool:
        return all(v == 0 for v in self.c)


@dataclass(frozen=True)
class TrigRoots:
    """``H = A prod sin(t - t_j)``; fewer than three ``t_j`` when a pair sits at infinity."""

    A: float
    thetas: tuple[complex, ...]
    reconstruction_error: float

    def to_json(self) -> dict:
        return {
            "A": self.A,
            "thetas": [[t.real, t.imag] for t in self.thetas],
            "reconstruction_error": self.reconstruction_error,
        }


def trig_roots(H: TrigCubic) -> TrigRoots:
    """``H = A prod sin(t - t_j)`` with ``t_j`` from the roots of ``P(tan t)``.

    ``H(t) = cos^3 t P(tan t)`` with ``P(x) = c0 + c1 x + c2 x^2 + c3 x^3``;
    each drop in the degree of ``P`` contributes a root at ``pi/2``.
    """
    if H.is_zero():
        raise ZeroPolynomial("H vanishes identically")
    c = np.array(H.c)
    scale = np.max(np.abs(c))
    coeffs = c.copy()
    coeffs[np.abs(coeffs) <= 1e-14 * scale] = 0.0
    deg = int(np.max(np.nonzero(coeffs)[0]))
    thetas: list[complex] = []
    if deg > 0:
        roots = np.roots(coeffs[: deg + 1][::-1])
        for x in roots:
            x = complex(x)
            if abs(x.imag) <= 1e-12 * (1 + abs(x)):
                thetas.append(complex(math.atan(x.real), 0.0))
            elif abs(x * x + 1) <= 1e-12:
                # tan t = +-i: the pair spans cos^2 + sin^2 = 1, a root at infinity
                continue
            else:
                with np.errstate(all="ignore"):
                    thetas.append(complex(np.arctan(x)))
    thetas += [complex(math.pi / 2, 0.0)] * (3 - deg)
    ts = tuple(thetas)

    probe = np.linspace(0, np.pi, 64, endpoint=False) + 0.0123
    prod = np.prod([np.sin(probe - t) for t in ts], axis=0)
    k = int(np.argmax(np.abs(prod)))
    A = float((H(probe[k]) / prod[k]).real)

    check = np.linspace(0, 2 * np.pi, 32, endpoint=False) + 0.05
    recon = A * np.prod([np.sin(check - t) for t in ts], axis=0)
    err = float(np.max(np.abs(recon - H(check))) / max(np.max(np.abs(H(check))), 1e-300))
    return TrigRoots(A, ts, err)


def root_distance(theta, roots) -> np.ndarray:
    """Distance in C from real ``theta`` to the root series ``t_j + pi n``."""
    theta = np.asarray(theta, dtype=float)
    best = np.full(theta.shape, np.inf)
    for r in roots:
        dx = np.mod(theta - r.real + np.pi / 2, np.pi) - np.pi / 2
        best = np.minimum(best, np.hypot(dx, r.imag))
    return best


def trig_min_bound(H: TrigCubic, alpha: float, samples: int = 10_000) -> tuple[float, float]:
    """``((alpha^3/24) ||H||_2, min |H| over sampled theta at distance >= alpha from all roots)``."""
    if not 0 < alpha < 1:
        raise InputError("alpha must lie in (0, 1)")
    roots = trig_roots(H).thetas
    t = np.linspace(0, 2 * np.pi, samples, endpoint=False)
    keep = root_distance(t, roots) >= alpha
    if not keep.any():
        raise EmptyRegion(f"no sampled theta is {alpha}-distant from the roots")
    lower = alpha**3 / 24 * H.l2_norm
    return lower, float(np.min(np.abs(H(t[keep]))))


def root_distance_threshold(delta: float) -> float:
    """``delta^4 / 100``."""
    if delta < 0:
        raise DomainError("delta must be >= 0")
    return delta**4 / 100


def polar_distance_threshold(delta: float) -> float:
    """Cartesian ``delta``-separation inside ``r <= 1/delta`` gives ``(2/3) delta^2`` in complex polar coordinates."""
    if delta < 0:
        raise DomainError("delta must be >= 0")
    return 2 * delta**2 / 3


def chaining_check(delta: float) -> dict:
    """Inequalities linking ``delta``, ``(2/3) delta^2`` and ``alpha = delta^4/100``."""
    _unit_interval("delta", delta)
    alpha = root_distance_threshold(delta)
    L = 8 / delta**2
    g_floor = 1 / (1 / delta + delta**2 / 2)
    lhs = alpha * math.sqrt(L**2 + 1)
    return {
        "alpha": alpha,
        "polar_distance": polar_distance_threshold(delta),
        "L": L,
        "alpha_sqrt_L2p1": lhs,
        "delta2_over_6": delta**2 / 6,
        "slope_pass": lhs < delta**2 / 6,
        "g_floor": g_floor,
        "g_floor_pass": g_floor >= delta - delta**4 / 2 >= 0.99 * delta,
        "triangle_pass": delta**2 / 2 + lhs < 2 * delta**2 / 3,
    }
