"""Complexified Poincare map of a normalized quadratic field.

In polar coordinates the radius ``w`` (complexified, ``theta`` kept real)
obeys ``dw/dtheta = w (lambda1 + w f) / (1 + w g)``.  The return map to the
positive x-semiaxis is ``P(x) = w(2 pi)`` with ``w(0) = x``.

The integrator is a vectorized Dormand-Prince 5(4) pair over complex arrays:
all elements of a batch share the step size, and an element that fails
(denominator collapse, escape, step underflow) is frozen and reported while
the others continue.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable

import mpmath
import numpy as np

from .errors import (
    EmptyArc,
    Escape,
    InputError,
    NumericalFailure,
    PreconditionViolation,
    SingularCrossing,
    StepFailure,
)
from .field import (
    FieldParams,
    SingularPointSet,
    lambda1_gate,
    polar_data,
    singular_decomposition,
    singular_distance,
    singular_set_or_degenerate,
    tame_region_mask,
)

TWO_PI = 2 * math.pi
GRONWALL_RADIUS = 0.01

# Dormand-Prince 5(4)
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4


@dataclass(frozen=True)
class IntegratorOptions:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    guard: float = 1e-6
    escape_cap: float = 100.0
    max_step: float = math.pi / 8
    min_step: float = 1e-13

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0 and self.guard > 0 and self.escape_cap > 0):
            raise InputError("integrator tolerances, guard and escape cap must be positive")

    @classmethod
    def for_delta(cls, delta: float, **kw) -> "IntegratorOptions":
        """Escape cap ``10 / delta``."""
        return cls(escape_cap=10.0 / delta, **kw)


# ----------------------------------------------------------------------------
# core stepper
# ----------------------------------------------------------------------------

# failure codes
OK, CROSSING, ESCAPE, UNDERFLOW, NONFINITE = 0, 1, 2, 3, 4


@dataclass
class _BatchRun:
    y: np.ndarray  # (m, n) final state (frozen at failure)
    status: np.ndarray  # (n,) failure code
    fail_theta: np.ndarray
    fail_value: np.ndarray  # denominator, modulus or step at failure
    steps: int
    rejected: int
    min_denominator: np.ndarray
    record_theta: list
    record_y: list


def _dopri(
    rhs: Callable[[float, np.ndarray], tuple[np.ndarray, np.ndarray]],
    y0: np.ndarray,
    t_end: float,
    atol: np.ndarray,
    opts: IntegratorOptions,
    modulus: Callable[[np.ndarray], np.ndarray],
    record: bool = False,
) -> _BatchRun:
    """Integrate ``y' = rhs(t, y)`` from 0 to ``t_end``.

    ``rhs`` returns ``(dy, denominators)`` with one denominator per element.
    ``atol`` has one entry per component row, or one per element.
    """
    y = np.array(y0, dtype=complex)
    m, n = y.shape
    atol = np.asarray(atol, dtype=float)
    atol = atol.reshape(m, 1) if atol.size == m else atol.reshape(m, n)
    status = np.zeros(n, dtype=int)
    fail_theta = np.full(n, np.nan)
    fail_value = np.full(n, np.nan)
    active = np.ones(n, dtype=bool)
    min_den = np.full(n, np.inf)
    rec_t, rec_y = ([0.0], [y.copy()]) if record else ([], [])

    t = 0.0
    h = min(opts.max_step, t_end / 16)
    k1, den = rhs(t, y)
    min_den = np.minimum(min_den, den)
    steps = rejected = 0

    def fail(mask, code, value):
        nonlocal active
        idx = np.nonzero(mask & active)[0]
        status[idx] = code
        fail_theta[idx] = t
        fail_value[idx] = value[idx] if np.ndim(value) else value
        active[idx] = False

    bad = den < opts.guard
    if bad.any():
        fail(bad, CROSSING, den)

    while t < t_end and active.any():
        h = min(h, t_end - t)
        ks = [k1]
        stage_den = np.full(n, np.inf)
        for i in range(1, 7):
            yi = y + h * sum(a * k for a, k in zip(_A[i], ks) if a != 0.0)
            ki, di = rhs(t + _C[i] * h, yi)
            stage_den = np.minimum(stage_den, di)
            ks.append(ki)
        last_den = di
        y_new = y + h * sum(b * k for b, k in zip(_B5, ks) if b != 0.0)
        err = h * sum(e * k for e, k in zip(_E, ks) if e != 0.0)
        scale = atol + opts.rel_tol * np.maximum(np.abs(y), np.abs(y_new))
        ratio = np.max(np.abs(err) / scale, axis=0)
        finite = np.all(np.isfinite(y_new), axis=0) & np.isfinite(ratio)
        ratio = np.where(finite, ratio, np.inf)
        near_pole = stage_den < opts.guard
        ratio = np.where(near_pole, np.inf, ratio)
        ratio = np.where(active, ratio, 0.0)
        worst = float(np.max(ratio))
        if worst <= 1.0:
            t = t + h if t + h < t_end * (1 - 1e-15) else t_end
            y = np.where(active, y_new, y)
            k1 = ks[6]
            den = np.where(active, last_den, np.inf)
            min_den = np.where(active, np.minimum(min_den, den), min_den)
            steps += 1
            mod = modulus(y)
            fail(mod > opts.escape_cap, ESCAPE, mod)
            fail(den < opts.guard, CROSSING, den)
            if record:
                rec_t.append(t)
                rec_y.append(y.copy())
            fac = 5.0 if worst == 0 else min(5.0, max(0.2, 0.9 * worst ** (-0.2)))
            h = min(opts.max_step, h * fac)
        else:
            rejected += 1
            if math.isinf(worst):
                h_new = h / 4
            else:
                h_new = h * max(0.1, 0.9 * worst ** (-0.25))
            if h_new < opts.min_step:
                culprits = active & (ratio > 1.0)
                pole = culprits & near_pole
                fail(pole, CROSSING, stage_den)
                nonfin = culprits & ~finite & ~near_pole
                fail(nonfin, NONFINITE, np.full(n, h_new))
                fail(culprits, UNDERFLOW, np.full(n, h_new))
                h = max(h, opts.min_step * 16)
                continue
            h = h_new
    return _BatchRun(y, status, fail_theta, fail_value, steps, rejected, min_den, rec_t, rec_y)


class _RadialRHS:
    """``F(w, theta) = w (lambda1 + w f) / (1 + w g)`` for a batch of w."""

    def __init__(self, lam: FieldParams):
        self.lam = lam
        self.A, self.B, self.C = lam.A, lam.B, lam.C
        self.l1 = lam.lambda1

    def fg(self, t: float) -> tuple[float, float]:
        e = complex(math.cos(t), math.sin(t))
        ei = e.conjugate()
        h = self.A * e + self.B * ei + self.C * ei * ei * ei
        return h.real, h.imag

    def denominator(self, t: float, y: np.ndarray) -> np.ndarray:
        _, g = self.fg(t)
        return np.abs(1 + y[0] * g)

    def __call__(self, t: float, y: np.ndarray):
        f, g = self.fg(t)
        w = y[0]
        d = 1 + w * g
        dw = w * (self.l1 + w * f) / d
        return dw[None, :], np.abs(d)


class _DivergenceRHS(_RadialRHS):
    """State ``(w_G, D)`` with ``w_F = w_G + D``.

    ``w_G`` solves the equation at ``lambda1 = 0``; ``w_F`` the one at the
    field's own ``lambda1``.  The difference is integrated directly:
    ``D' = lambda1 w_F / (1 + w_F g) + f D (w_F + w_G + w_F w_G g) / ((1 + w_F g)(1 + w_G g))``,
    so tiny ``lambda1`` is resolved to relative precision.
    """

    def denominator(self, t, y):
        _, g = self.fg(t)
        wG = y[0]
        wF = wG + y[1]
        return np.minimum(np.abs(1 + wG * g), np.abs(1 + wF * g))

    def __call__(self, t, y):
        f, g = self.fg(t)
        wG, D = y[0], y[1]
        wF = wG + D
        dG = 1 + wG * g
        dF = 1 + wF * g
        dwG = wG * wG * f / dG
        dD = self.l1 * wF / dF + f * D * (wF + wG + wF * wG * g) / (dF * dG)
        return np.stack([dwG, dD]), np.minimum(np.abs(dG), np.abs(dF))


def _raise_for(run: _BatchRun, i: int):
    code = run.status[i]
    th, val = float(run.fail_theta[i]), float(run.fail_value[i])
    if code == CROSSING:
        raise SingularCrossing(th, val)
    if code == ESCAPE:
        raise Escape(th, val)
    if code in (UNDERFLOW, NONFINITE):
        raise StepFailure(th, val)


def _failure(run: _BatchRun, i: int) -> NumericalFailure | None:
    try:
        _raise_for(run, i)
    except NumericalFailure as exc:
        return exc
    return None


# ----------------------------------------------------------------------------
# trajectories and the return map
# ----------------------------------------------------------------------------


@dataclass
class Trajectory:
    theta: np.ndarray
    w: np.ndarray
    steps: int
    rejected: int
    min_denominator: float

    @property
    def samples(self) -> list[tuple[float, complex]]:
        return list(zip(self.theta.tolist(), self.w.tolist()))

    @property
    def end(self) -> complex:
        return complex(self.w[-1])

    def points(self) -> np.ndarray:
        """Orbit in the plane, ``z = w e^{i theta}`` (meaningful for real ``w``)."""
        return self.w * np.exp(1j * self.theta)

    def csv_text(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["theta", "re_w", "im_w"])
        for t, w in zip(self.theta, self.w):
            wr.writerow([f"{t:.17g}", f"{w.real:.17g}", f"{w.imag:.17g}"])
        return buf.getvalue()

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.csv_text())

    def stats(self) -> dict:
        return {"steps": self.steps, "rejected": self.rejected, "min_denominator": self.min_denominator}


def _options(options: IntegratorOptions | None, rel_tol, abs_tol) -> IntegratorOptions:
    opts = options or IntegratorOptions()
    if rel_tol is not None or abs_tol is not None:
        opts = IntegratorOptions(
            rel_tol=opts.rel_tol if rel_tol is None else rel_tol,
            abs_tol=opts.abs_tol if abs_tol is None else abs_tol,
            guard=opts.guard,
            escape_cap=opts.escape_cap,
            max_step=opts.max_step,
            min_step=opts.min_step,
        )
    return opts


def _start_atol(opts: IntegratorOptions, w0: np.ndarray) -> np.ndarray:
    """Absolute tolerance per start, never looser than ``rel_tol |w0|``.

    Near the origin the equation is close to scale invariant, so this keeps
    the relative accuracy of small orbits at the level of large ones.
    """
    r = np.abs(w0)
    return np.where(r > 0, np.minimum(opts.abs_tol, opts.rel_tol * r), opts.abs_tol)[None, :]


def integrate(
    lam: FieldParams,
    w0: complex,
    rel_tol: float | None = None,
    abs_tol: float | None = None,
    options: IntegratorOptions | None = None,
) -> Trajectory:
    """Solve the radial equation over ``[0, 2 pi]`` from ``w(0) = w0``."""
    opts = _options(options, rel_tol, abs_tol)
    rhs = _RadialRHS(lam)
    atol = _start_atol(opts, np.array([complex(w0)]))
    run = _dopri(rhs, np.array([[complex(w0)]]), TWO_PI, atol, opts, lambda y: np.abs(y[0]), record=True)
    _raise_for(run, 0)
    theta = np.array(run.record_theta)
    w = np.array([y[0, 0] for y in run.record_y])
    return Trajectory(theta, w, run.steps, run.rejected, float(run.min_denominator[0]))


@dataclass
class BatchResult:
    w_end: np.ndarray  # nan where the integration failed
    failures: list  # NumericalFailure or None per element

    @property
    def ok(self) -> np.ndarray:
        return np.array([f is None for f in self.failures], dtype=bool)


def integrate_batch(
    lam: FieldParams,
    w0,
    options: IntegratorOptions | None = None,
    chunk: int = 64,
) -> BatchResult:
    """End values ``w(2 pi)`` for many initial values (chunks share a step size)."""
    opts = options or IntegratorOptions()
    w0 = np.atleast_1d(np.asarray(w0, dtype=complex))
    out = np.full(w0.shape, np.nan + 0j)
    failures: list = [None] * len(w0)
    rhs = _RadialRHS(lam)
    order = np.argsort(np.abs(w0), kind="stable")
    for s in range(0, len(w0), chunk):
        idx = order[s : s + chunk]
        run = _dopri(rhs, w0[idx][None, :], TWO_PI, _start_atol(opts, w0[idx]), opts, lambda y: np.abs(y[0]))
        for j, i in enumerate(idx):
            exc = _failure(run, j)
            failures[i] = exc
            if exc is None:
                out[i] = run.y[0, j]
    return BatchResult(out, failures)


def poincare_map(lam: FieldParams, x, options: IntegratorOptions | None = None):
    """``P(x) = w(2 pi)``; real input gives a real result."""
    is_complex = isinstance(x, complex)
    res = integrate(lam, complex(x), options=options).end
    return res if is_complex else float(res.real)


def displacement(lam: FieldParams, x, options: IntegratorOptions | None = None):
    return poincare_map(lam, x, options) - x


def admissible_radius(lam: FieldParams) -> float:
    """``eps(lambda)``: orbits from ``|w| <= 2 eps`` stay in ``|w| <= 0.01`` over a turn."""
    if lam.lambda1 <= 0.1:
        return 0.0005
    return 0.005 * math.exp(-4 * math.pi * lam.lambda1)


def lipschitz_bound(lam: FieldParams) -> float:
    """Bound for ``|dF/dw|`` on ``|w| <= 0.01``."""
    return 0.2 if lam.lambda1 <= 0.1 else 2 * lam.lambda1


# ----------------------------------------------------------------------------
# high precision map (Taylor series in theta)
# ----------------------------------------------------------------------------


def poincare_map_hp(lam: FieldParams, x, digits: int = 60, steps: int = 48) -> mpmath.mpc:
    """``P(x)`` by a high-order Taylor method in ``digits``-digit arithmetic.

    On each step ``[t0, t0 + h]`` the coefficients ``f, g`` are expanded
    exactly (they are trigonometric polynomials) and the series of ``w``
    follows from ``w' (1 + w g) = w (lambda1 + w f)`` term by term.  The order
    grows until the tail is below the working precision.
    """
    with mpmath.workdps(digits + 10):
        A, B, C = (mpmath.mpc(z.real, z.imag) for z in (lam.A, lam.B, lam.C))
        l1 = mpmath.mpf(lam.lambda1)
        two_pi = 2 * mpmath.pi
        h = two_pi / steps
        w = mpmath.mpc(x)
        tiny = mpmath.mpf(10) ** (-(digits + 5))
        for s in range(steps):
            t0 = s * h
            w = _taylor_step(A, B, C, l1, t0, h, w, tiny)
        return w


def _taylor_step(A, B, C, l1, t0, h, w0, tiny, max_order: int = 400):
    # h(t0 + u) = sum_k H_k e^{i k t0} e^{i k u}; coefficient of u^n is sum H_k e^{i k t0} (ik)^n / n!
    freqs = ((1, A), (-1, B), (-3, C))
    base = [(k, Hk * mpmath.expj(k * t0)) for k, Hk in freqs]
    fs: list = []
    gs: list = []
    ws = [w0]
    D: list = []  # series of 1 + w g
    N: list = []  # series of w (l1 + w f)
    WF: list = []  # series of w f
    fact = mpmath.mpf(1)
    total = w0
    hp = mpmath.mpf(1)
    small_run = 0
    for n in range(max_order):
        if n > 0:
            fact *= n
        hn = sum(c * (1j * k) ** n for k, c in base) / fact
        hc = _conj_series(base, n, fact)
        fs.append((hn + hc) / 2)
        gs.append((hn - hc) / 2j)
        # products up to degree n need w_0..w_n
        wf_n = sum(ws[j] * fs[n - j] for j in range(n + 1))
        WF.append(wf_n)
        wg_n = sum(ws[j] * gs[n - j] for j in range(n + 1))
        D.append((1 if n == 0 else 0) + wg_n)
        N.append(l1 * ws[n] + sum(ws[j] * WF[n - j] for j in range(n + 1)))
        # (n+1) w_{n+1} D_0 + sum_{j=1}^{n} (n+1-j) w_{n+1-j} D_j = N_n
        acc = N[n] - sum((n + 1 - j) * ws[n + 1 - j] * D[j] for j in range(1, n + 1))
        w_next = acc / ((n + 1) * D[0])
        ws.append(w_next)
        hp *= h
        term = w_next * hp
        total += term
        scale = abs(total) + tiny
        if abs(term) <= tiny * scale:
            small_run += 1
            if small_run >= 3:
                return total
        else:
            small_run = 0
    raise StepFailure(float(t0), float(h))


def _conj_series(base, n, fact):
    # conj(h)(t0 + u): coefficient of u^n is sum conj(c) (-ik)^n / n!
    return sum(mpmath.conj(c) * (-1j * k) ** n for k, c in base) / fact


# ----------------------------------------------------------------------------
# cycles
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class LimitCycleRecord:
    x_star: float
    residual: float
    stability: int  # sign of the displacement derivative: -1 attracting, +1 repelling, 0 unknown
    tame: bool
    min_singular_distance: float
    max_radius: float

    def to_json(self) -> dict:
        return {
            "x_star": self.x_star,
            "residual": self.residual,
            "stability": self.stability,
            "tame": self.tame,
            "min_singular_distance": _finite_or_none(self.min_singular_distance),
            "max_radius": self.max_radius,
        }


def _finite_or_none(v: float):
    return v if math.isfinite(v) else None


@dataclass
class CycleSearch:
    cycles: list[LimitCycleRecord]
    holes: list[tuple[float, float]]
    degenerate_zero: list[tuple[float, float]]
    a_lambda: float | None
    grid_points: int
    x_min: float
    x_max: float

    def to_json(self) -> dict:
        return {
            "cycles": [c.to_json() for c in self.cycles],
            "integration_holes": [list(h) for h in self.holes],
            "degenerate_zero_intervals": [list(h) for h in self.degenerate_zero],
            "a_lambda": self.a_lambda,
            "grid": {"points": self.grid_points, "x_min": self.x_min, "x_max": self.x_max},
        }


def cycle_grid(x_min: float, x_max: float, grid_points: int, knee: float = 1e-2) -> np.ndarray:
    """Geometric grid from ``x_min`` to ``knee``, uniform from ``knee`` to ``x_max``."""
    if grid_points < 4:
        raise InputError("grid_points must be >= 4")
    if not 0 < x_min < x_max:
        raise InputError("need 0 < x_min < x_max")
    if x_max <= knee:
        return np.geomspace(x_min, x_max, grid_points)
    if x_min >= knee:
        return np.linspace(x_min, x_max, grid_points)
    n_geo = grid_points // 2
    geo = np.geomspace(x_min, knee, n_geo)
    uni = np.linspace(knee, x_max, grid_points - n_geo + 1)[1:]
    return np.concatenate([geo, uni])


def zero_tolerance(x):
    """Displacements this small are indistinguishable from zero at the default tolerances."""
    return 1e-9 * np.abs(x) + 1e-11


def find_cycles(
    lam: FieldParams,
    delta: float,
    x_min: float = 1e-6,
    grid_points: int = 2048,
    options: IntegratorOptions | None = None,
    rel_tol: float = 1e-10,
) -> CycleSearch:
    """Fixed points of ``P`` on ``[x_min, 1/delta]`` by sign changes and bisection."""
    if not 0 < delta < 1:
        raise InputError("delta must lie in (0, 1)")
    if not lambda1_gate(lam, delta):
        raise PreconditionViolation(f"lambda1 = {lam.lambda1} > 4/delta: no tame cycles possible")
    opts = options or IntegratorOptions.for_delta(delta)
    x_max = 1.0 / delta
    xs = cycle_grid(x_min, x_max, grid_points)
    batch = integrate_batch(lam, xs, opts)
    ok = batch.ok
    d = np.where(ok, batch.w_end.real - xs, np.nan)
    tol = zero_tolerance(xs)
    sign = np.where(ok & (np.abs(np.nan_to_num(d)) > tol), np.sign(np.nan_to_num(d)), 0).astype(int)

    holes = _runs(xs, ~ok)
    brackets, degenerate = _scan_signs(xs, d, sign, ok)

    roots: list[tuple[float, float, int]] = []
    for lo, hi, dlo, dhi in brackets:
        try:
            x_star = _bisect(lam, lo, hi, dlo, opts, rel_tol)
        except NumericalFailure:
            holes.append((float(lo), float(hi)))
            continue
        stab = -1 if dlo > 0 > dhi else (1 if dlo < 0 < dhi else 0)
        if any(abs(x_star - r[0]) <= 1e-8 * max(x_star, r[0]) for r in roots):
            continue
        roots.append((x_star, abs(displacement(lam, x_star, opts)), stab))

    pts = singular_set_or_degenerate(lam)
    cycles = []
    for x_star, res, stab in sorted(roots):
        try:
            tame, dist, rmax = classify_tame(lam, delta, x_star, pts, opts)
        except NumericalFailure:
            tame, dist, rmax = False, float("nan"), float("nan")
        cycles.append(LimitCycleRecord(float(x_star), float(res), stab, tame, dist, rmax))
    tame_x = [c.x_star for c in cycles if c.tame]
    holes.sort()
    return CycleSearch(cycles, holes, degenerate, max(tame_x) if tame_x else None, len(xs), float(xs[0]), float(xs[-1]))


def _scan_signs(xs, d, sign, ok):
    """Brackets of sign changes and intervals where the displacement is numerically zero.

    Works on each hole-free stretch of the grid separately.  A run of zeros
    flanked by opposite signs still brackets a root; runs longer than one
    point, or not flanked by opposite signs, are also reported as degenerate.
    """
    brackets = []
    degenerate = []
    n = len(xs)
    i = 0
    while i < n:
        if not ok[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and ok[j + 1]:
            j += 1
        # runs of equal sign inside [i, j]
        runs = []
        k = i
        while k <= j:
            m = k
            while m + 1 <= j and sign[m + 1] == sign[k]:
                m += 1
            runs.append((sign[k], k, m))
            k = m + 1
        for r, (sg, a, b) in enumerate(runs):
            if sg != 0:
                if r + 1 < len(runs) and runs[r + 1][0] == -sg:
                    brackets.append((xs[b], xs[b + 1], d[b], d[b + 1]))
                continue
            left = runs[r - 1] if r > 0 else None
            right = runs[r + 1] if r + 1 < len(runs) else None
            if left and right and left[0] == -right[0]:
                brackets.append((xs[left[2]], xs[right[1]], d[left[2]], d[right[1]]))
                if b == a:
                    continue
            lo = xs[left[2]] if left else xs[a]
            hi = xs[right[1]] if right else xs[b]
            degenerate.append((float(lo), float(hi)))
        i = j + 1
    return brackets, degenerate


def _runs(xs: np.ndarray, mask: np.ndarray) -> list[tuple[float, float]]:
    """Intervals ``[x_prev_ok, x_next_ok]`` around contiguous runs of True."""
    out = []
    n = len(xs)
    i = 0
    while i < n:
        if mask[i]:
            j = i
            while j + 1 < n and mask[j + 1]:
                j += 1
            lo = xs[i - 1] if i > 0 else xs[i]
            hi = xs[j + 1] if j + 1 < n else xs[j]
            out.append((float(lo), float(hi)))
            i = j + 1
        else:
            i += 1
    return out


def _bisect(lam, lo, hi, dlo, opts, rel_tol) -> float:
    slo = np.sign(dlo)
    for _ in range(200):
        if hi - lo <= rel_tol * hi:
            break
        mid = 0.5 * (lo + hi)
        dm = displacement(lam, mid, opts)
        if dm == 0:
            return mid
        if np.sign(dm) == slo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def classify_tame(
    lam: FieldParams,
    delta: float,
    x_star: float,
    pts: SingularPointSet | None = None,
    options: IntegratorOptions | None = None,
    samples: int = 1024,
) -> tuple[bool, float, float]:
    """Check the real orbit through ``(x_star, 0)`` against the tame region."""
    if not 0 < delta < 1:
        raise InputError("delta must lie in (0, 1)")
    traj = cycle_orbit(lam, x_star, options, samples)
    if pts is None:
        pts = singular_set_or_degenerate(lam)
    z = traj.points()
    mask = tame_region_mask(lam, delta, z, pts)
    dist = float(np.min(singular_distance(z, pts))) if len(z) else float("inf")
    rmax = float(np.max(np.abs(z)))
    return bool(np.all(mask)), dist, rmax


def cycle_orbit(lam: FieldParams, x_star: float, options: IntegratorOptions | None = None, samples: int = 1024):
    """Real orbit from ``(x_star, 0)`` sampled at least ``samples`` times per turn."""
    opts = options or IntegratorOptions()
    opts = IntegratorOptions(opts.rel_tol, opts.abs_tol, opts.guard, opts.escape_cap, min(opts.max_step, TWO_PI / samples), opts.min_step)
    return integrate(lam, complex(x_star), options=opts)


# ----------------------------------------------------------------------------
# maxima of the displacement on K and U
# ----------------------------------------------------------------------------


@dataclass
class MaxDisplacementReport:
    value: float
    mode: str
    samples: int
    failures: int
    disc_only: bool
    a_lambda: float | None
    eps: float
    gap: float | None

    def to_json(self) -> dict:
        return dict(self.__dict__)


def k_region_points(a_lambda: float | None, eps: float, n: int = 256) -> np.ndarray:
    """Segment ``[0, a]`` plus the circle ``|w| = eps`` (``D_eps`` alone without ``a``)."""
    circle = eps * np.exp(2j * np.pi * np.arange(n) / n)
    if a_lambda is None:
        return circle
    seg = np.linspace(0, a_lambda, n)[1:].astype(complex)
    return np.concatenate([seg, circle])


def u_region_points(a_lambda: float | None, eps: float, gap: float, n: int = 256) -> np.ndarray:
    """Boundary of the ``gap``-neighbourhood of ``[0, a]`` together with the circle ``|w| = 2 eps``."""
    circle = 2 * eps * np.exp(2j * np.pi * np.arange(n) / n)
    if a_lambda is None:
        return circle
    a = a_lambda
    m = max(n // 4, 4)
    top = np.linspace(0, a, m) + 1j * gap
    bottom = np.linspace(a, 0, m) - 1j * gap
    right = a + gap * np.exp(1j * np.linspace(-np.pi / 2, np.pi / 2, m))
    left = gap * np.exp(1j * np.linspace(np.pi / 2, 3 * np.pi / 2, m))
    return np.concatenate([top, right, bottom, left, circle])


def max_displacement(
    lam: FieldParams,
    mode: str = "K",
    a_lambda: float | None = None,
    gap: float | None = None,
    n: int = 256,
    options: IntegratorOptions | None = None,
) -> MaxDisplacementReport:
    """Sampled ``max |P(w) - w|`` over ``K`` or over the boundary of ``U``."""
    eps = admissible_radius(lam)
    if mode == "K":
        pts = k_region_points(a_lambda, eps, n)
    elif mode == "U":
        if a_lambda is not None and (gap is None or gap <= 0):
            raise InputError("U-mode with a segment needs a positive gap")
        pts = u_region_points(a_lambda, eps, gap or 0.0, n)
    else:
        raise InputError("mode must be 'K' or 'U'")
    res = integrate_batch(lam, pts, options)
    vals = np.abs(res.w_end - pts)
    good = res.ok
    value = float(np.max(vals[good])) if good.any() else float("nan")
    return MaxDisplacementReport(value, mode, len(pts), int((~good).sum()), a_lambda is None, a_lambda, eps, gap)


# ----------------------------------------------------------------------------
# Gronwall containment and the slow-focus divergence
# ----------------------------------------------------------------------------


@dataclass
class GronwallReport:
    sup_actual: float
    bound: float
    L: float
    pointwise: bool
    contained: bool  # stays in |w| <= 0.01

    @property
    def ok(self) -> bool:
        return self.sup_actual <= self.bound and self.pointwise

    def to_json(self) -> dict:
        return {**self.__dict__, "ok": self.ok}


def gronwall_check(lam: FieldParams, w0: complex, options: IntegratorOptions | None = None) -> GronwallReport:
    """Compare ``sup |w|`` with ``|w0| e^{2 pi L}`` and check ``|w(t)| <= |w0| e^{L t}`` pointwise."""
    eps = admissible_radius(lam)
    if abs(w0) > eps * (1 + 1e-12):
        raise PreconditionViolation(f"|w0| = {abs(w0)} exceeds eps(lambda) = {eps}")
    L = lipschitz_bound(lam)
    r0 = abs(w0)
    bound = r0 * math.exp(TWO_PI * L)
    if r0 == 0:
        return GronwallReport(0.0, 0.0, L, True, True)
    traj = integrate(lam, complex(w0), options=options)
    mod = np.abs(traj.w)
    envelope = r0 * np.exp(L * traj.theta)
    slack = 1e-9 * r0
    sup = float(mod.max())
    return GronwallReport(sup, bound, L, bool(np.all(mod <= envelope + slack)), sup <= GRONWALL_RADIUS)


@dataclass
class DivergenceReport:
    actual: float
    bound: float
    delta_bound: float
    L: float

    @property
    def ok(self) -> bool:
        return self.actual <= self.bound

    def to_json(self) -> dict:
        return {**self.__dict__, "ok": self.ok}


def divergence_bound_delta(lam: FieldParams, R: float = GRONWALL_RADIUS) -> float:
    """``max_{|w| <= R} |lambda1 w / (1 + w g)| <= lambda1 R / (1 - R (|A| + |B| + |C|))``."""
    return lam.lambda1 * R / (1 - R * (abs(lam.A) + abs(lam.B) + abs(lam.C)))


def divergence_check(
    lam_slow: FieldParams,
    w0: complex,
    lam_zero: FieldParams | None = None,
    options: IntegratorOptions | None = None,
) -> DivergenceReport:
    """``max |w_F - w_G|`` over a turn against ``2 pi Delta e^{2 pi L}``.

    ``w_F`` solves the field with its ``lambda1``, ``w_G`` the same field
    with ``lambda1 = 0``.
    """
    if lam_zero is None:
        lam_zero = lam_slow.with_lambda1(0.0)
    if (lam_zero.A, lam_zero.B, lam_zero.C) != (lam_slow.A, lam_slow.B, lam_slow.C) or lam_zero.lambda1 != 0:
        raise InputError("lam_zero must be the same field with lambda1 = 0")
    if not 0 <= lam_slow.lambda1 <= 0.1:
        raise PreconditionViolation("divergence bound needs 0 <= lambda1 <= 0.1")
    if abs(w0) > 0.0005 * (1 + 1e-12):
        raise PreconditionViolation("|w0| must be <= 0.0005")
    L = lipschitz_bound(lam_slow)
    delta = divergence_bound_delta(lam_slow)
    bound = TWO_PI * delta * math.exp(TWO_PI * L)
    if lam_slow.lambda1 == 0 or w0 == 0:
        return DivergenceReport(0.0, bound, delta, L)
    opts = options or IntegratorOptions()
    rhs = _DivergenceRHS(lam_slow)
    d_scale = TWO_PI * lam_slow.lambda1 * abs(w0)
    atol = [opts.abs_tol, opts.abs_tol * d_scale / max(abs(w0), 1e-300)]
    y0 = np.array([[complex(w0)], [0j]])
    run = _dopri(rhs, y0, TWO_PI, atol, opts, lambda y: np.abs(y[0]) + np.abs(y[1]), record=True)
    _raise_for(run, 0)
    actual = max(abs(y[1, 0]) for y in run.record_y)
    return DivergenceReport(float(actual), bound, delta, L)


# ----------------------------------------------------------------------------
# the strip below the zero isocline
# ----------------------------------------------------------------------------


@dataclass
class GapReport:
    beta: float
    kappa_prime: float
    S_est: float
    s_est: float
    S_lower: float
    s_upper: float
    minH_on_gamma: float
    H_l2: float
    H_l2_quadrature: float
    H_l2_floor: float
    corollary_pass: bool
    isocline_residual: float
    reduced_residual: float
    arcs: list[tuple[float, float]]
    samples_per_arc: int
    empty: bool = False

    @property
    def slope_pass(self) -> bool:
        return self.S_est > self.s_est

    @property
    def passed(self) -> bool:
        return self.slope_pass and self.corollary_pass

    @property
    def bound_chain_pass(self) -> bool:
        """Whether the closed-form floor for S exceeds the closed-form cap for s."""
        return self.S_lower > self.s_upper

    def to_json(self) -> dict:
        out = {k: v for k, v in self.__dict__.items() if k != "arcs"}
        out["arcs"] = [list(a) for a in self.arcs]
        out["slope_pass"] = self.slope_pass
        out["pass"] = self.passed
        out["bound_chain_pass"] = self.bound_chain_pass
        for k in ("S_est", "s_est", "minH_on_gamma"):
            out[k] = _finite_or_none(out[k])
        return out


def isocline_H(lam: FieldParams, theta):
    """``H = lambda1 g - f``, the numerator of ``r'`` on the zero isocline."""
    p = polar_data(lam, theta)
    return lam.lambda1 * p.g - p.f


def isocline_H_reduced(lam: FieldParams, theta):
    """``Im(conj(mu) (b e^{-i t} + c e^{-3 i t}))`` from the singular decomposition."""
    dec = singular_decomposition(lam)
    t = np.asarray(theta, dtype=float)
    # undo the A -> 1 rescaling: z -> s z rotates theta by arg(s) and scales h by 1/|s|
    s = dec.scale
    ts = t - np.angle(s) if s != 1 else t
    ht = dec.b * np.exp(-1j * ts) + dec.c * np.exp(-3j * ts)
    return np.imag(np.conj(lam.mu) * ht) * (1 / abs(s) if s != 1 else 1.0)


def strip_gap_check(
    lam: FieldParams,
    delta: float,
    kappa: float,
    samples: int = 4096,
    pts: SingularPointSet | None = None,
) -> GapReport:
    """Slopes of the field and of the lower strip boundary ``r = -1/g - beta``.

    ``S`` is the smallest ``|dr/dtheta|`` of the field on the boundary,
    evaluated in the cancellation-free form
    ``|r| |H/g - beta f| / (beta |g|)``; ``s`` is the largest ``|(1/g)'|``.
    Each admissible arc is resampled with ``samples`` points.
    """
    from .bounds import beta as beta_of, kappa_prime as kappa_prime_of

    if not (0 < delta < 1 and kappa > 0):
        raise InputError("need delta in (0, 1) and kappa > 0")
    dec = singular_decomposition(lam)
    if dec.kappa_distance <= kappa:
        raise PreconditionViolation(f"kappa-distance {dec.kappa_distance:.6g} is not > kappa = {kappa}")
    beta = beta_of(delta, kappa)
    kp = kappa_prime_of(delta, kappa)
    if pts is None:
        pts = singular_set_or_degenerate(lam)

    # L2 norm of H (unnormalized, over [0, 2 pi]): Parseval and quadrature
    mu_abs = abs(lam.mu)
    h_l2 = mu_abs * math.sqrt((abs(dec.b) ** 2 + abs(dec.c) ** 2) / 2) * math.sqrt(TWO_PI) / abs(dec.scale)
    tq = np.linspace(0, TWO_PI, 4096, endpoint=False)
    Hq = isocline_H(lam, tq)
    h_l2_q = math.sqrt(float(np.mean(Hq**2)) * TWO_PI)
    reduced = float(np.max(np.abs(Hq - isocline_H_reduced(lam, tq))))
    floor = mu_abs / math.sqrt(2) * kappa

    def admissible(t):
        p = polar_data(lam, t)
        g = p.g
        with np.errstate(divide="ignore", invalid="ignore"):
            r = -1.0 / g - beta
        ok = g < 0
        z = np.where(ok, r, 0) * np.exp(1j * t)
        return ok & tame_region_mask(lam, delta, z, pts) & (r > 0)

    coarse = np.linspace(0, TWO_PI, samples, endpoint=False)
    mask = admissible(coarse)
    arcs = _arcs(coarse, mask)
    S_lower = kp / (80 * beta) - 0.2
    s_upper = 7 / delta**2
    if not arcs:
        raise EmptyArc("the lower strip boundary has no point in the tame region")

    S = math.inf
    s = 0.0
    minH = math.inf
    resid = 0.0
    for lo, hi in arcs:
        t = np.linspace(lo, hi, samples)
        keep = admissible(t)
        t = t[keep]
        if len(t) == 0:
            continue
        p = polar_data(lam, t)
        f, g = p.f, p.g
        H = lam.lambda1 * g - f
        r = -1.0 / g - beta
        slope = np.abs(r) * np.abs(H / g - beta * f) / (beta * np.abs(g))
        dg = _g_prime(lam, t)
        S = min(S, float(slope.min()))
        s = max(s, float(np.max(np.abs(dg / g**2))))
        minH = min(minH, float(np.abs(H).min()))
        # r' on the isocline itself: r (lambda1 + r f) with r = -1/g; equals -H/g^2
        r0 = -1.0 / g
        rdot = r0 * (lam.lambda1 + r0 * f)
        resid = max(resid, float(np.max(np.abs(rdot * g**2 + H) / (1 + np.abs(H)))))
    return GapReport(
        beta, kp, S, s, S_lower, s_upper, minH, h_l2, h_l2_q, floor, h_l2 >= floor, resid, reduced, arcs, samples
    )


def _g_prime(lam: FieldParams, t):
    e = np.exp(1j * t)
    hp = 1j * lam.A * e - 1j * lam.B / e - 3j * lam.C / e**3
    return hp.imag


def _arcs(t: np.ndarray, mask: np.ndarray) -> list[tuple[float, float]]:
    """Connected admissible arcs on the circle, as ``(start, end)`` with ``end`` possibly past 2 pi."""
    n = len(t)
    if not mask.any():
        return []
    step = t[1] - t[0]
    if mask.all():
        return [(0.0, TWO_PI)]
    # rotate so index 0 is outside
    start = int(np.argmin(mask))
    arcs = []
    i = 0
    while i < n:
        k = (start + i) % n
        if mask[k]:
            j = i
            while j + 1 < n and mask[(start + j + 1) % n]:
                j += 1
            a = t[k]
            b = a + (j - i) * step
            arcs.append((float(a), float(b)))
            i = j + 1
        else:
            i += 1
    return arcs


def strip_hits(lam: FieldParams, beta: float, traj: Trajectory) -> int:
    """Number of orbit samples inside ``-1/g - beta <= r <= -1/g`` (``g < 0``)."""
    p = polar_data(lam, traj.theta)
    r = traj.w.real
    g = p.g
    with np.errstate(divide="ignore"):
        edge = -1.0 / g
    inside = (g < 0) & (r >= edge - beta) & (r <= edge)
    return int(inside.sum())


def isocline_gap(lam: FieldParams, traj: Trajectory) -> float:
    """Smallest ``-1/g - r`` over samples with ``g < 0`` (inf if none)."""
    p = polar_data(lam, traj.theta)
    g = p.g
    neg = g < 0
    if not neg.any():
        return math.inf
    return float(np.min(-1.0 / g[neg] - traj.w.real[neg]))
