"""``qvf`` command line: one JSON document on stdout per run.

Exit codes: 0 success, 2 invalid input, 3 numerical failure.  Errors are
reported as ``{"error": <class>, "message": ..., ...}`` on stdout.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from pathlib import Path

import mpmath
import numpy as np

from . import __version__
from .errors import EmptyArc, InputError, NumericalFailure, QVFError

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(message)


def jsonable(obj):
    """Plain JSON types: complex as ``[re, im]``, non-finite floats as ``null``."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating, mpmath.mpc)):
        z = complex(obj)
        return [jsonable(z.real), jsonable(z.imag)]
    if isinstance(obj, (float, np.floating, mpmath.mpf)):
        x = float(obj)
        if not math.isfinite(x):
            return None
        return x + 0.0
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    return obj


def dumps(doc) -> str:
    return json.dumps(jsonable(doc), sort_keys=True, indent=2, allow_nan=False)


# ----------------------------------------------------------------------------
# argument helpers
# ----------------------------------------------------------------------------


def _load_field(source: str | None):
    from .field import field_from_json

    if source is None:
        raise InputError("--field is required")
    text = source.strip()
    if not text.startswith("{"):
        path = Path(source)
        if not path.is_file():
            raise InputError(f"field file not found: {source}")
        text = path.read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"field is not valid JSON: {exc.msg}") from None
    try:
        lam, transform = field_from_json(doc)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(f"invalid field: {exc}") from None
    return doc, lam, transform


def _require(args, *names):
    for n in names:
        if getattr(args, n) is None:
            raise InputError(f"--{n.replace('_', '-')} is required for '{args.command}'")


def _integrator(args):
    from .poincare import IntegratorOptions

    opts = IntegratorOptions.for_delta(args.delta) if args.delta else IntegratorOptions()
    kw = {}
    if args.tol_rel is not None:
        kw["rel_tol"] = args.tol_rel
    if args.tol_abs is not None:
        kw["abs_tol"] = args.tol_abs
    return dataclasses.replace(opts, **kw) if kw else opts


# ----------------------------------------------------------------------------
# commands
# ----------------------------------------------------------------------------


def cmd_normalize(args) -> dict:
    from .field import field_to_json, normalize

    doc, lam, transform = _load_field(args.field)
    if transform is None:
        lam, transform = normalize(lam.mu, lam.A, lam.B, lam.C)
    return {"input": doc, "field": field_to_json(lam), "transform": transform.to_json()}


def cmd_centers(args) -> dict:
    from .field import center_residuals, field_to_json, sigma_distance

    _, lam, _ = _load_field(args.field)
    return {
        "field": field_to_json(lam),
        "g": list(center_residuals(lam).as_tuple()),
        "sigma_distance": sigma_distance(lam),
    }


def cmd_singular(args) -> dict:
    from .errors import FormMismatch
    from .field import field_to_json, singular_decomposition, singular_set_or_degenerate

    _, lam, _ = _load_field(args.field)
    pts = singular_set_or_degenerate(lam, tol=args.tol_abs or 1e-12)
    try:
        dec = singular_decomposition(lam).to_json()
    except FormMismatch:
        dec = None
    return {"field": field_to_json(lam), "singular_points": pts.to_json(), "decomposition": dec}


def cmd_cycles(args) -> dict:
    from .bounds import beta
    from .field import field_to_json
    from .poincare import cycle_orbit, find_cycles, integrate, strip_hits

    _require(args, "delta")
    _, lam, _ = _load_field(args.field)
    opts = _integrator(args)
    search = find_cycles(lam, args.delta, x_min=args.x_min, grid_points=args.grid, options=opts)
    out = {"field": field_to_json(lam), "delta": args.delta, **search.to_json()}
    if args.kappa is not None:
        b = beta(args.delta, args.kappa)
        hits = []
        for c in search.cycles:
            hits.append(strip_hits(lam, b, cycle_orbit(lam, c.x_star, opts)) if c.tame else None)
        out["strip"] = {"beta": b, "hits": hits}
    if args.csv:
        chosen = search.a_lambda
        if chosen is None and search.cycles:
            chosen = max(c.x_star for c in search.cycles)
        if chosen is None:
            out["trajectory"] = {"path": args.csv, "x_star": None, "written": False}
        else:
            traj = integrate(lam, complex(chosen), options=opts)
            traj.to_csv(args.csv)
            out["trajectory"] = {"path": args.csv, "x_star": chosen, "written": True, "samples": len(traj.theta)}
    return out


def cmd_bautin(args) -> dict:
    from .bautin import (
        appendix_v2,
        jet,
        variational_coefficients,
        verify_appendix,
        verify_constant_bounds,
        verify_splitting_constants,
    )

    if args.action == "verify":
        ident = verify_appendix().to_json()
        consts = verify_constant_bounds(step=args.grid_step, digits=args.digits or 50).to_json()
        split = verify_splitting_constants(digits=args.digits or 50)
        v2_ok = variational_coefficients()[1].serialize() == appendix_v2().serialize()
        return {
            "identities": ident,
            "v2_matches_closed_form": v2_ok,
            "constants": consts["constants"],
            "sup_estimates": consts["sup_estimates"],
            "splitting": split,
            "pass": bool(ident["pass"] and v2_ok),
        }
    # jet
    a = jet()
    out = {"a": {str(j): a[j].serialize() for j in range(1, 8)}}
    if args.field is not None:
        from .field import field_to_json

        _, lam, _ = _load_field(args.field)
        values = {
            "a1": lam.A.real, "a2": lam.A.imag,
            "b1": lam.B.real, "b2": lam.B.imag,
            "c1": lam.C.real, "c2": lam.C.imag,
        }
        digits = args.digits or 50
        with mpmath.workdps(digits):
            nums = a.numeric(values, digits)
            out["numeric"] = {str(j + 1): mpmath.nstr(v, 17) for j, v in enumerate(nums)}
        out["field"] = field_to_json(lam)
        out["lambda1_ignored"] = lam.lambda1 != 0
    return out


def cmd_gap_check(args) -> dict:
    from .field import field_to_json
    from .poincare import strip_gap_check

    _require(args, "delta", "kappa")
    _, lam, _ = _load_field(args.field)
    base = {"field": field_to_json(lam), "delta": args.delta, "kappa": args.kappa}
    try:
        rep = strip_gap_check(lam, args.delta, args.kappa, samples=args.samples)
    except EmptyArc as exc:
        return {**base, "empty": True, "message": str(exc), "pass": None}
    return {**base, **rep.to_json()}


def cmd_bound(args) -> dict:
    from .bounds import bound_report

    if args.at is not None:
        delta, sigma, kappa = args.at
    else:
        _require(args, "delta", "sigma", "kappa")
        delta, sigma, kappa = args.delta, args.sigma, args.kappa
    rep = bound_report(delta, sigma, kappa, lambda1=args.lambda1, digits=args.digits or 50)
    return rep.to_json()


def cmd_zero_bound(args) -> dict:
    from .bounds import ln_zero_bound, zero_bound

    _require(args, "M", "m", "D", "eps")
    ln_b = ln_zero_bound(args.M, args.m, args.D, args.eps)
    b = zero_bound(args.M, args.m, args.D, args.eps) if ln_b < 700 else math.inf
    return {"M": args.M, "m": args.m, "D": args.D, "eps": args.eps, "bound": b, "ln_bound": ln_b}


def cmd_selftest(args) -> dict:
    from .properties import run_suites

    return run_suites(args.seed, names=args.suite, cases=args.cases)


COMMANDS = {
    "normalize": cmd_normalize,
    "centers": cmd_centers,
    "singular": cmd_singular,
    "cycles": cmd_cycles,
    "bautin": cmd_bautin,
    "gap-check": cmd_gap_check,
    "bound": cmd_bound,
    "zero-bound": cmd_zero_bound,
    "selftest": cmd_selftest,
}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--field", help="field JSON file or inline JSON object")
    common.add_argument("--delta", type=float)
    common.add_argument("--sigma", type=float)
    common.add_argument("--kappa", type=float)
    common.add_argument("--tol-rel", type=float)
    common.add_argument("--tol-abs", type=float)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--csv", help="trajectory CSV output path")
    common.add_argument("--digits", type=int)

    p = _Parser(prog="qvf", description="Limit cycles of quadratic vector fields near a weak focus.")
    p.add_argument("--version", action="version", version=f"qvf {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in ("normalize", "centers", "singular"):
        sub.add_parser(name, parents=[common])
    c = sub.add_parser("cycles", parents=[common])
    c.add_argument("--grid", type=int, default=2048)
    c.add_argument("--x-min", type=float, default=1e-6)
    b = sub.add_parser("bautin", parents=[common])
    b.add_argument("action", choices=("verify", "jet"))
    b.add_argument("--grid-step", type=float, default=0.05)
    g = sub.add_parser("gap-check", parents=[common])
    g.add_argument("--samples", type=int, default=4096)
    bd = sub.add_parser("bound", parents=[common])
    bd.add_argument("--at", type=float, nargs=3, metavar=("DELTA", "SIGMA", "KAPPA"))
    bd.add_argument("--lambda1", type=float, default=0.0)
    z = sub.add_parser("zero-bound", parents=[common])
    z.add_argument("--M", type=float)
    z.add_argument("--m", type=float)
    z.add_argument("--D", type=float)
    z.add_argument("--eps", type=float)
    s = sub.add_parser("selftest", parents=[common])
    s.add_argument("--cases", type=int)
    s.add_argument("--suite", action="append", choices=None)
    return p


def run(argv: list[str] | None = None) -> tuple[int, dict]:
    """Parse ``argv`` and execute; returns ``(exit_code, document)``."""
    try:
        args = build_parser().parse_args(argv)
        if args.digits is not None and args.digits < 15:
            raise InputError("--digits must be >= 15")
        if args.command == "selftest" and args.suite:
            from .properties import SUITES

            bad = [n for n in args.suite if n not in SUITES]
            if bad:
                raise InputError(f"unknown suite(s): {', '.join(bad)}")
        return EXIT_OK, COMMANDS[args.command](args)
    except InputError as exc:
        return EXIT_INPUT, exc.details()
    except NumericalFailure as exc:
        return EXIT_NUMERIC, exc.details()
    except QVFError as exc:
        return EXIT_NUMERIC, exc.details()


def load_schema(name: str) -> dict:
    """The published JSON schema ``schemas/<name>.schema.json``."""
    from importlib import resources

    return json.loads(resources.files("qvf").joinpath("schemas", f"{name}.schema.json").read_text())


def schema_name(argv: list[str], code: int) -> str:
    """Schema that the document produced by ``run(argv)`` with exit ``code`` follows."""
    if code != EXIT_OK:
        return "error"
    command = next(a for a in argv if not a.startswith("-"))
    if command == "bautin":
        return "bautin-" + ("verify" if "verify" in argv else "jet")
    return command


def main(argv: list[str] | None = None) -> int:
    code, doc = run(argv)
    sys.stdout.write(dumps(doc) + "\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
