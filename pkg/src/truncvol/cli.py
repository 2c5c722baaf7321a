"""Command-line front end: ``truncvol estimate`` and ``truncvol selftest``."""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any

from .errors import BudgetExceeded, ParseError, TooManySubsets, TruncVolError, WidthExceeded
from .exact import format_rational, parse_rational
from .geometry import DEFAULT_MAX_BITS
from .model import Instance, SeparableConstraint, UnivariateFn, validate
from .volume import MODES, VolumeEstimate, estimate_volume

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_INVALID = 2
EXIT_BUDGET = 3


# ------------------------------------------------------------------ instances

def _rat(value: Any, where: str) -> Fraction:
    if isinstance(value, bool) or not isinstance(value, (str, int)):
        raise ParseError(f"{where}: expected a 'p/q' string, got {value!r}")
    try:
        return parse_rational(str(value))
    except ParseError as exc:
        raise ParseError(f"{where}: {exc}") from None


def _list(value: Any, where: str) -> list:
    if not isinstance(value, list):
        raise ParseError(f"{where}: expected a list")
    return value


def _parse_fn(obj: Any, where: str) -> UnivariateFn:
    if not isinstance(obj, dict):
        raise ParseError(f"{where}: expected an object with 'poly' and/or 'pwl'")
    unknown = set(obj) - {"poly", "pwl"}
    if unknown:
        raise ParseError(f"{where}: unknown keys {sorted(unknown)}")
    terms = []
    for t, term in enumerate(_list(obj.get("poly", []), f"{where}.poly")):
        if not isinstance(term, list) or len(term) != 2:
            raise ParseError(f"{where}.poly[{t}]: expected [coeff, exponent]")
        coeff, exp = term
        if isinstance(exp, bool) or not isinstance(exp, int):
            raise ParseError(f"{where}.poly[{t}]: exponent must be an integer")
        terms.append((_rat(coeff, f"{where}.poly[{t}][0]"), exp))
    pwl = None
    if "pwl" in obj:
        pwl = []
        for p, pt in enumerate(_list(obj["pwl"], f"{where}.pwl")):
            if not isinstance(pt, list) or len(pt) != 2:
                raise ParseError(f"{where}.pwl[{p}]: expected [x, y]")
            pwl.append((_rat(pt[0], f"{where}.pwl[{p}][0]"), _rat(pt[1], f"{where}.pwl[{p}][1]")))
    return UnivariateFn(tuple(terms), tuple(pwl) if pwl is not None else None)


def instance_from_json(doc: Any) -> Instance:
    """Build (without validating) an instance from the decoded JSON document."""
    if not isinstance(doc, dict):
        raise ParseError("top level: expected an object")
    n = doc.get("n")
    if isinstance(n, bool) or not isinstance(n, int):
        raise ParseError("n: expected an integer")
    rows = []
    for i, c in enumerate(_list(doc.get("constraints"), "constraints")):
        where = f"constraints[{i}]"
        if not isinstance(c, dict) or "b" not in c:
            raise ParseError(f"{where}: expected an object with 'b'")
        b = _rat(c["b"], f"{where}.b")
        if ("linear" in c) == ("fns" in c):
            raise ParseError(f"{where}: give exactly one of 'linear' or 'fns'")
        if "linear" in c:
            fns = [UnivariateFn.linear(_rat(a, f"{where}.linear[{j}]"))
                   for j, a in enumerate(_list(c["linear"], f"{where}.linear"))]
        else:
            fns = [_parse_fn(f, f"{where}.fns[{j}]")
                   for j, f in enumerate(_list(c["fns"], f"{where}.fns"))]
        rows.append(SeparableConstraint(tuple(fns), b))
    return Instance(n, tuple(rows))


def parse_instance(path: str | Path) -> Instance:
    """Read and validate an instance file."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return validate(instance_from_json(doc))


def instance_to_json(inst: Instance) -> dict:
    rows = []
    for c in inst.constraints:
        coeffs = [f.linear_coefficient() for f in c.fns]
        if all(a is not None for a in coeffs):
            rows.append({"b": format_rational(c.bound), "linear": [format_rational(a) for a in coeffs]})
            continue
        fns = []
        for f in c.fns:
            d: dict[str, Any] = {"poly": [[format_rational(a), e] for a, e in f.terms]}
            if f.pwl is not None:
                d["pwl"] = [[format_rational(x), format_rational(y)] for x, y in f.pwl]
            fns.append(d)
        rows.append({"b": format_rational(c.bound), "fns": fns})
    return {"n": inst.n, "constraints": rows}


# -------------------------------------------------------------------- reports

_RATIONAL_FIELDS = ("estimate", "epsilon", "delta", "eta", "intercept")


@dataclass
class RunReport:
    estimate: Fraction
    epsilon: Fraction
    mode: str
    u: int
    delta: Fraction | None
    eta: Fraction | None
    intercept: Fraction | None
    widths: list[int]
    elapsed_ms: int
    warnings: list[str] = field(default_factory=list)

    @classmethod
    def from_estimate(cls, est: VolumeEstimate) -> RunReport:
        s = est.stats
        return cls(est.estimate, est.epsilon, est.mode, est.u, s.delta, s.eta, s.intercept,
                   list(s.widths), round(s.wall_time * 1000), list(s.warnings))

    def to_json(self) -> str:
        d = asdict(self)
        for k in _RATIONAL_FIELDS:
            d[k] = None if d[k] is None else format_rational(d[k])
        return json.dumps(d, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> RunReport:
        d = json.loads(text)
        for k in _RATIONAL_FIELDS:
            d[k] = None if d[k] is None else parse_rational(d[k])
        return cls(**d)


# ------------------------------------------------------------------- selftest

def _selftest_cases():
    from .model import UnivariateFn as F
    half = Fraction(1, 2)
    lin = Instance.from_linear
    yield "simplex", lin([[1, 1]], [1]), half
    yield "reflected", lin([[-2]], [-1]), half
    yield "skew", lin([[1, 2]], [2]), half
    yield "quadratic cut", Instance.from_functions([([F.poly([(1, 2)])], Fraction(1, 4))]), half
    yield "two halfplanes", lin([[1, 1], [2, 1]], [1, 1]), half
    yield "simplex and disk", Instance.from_functions([
        ([F.linear(1), F.linear(1)], 1), ([F.poly([(1, 2)]), F.poly([(1, 2)])], 1)]), half
    yield "convex pwl", Instance.from_functions([
        ([F.piecewise([(0, 0), (Fraction(1, 2), Fraction(1, 4)), (1, 1)]), F.linear(1)], 1)]), half


def selftest(budget: int) -> dict:
    from .oracles import oracle_volume
    results = []
    for name, inst, eps in _selftest_cases():
        m = 1
        while (2 * m) ** inst.n <= budget and m < (1 << 12):
            m *= 2
        try:
            lo, hi = oracle_volume(inst, m)
        except BudgetExceeded:
            results.append({"case": name, "status": "skipped"})
            continue
        if lo != hi and (hi - lo) >= eps / 4 * lo:
            results.append({"case": name, "status": "skipped", "reason": "bracket too wide"})
            continue
        est = estimate_volume(inst, eps)
        ok = lo <= est.estimate <= (1 + eps) * hi
        results.append({"case": name, "status": "pass" if ok else "fail",
                        "estimate": format_rational(est.estimate),
                        "oracle": [format_rational(lo), format_rational(hi)]})
    passed = sum(r["status"] == "pass" for r in results)
    failed = sum(r["status"] == "fail" for r in results)
    return {"cases": len(results), "passed": passed, "failed": failed, "results": results}


# ------------------------------------------------------------------------ CLI

def _budget(text: str) -> int:
    try:
        value = float(text) if any(ch in text for ch in ".eE") else int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if value < 1 or value != int(value):
        raise argparse.ArgumentTypeError(f"budget must be a positive integer, got {text!r}")
    return int(value)


def _epsilon(text: str) -> Fraction:
    try:
        eps = parse_rational(text)
    except ParseError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None
    if eps <= 0:
        raise argparse.ArgumentTypeError("epsilon must be positive")
    return eps


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="truncvol",
        description="Deterministic (1+eps) volume estimates for truncated unit cubes.")
    sub = parser.add_subparsers(dest="command", required=True)
    est = sub.add_parser("estimate", help="estimate the volume of one instance file")
    est.add_argument("--instance", required=True, help="path to the JSON instance")
    est.add_argument("--epsilon", required=True, type=_epsilon, help="relative error as p/q")
    est.add_argument("--mode", default="auto", choices=("auto",) + MODES)
    est.add_argument("--max-intercept-bits", type=int, default=DEFAULT_MAX_BITS)
    est.add_argument("--emit-debug-robp", metavar="PATH",
                     help="write the rounded branching program(s) to PATH")
    est.add_argument("--workers", type=int, default=1, help="threads for per-constraint builds")
    st = sub.add_parser("selftest", help="compare the estimators with exact oracles")
    st.add_argument("--budget", type=_budget, default=10**6,
                    help="largest grid size the oracles may enumerate")
    return parser


def _fail(code: int, msg: str) -> int:
    print(f"truncvol: {msg}", file=sys.stderr)
    return code


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    if args.command == "selftest":
        t0 = time.perf_counter()
        summary = selftest(args.budget)
        summary["elapsed_ms"] = round((time.perf_counter() - t0) * 1000)
        print(json.dumps(summary, separators=(",", ":")))
        return EXIT_OK if summary["failed"] == 0 else EXIT_FAILED
    try:
        inst = parse_instance(args.instance)
        est = estimate_volume(inst, args.epsilon, args.mode, args.max_intercept_bits,
                              workers=args.workers)
    except OSError as exc:
        return _fail(EXIT_INVALID, f"cannot read instance: {exc}")
    except (BudgetExceeded, WidthExceeded, TooManySubsets) as exc:
        return _fail(EXIT_BUDGET, f"budget exhausted: {exc}")
    except (TruncVolError, ValueError) as exc:
        return _fail(EXIT_INVALID, f"{type(exc).__name__}: {exc}")
    if args.emit_debug_robp and est.debug is not None:
        Path(args.emit_debug_robp).write_text(est.debug.dump(), encoding="utf-8")
    print(RunReport.from_estimate(est).to_json())
    return EXIT_OK


def main() -> None:
    sys.exit(run())
