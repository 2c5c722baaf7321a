"""Independent ground truth: lattice enumeration, exact linear volumes, grid brackets."""

from __future__ import annotations

import itertools
import math
from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import BudgetExceeded, TooManySubsets
from .exact import RationalLike, as_rational
from .geometry import cube_cover_bound
from .model import Instance, Kind, canonicalize_halfspace

DEFAULT_ENUM_BUDGET = 10**7
DEFAULT_GRID_BUDGET = 10**10


def _tables(inst: Instance, u: int, lattice: bool, shift: int = 0):
    """Per constraint, per coordinate: values at ``(x + shift)/u`` (or ``x + shift``)."""
    out = []
    for c in inst.constraints:
        rows = []
        for f in c.fns:
            if lattice:
                rows.append([f(x + shift) for x in range(u)])
            else:
                rows.append([f(Fraction(x + shift, u)) for x in range(u)])
        out.append(rows)
    return out


def count_feasible(tables, bounds: Sequence[Fraction], u: int) -> int:
    """Points ``x in {0..u-1}^n`` with ``sum_j T[i][j][x_j] <= b_i`` for all ``i``.

    Depth-first over prefixes. A prefix is dropped as soon as its partial sums
    plus the cheapest completion exceed some bound, which is valid because
    every table is nondecreasing. The last coordinate is counted by bisection.
    """
    k = len(tables)
    if k == 0:
        return 0
    n = len(tables[0])
    # cheapest completion from coordinate j onward, per constraint
    tail = [[sum(row[0] for row in rows[j:]) for j in range(n + 1)] for rows in tables]
    last = [rows[n - 1] for rows in tables]

    def rec(j: int, sums: list[Fraction]) -> int:
        if j == n - 1:
            top = u
            for i in range(k):
                top = min(top, bisect_right(last[i], bounds[i] - sums[i]))
            return top
        total = 0
        for x in range(u):
            nxt = [sums[i] + tables[i][j][x] for i in range(k)]
            if any(nxt[i] + tail[i][j + 1] > bounds[i] for i in range(k)):
                break
            total += rec(j + 1, nxt)
        return total

    if any(tail[i][0] > bounds[i] for i in range(k)):
        return 0
    return rec(0, [Fraction(0)] * k)


def enumerate_integer_points(inst: Instance, u: int, *, lattice: bool = False,
                             budget: int = DEFAULT_ENUM_BUDGET) -> int:
    """``|{x in {0..u-1}^n : every constraint holds at x/u}|`` (at ``x`` if ``lattice``)."""
    if u**inst.n > budget:
        raise BudgetExceeded(f"u^n = {u}^{inst.n} exceeds budget {budget}")
    return count_feasible(_tables(inst, u, lattice), [c.bound for c in inst.constraints], u)


def enumerate_unpruned(inst: Instance, u: int, *, lattice: bool = False,
                       budget: int = DEFAULT_ENUM_BUDGET) -> int:
    """Same count by scanning every point; for cross-checking the pruned walk."""
    if u**inst.n > budget:
        raise BudgetExceeded(f"u^n = {u}^{inst.n} exceeds budget {budget}")
    scale = 1 if lattice else u
    return sum(1 for x in itertools.product(range(u), repeat=inst.n)
               if inst.contains([Fraction(v, scale) for v in x]))


def exact_halfspace_volume(a: Sequence[RationalLike], b: RationalLike) -> Fraction:
    """Volume of ``[0,1]^n ∩ {a.x <= b}`` for ``a >= 0`` by inclusion-exclusion.

    Zero coefficients are dropped: those coordinates are unconstrained.
    """
    a = [as_rational(v) for v in a]
    b = as_rational(b)
    if any(v < 0 for v in a):
        raise ValueError("coefficients must be nonnegative")
    a = [v for v in a if v > 0]
    n = len(a)
    if n > 20:
        raise TooManySubsets(f"2^{n} subsets exceed the 2^20 limit")
    if n == 0:
        return Fraction(1) if b >= 0 else Fraction(0)
    total = Fraction(0)
    # walk subsets in order of size so sums are built incrementally
    for size in range(n + 1):
        sign = -1 if size % 2 else 1
        for S in itertools.combinations(a, size):
            r = b - sum(S, Fraction(0))
            if r > 0:
                total += sign * r**n
    return total / (math.factorial(n) * math.prod(a))


def halfspace_volume(a: Sequence[RationalLike], b: RationalLike) -> Fraction:
    """Exact volume for any signs, via the coordinate reflection."""
    w, c, _ = canonicalize_halfspace(a, b)
    return exact_halfspace_volume(w, c)


def exact_polygon_area(A: Sequence[Sequence[RationalLike]], b: Sequence[RationalLike]) -> Fraction:
    """Area of ``[0,1]^2 ∩ {Ax <= b}``: clip the square by each halfplane, then shoelace."""
    poly = [(Fraction(0), Fraction(0)), (Fraction(1), Fraction(0)),
            (Fraction(1), Fraction(1)), (Fraction(0), Fraction(1))]
    for row, bi in zip(A, b):
        a1, a2 = (as_rational(v) for v in row)
        bi = as_rational(bi)
        side = lambda p: a1 * p[0] + a2 * p[1] - bi
        out = []
        for i, p in enumerate(poly):
            q = poly[(i + 1) % len(poly)]
            sp, sq = side(p), side(q)
            if sp <= 0:
                out.append(p)
            if (sp < 0 < sq) or (sq < 0 < sp):
                t = sp / (sp - sq)
                out.append((p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])))
        poly = out
        if not poly:
            return Fraction(0)
    area = sum(p[0] * q[1] - q[0] * p[1] for p, q in zip(poly, poly[1:] + poly[:1]))
    return abs(area) / 2


def riemann_volume_bounds(inst: Instance, m: int, *,
                          budget: int = DEFAULT_GRID_BUDGET) -> tuple[Fraction, Fraction]:
    """Bracket the volume with an ``m^n`` grid of cells.

    A cell counts toward ``upper`` when its lowest corner is feasible and
    toward ``lower`` when its highest corner is; monotonicity puts the true
    volume in between.
    """
    if m**inst.n > budget:
        raise BudgetExceeded(f"m^n = {m}^{inst.n} exceeds budget {budget}")
    bounds = [c.bound for c in inst.constraints]
    total = m**inst.n
    upper = count_feasible(_tables(inst, m, False), bounds, m)
    lower = count_feasible(_tables(inst, m, False, shift=1), bounds, m)
    return Fraction(lower, total), Fraction(upper, total)


def oracle_volume(inst: Instance, m: int = 1 << 10) -> tuple[Fraction, Fraction]:
    """Exact volume as a degenerate bracket when available, else a grid bracket."""
    if inst.kind is Kind.LINEAR:
        A, b = inst.linear_data()
        if inst.k == 1:
            v = halfspace_volume(A[0], b[0])
            return v, v
        if inst.n == 2 and all(x >= 0 for row in A for x in row):
            v = exact_polygon_area(A, b)
            return v, v
    return riemann_volume_bounds(inst, m)


@dataclass(frozen=True)
class CubeCoverReport:
    lattice_count: int
    scaled_volume: tuple[Fraction, Fraction]
    bound: Fraction
    ratio: Fraction


def check_cube_cover(inst: Instance, u: int, ell: RationalLike,
                     volume: tuple[Fraction, Fraction] | None = None, *,
                     budget: int = DEFAULT_ENUM_BUDGET) -> CubeCoverReport:
    """Check ``u^n vol <= |Z| <= bound * u^n vol`` and report ``|Z| / (u^n vol)``.

    ``volume`` is an exact value given as ``(v, v)`` or a bracket
    ``(lower, upper)``; by default it comes from ``oracle_volume``. With a
    bracket the ratio is taken against the lower end.
    """
    bound = cube_cover_bound(inst.n, u, as_rational(ell))
    lo, hi = oracle_volume(inst) if volume is None else volume
    Z = enumerate_integer_points(inst, u, budget=budget)
    scale = u**inst.n
    if not scale * lo <= Z <= bound * scale * hi:
        raise AssertionError(
            f"cube cover violated: |Z|={Z}, u^n vol in [{scale * lo}, {scale * hi}], "
            f"bound={bound}, u={u}, instance={inst!r}")
    ratio = Fraction(Z) / (scale * lo) if lo > 0 else Fraction(0)
    return CubeCoverReport(Z, (scale * lo, scale * hi), bound, ratio)


def bisect_intercepts(inst: Instance, bits: int = 64) -> list[tuple[Fraction, Fraction]]:
    """Per-axis bracket ``[lo, hi]`` around the true intercept, ``hi - lo <= 2^-bits``.

    ``lo`` is a feasible point of the axis; ``hi`` is infeasible unless the
    whole edge is feasible, in which case both ends are 1.
    """
    out = []
    for j in range(inst.n):
        ok = lambda t: all(c.fns[j](t) <= c.bound for c in inst.constraints)
        if ok(Fraction(1)):
            out.append((Fraction(1), Fraction(1)))
            continue
        lo, hi = Fraction(0), Fraction(1)
        for _ in range(bits):
            mid = (lo + hi) / 2
            if ok(mid):
                lo = mid
            else:
                hi = mid
        out.append((lo, hi))
    return out
