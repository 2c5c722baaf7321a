"""Truncated-cube instances.

An instance is the unit cube ``[0,1]^n`` cut by ``k`` separable constraints
``sum_j f_ij(x_j) <= b_i``. Each ``f_ij`` is a :class:`UnivariateFn`: a sum of
monomials ``c * x**e`` with ``c >= 0`` and integer ``e >= 1`` plus an optional
convex, nondecreasing piecewise-linear part. That class is closed under the
operations the estimators need and its nonnegativity, monotonicity and
convexity can be checked syntactically.

The one exception to ``c >= 0`` is a single halfspace: a ``k = 1`` linear
instance may carry negative coefficients, which ``canonicalize_halfspace``
removes by reflecting coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import (
    DimensionMismatch,
    NegativeCoefficient,
    NegativeInput,
    NonConvexPWL,
    ValidationError,
)
from .exact import RationalLike, as_rational


class Kind(str, Enum):
    LINEAR = "linear"
    CONVEX = "convex"


@dataclass(frozen=True)
class UnivariateFn:
    terms: tuple[tuple[Fraction, int], ...] = ()
    pwl: tuple[tuple[Fraction, Fraction], ...] | None = None

    def __post_init__(self):
        terms = []
        for coef, exp in self.terms:
            if isinstance(exp, bool) or not isinstance(exp, int) or exp < 1:
                raise ValidationError(f"monomial exponent must be an integer >= 1, got {exp!r}")
            terms.append((as_rational(coef), exp))
        object.__setattr__(self, "terms", tuple(terms))
        if self.pwl is not None:
            pts = tuple((as_rational(x), as_rational(y)) for x, y in self.pwl)
            if not pts:
                raise ValidationError("piecewise-linear part needs at least one point")
            if pts[0][0] != 0:
                raise ValidationError("piecewise-linear part must start at x = 0")
            if any(x1 <= x0 for (x0, _), (x1, _) in zip(pts, pts[1:])):
                raise ValidationError("piecewise-linear x coordinates must increase strictly")
            object.__setattr__(self, "pwl", pts)

    @classmethod
    def linear(cls, a: RationalLike) -> UnivariateFn:
        return cls(terms=((as_rational(a), 1),))

    @classmethod
    def poly(cls, terms: Iterable[tuple[RationalLike, int]]) -> UnivariateFn:
        return cls(terms=tuple(terms))

    @classmethod
    def piecewise(cls, points: Iterable[tuple[RationalLike, RationalLike]],
                  terms: Iterable[tuple[RationalLike, int]] = ()) -> UnivariateFn:
        return cls(terms=tuple(terms), pwl=tuple(points))

    @property
    def slopes(self) -> tuple[Fraction, ...]:
        if not self.pwl:
            return ()
        pts = self.pwl
        return tuple((y1 - y0) / (x1 - x0) for (x0, y0), (x1, y1) in zip(pts, pts[1:]))

    def linear_coefficient(self) -> Fraction | None:
        """The slope ``a`` when this is exactly ``x -> a*x``; otherwise ``None``."""
        if self.pwl is not None or any(e != 1 for _, e in self.terms):
            return None
        return sum((c for c, _ in self.terms), Fraction(0))

    def check(self, allow_negative_linear: bool = False) -> None:
        """Raise unless the function is nonnegative, nondecreasing and convex on [0, inf)."""
        if not (allow_negative_linear and self.linear_coefficient() is not None):
            for c, e in self.terms:
                if c < 0:
                    raise NegativeCoefficient(f"coefficient {c} of x^{e} is negative")
        if self.pwl:
            if self.pwl[0][1] < 0:
                raise ValidationError("piecewise-linear part must have y_0 >= 0")
            slopes = self.slopes
            if slopes and slopes[0] < 0:
                raise NonConvexPWL("piecewise-linear part decreases")
            if any(s1 < s0 for s0, s1 in zip(slopes, slopes[1:])):
                raise NonConvexPWL("piecewise-linear slopes must be nondecreasing")

    def __call__(self, x: RationalLike) -> Fraction:
        return evaluate(self, x)

    def at_zero(self) -> Fraction:
        return self.pwl[0][1] if self.pwl else Fraction(0)

    def shifted(self, delta: Fraction) -> UnivariateFn:
        """``f - delta``, realised on the piecewise-linear part."""
        if delta == 0:
            return self
        if not self.pwl:
            raise ValueError("only functions with a piecewise-linear part carry an offset")
        return replace(self, pwl=tuple((x, y - delta) for x, y in self.pwl))

    def is_zero(self) -> bool:
        return all(c == 0 for c, _ in self.terms) and (
            not self.pwl or all(y == 0 for _, y in self.pwl))


def evaluate(f: UnivariateFn, x: RationalLike) -> Fraction:
    """Exact value of ``f`` at a rational ``x >= 0``."""
    x = as_rational(x)
    if x < 0:
        raise NegativeInput(f"functions are only evaluated on [0, inf), got {x}")
    total = Fraction(0)
    for c, e in f.terms:
        if c:
            total += c * x**e
    if f.pwl:
        pts = f.pwl
        if len(pts) == 1:
            total += pts[0][1]
        else:
            # last segment whose left end is <= x; beyond x_m the last slope continues
            i = len(pts) - 2
            for k in range(len(pts) - 1):
                if x < pts[k + 1][0]:
                    i = k
                    break
            (x0, y0), (x1, y1) = pts[i], pts[i + 1]
            total += y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    return total


@dataclass(frozen=True)
class SeparableConstraint:
    fns: tuple[UnivariateFn, ...]
    bound: Fraction

    def __post_init__(self):
        object.__setattr__(self, "fns", tuple(self.fns))
        object.__setattr__(self, "bound", as_rational(self.bound))

    def lhs(self, x: Sequence[RationalLike]) -> Fraction:
        return sum((f(xj) for f, xj in zip(self.fns, x)), Fraction(0))

    def offset(self) -> Fraction:
        return sum((f.at_zero() for f in self.fns), Fraction(0))


@dataclass(frozen=True)
class Instance:
    n: int
    constraints: tuple[SeparableConstraint, ...]
    empty: bool = field(default=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "constraints", tuple(self.constraints))

    @classmethod
    def from_linear(cls, A: Sequence[Sequence[RationalLike]], b: Sequence[RationalLike]) -> Instance:
        if len(A) != len(b):
            raise DimensionMismatch("A and b have different row counts")
        n = len(A[0]) if A else 0
        rows = [SeparableConstraint(tuple(UnivariateFn.linear(a) for a in row), bi)
                for row, bi in zip(A, b)]
        return cls(n, tuple(rows))

    @classmethod
    def from_functions(cls, rows: Sequence[tuple[Sequence[UnivariateFn], RationalLike]]) -> Instance:
        n = len(rows[0][0]) if rows else 0
        return cls(n, tuple(SeparableConstraint(tuple(fns), b) for fns, b in rows))

    @property
    def k(self) -> int:
        return len(self.constraints)

    @property
    def kind(self) -> Kind:
        linear = all(f.linear_coefficient() is not None
                     for c in self.constraints for f in c.fns)
        return Kind.LINEAR if linear else Kind.CONVEX

    def linear_data(self) -> tuple[list[list[Fraction]], list[Fraction]]:
        if self.kind is not Kind.LINEAR:
            raise ValueError("instance is not linear")
        A = [[f.linear_coefficient() for f in c.fns] for c in self.constraints]
        return A, [c.bound for c in self.constraints]

    def contains(self, x: Sequence[RationalLike]) -> bool:
        """Membership of a point of ``[0,1]^n`` (the cube itself is not checked)."""
        return all(c.lhs(x) <= c.bound for c in self.constraints)


def validate(inst: Instance) -> Instance:
    """Check the representation invariants and flag empty instances.

    Negative coefficients are tolerated only in a single linear constraint.
    A multi-constraint linear instance with a negative coefficient is rejected
    outright: approximately counting such sets is NP-hard, so no
    transformation is attempted.
    """
    if inst.n < 1:
        raise DimensionMismatch("dimension must be positive")
    if inst.k < 1:
        raise ValidationError("at least one constraint is required")
    for i, c in enumerate(inst.constraints):
        if len(c.fns) != inst.n:
            raise DimensionMismatch(f"constraint {i} has {len(c.fns)} functions, expected {inst.n}")
    single_linear = inst.k == 1 and inst.kind is Kind.LINEAR
    for i, c in enumerate(inst.constraints):
        for j, f in enumerate(c.fns):
            try:
                f.check(allow_negative_linear=single_linear)
            except ValidationError as exc:
                raise type(exc)(f"f[{i}][{j}]: {exc}") from None
    if single_linear and any(f.linear_coefficient() < 0 for f in inst.constraints[0].fns):
        _, c, _ = canonicalize_halfspace([f.linear_coefficient() for f in inst.constraints[0].fns],
                                         inst.constraints[0].bound)
        empty = c < 0
    else:
        empty = any(c.bound < c.offset() for c in inst.constraints)
    return replace(inst, empty=empty)


def normalize_offsets(inst: Instance) -> Instance:
    """Shift every ``f_ij`` so that ``f_ij(0) = 0``; bounds absorb the offsets."""
    rows = []
    for c in inst.constraints:
        off = c.offset()
        if off == 0:
            rows.append(c)
            continue
        fns = tuple(f.shifted(f.at_zero()) for f in c.fns)
        rows.append(SeparableConstraint(fns, c.bound - off))
    return replace(inst, constraints=tuple(rows))


def canonicalize_halfspace(a: Sequence[RationalLike], b: RationalLike):
    """Reflect coordinates with negative weight so all weights become nonnegative.

    Returns ``(w, c, J)`` with ``w_j = |a_j|``, ``c = b + sum_{j in J} |a_j|`` and
    ``J`` the reflected coordinates. The map ``x_j -> 1 - x_j`` for ``j in J``
    carries ``[0,1]^n ∩ {a.x <= b}`` onto ``[0,1]^n ∩ {w.x <= c}``, so volumes agree.
    """
    a = [as_rational(v) for v in a]
    b = as_rational(b)
    flips = tuple(j for j, v in enumerate(a) if v < 0)
    w = [abs(v) for v in a]
    c = b + sum((w[j] for j in flips), Fraction(0))
    if all(v.denominator == 1 for v in a) and b.denominator == 1:
        return [int(v) for v in w], int(c), flips
    return w, c, flips


def reflect(x: Sequence[RationalLike], flips: Iterable[int]) -> list[Fraction]:
    """Apply ``x_j -> 1 - x_j`` on the coordinates in ``flips``."""
    out = [as_rational(v) for v in x]
    for j in flips:
        out[j] = 1 - out[j]
    return out
