"""Axis-intercept search and grid-scale selection."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import InterceptBelowBudget, TooNarrow, ZeroBound
from .exact import RationalLike, as_rational, ceil_n_pow_2_5, ceil_rational, sqrt_upper
from .model import Instance, canonicalize_halfspace

DEFAULT_MAX_BITS = 128


@dataclass(frozen=True)
class InterceptResult:
    ell_prime: Fraction
    per_axis: tuple[Fraction, ...]
    iterations_used: int


@dataclass(frozen=True)
class ScalePlan:
    u: int
    power_of_two: bool
    epsilon: Fraction
    delta: Fraction


def _axis_feasible(inst: Instance, j: int, z: Fraction) -> bool:
    # offsets are normalized away, so t*e_j is feasible iff every f_ij(t) <= b_i
    for c in inst.constraints:
        if c.fns[j](z) > c.bound:
            return False
    return True


def find_intercept(inst: Instance, max_bits: int = DEFAULT_MAX_BITS) -> InterceptResult:
    """Halve ``z`` from 1 on every axis until ``z * e_j`` is feasible.

    The result is within a factor two of the true minimum axis intercept,
    and never above it.
    """
    if max_bits < 1:
        raise ValueError("max_bits must be positive")
    per_axis = []
    iterations = 0
    for j in range(inst.n):
        for e in range(max_bits + 1):
            iterations += 1
            z = Fraction(1, 1 << e)
            if _axis_feasible(inst, j, z):
                per_axis.append(z)
                break
        else:
            raise InterceptBelowBudget(j, max_bits)
    return InterceptResult(min(per_axis), tuple(per_axis), iterations)


def _as_epsilon(epsilon: RationalLike) -> Fraction:
    eps = as_rational(epsilon)
    if eps <= 0:
        raise ValueError("epsilon must be positive")
    return eps


def _power_of_two_at_least(x: Fraction) -> int:
    u = 1
    while u < x:
        u <<= 1
    return u


def halfspace_scale(w, c: RationalLike, epsilon: RationalLike) -> ScalePlan:
    """Power-of-two ``u`` in ``[X, 2X)`` with ``X = 9 ceil(n^2.5) M / eps``.

    ``w``, ``c`` must already be canonical (``w >= 0``); ``M = max(1, max_j w_j / c)``.
    """
    eps = _as_epsilon(epsilon)
    c = as_rational(c)
    w = [as_rational(v) for v in w]
    if c <= 0 and any(w):
        raise ZeroBound("halfspace capacity is not positive")
    M = max([Fraction(1)] + [v / c for v in w]) if c > 0 else Fraction(1)
    u = _power_of_two_at_least(9 * ceil_n_pow_2_5(len(w)) * M / eps)
    return ScalePlan(max(u, 2), True, eps, eps / 9)


def multi_halfspace_scale(A, b, epsilon: RationalLike) -> ScalePlan:
    eps = _as_epsilon(epsilon)
    n = len(A[0])
    M = Fraction(1)
    for row, bi in zip(A, b):
        bi = as_rational(bi)
        if any(row) and bi <= 0:
            raise ZeroBound("a constraint with nonzero coefficients has bound <= 0")
        if bi > 0:
            M = max([M] + [as_rational(a) / bi for a in row])
    u = ceil_rational(9 * ceil_n_pow_2_5(n) * M / eps)
    return ScalePlan(u, False, eps, eps / 9)


def convex_scale(n: int, epsilon: RationalLike, ell_prime: Fraction) -> ScalePlan:
    eps = _as_epsilon(epsilon)
    u = ceil_rational(9 * ceil_n_pow_2_5(n) / (eps * ell_prime))
    return ScalePlan(u, False, eps, eps / 9)


def choose_scale(inst: Instance, epsilon: RationalLike,
                 intercept: InterceptResult | None = None) -> ScalePlan:
    """Pick the lattice scale ``u`` for ``inst``.

    With an intercept the convex rule applies. Otherwise the instance must be
    linear: one constraint gets the power-of-two halfspace rule after
    canonicalization, several get the multi-halfspace rule.
    """
    if intercept is not None:
        return convex_scale(inst.n, epsilon, intercept.ell_prime)
    A, b = inst.linear_data()
    if inst.k == 1:
        w, c, _ = canonicalize_halfspace(A[0], b[0])
        return halfspace_scale(w, c, epsilon)
    return multi_halfspace_scale(A, b, epsilon)


def cube_cover_bound(n: int, u: int, ell: RationalLike) -> Fraction:
    """Rational upper bound on ``(1 + 2 n sqrt(n) / (u ell))^n``.

    Requires ``u ell > 2 n sqrt(n)``, tested exactly as ``(u ell)^2 > 4 n^3``.
    """
    ell = as_rational(ell)
    s = u * ell
    if s <= 0 or s * s <= 4 * n**3:
        raise TooNarrow(f"u*ell = {s} does not exceed 2 n sqrt(n) for n = {n}")
    return (1 + 2 * n * sqrt_upper(n) / s) ** n
