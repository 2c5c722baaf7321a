"""Top-level volume estimators.

Each estimator returns a :class:`VolumeEstimate` whose value ``V'`` satisfies
``vol <= V' <= (1 + eps) vol``. The value is never clamped to 1.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Sequence

from .errors import InterceptBelowBudget, ValidationError, ZeroBound
from .exact import RationalLike, as_rational, floor_rational, lcm_denominators
from .geometry import (
    DEFAULT_MAX_BITS,
    convex_scale,
    find_intercept,
    halfspace_scale,
    multi_halfspace_scale,
)
from .model import Instance, Kind, canonicalize_halfspace, normalize_offsets, validate
from .multi import lattice_tables, round_robps_detailed
from .robp import binary_expand, count_binary_knapsack, round_robp_single

MODES = ("halfspace", "convex", "multi-halfspace", "multi-convex")


@dataclass
class EstimateStats:
    intercept: Fraction | None = None
    delta: Fraction | None = None
    eta: Fraction | None = None
    widths: list[int] = field(default_factory=list)
    wall_time: float = 0.0
    warnings: list[str] = field(default_factory=list)


@dataclass
class VolumeEstimate:
    estimate: Fraction
    epsilon: Fraction
    u: int
    mode: str
    stats: EstimateStats = field(default_factory=EstimateStats)
    debug: Any = field(default=None, repr=False, compare=False)


def _epsilon(epsilon: RationalLike) -> Fraction:
    eps = as_rational(epsilon)
    if eps <= 0:
        raise ValueError("epsilon must be positive")
    return eps


def _done(est: VolumeEstimate, t0: float) -> VolumeEstimate:
    est.stats.wall_time = time.perf_counter() - t0
    return est


def volume_halfspace(a: Sequence[RationalLike], b: RationalLike, epsilon: RationalLike, *,
                     u: int | None = None, width_cap: int | None = None) -> VolumeEstimate:
    """Volume of ``[0,1]^n ∩ {a.x <= b}`` for arbitrary-sign ``a``.

    Negative weights are reflected away, the cube is scaled by a power of two
    ``u``, each coordinate of ``{0..u-1}`` is split into bits, and the
    resulting 0/1 knapsack is counted to within ``eps/9``. ``u`` may be
    overridden with a larger power of two.
    """
    t0 = time.perf_counter()
    eps = _epsilon(epsilon)
    w, c, _ = canonicalize_halfspace(a, b)
    stats = EstimateStats(delta=eps / 9)
    if not any(w):
        return _done(VolumeEstimate(Fraction(int(c >= 0)), eps, 1, "halfspace", stats), t0)
    if c <= 0:
        stats.warnings.append("empty" if c < 0 else "measure-zero")
        return _done(VolumeEstimate(Fraction(0), eps, 1, "halfspace", stats), t0)
    plan = halfspace_scale(w, c, eps)
    if u is not None:
        if u < plan.u:
            raise ValueError(f"u override {u} is below the planned scale {plan.u}")
        plan_u = u
    else:
        plan_u = plan.u
    D = lcm_denominators(list(w) + [c])
    W = [int(v * D) for v in w]
    cap = floor_rational(as_rational(c) * D * plan_u)
    wexp, cap = binary_expand(W, cap, plan_u)
    zprime, robp = count_binary_knapsack(wexp, cap, plan.delta, return_robp=True, width_cap=width_cap)
    stats.eta = robp.eta
    stats.widths = robp.widths
    est = VolumeEstimate(zprime / plan_u ** len(w), eps, plan_u, "halfspace", stats, robp)
    return _done(est, t0)


def _prepare(inst: Instance) -> tuple[Instance, list[str]]:
    inst = validate(inst)
    notes = ["empty"] if inst.empty else []
    return normalize_offsets(inst), notes


def _drop_trivial(inst: Instance) -> Instance:
    """Remove constraints whose left side is identically zero (they always hold)."""
    rows = tuple(c for c in inst.constraints if not all(f.is_zero() for f in c.fns))
    return Instance(inst.n, rows)


def _below_budget(eps: Fraction, mode: str, stats: EstimateStats, err: InterceptBelowBudget):
    stats.warnings.append(f"volume < 2^-{err.max_bits}")
    return VolumeEstimate(Fraction(0), eps, 0, mode, stats)


def volume_convex(inst: Instance, epsilon: RationalLike, max_bits: int = DEFAULT_MAX_BITS, *,
                  u: int | None = None, width_cap: int | None = None) -> VolumeEstimate:
    """Volume of ``[0,1]^n ∩ {sum_j f_j(x_j) <= b}`` for one convex separable constraint."""
    t0 = time.perf_counter()
    eps = _epsilon(epsilon)
    stats = EstimateStats(delta=eps / 9)
    if inst.k != 1:
        raise ValidationError("volume_convex takes exactly one constraint")
    inst, notes = _prepare(inst)
    stats.warnings += notes
    if notes:
        return _done(VolumeEstimate(Fraction(0), eps, 0, "convex", stats), t0)
    if not _drop_trivial(inst).constraints:
        return _done(VolumeEstimate(Fraction(1), eps, 1, "convex", stats), t0)
    try:
        icpt = find_intercept(inst, max_bits)
    except InterceptBelowBudget as err:
        return _done(_below_budget(eps, "convex", stats, err), t0)
    stats.intercept = icpt.ell_prime
    plan = convex_scale(inst.n, eps, icpt.ell_prime)
    uu = plan.u if u is None else max(u, plan.u)
    tables = lattice_tables(inst, uu)[0]
    zprime, robp = round_robp_single(tables, inst.constraints[0].bound, uu, plan.delta,
                                     width_cap=width_cap)
    stats.eta = robp.eta
    stats.widths = robp.widths
    return _done(VolumeEstimate(zprime / uu**inst.n, eps, uu, "convex", stats, robp), t0)


def _multi(inst: Instance, eps: Fraction, uu: int, mode: str, stats: EstimateStats,
           workers: int, width_cap: int | None) -> VolumeEstimate:
    res = round_robps_detailed(inst, uu, eps / 9, workers=workers, width_cap=width_cap)
    stats.eta = res.eta
    stats.widths = list(res.product_widths)
    return VolumeEstimate(res.zprime / uu**inst.n, eps, uu, mode, stats, res)


def volume_multi_halfspace(A: Sequence[Sequence[RationalLike]], b: Sequence[RationalLike],
                           epsilon: RationalLike, *, u: int | None = None, workers: int = 1,
                           width_cap: int | None = None) -> VolumeEstimate:
    """Volume of ``[0,1]^n ∩ {Ax <= b}`` for entrywise nonnegative ``A``."""
    t0 = time.perf_counter()
    eps = _epsilon(epsilon)
    stats = EstimateStats(delta=eps / 9)
    inst = Instance.from_linear(A, b)
    if inst.k == 1:
        # one row: reflect negative weights away first
        w, c, _ = canonicalize_halfspace(A[0], b[0])
        inst = Instance.from_linear([w], [c])
    inst, notes = _prepare(inst)
    stats.warnings += notes
    if notes:
        return _done(VolumeEstimate(Fraction(0), eps, 0, "multi-halfspace", stats), t0)
    inst = _drop_trivial(inst)
    if not inst.constraints:
        return _done(VolumeEstimate(Fraction(1), eps, 1, "multi-halfspace", stats), t0)
    A2, b2 = inst.linear_data()
    try:
        plan = multi_halfspace_scale(A2, b2, eps)
    except ZeroBound:
        stats.warnings.append("measure-zero")
        return _done(VolumeEstimate(Fraction(0), eps, 0, "multi-halfspace", stats), t0)
    uu = plan.u if u is None else max(u, plan.u)
    return _done(_multi(inst, eps, uu, "multi-halfspace", stats, workers, width_cap), t0)


def volume_multi_convex(inst: Instance, epsilon: RationalLike, max_bits: int = DEFAULT_MAX_BITS,
                        *, u: int | None = None, workers: int = 1,
                        width_cap: int | None = None) -> VolumeEstimate:
    """Volume of ``[0,1]^n`` cut by several convex separable constraints."""
    t0 = time.perf_counter()
    eps = _epsilon(epsilon)
    stats = EstimateStats(delta=eps / 9)
    inst, notes = _prepare(inst)
    stats.warnings += notes
    if notes:
        return _done(VolumeEstimate(Fraction(0), eps, 0, "multi-convex", stats), t0)
    inst = _drop_trivial(inst)
    if not inst.constraints:
        return _done(VolumeEstimate(Fraction(1), eps, 1, "multi-convex", stats), t0)
    try:
        icpt = find_intercept(inst, max_bits)
    except InterceptBelowBudget as err:
        return _done(_below_budget(eps, "multi-convex", stats, err), t0)
    stats.intercept = icpt.ell_prime
    if any(c.bound <= 0 for c in inst.constraints):
        # a zero bound with a function that vanishes on a whole interval near 0
        raise ZeroBound("a constraint with bound 0 leaves a set of positive volume")
    plan = convex_scale(inst.n, eps, icpt.ell_prime)
    uu = plan.u if u is None else max(u, plan.u)
    return _done(_multi(inst, eps, uu, "multi-convex", stats, workers, width_cap), t0)


def estimate_volume(inst: Instance, epsilon: RationalLike, mode: str = "auto",
                    max_bits: int = DEFAULT_MAX_BITS, **kwargs) -> VolumeEstimate:
    """Dispatch on ``mode``; ``auto`` picks from the instance kind and constraint count."""
    if mode == "auto":
        linear = inst.kind is Kind.LINEAR
        if inst.k == 1:
            mode = "halfspace" if linear else "convex"
        else:
            mode = "multi-halfspace" if linear else "multi-convex"
    if mode == "halfspace":
        if inst.k != 1 or inst.kind is not Kind.LINEAR:
            raise ValidationError("halfspace mode needs one linear constraint")
        validate(inst)
        A, b = inst.linear_data()
        kwargs.pop("workers", None)
        return volume_halfspace(A[0], b[0], epsilon, **kwargs)
    if mode == "convex":
        kwargs.pop("workers", None)
        return volume_convex(inst, epsilon, max_bits, **kwargs)
    if mode == "multi-halfspace":
        if inst.kind is not Kind.LINEAR:
            raise ValidationError("multi-halfspace mode needs linear constraints")
        validate(inst)
        A, b = inst.linear_data()
        return volume_multi_halfspace(A, b, epsilon, **kwargs)
    if mode == "multi-convex":
        return volume_multi_convex(inst, epsilon, max_bits, **kwargs)
    raise ValueError(f"unknown mode {mode!r}")
