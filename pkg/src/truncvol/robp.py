"""Approximate counting for one separable constraint with interval ROBPs.

The exact branching program for ``sum_j g_j(x_j) <= b`` over
``x in {0..u-1}^n`` keeps a vertex for every partial sum. Rounding replaces
each layer by a short list of breakpoints, chosen greedily from the smallest
value upward so that the acceptance probability drops by more than a factor
``1 + eta`` between consecutive breakpoints, and ends with a zero-probability
breakpoint just above ``b``. Every edge is redirected to the largest
breakpoint not exceeding its true target, so the rounded program accepts a
superset of the exact solutions and overcounts by at most ``(1+eta)`` per
layer.

Implementation notes. All table values and ``b`` are scaled by a common
denominator ``D`` so partial sums become integers; the accept test is then
``v <= floor(b*D)``. Probabilities are stored as integer counts with implicit
denominator ``u**(n - layer)``. The acceptance count of a layer, as a function
of the vertex value, is a nonincreasing step function whose jumps sit at
``beta - g(z)`` for breakpoints ``beta`` of the next layer and labels ``z``;
it is built in one sort and one cumulative sum, after which breakpoint
selection is a sequence of binary searches.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .errors import BadDelta, NotPowerOfTwo, OutOfRange, WidthExceeded
from .exact import (
    RationalLike,
    as_rational,
    ceil_log2,
    encoding_length,
    floor_rational,
    format_rational,
    lcm_denominators,
    min_gap,
)

# integers below this stay in int64 arrays; anything larger falls back to Python ints
_INT64_SAFE = 1 << 62

Table = Sequence[RationalLike]
FnOrTable = Callable[[int], Fraction] | Table


def int_array(values) -> np.ndarray:
    values = list(values)
    if all(-_INT64_SAFE < v < _INT64_SAFE for v in values):
        return np.array(values, dtype=np.int64)
    arr = np.empty(len(values), dtype=object)
    arr[:] = values
    return arr


def _fits(bound: int) -> bool:
    return bound < _INT64_SAFE


def tabulate(fns: Sequence[FnOrTable], u: int) -> list[list[Fraction]]:
    """Turn each entry into the list of its values on ``0..u-1``."""
    out = []
    for f in fns:
        if callable(f):
            row = [as_rational(f(z)) for z in range(u)]
        else:
            row = [as_rational(v) for v in f]
            if len(row) != u:
                raise ValueError(f"table has {len(row)} entries, expected {u}")
        if row[0] != 0:
            raise ValueError("tabulated functions must vanish at 0")
        if any(y < x for x, y in zip(row, row[1:])):
            raise ValueError("tabulated functions must be nondecreasing")
        out.append(row)
    return out


@dataclass(frozen=True)
class IntegerScale:
    """Common denominator ``D`` turning a constraint into integer form."""

    D: int
    B: int
    b: Fraction
    L_prime: int

    def zero_view(self) -> Fraction:
        return self.b + min_gap(self.L_prime)

    def view(self, value: int) -> Fraction:
        """Rational view of a scaled breakpoint; ``B+1`` stands for "just above b"."""
        if 0 <= self.B < value:
            return self.zero_view()
        return Fraction(value, self.D)

    def scaled(self, x: RationalLike) -> int:
        """Largest integer ``m`` with ``m/D <= x``."""
        return floor_rational(as_rational(x) * self.D)


def integer_scale(tables: Sequence[Sequence[Fraction]], b: Fraction, u: int) -> IntegerScale:
    flat = [v for row in tables for v in row]
    D = lcm_denominators(flat + [b])
    L = max(encoding_length(v) for v in flat + [b])
    L_prime = max(1, L * ceil_log2(max(u, 2)) + ceil_log2(max(len(tables), 1)))
    return IntegerScale(D, floor_rational(b * D), b, L_prime)


@dataclass(frozen=True)
class EdgeInterval:
    lo: int
    hi: int
    target: int


@dataclass(eq=False)
class RoundedLayer:
    """Breakpoints of one layer with their acceptance counts.

    ``values`` holds scaled breakpoints in increasing order and ``counts`` the
    number of accepted suffixes from each; probabilities are
    ``counts / u**suffix_len``.
    """

    values: np.ndarray
    counts: np.ndarray
    suffix_len: int
    u: int
    scale: IntegerScale
    _bp: tuple[Fraction, ...] | None = field(default=None, repr=False)

    @property
    def width(self) -> int:
        return len(self.values)

    @property
    def breakpoints(self) -> tuple[Fraction, ...]:
        if self._bp is None:
            self._bp = tuple(self.scale.view(int(v)) for v in self.values)
        return self._bp

    @property
    def probabilities(self) -> tuple[Fraction, ...]:
        den = self.u**self.suffix_len
        return tuple(Fraction(int(c), den) for c in self.counts)

    def locate(self, value) -> np.ndarray | int:
        """Index of the largest breakpoint ``<= value`` (scaled integers)."""
        return np.searchsorted(self.values, value, side="right") - 1


@dataclass(eq=False)
class IntervalROBP:
    n: int
    u: int
    layers: list[RoundedLayer]
    tables: list[np.ndarray]
    eta: Fraction
    b: Fraction
    scale: IntegerScale

    @property
    def widths(self) -> list[int]:
        return [layer.width for layer in self.layers]

    @property
    def accept_count(self) -> int:
        return int(self.layers[0].counts[0])

    def children(self, layer: int, idx: int) -> np.ndarray:
        """Target breakpoint index for every label out of vertex ``idx``."""
        v = self.layers[layer].values[idx]
        return self.layers[layer + 1].locate(v + self.tables[layer])

    def edges(self, layer: int, idx: int) -> list[EdgeInterval]:
        """Edge intervals out of vertex ``idx`` of ``layer`` (computed on demand)."""
        if not 0 <= layer < self.n:
            raise OutOfRange(f"layer {layer} has no outgoing edges")
        return runs_to_intervals(self.children(layer, idx))

    def dump(self) -> str:
        lines = []
        for i, layer in enumerate(self.layers):
            cells = " ".join(f"[{format_rational(bp)}:{format_rational(p)}]"
                             for bp, p in zip(layer.breakpoints, layer.probabilities))
            lines.append(f"layer {i}: {cells}")
        return "\n".join(lines) + "\n"


def runs_to_intervals(targets: np.ndarray) -> list[EdgeInterval]:
    out = []
    start = 0
    for z in range(1, len(targets) + 1):
        if z == len(targets) or targets[z] != targets[start]:
            out.append(EdgeInterval(start, z - 1, int(targets[start])))
            start = z
    return out


def step_function(groups):
    """Acceptance count of a vertex value ``v >= 0`` as a step function.

    ``groups`` is a list of ``(values, counts, g)``: a breakpoint layer with
    its counts and the label offsets ``g`` leading into it. The count at
    ``v`` is ``sum_groups sum_z counts[r(v + g[z])]``. Returns positions
    ``P`` (``P[0] = 0``, strictly increasing) and counts ``C`` with ``C[k]``
    valid on ``[P[k], P[k+1])``.
    """
    base = 0
    pos_parts, wt_parts = [], []
    for values, counts, g in groups:
        if len(values) == 0:
            continue
        base += int(counts[0]) * len(g)
        if len(values) == 1:
            continue
        drops = counts[:-1] - counts[1:]
        keep = np.nonzero(drops)[0]
        if len(keep) == 0:
            continue
        pos = (values[1:][keep][:, None] - g[None, :]).ravel()
        wt = np.repeat(drops[keep], len(g))
        pos_parts.append(pos)
        wt_parts.append(wt)
    if not pos_parts:
        return int_array([0]), int_array([base])
    pos = np.concatenate(pos_parts)
    wt = np.concatenate(wt_parts)
    early = pos <= 0
    if early.any():
        base -= int(wt[early].sum())
        pos, wt = pos[~early], wt[~early]
    if len(pos) == 0:
        return int_array([0]), int_array([base])
    order = np.argsort(pos, kind="stable")
    pos, wt = pos[order], wt[order]
    uniq, first = np.unique(pos, return_index=True)
    drops = np.add.reduceat(wt, first)
    C = np.empty(len(uniq) + 1, dtype=object if drops.dtype == object or not _fits(base) else np.int64)
    C[0] = base
    C[1:] = base - np.cumsum(drops)
    P = np.empty(len(uniq) + 1, dtype=uniq.dtype)
    P[0] = 0
    P[1:] = uniq
    return P, C


def select_breakpoints(P: np.ndarray, C: np.ndarray, eta: Fraction,
                       width_cap: int | None = None) -> np.ndarray:
    """Indices into ``(P, C)`` picked by the greedy ``(1+eta)`` rule.

    Starting from position 0, the next breakpoint is the first position whose
    count ``c`` satisfies ``0 < c < c_prev / (1+eta)``; the run ends at the
    first position with count 0, which is always included.
    """
    en, ed = eta.numerator, eta.denominator
    if C.dtype != object and not _fits(int(C[0]) * (ed + en)):
        C = C.astype(object)
    # c' < c/(1+eta)  <=>  c' * (ed + en) < c * ed  <=>  c' <= (c*ed - 1) // (ed + en);
    # the successor of every position is found at once, then the chain from 0 is walked
    T = (C * ed - 1) // (ed + en)
    # C is strictly decreasing, so the successor is k+1 whenever C[k+1] <= T[k]
    nxt = np.arange(1, len(C) + 1, dtype=np.int64)
    slow = np.ones(len(C), dtype=bool)
    slow[:-1] = C[1:] > T[:-1]
    if slow.any():
        nxt[slow] = np.searchsorted(-C, -T[slow], side="left")
    # positions on the chain from 0, found by pointer doubling: after round t the
    # set holds the first 2**t chain positions, and the first zero count absorbs
    stop = int(np.argmin(C > 0)) if C[-1] <= 0 else len(C) - 1
    jump = np.minimum(nxt[: stop + 1], stop)
    jump[stop] = stop
    on = np.zeros(stop + 1, dtype=bool)
    on[0] = True
    frontier = np.array([0], dtype=np.int64)
    while True:
        frontier = np.unique(np.concatenate([frontier, jump[frontier]]))
        if len(frontier) == on.sum() and on[frontier].all():
            break
        on[frontier] = True
        if width_cap is not None and len(frontier) > width_cap:
            raise WidthExceeded(f"layer width exceeds cap {width_cap}")
        jump = jump[jump]
    return frontier


def _check_delta(delta: Fraction) -> Fraction:
    delta = as_rational(delta)
    if not 0 < delta < 1:
        raise BadDelta(f"delta must lie in (0, 1), got {delta}")
    return delta


def _terminal_layer(scale: IntegerScale, u: int) -> RoundedLayer:
    if scale.B < 0:
        return RoundedLayer(int_array([0]), int_array([0]), 0, u, scale)
    return RoundedLayer(int_array([0, scale.B + 1]), int_array([1, 0]), 0, u, scale)


def round_robp_single(fns: Sequence[FnOrTable], b: RationalLike, u: int, delta: RationalLike,
                      *, eta: RationalLike | None = None,
                      width_cap: int | None = None) -> tuple[Fraction, IntervalROBP]:
    """Rounded interval ROBP for ``sum_j g_j(x_j) <= b`` on ``{0..u-1}^n``.

    ``fns`` are callables on ``0..u-1`` or tables of their values; each must be
    nondecreasing with value 0 at 0. Returns ``(Z', robp)`` where
    ``Z' = u**n * P(start)`` satisfies ``|Z| <= Z' <= (1+delta)|Z|``.
    ``eta`` defaults to ``delta / (2n)``.
    """
    delta = _check_delta(delta)
    b = as_rational(b)
    if u < 1:
        raise ValueError("u must be positive")
    n = len(fns)
    if n < 1:
        raise ValueError("need at least one layer")
    eta = delta / (2 * n) if eta is None else as_rational(eta)
    rows = tabulate(fns, u)
    scale = integer_scale(rows, b, u)
    tables = [int_array(int(v * scale.D) for v in row) for row in rows]

    layers: list[RoundedLayer] = [None] * (n + 1)
    layers[n] = _terminal_layer(scale, u)
    for l in range(n - 1, 0, -1):
        nxt = layers[l + 1]
        P, C = step_function([(nxt.values, nxt.counts, tables[l])])
        idx = select_breakpoints(P, C, eta, width_cap)
        layers[l] = RoundedLayer(P[idx], C[idx], n - l, u, scale)
    nxt = layers[1]
    _, C = step_function([(nxt.values, nxt.counts, tables[0])])
    layers[0] = RoundedLayer(int_array([0]), int_array([int(C[0])]), n, u, scale)
    robp = IntervalROBP(n, u, layers, tables, eta, b, scale)
    return Fraction(robp.accept_count), robp


def evaluate_robp(robp: IntervalROBP, x: Sequence[int]) -> int:
    """Run ``x`` through the rounded program; 1 means accept."""
    if len(x) != robp.n:
        raise OutOfRange(f"input has length {len(x)}, expected {robp.n}")
    idx = 0
    for l, xl in enumerate(x):
        if not 0 <= xl < robp.u:
            raise OutOfRange(f"label {xl} outside 0..{robp.u - 1}")
        v = robp.layers[l].values[idx] + robp.tables[l][xl]
        idx = int(robp.layers[l + 1].locate(v))
    return 1 if robp.layers[robp.n].counts[idx] > 0 else 0


def width_bound_holds(width: int, n: int, u: int, eta: Fraction) -> bool:
    """Exact test of ``width <= 1 + 2 n log2(u) / eta``.

    Equivalent to ``2**((width-1) * eta) <= u**(2n)``, checked as
    ``2**((width-1) * p) <= u**(2 n q)`` for ``eta = p/q``.
    """
    if width <= 1:
        return True
    if u <= 1:
        return False
    p, q = eta.numerator, eta.denominator
    lhs_bits = (width - 1) * p
    # compare via bit lengths first to avoid building huge integers needlessly
    rhs = u ** (2 * n * q)
    if lhs_bits > rhs.bit_length():
        return False
    return (1 << lhs_bits) <= rhs


def binary_expand(a: Sequence[int], cap: int, u: int) -> tuple[list[int], int]:
    """Rewrite ``x_i in {0..u-1}`` as ``t = log2 u`` bits: weights ``a_i * 2**(j-1)``."""
    if u < 2 or u & (u - 1):
        raise NotPowerOfTwo(f"u = {u} is not a power of two >= 2")
    t = u.bit_length() - 1
    w = [ai << j for ai in a for j in range(t)]
    return w, cap


def count_binary_knapsack(w: Sequence[int], b: int, delta: RationalLike,
                          *, return_robp: bool = False, width_cap: int | None = None):
    """``Z'`` with ``|Z| <= Z' <= (1+delta)|Z|`` for ``Z = {x in {0,1}^n : w.x <= b}``."""
    if any(not isinstance(v, int) or v < 0 for v in w):
        raise ValueError("weights must be nonnegative integers")
    if not isinstance(b, int) or b < 0:
        raise ValueError("capacity must be a nonnegative integer")
    zprime, robp = round_robp_single([[0, v] for v in w], b, 2, delta, width_cap=width_cap)
    return (zprime, robp) if return_robp else zprime
