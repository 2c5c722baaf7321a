"""Counting lattice points under several separable constraints.

The pipeline has four stages:

1. ``dyer_round`` coarsens every constraint to small integers
   ``h_ij = floor(2 n^2 g_ij / b_i)`` with capacity ``2 n^2``. The rounded
   set ``S`` contains ``Z`` and is at most polynomially larger.
2. ``build_source`` lays out ``S`` as a layered DAG over tuples of rounded
   partial sums. Exact suffix counts on it describe the uniform distribution
   ``D`` on ``S``.
3. ``round_robp_vs_source`` rounds each true constraint separately, choosing
   breakpoints so that acceptance probabilities under every suffix
   distribution ``D^w`` are preserved up to ``(1 + eta)`` per layer.
4. ``intersect_robps`` runs all rounded programs in lockstep with the source
   and counts the points of ``S`` accepted by all of them. That count is the
   estimate ``Z'``.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import BadDelta, EmptySource, MismatchedShapes, WidthExceeded, ZeroBound
from .exact import RationalLike, as_rational, floor_rational, format_rational
from .model import Instance
from .robp import (
    EdgeInterval,
    IntegerScale,
    int_array,
    integer_scale,
    runs_to_intervals,
    select_breakpoints,
    step_function,
    tabulate,
)


# ---------------------------------------------------------------- Dyer rounding

@dataclass(frozen=True)
class RoundedConstraintSet:
    h: tuple[tuple[tuple[int, ...], ...], ...]  # h[i][j][x]
    cap: int
    u: int

    @property
    def k(self) -> int:
        return len(self.h)

    @property
    def n(self) -> int:
        return len(self.h[0]) if self.h else 0

    def contains(self, x: Sequence[int]) -> bool:
        return all(sum(row[j][xj] for j, xj in enumerate(x)) <= self.cap for row in self.h)


def lattice_tables(inst: Instance, u: int, *, lattice: bool = False) -> list[list[list[Fraction]]]:
    """``g_ij(x) = f_ij(x/u)`` on ``x = 0..u-1`` (or ``f_ij(x)`` when ``lattice``)."""
    out = []
    for c in inst.constraints:
        rows = []
        for f in c.fns:
            if lattice:
                rows.append([f(x) for x in range(u)])
            else:
                rows.append([f(Fraction(x, u)) for x in range(u)])
        out.append(rows)
    return out


def dyer_round(inst: Instance, u: int, *, lattice: bool = False) -> RoundedConstraintSet:
    """Tabulate ``h_ij(x) = floor(2 n^2 g_ij(x) / b_i)`` with ``g_ij(x) = f_ij(x/u)``.

    ``lattice=True`` skips the division by ``u`` and reads ``f_ij`` directly on
    integer coordinates. Values above the capacity are clipped to ``cap + 1``;
    any point using them lies outside ``S`` either way.
    """
    return dyer_round_tables(lattice_tables(inst, u, lattice=lattice),
                             [c.bound for c in inst.constraints], inst.n, u)


def dyer_round_tables(tables, bounds, n: int, u: int) -> RoundedConstraintSet:
    cap = 2 * n * n
    h = []
    for rows, b in zip(tables, bounds):
        b = as_rational(b)
        nonzero = any(v for row in rows for v in row)
        if b <= 0 and nonzero:
            raise ZeroBound("Dyer rounding needs positive bounds")
        if not nonzero:
            h.append(tuple((0,) * u for _ in rows))
            continue
        h.append(tuple(tuple(min(floor_rational(cap * v / b), cap + 1) for v in row) for row in rows))
    return RoundedConstraintSet(tuple(h), cap, u)


# ------------------------------------------------------------ small-space source

@dataclass(eq=False)
class SmallSpaceSource:
    """Layered DAG whose accepting paths are exactly the points of ``S``.

    ``vertices[l]`` lists the rounded partial-sum tuples of layer ``l``;
    ``edges[l][i]`` the label intervals out of vertex ``i`` with target
    indices; ``A[l][i]`` the number of accepting suffixes from that vertex.
    """

    n: int
    u: int
    cap: int | None
    vertices: list[list[tuple[int, ...]]]
    edges: list[list[list[EdgeInterval]]]
    A: list[list[int]]

    @property
    def size(self) -> int:
        return self.A[0][0]

    @property
    def widths(self) -> list[int]:
        return [len(layer) for layer in self.vertices]

    def label_probability(self, layer: int, idx: int, d: int) -> Fraction:
        """``p_v(d)``: chance that the uniform walk on ``S`` takes label ``d`` from ``v``."""
        for e in self.edges[layer][idx]:
            if e.lo <= d <= e.hi:
                return Fraction(self.A[layer + 1][e.target], self.A[layer][idx])
        return Fraction(0)

    def child(self, layer: int, idx: int, d: int) -> int | None:
        for e in self.edges[layer][idx]:
            if e.lo <= d <= e.hi:
                return e.target
        return None

    def max_label(self, layer: int, idx: int) -> int:
        """Largest retained label out of a vertex; retained labels form a prefix."""
        return self.edges[layer][idx][-1].hi


def _label_classes(h_layer: list[tuple[int, ...]], u: int) -> list[tuple[int, int, tuple[int, ...]]]:
    """Maximal label intervals on which the tuple ``(h_1(z), ..., h_k(z))`` is constant."""
    classes = []
    start = 0
    key = lambda z: tuple(row[z] for row in h_layer)
    cur = key(0)
    for z in range(1, u + 1):
        nxt = key(z) if z < u else None
        if nxt != cur:
            classes.append((start, z - 1, cur))
            start, cur = z, nxt
    return classes


def build_source(rcs: RoundedConstraintSet, u: int | None = None,
                 width_cap: int | None = None) -> SmallSpaceSource:
    """Layered tuple DAG for ``S``, pruned at capacity, with exact suffix counts."""
    u = rcs.u if u is None else u
    n, k, cap = rcs.n, rcs.k, rcs.cap
    vertices: list[list[tuple[int, ...]]] = [[(0,) * k]]
    edges: list[list[list[EdgeInterval]]] = []
    for l in range(n):
        classes = _label_classes([rcs.h[i][l] for i in range(k)], u)
        index: dict[tuple[int, ...], int] = {}
        layer_edges = []
        for v in vertices[l]:
            out = []
            for lo, hi, inc in classes:
                w = tuple(a + b for a, b in zip(v, inc))
                if any(c > cap for c in w):
                    break  # h is nondecreasing, so later classes overflow too
                t = index.setdefault(w, len(index))
                if out and out[-1].target == t:
                    out[-1] = EdgeInterval(out[-1].lo, hi, t)
                else:
                    out.append(EdgeInterval(lo, hi, t))
            layer_edges.append(out)
        if width_cap is not None and len(index) > width_cap:
            raise WidthExceeded(f"source layer {l + 1} has {len(index)} vertices")
        edges.append(layer_edges)
        vertices.append(list(index))
    A: list[list[int]] = [None] * (n + 1)
    A[n] = [1] * len(vertices[n])
    for l in range(n - 1, -1, -1):
        A[l] = [sum((e.hi - e.lo + 1) * A[l + 1][e.target] for e in out) for out in edges[l]]
    if A[0][0] == 0:
        raise EmptySource("rounded solution set is empty")
    return SmallSpaceSource(n, u, cap, vertices, edges, A)


def uniform_source(n: int, u: int) -> SmallSpaceSource:
    """Source for the uniform distribution on all of ``{0..u-1}^n`` (no constraints)."""
    vertices = [[()] for _ in range(n + 1)]
    edges = [[[EdgeInterval(0, u - 1, 0)]] for _ in range(n)]
    A = [[u ** (n - l)] for l in range(n + 1)]
    return SmallSpaceSource(n, u, None, vertices, edges, A)


# ------------------------------------------------- rounding against the source

@dataclass(eq=False)
class SourcedROBP:
    """One constraint's rounded program with counts kept per source vertex.

    ``values[l]`` are the union breakpoints of layer ``l`` (scaled integers);
    ``counts[l][w, m]`` is the number of ``S``-suffixes from source vertex ``w``
    accepted starting at breakpoint ``m``.
    """

    n: int
    u: int
    tables: list[np.ndarray]
    scale: IntegerScale
    eta: Fraction
    values: list[np.ndarray]
    counts: list[np.ndarray]
    per_vertex_widths: list[list[int]] = field(default_factory=list)

    @property
    def widths(self) -> list[int]:
        return [len(v) for v in self.values]

    def locate(self, layer: int, value) -> np.ndarray | int:
        return np.searchsorted(self.values[layer], value, side="right") - 1

    def children(self, layer: int, idx: int) -> np.ndarray:
        return self.locate(layer + 1, self.values[layer][idx] + self.tables[layer])

    def accepts(self, x: Sequence[int]) -> bool:
        idx = 0
        for l, xl in enumerate(x):
            idx = int(self.locate(l + 1, self.values[l][idx] + self.tables[l][xl]))
        return idx == 0 and self.scale.B >= 0

    def probability(self, layer: int, w: int, idx: int, src: SmallSpaceSource) -> Fraction:
        """``P_{M,w}(beta)``: acceptance chance from breakpoint ``idx`` under ``D^w``."""
        return Fraction(int(self.counts[layer][w, idx]), src.A[layer][w])

    def dump(self, src: SmallSpaceSource) -> str:
        """Per layer and source vertex: ``layer l w=(...): [beta:prob] ...``."""
        lines = []
        for l in range(self.n + 1):
            bps = [self.scale.view(int(v)) for v in self.values[l]]
            for w, tag in enumerate(src.vertices[l]):
                cells = " ".join(f"[{format_rational(bp)}:{format_rational(self.probability(l, w, m, src))}]"
                                 for m, bp in enumerate(bps))
                lines.append(f"layer {l} w={tag}: {cells}")
        return "\n".join(lines) + "\n"


def _count_matrix(rows: list[np.ndarray]) -> np.ndarray:
    if all(r.dtype != object for r in rows):
        return np.vstack(rows) if rows else np.zeros((0, 0), dtype=np.int64)
    mat = np.empty((len(rows), len(rows[0])), dtype=object)
    for i, r in enumerate(rows):
        mat[i, :] = r
    return mat


def round_robp_vs_source(fns: Sequence, b: RationalLike, u: int, src: SmallSpaceSource,
                         eta: RationalLike, *, width_cap: int | None = None) -> SourcedROBP:
    """Round one constraint so every suffix distribution ``D^w`` is respected.

    ``fns`` are tables (or callables) on ``0..u-1``; ``eta`` is the per-layer
    factor of the breakpoint rule.
    """
    eta = as_rational(eta)
    if not 0 < eta < 1:
        raise BadDelta(f"eta must lie in (0, 1), got {eta}")
    n = len(fns)
    if n != src.n or u != src.u:
        raise MismatchedShapes("constraint and source disagree on n or u")
    rows = tabulate(fns, u)
    scale = integer_scale(rows, as_rational(b), u)
    tables = [int_array(int(v * scale.D) for v in row) for row in rows]

    values: list[np.ndarray] = [None] * (n + 1)
    counts: list[np.ndarray] = [None] * (n + 1)
    per_w: list[list[int]] = [None] * (n + 1)
    nw = len(src.vertices[n])
    if scale.B < 0:
        values[n] = int_array([0])
        counts[n] = np.zeros((nw, 1), dtype=np.int64)
    else:
        values[n] = int_array([0, scale.B + 1])
        counts[n] = np.tile(np.array([1, 0], dtype=np.int64), (nw, 1))
    per_w[n] = [len(values[n])] * nw
    for l in range(n - 1, -1, -1):
        g = tables[l]
        steps = []
        chosen = []
        for w, out in enumerate(src.edges[l]):
            groups = [(values[l + 1], counts[l + 1][e.target], g[e.lo:e.hi + 1]) for e in out]
            P, C = step_function(groups)
            steps.append((P, C))
            if l > 0:
                idx = select_breakpoints(P, C, eta, width_cap)
                chosen.append(P[idx])
        if l == 0:
            values[0] = int_array([0])
            counts[0] = _count_matrix([int_array([int(steps[0][1][0])])])
            per_w[0] = [1]
            break
        union = np.unique(np.concatenate(chosen)) if chosen else int_array([0])
        if width_cap is not None and len(union) > width_cap:
            raise WidthExceeded(f"layer {l} union width {len(union)} exceeds cap {width_cap}")
        mat = []
        for P, C in steps:
            at = np.searchsorted(P, union, side="right") - 1
            mat.append(C[at])
        values[l] = union
        counts[l] = _count_matrix(mat)
        per_w[l] = [len(c) for c in chosen]
    return SourcedROBP(n, u, tables, scale, eta, values, counts, per_w)


# ------------------------------------------------------------------ intersection

@dataclass(eq=False)
class ProductROBP:
    """Lockstep run of ``k`` sourced programs over the jointly reachable states.

    ``states[l]`` lists ``(w, t)`` pairs: a source vertex and a tuple of
    breakpoint indices, one per constraint. ``counts[l][s]`` is the number of
    ``S``-suffixes accepted by every component from state ``s``.
    """

    parts: list[SourcedROBP]
    src: SmallSpaceSource
    states: list[list[tuple[int, tuple[int, ...]]]]
    counts: list[list[int]]

    @property
    def accept_count(self) -> int:
        return self.counts[0][0]

    @property
    def widths(self) -> list[int]:
        return [len(s) for s in self.states]

    def accepts(self, x: Sequence[int]) -> bool:
        return all(p.accepts(x) for p in self.parts)

    def probability(self, layer: int, s: int) -> Fraction:
        w = self.states[layer][s][0]
        return Fraction(self.counts[layer][s], self.src.A[layer][w])


def _merge_intervals(src_edges: list[EdgeInterval], part_runs: list[list[EdgeInterval]]):
    """Refine the source intervals by every component's target runs."""
    cuts = set()
    for e in src_edges:
        cuts.add(e.lo)
    for runs in part_runs:
        for r in runs:
            cuts.add(r.lo)
    hi_end = src_edges[-1].hi
    starts = sorted(c for c in cuts if c <= hi_end)
    return [(lo, (starts[i + 1] - 1) if i + 1 < len(starts) else hi_end) for i, lo in enumerate(starts)]


def intersect_robps(parts: Sequence[SourcedROBP], src: SmallSpaceSource,
                    width_cap: int | None = None) -> ProductROBP:
    """Count the points of ``S`` accepted by all parts, via reachable tuple states."""
    parts = list(parts)
    if not parts:
        raise MismatchedShapes("need at least one part")
    n, u = src.n, src.u
    if any(p.n != n or p.u != u for p in parts):
        raise MismatchedShapes("parts disagree with the source on n or u")

    states: list[list[tuple[int, tuple[int, ...]]]] = [[(0, (0,) * len(parts))]]
    trans: list[list[list[tuple[int, int, int]]]] = []
    for l in range(n - 1):
        index: dict[tuple[int, tuple[int, ...]], int] = {}
        layer_trans = []
        for w, t in states[l]:
            sedges = src.edges[l][w]
            kids = [p.children(l, ti) for p, ti in zip(parts, t)]
            runs = [runs_to_intervals(c) for c in kids]
            out = []
            for lo, hi in _merge_intervals(sedges, runs):
                w2 = src.child(l, w, lo)
                t2 = tuple(int(c[lo]) for c in kids)
                s2 = index.setdefault((w2, t2), len(index))
                out.append((lo, hi, s2))
            layer_trans.append(out)
        if width_cap is not None and len(index) > width_cap:
            raise WidthExceeded(f"product layer {l + 1} has {len(index)} states")
        trans.append(layer_trans)
        states.append(list(index))

    # last layer: labels accepted by the source and by every component form a prefix
    last = []
    for w, t in states[n - 1]:
        top = src.max_label(n - 1, w)
        for p, ti in zip(parts, t):
            if p.scale.B < 0:
                top = -1
                break
            room = p.scale.B - p.values[n - 1][ti]
            top = min(top, int(np.searchsorted(p.tables[n - 1], room, side="right")) - 1)
        last.append(max(top + 1, 0))
    counts: list[list[int]] = [None] * n
    counts[n - 1] = last
    for l in range(n - 2, -1, -1):
        counts[l] = [sum((hi - lo + 1) * counts[l + 1][s2] for lo, hi, s2 in out)
                     for out in trans[l]]
    return ProductROBP(parts, src, states, counts)


# ------------------------------------------------------------------- estimator

@dataclass(frozen=True)
class MultiResult:
    zprime: Fraction
    source_size: int
    eta: Fraction
    layer_eta: Fraction
    source_widths: tuple[int, ...]
    part_widths: tuple[tuple[int, ...], ...]
    product_widths: tuple[int, ...]
    parts: tuple[SourcedROBP, ...] = field(default=(), compare=False, repr=False)
    source: SmallSpaceSource | None = field(default=None, compare=False, repr=False)

    def dump(self) -> str:
        if self.source is None:
            return ""
        return "".join(f"constraint {i}\n" + p.dump(self.source) for i, p in enumerate(self.parts))


def default_eta(epsilon: Fraction, n: int, k: int) -> Fraction:
    """Per-constraint error ``eps / (4 k n^k)``."""
    return epsilon / (4 * k * n**k)


def round_robps_detailed(inst: Instance, u: int, epsilon: RationalLike, *,
                         eta: RationalLike | None = None, lattice: bool = False,
                         workers: int = 1, width_cap: int | None = None) -> MultiResult:
    """Estimate ``|Z|`` for ``Z = {x in {0..u-1}^n : sum_j f_ij(x_j/u) <= b_i for all i}``.

    ``eta`` overrides the per-constraint error (default ``eps/(4 k n^k)``);
    each layer is rounded with factor ``eta/(2n)`` so a constraint's
    acceptance probability under ``D`` inflates by at most ``1 + eta``.
    """
    epsilon = as_rational(epsilon)
    if epsilon <= 0:
        raise BadDelta("epsilon must be positive")
    n, k = inst.n, inst.k
    eta = default_eta(epsilon, n, k) if eta is None else as_rational(eta)
    layer_eta = eta / (2 * n)
    zero = MultiResult(Fraction(0), 0, eta, layer_eta, (), (), ())
    if any(c.bound < 0 for c in inst.constraints):
        return zero
    tables = lattice_tables(inst, u, lattice=lattice)
    bounds = [c.bound for c in inst.constraints]
    rcs = dyer_round_tables(tables, bounds, n, u)
    try:
        src = build_source(rcs, u, width_cap=width_cap)
    except EmptySource:
        return zero

    def build(i):
        return round_robp_vs_source(tables[i], bounds[i], u, src, layer_eta, width_cap=width_cap)

    if workers > 1 and k > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(build, range(k)))
    else:
        parts = [build(i) for i in range(k)]
    prod = intersect_robps(parts, src, width_cap=width_cap)
    return MultiResult(Fraction(prod.accept_count), src.size, eta, layer_eta,
                       tuple(src.widths), tuple(tuple(p.widths) for p in parts),
                       tuple(prod.widths), tuple(parts), src)


def round_robps(inst: Instance, u: int, epsilon: RationalLike, **kwargs) -> Fraction:
    """``Z'`` with ``|Z| <= Z' <= (1 + epsilon)|Z|``; see ``round_robps_detailed``."""
    return round_robps_detailed(inst, u, epsilon, **kwargs).zprime

