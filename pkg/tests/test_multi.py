import itertools
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from truncvol.errors import BadDelta, EmptySource, MismatchedShapes, WidthExceeded, ZeroBound
from truncvol.model import Instance, UnivariateFn
from truncvol.multi import (
    RoundedConstraintSet,
    build_source,
    default_eta,
    dyer_round,
    intersect_robps,
    lattice_tables,
    round_robp_vs_source,
    round_robps,
    round_robps_detailed,
    uniform_source,
)
from truncvol.oracles import enumerate_integer_points
from truncvol.robp import round_robp_single

F = Fraction


def grid(n, u):
    return itertools.product(range(u), repeat=n)


def lattice_members(inst, u):
    return {x for x in grid(inst.n, u) if inst.contains(list(x))}


@st.composite
def lattice_instance(draw, max_n=3, max_k=3, max_u=5):
    n = draw(st.integers(1, max_n))
    k = draw(st.integers(1, max_k))
    u = draw(st.integers(2, max_u))
    A = [[draw(st.integers(0, 5)) for _ in range(n)] for _ in range(k)]
    b = [draw(st.integers(1, 5 * n * (u - 1) + 2)) for _ in range(k)]
    return Instance.from_linear(A, b), u


@st.composite
def convex_lattice_instance(draw):
    inst, u = draw(lattice_instance())
    rows = []
    for c in inst.constraints:
        fns = [UnivariateFn.poly([(f.terms[0][0] if f.terms else 0, draw(st.integers(1, 2)))]) for f in c.fns]
        rows.append((fns, c.bound * draw(st.integers(1, 3))))
    return Instance.from_functions(rows), u


# Dyer rounding --------------------------------------------------------------

def test_dyer_exact_division():
    rcs = dyer_round(Instance.from_linear([[1, 1]], [4]), 4, lattice=True)
    assert rcs.cap == 8
    assert rcs.h[0] == ((0, 2, 4, 6), (0, 2, 4, 6))


def test_dyer_floor():
    rcs = dyer_round(Instance.from_linear([[1, 1]], [3]), 4, lattice=True)
    assert rcs.h[0][0][1] == 2


def test_dyer_sandwich_example():
    inst = Instance.from_linear([[1, 1]], [4])
    rcs = dyer_round(inst, 4, lattice=True)
    Z = len(lattice_members(inst, 4))
    S = sum(rcs.contains(x) for x in grid(2, 4))
    assert Z <= S <= 2 * 2 * Z


def test_dyer_zero_bound():
    with pytest.raises(ZeroBound):
        dyer_round(Instance.from_linear([[1, 1]], [0]), 4)


def test_dyer_scaled_coordinates():
    rcs = dyer_round(Instance.from_linear([[1]], [F(1, 2)]), 4)
    # h(x) = floor(2 * (x/4) / (1/2)) = x
    assert rcs.h[0][0] == (0, 1, 2, 3)


@given(lattice_instance())
def test_dyer_sandwich(case):
    inst, u = case
    rcs = dyer_round(inst, u, lattice=True)
    Z = len(lattice_members(inst, u))
    S = {x for x in grid(inst.n, u) if rcs.contains(x)}
    assert lattice_members(inst, u) <= S
    assert len(S) <= 2 * inst.n**inst.k * Z
    for rows in rcs.h:
        for row in rows:
            assert all(a <= b for a, b in zip(row, row[1:]))


# source ---------------------------------------------------------------------

def test_source_counts_rounded_set():
    rcs = RoundedConstraintSet((((0, 2, 4, 6), (0, 2, 4, 6)),), 8, 4)
    src = build_source(rcs)
    brute = sum(rcs.contains(x) for x in grid(2, 4))
    # 2x1 + 2x2 <= 8 on {0..3}^2 leaves out (2,3), (3,2), (3,3)
    assert src.size == brute == 13


def test_source_empty():
    rcs = RoundedConstraintSet((((3, 4),),), 2, 2)
    with pytest.raises(EmptySource):
        build_source(rcs)


def _path_probability(src, x):
    p, v = F(1), 0
    for l, d in enumerate(x):
        p *= src.label_probability(l, v, d)
        if p == 0:
            return p
        v = src.child(l, v, d)
    return p


@given(lattice_instance())
def test_source_exactness(case):
    inst, u = case
    rcs = dyer_round(inst, u, lattice=True)
    S = [x for x in grid(inst.n, u) if rcs.contains(x)]
    src = build_source(rcs)
    assert src.size == len(S)
    n, k = inst.n, inst.k
    # tuples live in {0..2n^2}^k; that is within (2n^3)^k once n >= 2
    assert all(w <= (2 * n**2 + 1) ** k for w in src.widths)
    if n >= 2:
        assert all(w <= (2 * n**3) ** k for w in src.widths)
    for l in range(n):
        for i, out in enumerate(src.edges[l]):
            assert sum((e.hi - e.lo + 1) * src.A[l + 1][e.target] for e in out) == src.A[l][i]
            total = sum(src.label_probability(l, i, d) for d in range(u))
            assert total == 1
            assert all(v <= rcs.cap for v in src.vertices[l][i])
    # the walk is uniform on S and never leaves it
    assert all(_path_probability(src, x) == F(1, len(S)) for x in S)
    assert sum(_path_probability(src, x) for x in grid(n, u)) == 1


def test_source_width_cap():
    rcs = dyer_round(Instance.from_linear([[1, 1, 1]], [6]), 6, lattice=True)
    with pytest.raises(WidthExceeded):
        build_source(rcs, width_cap=2)


# rounding against the source ------------------------------------------------

@given(st.integers(1, 3), st.integers(2, 5), st.integers(0, 15), st.sampled_from([F(1, 2), F(1, 7)]))
def test_uniform_source_matches_single(n, u, b, delta):
    tables = [[F(x * x, 2) for x in range(u)] for _ in range(n)]
    z1, robp = round_robp_single(tables, b, u, delta)
    part = round_robp_vs_source(tables, b, u, uniform_source(n, u), robp.eta)
    assert part.widths == robp.widths
    assert part.counts[0][0, 0] == z1
    for l in range(n + 1):
        assert list(part.values[l]) == list(robp.layers[l].values)


@given(lattice_instance(max_k=2))
def test_part_one_sided_and_inflation(case):
    inst, u = case
    rcs = dyer_round(inst, u, lattice=True)
    try:
        src = build_source(rcs)
    except EmptySource:
        return
    S = [x for x in grid(inst.n, u) if rcs.contains(x)]
    tables = lattice_tables(inst, u, lattice=True)
    eta = F(1, 8)
    for i, c in enumerate(inst.constraints):
        part = round_robp_vs_source(tables[i], c.bound, u, src, eta)
        exact = [x for x in S if sum(tables[i][j][xj] for j, xj in enumerate(x)) <= c.bound]
        assert all(part.accepts(x) for x in exact)
        rounded = sum(part.accepts(x) for x in S)
        assert len(exact) <= rounded <= (1 + eta) ** inst.n * len(exact)
        # stored counts agree with the accepting suffixes of S
        assert part.counts[0][0, 0] == rounded


def test_vs_source_validation():
    src = uniform_source(2, 4)
    with pytest.raises(BadDelta):
        round_robp_vs_source([list(range(4))] * 2, 3, 4, src, 0)
    with pytest.raises(MismatchedShapes):
        round_robp_vs_source([list(range(4))] * 3, 3, 4, src, F(1, 4))


# intersection ---------------------------------------------------------------

def _parts(inst, u, eta=F(1, 6)):
    rcs = dyer_round(inst, u, lattice=True)
    src = build_source(rcs)
    tables = lattice_tables(inst, u, lattice=True)
    return src, [round_robp_vs_source(tables[i], c.bound, u, src, eta)
                 for i, c in enumerate(inst.constraints)]


def test_intersect_single_part():
    inst = Instance.from_linear([[1, 2]], [4])
    src, parts = _parts(inst, 4)
    prod = intersect_robps(parts, src)
    S = [x for x in grid(2, 4) if dyer_round(inst, 4, lattice=True).contains(x)]
    assert prod.accept_count == sum(parts[0].accepts(x) for x in S)


def test_intersect_with_always_true_part():
    inst = Instance.from_linear([[1, 2], [1, 1]], [4, 100])
    src, parts = _parts(inst, 4)
    prod = intersect_robps(parts, src)
    S = [x for x in grid(2, 4) if dyer_round(inst, 4, lattice=True).contains(x)]
    assert all(parts[1].accepts(x) for x in S)
    assert prod.accept_count == sum(parts[0].accepts(x) for x in S)


def test_intersect_pointwise():
    inst = Instance.from_linear([[1, 1], [2, 1]], [3, 4])
    src, parts = _parts(inst, 4)
    prod = intersect_robps(parts, src)
    rcs = dyer_round(inst, 4, lattice=True)
    S = [x for x in grid(2, 4) if rcs.contains(x)]
    for x in grid(2, 4):
        assert prod.accepts(x) == (parts[0].accepts(x) and parts[1].accepts(x))
    assert prod.accept_count == sum(prod.accepts(x) for x in S)
    assert prod.probability(0, 0) == F(prod.accept_count, src.size)


@given(lattice_instance())
def test_intersect_counts(case):
    inst, u = case
    try:
        src, parts = _parts(inst, u)
    except EmptySource:
        return
    prod = intersect_robps(parts, src)
    rcs = dyer_round(inst, u, lattice=True)
    S = [x for x in grid(inst.n, u) if rcs.contains(x)]
    assert prod.accept_count == sum(all(p.accepts(x) for p in parts) for x in S)


def test_intersect_shape_checks():
    inst = Instance.from_linear([[1, 1]], [3])
    src, parts = _parts(inst, 4)
    with pytest.raises(MismatchedShapes):
        intersect_robps([], src)
    with pytest.raises(MismatchedShapes):
        intersect_robps(parts, uniform_source(2, 5))


# estimator ------------------------------------------------------------------

def test_round_robps_example():
    inst = Instance.from_linear([[1, 1], [2, 1]], [3, 4])
    eps = F(1, 4)
    Z = len(lattice_members(inst, 4))
    z = round_robps(inst, 4, eps, lattice=True)
    assert Z <= z <= (1 + eps) * Z


def test_round_robps_negative_bound():
    inst = Instance.from_linear([[1, 1], [2, 1]], [3, -1])
    assert round_robps(inst, 4, F(1, 2), lattice=True) == 0


@given(st.integers(1, 3), st.integers(2, 5), st.integers(1, 12), st.sampled_from([F(1, 2), F(1, 5)]))
def test_single_constraint_agrees_with_core(n, u, b, eps):
    inst = Instance.from_linear([[1] * n], [b])
    Z = len(lattice_members(inst, u))
    z_multi = round_robps(inst, u, eps, lattice=True)
    z_core, _ = round_robp_single([list(range(u))] * n, b, u, eps)
    assert Z <= z_multi <= (1 + eps) * Z
    assert Z <= z_core <= (1 + eps) * Z


@given(lattice_instance(), st.sampled_from([F(1), F(1, 3)]))
def test_round_robps_sandwich(case, eps):
    inst, u = case
    Z = len(lattice_members(inst, u))
    z = round_robps(inst, u, eps, lattice=True)
    assert Z <= z <= (1 + eps) * Z


@given(convex_lattice_instance())
def test_round_robps_convex(case):
    inst, u = case
    eps = F(1, 2)
    Z = len(lattice_members(inst, u))
    assert Z <= round_robps(inst, u, eps, lattice=True) <= (1 + eps) * Z


def test_scaled_coordinates_match_enumeration():
    inst = Instance.from_functions([
        ([UnivariateFn.linear(1), UnivariateFn.linear(1)], 1),
        ([UnivariateFn.poly([(1, 2)]), UnivariateFn.poly([(1, 2)])], F(3, 4)),
    ])
    u, eps = 12, F(1, 2)
    Z = enumerate_integer_points(inst, u)
    z = round_robps(inst, u, eps)
    assert Z <= z <= (1 + eps) * Z


def test_default_eta_and_details():
    inst = Instance.from_linear([[1, 1], [2, 1]], [3, 4])
    res = round_robps_detailed(inst, 4, F(1, 2), lattice=True)
    assert res.eta == default_eta(F(1, 2), 2, 2) == F(1, 64)
    assert res.layer_eta == F(1, 256)
    assert len(res.part_widths) == 2
    assert res.dump().startswith("constraint 0\nlayer 0 w=(0, 0): ")


def test_workers_do_not_change_result():
    inst = Instance.from_linear([[1, 2, 1], [2, 1, 1], [1, 1, 3]], [5, 6, 7])
    a = round_robps_detailed(inst, 5, F(1, 3), lattice=True, workers=1)
    b = round_robps_detailed(inst, 5, F(1, 3), lattice=True, workers=3)
    assert a == b
    assert a.dump() == b.dump()
