import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from affinedev.poly import Polynomial, PolySystem
from affinedev.solver import (
    AlphaSet,
    SolverConfig,
    alpha_cover,
    feasible_box,
    intersect_alpha_sets,
    project_alpha,
    solve_positive,
)

ivals = st.lists(
    st.tuples(st.floats(0.01, 100), st.floats(0.0, 10)).map(lambda t: (t[0], t[0] + t[1])),
    max_size=5,
)


def one_var(coeffs, name="u", kind="length"):
    x = Polynomial.variable(1, 0)
    p = Polynomial.constant(1, 0)
    for k, c in enumerate(coeffs):
        term = Polynomial.constant(1, c)
        for _ in range(k):
            term = term * x
        p = p + term
    return PolySystem((name,), (p,), kinds=(kind,), meta={"bounds": {name: (0.0, 10.0)}})


@given(st.fractions(min_value=Fraction(1, 10), max_value=9, max_denominator=20),
       st.fractions(min_value=Fraction(1, 10), max_value=9, max_denominator=20))
@settings(max_examples=30)
def test_quadratic_roots_are_enclosed(r1, r2):
    system = one_var([r1 * r2, -(r1 + r2), 1])
    res = solve_positive(system, feasible_box(system))
    assert res.kind == "Clusters"
    for r in {r1, r2}:
        assert any(lo <= float(r) <= hi for ((lo, hi),) in (c.box for c in res.clusters))


def test_no_real_root_is_certified_empty():
    system = one_var([1, 0, 1])
    res = solve_positive(system, feasible_box(system))
    assert res.certified_empty and res.clusters == ()


def test_negative_root_only_is_empty_on_the_positive_box():
    system = one_var([2, 1])  # x = -2
    assert solve_positive(system, feasible_box(system)).certified_empty


def test_budget_exhaustion_is_inconclusive():
    x, y = Polynomial.variable(2, 0), Polynomial.variable(2, 1)
    # a whole curve of solutions: x = y
    system = PolySystem(("alpha", "y"), (x - y,), kinds=("alpha", "length"), meta={"bounds": {"y": (0.0, 4.0)}})
    cfg = SolverConfig(max_boxes=300, alpha_bound=4.0)
    res = solve_positive(system, feasible_box(system, cfg=cfg), cfg)
    assert res.kind == "Inconclusive" and res.stats["aborted"]
    aset = project_alpha(res, cfg)
    assert not aset.certified and 1.0 in aset
    assert 1.0 in alpha_cover(res, cfg)


def test_solver_is_deterministic():
    system = one_var([Fraction(6), -5, 1])
    a = solve_positive(system, feasible_box(system))
    b = solve_positive(system, feasible_box(system))
    assert a.clusters == b.clusters and a.stats == b.stats


def test_feasible_box_uses_bounds_and_scales():
    x = Polynomial.variable(2, 0)
    system = PolySystem(("alpha", "u"), (x,), scales=(Fraction(1), Fraction(4)), kinds=("alpha", "length"),
                        meta={"bounds": {"u": (4.0, 8.0)}})
    cfg = SolverConfig(alpha_bound=100.0)
    box = feasible_box(system, cfg=cfg)
    assert box[0] == (0.01, 100.0)
    assert box[1][0] <= 1.0 and box[1][1] >= 2.0 and box[1][1] < 2.0 + 1e-9


def test_bad_boxes_are_rejected():
    system = one_var([1, 1])
    with pytest.raises(ValueError):
        solve_positive(system, [(-1.0, 1.0)])
    with pytest.raises(ValueError):
        solve_positive(system, [(0.0, math.inf)])
    with pytest.raises(ValueError):
        SolverConfig(max_depth=0)


@given(ivals, ivals)
def test_alpha_set_intersection_is_setwise(a, b):
    A, B = AlphaSet(tuple(a)), AlphaSet(tuple(b))
    C = A.intersect(B)
    for lo, hi in list(a) + list(b):
        for x in (lo, hi, (lo + hi) / 2):
            assert (x in C) == (x in A and x in B)


@given(ivals)
def test_alpha_set_is_normalised(a):
    A = AlphaSet(tuple(a))
    for (lo, hi), (lo2, hi2) in zip(A.intervals, A.intervals[1:]):
        assert lo <= hi < lo2 <= hi2
    assert intersect_alpha_sets([A]) == A


def test_alpha_set_inversion_and_flags():
    A = AlphaSet(((2.0, 4.0),))
    assert A.inverted().intervals == ((0.25, 0.5),)
    assert not A.intersect(AlphaSet.full(0, 10)).certified
    assert AlphaSet(()).empty and AlphaSet(()).hull() is None
    with pytest.raises(ValueError):
        intersect_alpha_sets([])
