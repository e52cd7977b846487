import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from _support import affine_pair, dev_pair, sq
from affinedev.errors import NotASuspension
from affinedev.oracle import bipyramid, cube, extract_development, random_convex_suspension
from affinedev.suspension import (
    SuspensionStructure,
    detect_suspension,
    is_suspension,
    pole_bounds,
    suspension_certificate,
    suspension_polynomial,
    suspension_structures,
    suspension_system,
)
from affinedev.verdict import INCONCLUSIVE, NOT_AFFINE


def test_detects_poles_and_equator():
    dev = extract_development(bipyramid(5))[0]
    s = detect_suspension(dev)
    assert {s.south, s.north} == {"n", "s"}
    assert sorted(s.equator) == [f"e{k}" for k in range(5)]
    assert s.tetrahedron(1) == (s.south, s.equator[0], s.equator[1], s.north)
    assert s.tetrahedron(5)[2] == s.equator[0]
    with pytest.raises(IndexError):
        s.tetrahedron(0)


def test_octahedron_has_three_pole_pairings():
    dev = extract_development(bipyramid(4))[0]
    pairs = {(s.south, s.north) for s in suspension_structures(dev)}
    assert pairs == {("e0", "e2"), ("e1", "e3"), ("n", "s")}


def test_cube_is_not_a_suspension():
    dev = extract_development(cube())[0]
    assert detect_suspension(dev) is None
    with pytest.raises(NotASuspension):
        suspension_system(dev, dev)


def test_wrong_structure_is_rejected():
    dev = extract_development(bipyramid(4))[0]
    bogus = SuspensionStructure("e0", "e1", ("n", "e2", "s", "e3"))
    assert not is_suspension(dev, bogus)


def test_polynomial_root_at_true_pole_distance():
    P = random_convex_suspension(6, seed=3)
    dev = extract_development(P)[0]
    s = detect_suspension(dev)
    u = sq(P, s.south, s.north)
    for j in range(1, 7):
        q = suspension_polynomial(dev, s, j)
        assert q.degree_in(0) == 2
        assert q.evaluate([u]) > 0  # a proper tetrahedron has positive signed volume
    lo, hi = pole_bounds(dev, s)
    assert lo <= u <= hi


@given(st.integers(0, 10**6))
@settings(max_examples=15)
def test_affine_pairs_satisfy_the_system(seed):
    rng = np.random.default_rng(seed)
    P, Q, A = affine_pair(random_convex_suspension(int(rng.integers(3, 8)), seed=seed), rng)
    d1, d2 = dev_pair(P, Q)
    s = detect_suspension(d1)
    system = suspension_system(d1, d2)
    x = [A.det**2, sq(P, s.south, s.north), sq(Q, s.south, s.north)]
    assert system.max_relative_residual(x) < 1e-8
    v = suspension_certificate(d1, d2)
    assert v.kind == INCONCLUSIVE
    if v.alpha_intersection.certified:
        assert A.det**2 in v.alpha_intersection


def test_regular_bipyramid_reports_a_near_solution():
    rng = np.random.default_rng(5)
    P, Q, A = affine_pair(bipyramid(5), rng)
    v = suspension_certificate(*dev_pair(P, Q))
    assert v.kind == INCONCLUSIVE
    near = v.detail["nearSolution"]
    assert set(near) == {"delta", "u", "u'"} and all(x > 0 for x in near.values())


def test_perturbed_bipyramid_is_certified():
    d1, d2 = dev_pair(bipyramid(3), bipyramid(3, perturbed_edge=1.5))
    v = suspension_certificate(d1, d2)
    assert v.kind == NOT_AFFINE and v.alpha_intersection.empty and v.alpha_intersection.certified
