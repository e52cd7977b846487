from fractions import Fraction
from math import factorial

import numpy as np
import pytest
from hypothesis import given, strategies as st

from affinedev.cmgeom import (
    AffineMap,
    DistanceSpec,
    cayley_menger_det,
    fit_affine_map_3d,
    polygon_affine_equivalent,
    realizable_simplex,
    signed_cm,
    simplex_volume,
    simplex_volume_squared,
    volume_constant,
)
from affinedev.errors import DegenerateBase, NegativeSquaredVolume, RankDeficient

coords = st.integers(-6, 6)
point3 = st.tuples(coords, coords, coords)


def test_volume_constant_values():
    assert [volume_constant(k) for k in (1, 2, 3)] == [2, 16, 288]


def test_segment_and_triangle_volumes():
    assert simplex_volume_squared([[0, 4], [4, 0]]) == 4
    # right triangle with legs 3 and 4
    spec = DistanceSpec.from_points([(0, 0), (3, 0), (0, 4)], exact=True)
    assert simplex_volume_squared(spec) == 36


@given(st.lists(point3, min_size=4, max_size=4))
def test_tetra_volume_matches_triple_product(pts):
    P = np.array(pts, dtype=float)
    triple = abs(np.linalg.det(P[1:] - P[0])) / 6
    spec = DistanceSpec.from_points(pts, exact=True)
    assert float(simplex_volume_squared(spec)) == pytest.approx(triple**2, abs=1e-9)


@given(st.lists(point3, min_size=4, max_size=4))
def test_exact_and_float_evaluation_agree(pts):
    exact = cayley_menger_det(DistanceSpec.from_points(pts, exact=True), exact=True)
    approx = cayley_menger_det(DistanceSpec.from_points(pts), exact=False)
    scale = max(1.0, abs(float(exact)))
    assert abs(approx - float(exact)) <= 1e-9 * scale * 1e3


@given(st.lists(point3, min_size=3, max_size=4, unique=True))
def test_cm_is_invariant_under_relabelling(pts):
    spec = DistanceSpec.from_points(pts, exact=True)
    rev = spec.sub(list(reversed(range(len(pts)))))
    assert cayley_menger_det(spec) == cayley_menger_det(rev)


def test_realizability_needs_every_leading_face():
    # squared lengths 1, 1, 9 on the first triangle break the triangle inequality
    bad_face = [[0, 1, 1, 1], [1, 0, 9, 1], [1, 9, 0, 1], [1, 1, 1, 0]]
    assert not realizable_simplex(bad_face)
    assert realizable_simplex(unit(3))
    collinear = DistanceSpec.from_points([(0, 0), (1, 0), (2, 0)], exact=True)
    assert not realizable_simplex(collinear)


def unit(k):
    return [[0 if i == j else 1 for j in range(k + 1)] for i in range(k + 1)]


def test_signed_cm_positive_for_unit_simplices():
    for k in (1, 2, 3):
        assert signed_cm(unit(k)) > 0
    assert simplex_volume_squared(unit(2)) == Fraction(3, 16)
    assert simplex_volume_squared(unit(3)) * volume_constant(3) == 4
    assert factorial(3) * Fraction(4, 2**3 * factorial(3) ** 2) == Fraction(4, 2**3 * factorial(3))


def test_simplex_volume_rejects_impossible_lengths():
    with pytest.raises(NegativeSquaredVolume):
        simplex_volume([[0, 1, 16], [1, 0, 1], [16, 1, 0]])


@pytest.mark.parametrize(
    "table",
    [
        [[0, 1], [2, 0]],
        [[1, 1], [1, 0]],
        [[0, -1], [-1, 0]],
        [[0]],
    ],
)
def test_distance_spec_validation(table):
    with pytest.raises(ValueError):
        DistanceSpec(table)


def test_affine_map_compose_and_inverse():
    rng = np.random.default_rng(0)
    A = AffineMap(rng.normal(size=(3, 3)) + 3 * np.eye(3), rng.normal(size=3))
    B = AffineMap(rng.normal(size=(3, 3)) + 3 * np.eye(3), rng.normal(size=3))
    pts = rng.normal(size=(5, 3))
    assert np.allclose(A.compose(B)(pts), A(B(pts)))
    assert np.allclose(A.inverse()(A(pts)), pts)
    assert A.compose(A.inverse()).linear == pytest.approx(np.eye(3))


def test_polygon_equivalence_accepts_affine_images():
    # a trapezoid has no affine symmetry that cycles its corners
    trap = [(0, 0), (2, 0), (1, 1), (0, 1)]
    M = np.array([[2.0, 0.5], [0.3, 1.5]])
    img = [tuple(M @ p + (1, -2)) for p in np.array(trap, float)]
    got = polygon_affine_equivalent(trap, img)
    assert got is not None and np.allclose(got.linear, M)
    # rotate the corner labels and undo it with the correspondence
    rolled = img[1:] + img[:1]
    assert polygon_affine_equivalent(trap, rolled, [3, 0, 1, 2]) is not None
    assert polygon_affine_equivalent(trap, rolled) is None


def test_polygon_equivalence_rejects_trapezoid_and_collinear_frame():
    square = [(0, 0), (1, 0), (1, 1), (0, 1)]
    trap = [(0, 0), (2, 0), (1.5, 1), (0.5, 1)]
    assert polygon_affine_equivalent(square, trap) is None
    assert polygon_affine_equivalent(square, square[:3]) is None
    with pytest.raises(DegenerateBase):
        polygon_affine_equivalent([(0, 0), (1, 0), (2, 0), (1, 1)], [(0, 0), (1, 0), (2, 0), (1, 1)])


def test_fit_affine_map_recovers_map_and_rejects_flat_input():
    rng = np.random.default_rng(1)
    src = rng.normal(size=(8, 3))
    A = AffineMap(rng.normal(size=(3, 3)) + 2 * np.eye(3), rng.normal(size=3))
    got, resid = fit_affine_map_3d(src, A(src))
    assert resid < 1e-12 and np.allclose(got.linear, A.linear)
    flat = src.copy()
    flat[:, 2] = 0
    with pytest.raises(RankDeficient):
        fit_affine_map_3d(flat, flat)
