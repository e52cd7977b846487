import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from affinedev.cmgeom import AffineMap
from affinedev.errors import DegenerateMap, InvalidParams, NonPlanarFace
from affinedev.oracle import (
    GENERATORS,
    EmbeddedPolyhedron,
    affine_pair,
    apply_affine,
    bipyramid,
    cube,
    flatten_face,
    generate,
    oracle_affine_equivalent,
    random_affine,
    random_convex_suspension,
    trapezohedron,
)


@pytest.mark.parametrize("kind", sorted(GENERATORS))
def test_generators_give_convex_solids(kind):
    P = generate(kind)
    assert P.is_strictly_convex()
    assert len(P.vertices) - len({frozenset(e) for f in P.faces for e in zip(f, f[1:] + f[:1])}) + len(P.faces) == 2


def test_unit_bipyramid_edges():
    P = bipyramid(3)
    for f in P.faces:
        pts = np.array(P.points(f))
        for a, b in zip(pts, np.roll(pts, -1, axis=0)):
            assert np.linalg.norm(a - b) == pytest.approx(1.0)


def test_perturbed_edge_length():
    P = bipyramid(3, perturbed_edge=1.5)
    assert np.linalg.norm(np.subtract(P.vertices["n"], P.vertices["e0"])) == pytest.approx(1.5)
    assert np.linalg.norm(np.subtract(P.vertices["n"], P.vertices["e1"])) == pytest.approx(1.0)


def test_trapezohedron_faces_are_planar_kites():
    P = trapezohedron(5)
    for f in P.faces:
        flatten_face(P.points(f))


@given(st.integers(0, 10**6))
@settings(max_examples=30)
def test_oracle_recovers_random_maps(seed):
    rng = np.random.default_rng(seed)
    P = random_convex_suspension(int(rng.integers(3, 9)), seed=seed)
    A = random_affine(rng)
    got = oracle_affine_equivalent(P, apply_affine(P, A))
    assert got is not None
    assert np.allclose(got.linear, A.linear, atol=1e-8)
    s = np.linalg.svd(A.linear, compute_uv=False)
    assert 0.5 - 1e-12 <= s.min() and s.max() <= 2.0 + 1e-12


def test_oracle_rejects_non_images():
    assert oracle_affine_equivalent(bipyramid(3), bipyramid(3, perturbed_edge=1.5)) is None
    assert oracle_affine_equivalent(cube(), generate("prism", n=4, top_scale=0.5)) is None


def test_round_trip_and_affine_pair():
    P, Q, A = affine_pair("cube", {}, seed=4)
    again = EmbeddedPolyhedron.loads(Q.dumps())
    assert again.vertices == Q.vertices and again.faces == Q.faces
    assert oracle_affine_equivalent(P, Q) is not None
    with pytest.raises(InvalidParams):
        affine_pair("nothing", {})


def test_invalid_inputs():
    with pytest.raises(InvalidParams):
        generate("prism", n=2)
    with pytest.raises(InvalidParams):
        generate("bipyramid", equator_radius=-1)
    with pytest.raises(DegenerateMap):
        apply_affine(cube(), AffineMap(np.diag([1.0, 1.0, 0.0]), np.zeros(3)))
    with pytest.raises(NonPlanarFace):
        flatten_face([(0, 0, 0), (1, 0, 0), (1, 1, 0.3), (0, 1, 0)])
