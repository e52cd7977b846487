import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from _support import affine_pair, dev_pair, sq
from affinedev.devmodel import build_correspondence, vertex_valency
from affinedev.errors import Unrealizable
from affinedev.oracle import bipyramid, cube, extract_development, generate, trapezohedron
from affinedev.patchsys import (
    FREE_SLOTS,
    N3,
    N4,
    N5PLUS,
    alpha_n3,
    corresponding_patch,
    enumerate_patches,
    patch_distances,
    patch_scalar_n3,
    patch_system,
    true_point,
)


def test_patch_classes_follow_valency():
    dev = extract_development(bipyramid(5))[0]
    assert [z.valency_class for z in enumerate_patches(dev, "e0")] == [N4] * 4
    assert [z.valency_class for z in enumerate_patches(dev, "n")] == [N5PLUS] * 5
    dev = extract_development(cube())[0]
    (z,) = enumerate_patches(dev, "b0")
    assert z.valency_class == N3 and len(z.rim) == 3


def test_patch_windows_are_consecutive_faces():
    dev = extract_development(trapezohedron(6))[0]
    star = dev.star("top")
    for z in enumerate_patches(dev, "top"):
        i = z.window
        assert z.faces == tuple(star.faces[(i + k) % 6] for k in range(3))
        assert z.rim == tuple(star.neighbors[(i + k) % 6] for k in range(4))


def test_patch_distances_match_embedding():
    P = generate("antiprism", n=5)
    dev = extract_development(P)[0]
    for z in enumerate_patches(dev, "u0"):
        zd = patch_distances(dev, z)
        pts = z.points
        for (i, j), d2 in zd.d2.items():
            assert float(d2) == pytest.approx(sq(P, pts[i], pts[j]), rel=1e-12)
        assert set(zd.free) == set(FREE_SLOTS[z.valency_class])


@given(st.integers(0, 10**6))
@settings(max_examples=20)
def test_free_bounds_contain_true_diagonals(seed):
    rng = np.random.default_rng(seed)
    P = bipyramid(int(rng.integers(4, 7)))
    dev = extract_development(P)[0]
    for v in ("e0", "n"):
        for z in enumerate_patches(dev, v):
            bounds = patch_distances(dev, z).free_bounds()
            for (i, j), name in FREE_SLOTS[z.valency_class].items():
                lo, hi = bounds[name]
                d = sq(P, z.points[i], z.points[j])
                assert lo - 1e-9 <= d <= hi + 1e-9


@given(st.integers(0, 10**6))
@settings(max_examples=30)
def test_valency3_ratio_is_squared_determinant(seed):
    rng = np.random.default_rng(seed)
    P, Q, A = affine_pair(generate("prism", n=int(rng.integers(3, 7))), rng)
    d1, d2 = dev_pair(P, Q)
    cmap = build_correspondence(d1, d2, {v: v for v in d1.vertices})
    (z,) = enumerate_patches(d1, "b0")
    q, q2 = patch_scalar_n3(patch_distances(d1, z), patch_distances(d2, corresponding_patch(z, cmap)))
    assert float(alpha_n3(q, q2)) == pytest.approx(A.det**2, rel=1e-9)


def test_alpha_n3_rejects_flat_tetrahedra():
    with pytest.raises(Unrealizable):
        alpha_n3(0, 1)


@given(st.integers(0, 10**6))
@settings(max_examples=15)
def test_true_point_satisfies_patch_systems(seed):
    rng = np.random.default_rng(seed)
    P, Q, A = affine_pair(bipyramid(int(rng.integers(4, 7))), rng)
    d1, d2 = dev_pair(P, Q)
    cmap = build_correspondence(d1, d2, {v: v for v in d1.vertices})
    for v in ("e1", "s"):
        z = enumerate_patches(d1, v)[int(rng.integers(0, vertex_valency(d1, v)))]
        z2 = corresponding_patch(z, cmap)
        diag = {n: sq(P, z.points[i], z.points[j]) for (i, j), n in FREE_SLOTS[z.valency_class].items()}
        diag2 = {n: sq(Q, z2.points[i], z2.points[j]) for (i, j), n in FREE_SLOTS[z.valency_class].items()}
        system = patch_system(patch_distances(d1, z), patch_distances(d2, z2), flat=True)
        x = true_point(system, diag, diag2, A.det**2)
        assert system.max_relative_residual(x) < 1e-8
        # a wrong alpha breaks the ratio equations
        x[0] *= 1.5
        assert system.max_relative_residual(x) > 1e-3


def test_patch_system_rejects_valency3():
    dev = extract_development(cube())[0]
    (z,) = enumerate_patches(dev, "b0")
    zd = patch_distances(dev, z)
    with pytest.raises(ValueError):
        patch_system(zd, zd)
