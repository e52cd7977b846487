"""Patches around a development vertex and their polynomial data.

A patch is three consecutive faces of a vertex star.  Its centre ``x0``
and rim ``x1..x4`` (``x1..x3`` at valency three) carry squared distances
read off the development; the small diagonals that no face contains
become unknowns.  Each tetrahedron ``T_j`` (the five points minus
``x_j``) gives a Cayley-Menger polynomial, and a pair of corresponding
patches gives the ratio system ``q'_j = alpha * q_j`` with
``alpha = (det A)^2``.

Polynomials are built from vertex index sets, never from hand-written
matrices, so every entry is the distance between the two points it
indexes.  Each side is normalised by a power of two close to its largest
squared distance; the rescaling is exact and recorded in
``PolySystem.scales``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

from .cmgeom import cayley_menger_det
from .devmodel import Development, cofacial_sqdist_exact, shared_faces
from .errors import TooFewFaces, Unrealizable
from .poly import Polynomial, PolySystem, cm_polynomial

N3, N4, N5PLUS = "N3", "N4", "N5plus"

FREE_SLOTS = {
    N3: {},
    N4: {(1, 3): "u", (2, 4): "v"},
    N5PLUS: {(1, 3): "u", (2, 4): "v", (1, 4): "w"},
}


@dataclass(frozen=True)
class Patch:
    center: str
    faces: tuple
    rim: tuple
    valency_class: str
    window: int = 0

    @property
    def points(self):
        return (self.center,) + self.rim


@dataclass(frozen=True)
class PatchDistances:
    patch: Patch
    d2: dict = field(compare=False)  # (i, j) with i < j -> Fraction, fixed pairs only
    free: dict = field(compare=False)  # (i, j) -> slot name

    @property
    def valency_class(self):
        return self.patch.valency_class

    @property
    def npoints(self):
        return len(self.patch.points)

    def get(self, i, j):
        return self.d2[(min(i, j), max(i, j))]

    def template(self, idx, slot_index):
        """Squared-distance template over points ``idx``; free pairs become markers."""
        rows = []
        for a in idx:
            row = []
            for b in idx:
                if a == b:
                    row.append(Fraction(0))
                    continue
                key = (min(a, b), max(a, b))
                if key in self.free:
                    row.append(("var", slot_index[self.free[key]]))
                else:
                    row.append(self.d2[key])
            rows.append(row)
        return rows

    def scale(self):
        """Power of two near the largest fixed squared distance."""
        m = max(self.d2.values())
        return Fraction(2) ** round(math.log2(float(m))) if m > 0 else Fraction(1)

    def free_bounds(self, suffix=""):
        """Triangle-inequality bounds (original units) for every free slot."""
        out = {}
        for (i, j), name in self.free.items():
            lo, hi = 0.0, math.inf
            for k in range(self.npoints):
                if k in (i, j):
                    continue
                ka, kb = (min(i, k), max(i, k)), (min(j, k), max(j, k))
                if ka in self.free or kb in self.free:
                    continue
                a, b = math.sqrt(self.d2[ka]), math.sqrt(self.d2[kb])
                lo = max(lo, (a - b) ** 2)
                hi = min(hi, (a + b) ** 2)
            out[name + suffix] = (lo, hi)
        return out


# ---------------------------------------------------------------------------

def enumerate_patches(dev: Development, v) -> list:
    star = dev.star(v)
    nf = len(star)
    if nf < 3:
        raise TooFewFaces(f"only {nf} face(s) meet at vertex {v!r}")
    nb = star.neighbors
    faces = star.faces
    if star.cyclic:
        if nf == 3:
            return [Patch(v, tuple(faces), tuple(nb[:3]), N3, 0)]
        cls = N4 if nf == 4 else N5PLUS
        return [
            Patch(
                v,
                tuple(faces[(i + k) % nf] for k in range(3)),
                tuple(nb[(i + k) % nf] for k in range(4)),
                cls,
                i,
            )
            for i in range(nf)
        ]
    out = []
    for i in range(nf - 2):
        rim = tuple(nb[i:i + 4])
        # a boundary window closes no fourth face, so x1-x4 is only cofacial by accident
        cls = N4 if len(set(rim)) == 4 and shared_faces(dev, rim[0], rim[3]) else N5PLUS
        out.append(Patch(v, tuple(faces[i:i + 3]), rim, cls, i))
    return out


def patch_distances(dev: Development, patch: Patch) -> PatchDistances:
    pts = patch.points
    free = {k: v for k, v in FREE_SLOTS[patch.valency_class].items()}
    d2 = {}
    for i, j in combinations(range(len(pts)), 2):
        if (i, j) in free:
            continue
        d2[(i, j)] = cofacial_sqdist_exact(dev, pts[i], pts[j])
    return PatchDistances(patch, d2, free)


def corresponding_patch(patch: Patch, cmap) -> Patch:
    vm, fm = cmap.vertex_map, cmap.face_map
    return Patch(
        vm[patch.center],
        tuple(fm.get(f, f) for f in patch.faces),
        tuple(vm[x] for x in patch.rim),
        patch.valency_class,
        patch.window,
    )


# ---------------------------------------------------------------------------
# valency three

def patch_scalar_n3(zd: PatchDistances, zd2: PatchDistances):
    """Tetrahedron Cayley-Menger values ``(q, q')`` of two valency-3 patches."""
    out = []
    for z in (zd, zd2):
        if z.valency_class != N3:
            raise ValueError("valency-3 patch distances required")
        out.append(cayley_menger_det(z.template(range(4), {}), exact=True))
    return out[0], out[1]


def alpha_n3(q3, q3p):
    """``(det A)^2`` from the two tetrahedron values."""
    if q3 <= 0 or q3p <= 0:
        raise Unrealizable(f"tetrahedron values {float(q3)!r}, {float(q3p)!r} are not both positive")
    return Fraction(q3p) / Fraction(q3)


# ---------------------------------------------------------------------------
# valency four and higher

def tetra_polynomial(zd: PatchDistances, j, slot_index, nvars, scale=Fraction(1)):
    """CM polynomial of the tetrahedron on the five points minus ``x_j``.

    Fixed entries are divided by ``scale``; the variables are then the
    free squared diagonals in the same normalised units.
    """
    idx = [k for k in range(5) if k != j]
    tmpl = [[e / scale if isinstance(e, Fraction) else e for e in row] for row in zd.template(idx, slot_index)]
    return cm_polynomial(tmpl, nvars)


def flat_polynomial(zd: PatchDistances, slot_index, nvars, scale=Fraction(1)):
    """CM polynomial of all five points; vanishes for any configuration in 3-space."""
    tmpl = [[e / scale if isinstance(e, Fraction) else e for e in row] for row in zd.template(range(5), slot_index)]
    return cm_polynomial(tmpl, nvars)


def _ratio_system(zd, zd2, cls, flat=None):
    for z in (zd, zd2):
        if z.valency_class != cls:
            raise ValueError(f"{cls} patch distances required, got {z.valency_class}")
    slots = sorted(set(FREE_SLOTS[cls].values()))
    names = ["alpha"] + slots + [s + "'" for s in slots]
    nv = len(names)
    idx1 = {s: names.index(s) for s in slots}
    idx2 = {s: names.index(s + "'") for s in slots}
    s1, s2 = zd.scale(), zd2.scale()
    alpha = Polynomial.variable(nv, 0)
    eqs, labels = [], []
    for j in range(5):
        q = tetra_polynomial(zd, j, idx1, nv, s1)
        q2 = tetra_polynomial(zd2, j, idx2, nv, s2)
        eqs.append(q2 - alpha * q)
        labels.append(f"ratio{j}")
    if flat is None:
        flat = cls == N5PLUS
    if flat:
        eqs.append(flat_polynomial(zd, idx1, nv, s1))
        eqs.append(flat_polynomial(zd2, idx2, nv, s2))
        labels += ["flat", "flat'"]
    scales = [(s2 / s1) ** 3] + [s1] * len(slots) + [s2] * len(slots)
    kinds = ["alpha"] + ["length"] * (2 * len(slots))
    bounds = {**zd.free_bounds(), **zd2.free_bounds("'")}
    meta = {"bounds": bounds, "patch": zd.patch, "patch2": zd2.patch}
    return PolySystem(tuple(names), tuple(eqs), tuple(scales), tuple(kinds), tuple(labels), meta)


def patch_system_n4(zd: PatchDistances, zd2: PatchDistances, flat=False) -> PolySystem:
    return _ratio_system(zd, zd2, N4, flat)


def patch_system_n5(zd: PatchDistances, zd2: PatchDistances) -> PolySystem:
    return _ratio_system(zd, zd2, N5PLUS)


def patch_system(zd, zd2, flat=False) -> PolySystem:
    """Ratio system of a patch pair.

    ``flat=True`` also imposes zero 4-volume on valency-4 patches (always
    present from valency five on).  True configurations satisfy it, and it
    cuts off the thin tubes of near-solutions that make the square
    system slow to enclose.
    """
    if zd.valency_class == N4:
        return patch_system_n4(zd, zd2, flat)
    if zd.valency_class == N5PLUS:
        return patch_system_n5(zd, zd2)
    raise ValueError("valency-3 patches have no polynomial system")


def true_point(system: PolySystem, diag, diag2, alpha):
    """Variable vector (original units) from known diagonals.

    ``diag`` / ``diag2`` map slot names (``u``, ``v``, ``w``) to squared
    lengths on each side.
    """
    out = []
    for name in system.variables:
        if name == "alpha":
            out.append(alpha)
        elif name.endswith("'"):
            out.append(diag2[name[:-1]])
        else:
            out.append(diag[name])
    return out
