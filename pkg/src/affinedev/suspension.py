"""Suspensions (bipyramid-like developments) and their non-equivalence certificate.

A suspension has two poles and an equator cycle; every face is a
triangle made of one pole and one equator edge.  The only unknown
distance in the tetrahedron ``(x0, x_j, x_{j+1}, x_{n+1})`` is the pole
to pole one, so each tetrahedron gives a quadratic in ``u = |x0 x_{n+1}|^2``.
If ``q'_j(u') = delta * q_j(u)`` has no positive solution the two
polyhedra cannot be affine images of each other.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction
import math

from .devmodel import CombinatorialMap, Development, cofacial_sqdist_exact
from .errors import NotASuspension
from .poly import Polynomial, PolySystem, cm_polynomial, with_cross_eliminants
from .solver import SolverConfig, feasible_box, project_alpha, solve_positive
from .verdict import INCONCLUSIVE, NOT_AFFINE, Verdict

PROBE_BOXES = 1500


@dataclass(frozen=True)
class SuspensionStructure:
    south: str
    north: str
    equator: tuple

    @property
    def n(self):
        return len(self.equator)

    def tetrahedron(self, j):
        """Vertex ids of ``T_j`` for ``1 <= j <= n``."""
        if not 1 <= j <= self.n:
            raise IndexError(f"tetrahedron index {j} outside 1..{self.n}")
        eq = self.equator
        return (self.south, eq[j - 1], eq[j % self.n], self.north)

    def mapped(self, vertex_map):
        vm = vertex_map
        return SuspensionStructure(vm[self.south], vm[self.north], tuple(vm[x] for x in self.equator))

    def to_dict(self):
        return {"southPole": self.south, "northPole": self.north, "equator": list(self.equator)}


def _all_triangles(dev):
    return all(len(f.polygon) == 3 for f in dev.faces)


def is_suspension(dev: Development, s: SuspensionStructure) -> bool:
    """Check the face lattice against the bipyramid pattern for ``s``."""
    adj = dev.adjacency
    n = s.n
    verts = set(dev.vertices)
    if n < 3 or len(set(s.equator)) != n or s.south == s.north:
        return False
    if verts != set(s.equator) | {s.south, s.north}:
        return False
    if s.north in adj[s.south]:
        return False
    if adj[s.south] != frozenset(s.equator) or adj[s.north] != frozenset(s.equator):
        return False
    if not _all_triangles(dev) or len(dev.faces) != 2 * n:
        return False
    want = set()
    for j in range(n):
        a, b = s.equator[j], s.equator[(j + 1) % n]
        want.add(frozenset((s.south, a, b)))
        want.add(frozenset((s.north, a, b)))
    have = {frozenset(dev.face_vertices(f.id)) for f in dev.faces}
    return have == want and dev.is_closed


def _equator_cycle(dev, south, north):
    """Equator in rotation order around ``south``, canonically started and oriented."""
    ring = list(dev.star(south).neighbors)
    if north in ring:
        return None
    k = ring.index(min(ring))
    ring = ring[k:] + ring[:k]
    # of the two neighbours of the first vertex, the lower id comes second
    if len(ring) > 2 and ring[-1] < ring[1]:
        ring = [ring[0]] + ring[1:][::-1]
    return tuple(ring)


def suspension_structures(dev: Development) -> list:
    """Every pole pairing of ``dev``, south pole being the lower id of the pair."""
    if not _all_triangles(dev) or not dev.is_closed:
        return []
    adj = dev.adjacency
    verts = sorted(dev.vertices)
    out = []
    for i, s in enumerate(verts):
        for t in verts[i + 1:]:
            if t in adj[s] or adj[s] != adj[t]:
                continue
            try:
                eq = _equator_cycle(dev, s, t)
            except Exception:  # a star that is not a disk is not a suspension either
                eq = None
            if eq is None:
                continue
            cand = SuspensionStructure(s, t, eq)
            if is_suspension(dev, cand):
                out.append(cand)
    return out


def detect_suspension(dev: Development):
    """The canonical structure (lowest-id south pole) or ``None``."""
    found = suspension_structures(dev)
    return found[0] if found else None


# ---------------------------------------------------------------------------

def _tetra_template(dev, s, j, scale, var=0):
    pts = s.tetrahedron(j)
    rows = []
    for a in range(4):
        row = []
        for b in range(4):
            if a == b:
                row.append(Fraction(0))
            elif {a, b} == {0, 3}:
                row.append(("var", var))
            else:
                row.append(cofacial_sqdist_exact(dev, pts[a], pts[b]) / scale)
        rows.append(row)
    return rows


def suspension_polynomial(dev: Development, s: SuspensionStructure, j, scale=Fraction(1)) -> Polynomial:
    """``q_j`` as a polynomial in the squared pole distance (one variable)."""
    return cm_polynomial(_tetra_template(dev, s, j, Fraction(scale)), 1)


def _side_scale(dev, s):
    m = max(cofacial_sqdist_exact(dev, a, b) for j in range(1, s.n + 1)
            for a, b in ((s.south, s.equator[j - 1]), (s.north, s.equator[j - 1]),
                         (s.equator[j - 1], s.equator[j % s.n])))
    return Fraction(2) ** round(math.log2(float(m))) if m > 0 else Fraction(1)


def pole_bounds(dev: Development, s: SuspensionStructure):
    """Triangle-inequality bounds on the squared pole distance."""
    lo, hi = 0.0, math.inf
    for x in s.equator:
        a = math.sqrt(cofacial_sqdist_exact(dev, s.south, x))
        b = math.sqrt(cofacial_sqdist_exact(dev, x, s.north))
        lo, hi = max(lo, (a - b) ** 2), min(hi, (a + b) ** 2)
    return lo, hi


def _structures(dev, dev2, cmap, structure):
    s = structure or detect_suspension(dev)
    if s is None or not is_suspension(dev, s):
        raise NotASuspension("first development is not a suspension")
    s2 = detect_suspension(dev2)
    if s2 is None:
        raise NotASuspension("second development is not a suspension")
    if s2.n != s.n:
        raise NotASuspension(f"equator sizes differ ({s.n} vs {s2.n})")
    if cmap is not None:
        s2 = s.mapped(cmap.vertex_map)
    elif set(dev.vertices) == set(dev2.vertices):
        s2 = s
    if not is_suspension(dev2, s2):
        raise NotASuspension("the correspondence does not carry the suspension structure across")
    return s, s2


def suspension_system(dev: Development, dev2: Development, cmap: CombinatorialMap = None, structure=None) -> PolySystem:
    """``q'_j(u') - delta q_j(u)`` for every ``j``; variables ``delta, u, u'``.

    Without a map, identical vertex ids are taken to correspond; failing
    that, both sides use their own canonical structure.
    """
    s, s2 = _structures(dev, dev2, cmap, structure)
    sc1, sc2 = _side_scale(dev, s), _side_scale(dev2, s2)
    delta = Polynomial.variable(3, 0)
    eqs, labels = [], []
    for j in range(1, s.n + 1):
        q = cm_polynomial(_tetra_template(dev, s, j, sc1, var=1), 3)
        q2 = cm_polynomial(_tetra_template(dev2, s2, j, sc2, var=2), 3)
        eqs.append(q2 - delta * q)
        labels.append(f"tetra{j}")
    meta = {
        "bounds": {"u": pole_bounds(dev, s), "u'": pole_bounds(dev2, s2)},
        "structure": s,
        "structure2": s2,
    }
    return PolySystem(
        ("delta", "u", "u'"),
        tuple(eqs),
        ((sc2 / sc1) ** 3, sc1, sc2),
        ("alpha", "length", "length"),
        tuple(labels),
        meta,
    )


def _near_solution(result, cfg):
    """Refined cluster point with residual below ``eps_res`` and positive lengths."""
    for c in result.clusters:
        if c.boundary or c.residual > cfg.eps_res:
            continue
        kinds = result.system.kinds
        if all(v > cfg.eps_width * hi for v, (_, hi), k in zip(c.point, result.box, kinds) if k == "length"):
            return c.point
    return None


def suspension_certificate(dev, dev2, cmap=None, cfg: SolverConfig = SolverConfig(), structure=None) -> Verdict:
    """NotAffineEquivalent when the system provably has no positive solution.

    The search runs on the system plus the products ``q'_i q_j - q'_j q_i``,
    which vanish wherever the original equations do; they eliminate
    ``delta`` and let interval pruning see the incompatibility sooner.

    Congruent tetrahedra (a regular equator, say) leave a curve of
    solutions that no box budget can enclose.  A short search runs first;
    if it runs out of boxes but has already refined an interior point
    with small residual, no certificate can exist and the full search is
    skipped.
    """
    system = suspension_system(dev, dev2, cmap, structure)
    search = with_cross_eliminants(system)
    box = feasible_box(search, cfg=cfg)
    result = solve_positive(search, box, replace(cfg, max_boxes=min(cfg.max_boxes, PROBE_BOXES)))
    witness = _near_solution(result, cfg) if result.stats["aborted"] else None
    if result.stats["aborted"] and witness is None and cfg.max_boxes > PROBE_BOXES:
        result = solve_positive(search, box, cfg)
    aset = project_alpha(result, cfg)
    kind = NOT_AFFINE if result.certified_empty else INCONCLUSIVE
    detail = {
        "structure": system.meta["structure"].to_dict(),
        "structure2": system.meta["structure2"].to_dict(),
        "solver": result.kind,
        "residual": result.residual,
    }
    if witness is not None:
        detail["nearSolution"] = dict(zip(system.variables, system.denormalize_point(witness)))
    return Verdict(kind, aset, (), "suspension", detail)
