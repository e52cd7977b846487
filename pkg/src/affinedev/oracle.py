"""Embedded polyhedra: ground truth for every test of the recognizer.

Holds 3D vertex coordinates and face cycles, flattens faces into a
development, applies affine maps, fits affine maps between corresponding
vertex sets, and generates the polyhedron families used by the tests.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .cmgeom import AffineMap, fit_affine_map_3d
from .devmodel import CombinatorialMap, build_correspondence, from_face_cycles
from .errors import DegenerateMap, InvalidParams, NonPlanarFace, RankDeficient

EPS_PLAN = 1e-9
EPS_DET = 1e-12


@dataclass(frozen=True)
class EmbeddedPolyhedron:
    vertices: dict  # id -> (x, y, z)
    faces: tuple  # tuples of vertex ids, one cycle per face

    def __post_init__(self):
        object.__setattr__(
            self, "vertices", {str(k): tuple(float(c) for c in v) for k, v in self.vertices.items()}
        )
        object.__setattr__(self, "faces", tuple(tuple(str(v) for v in f) for f in self.faces))
        for f in self.faces:
            if len(f) < 3 or len(set(f)) != len(f):
                raise InvalidParams(f"face {f} must list at least three distinct vertices")
            for v in f:
                if v not in self.vertices:
                    raise InvalidParams(f"face {f} uses unknown vertex {v!r}")
        uses = {}
        for f in self.faces:
            for a, b in zip(f, f[1:] + f[:1]):
                key = frozenset((a, b))
                uses[key] = uses.get(key, 0) + 1
                if uses[key] > 2:
                    raise InvalidParams(f"edge {sorted(key)} lies on more than two faces")

    def point(self, v):
        return np.array(self.vertices[v])

    def points(self, ids=None):
        ids = list(self.vertices) if ids is None else ids
        return np.array([self.vertices[v] for v in ids])

    @property
    def diameter(self):
        p = self.points()
        return float(max(np.linalg.norm(a - b) for a in p for b in p))

    def distance(self, a, b):
        return float(np.linalg.norm(self.point(a) - self.point(b)))

    def neighbors(self, v):
        out = set()
        for f in self.faces:
            if v in f:
                i = f.index(v)
                out.add(f[i - 1])
                out.add(f[(i + 1) % len(f)])
        return out

    def to_dict(self):
        return {
            "vertices": {k: list(v) for k, v in self.vertices.items()},
            "faces": [list(f) for f in self.faces],
        }

    def dumps(self, indent=None):
        return json.dumps(self.to_dict(), indent=indent)

    @classmethod
    def from_dict(cls, doc):
        try:
            return cls(dict(doc["vertices"]), tuple(doc["faces"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidParams(f"bad polyhedron document: {exc}") from None

    @classmethod
    def loads(cls, text):
        return cls.from_dict(json.loads(text))

    def is_strictly_convex(self, tol=1e-9):
        """Every face plane leaves all remaining vertices strictly on one side."""
        pts = self.points()
        scale = max(self.diameter, 1e-300)
        for f in self.faces:
            c, n = _plane(self.points(f))
            side = (pts - c) @ n
            others = [s for v, s in zip(self.vertices, side) if v not in f]
            if not (all(s < -tol * scale for s in others) or all(s > tol * scale for s in others)):
                return False
        return True


def _plane(pts):
    """Centroid and unit Newell normal of a polygon."""
    pts = np.asarray(pts, dtype=float)
    n = np.zeros(3)
    for a, b in zip(pts, np.roll(pts, -1, axis=0)):
        n += np.cross(a, b)
    norm = np.linalg.norm(n)
    if norm == 0:
        raise NonPlanarFace("face is degenerate")
    return pts.mean(axis=0), n / norm


def flatten_face(pts, eps_plan=EPS_PLAN):
    """Congruent planar copy of a 3D polygon, counter-clockwise about its normal."""
    pts = np.asarray(pts, dtype=float)
    c, n = _plane(pts)
    diam = max(np.linalg.norm(a - b) for a in pts for b in pts)
    dev = np.abs((pts - c) @ n).max()
    if dev > eps_plan * diam:
        raise NonPlanarFace(f"face deviates from its plane by {dev:.3g}")
    e1 = pts[1] - pts[0]
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(n, e1)
    rel = pts - pts[0]
    return [(float(p @ e1), float(p @ e2)) for p in rel]


def extract_development(P: EmbeddedPolyhedron, eps_plan=EPS_PLAN):
    """Natural development of ``P`` and the map from its elements to ``P``'s."""
    polys, cycles = {}, {}
    for i, f in enumerate(P.faces):
        fid = f"f{i}"
        polys[fid] = flatten_face(P.points(f), eps_plan)
        cycles[fid] = f
    dev = from_face_cycles(polys, cycles)
    return dev, build_correspondence(dev, dev, {v: v for v in dev.vertices})


def apply_affine(P: EmbeddedPolyhedron, A: AffineMap, eps_plan=EPS_PLAN) -> EmbeddedPolyhedron:
    scale = max(np.abs(A.linear).max(), 1e-300)
    if abs(A.det) <= EPS_DET * scale**3:
        raise DegenerateMap(f"affine map has determinant {A.det!r}")
    ids = list(P.vertices)
    img = A(P.points(ids))
    Q = EmbeddedPolyhedron(dict(zip(ids, map(tuple, img))), P.faces)
    for f in Q.faces:
        flatten_face(Q.points(f), eps_plan)
    return Q


def oracle_affine_equivalent(P, P2, cmap: CombinatorialMap = None, eps_aff=1e-9):
    """Affine map of 3-space taking ``P`` onto ``P2`` vertex-wise, or ``None``."""
    ids = list(P.vertices)
    vm = cmap.vertex_map if cmap is not None else {v: v for v in ids}
    try:
        amap, resid = fit_affine_map_3d(P.points(ids), P2.points([vm[v] for v in ids]))
    except RankDeficient:
        return None
    if resid >= eps_aff * P2.diameter:
        return None
    if abs(amap.det) <= EPS_DET * max(np.abs(amap.linear).max(), 1e-300) ** 3:
        return None
    return amap


# ---------------------------------------------------------------------------
# generators

def _regular_polygon(n, side=1.0, phase=0.0):
    r = side / (2 * math.sin(math.pi / n))
    return [(r * math.cos(phase + 2 * math.pi * k / n), r * math.sin(phase + 2 * math.pi * k / n)) for k in range(n)]


def _check_n(n, lo=3):
    if not isinstance(n, (int, np.integer)) or isinstance(n, bool) or n < lo:
        raise InvalidParams(f"n must be an integer >= {lo}, got {n!r}")
    return int(n)


def _positive(name, x):
    if x is None:
        return None
    if not (isinstance(x, (int, float)) and math.isfinite(x) and x > 0):
        raise InvalidParams(f"{name} must be a positive number, got {x!r}")
    return float(x)


def trilaterate(p1, p2, p3, r1, r2, r3, upper=True):
    """Point at distances ``r1, r2, r3`` from three points (the side of ``upper``)."""
    p1, p2, p3 = (np.asarray(p, dtype=float) for p in (p1, p2, p3))
    ex = (p2 - p1) / np.linalg.norm(p2 - p1)
    i = ex @ (p3 - p1)
    ey = p3 - p1 - i * ex
    ey /= np.linalg.norm(ey)
    ez = np.cross(ex, ey)
    d = np.linalg.norm(p2 - p1)
    j = ey @ (p3 - p1)
    x = (r1**2 - r2**2 + d**2) / (2 * d)
    y = (r1**2 - r3**2 + i**2 + j**2) / (2 * j) - i * x / j
    z2 = r1**2 - x**2 - y**2
    if z2 <= 0:
        raise InvalidParams("the three spheres do not meet in two points")
    z = math.sqrt(z2)
    return p1 + x * ex + y * ey + (z if upper else -z) * ez


def bipyramid(n=3, equator_radius=None, south_height=None, north_height=None, perturbed_edge=None):
    """Bipyramid over a regular n-gon in the plane ``z = 0``.

    Defaults give unit equator sides and, when possible, unit apex edges.
    ``perturbed_edge`` moves the north apex so that its edge to ``e0``
    has this length while its edges to ``e1`` and ``e2`` keep theirs.
    """
    n = _check_n(n)
    side_r = 1 / (2 * math.sin(math.pi / n))
    R = _positive("equator_radius", equator_radius) or side_r
    unit_h = math.sqrt(1 - R * R) if R < 1 else 1.0
    hs = _positive("south_height", south_height) or unit_h
    hn = _positive("north_height", north_height) or unit_h
    eq = [(R * math.cos(2 * math.pi * k / n), R * math.sin(2 * math.pi * k / n), 0.0) for k in range(n)]
    verts = {f"e{k}": eq[k] for k in range(n)}
    verts["s"] = (0.0, 0.0, -hs)
    north = np.array([0.0, 0.0, hn])
    if perturbed_edge is not None:
        L = _positive("perturbed_edge", perturbed_edge)
        e = [np.array(p) for p in eq[:3]]
        north = trilaterate(e[0], e[1], e[2], L, np.linalg.norm(north - e[1]), np.linalg.norm(north - e[2]))
    verts["n"] = tuple(north)
    faces = []
    for k in range(n):
        a, b = f"e{k}", f"e{(k + 1) % n}"
        faces.append(("n", a, b))
        faces.append(("s", b, a))
    return EmbeddedPolyhedron(verts, tuple(faces))


def prism(n=4, base=None, height=1.0, top_scale=1.0):
    """Right prism over ``base`` (default: regular n-gon with unit sides).

    ``top_scale != 1`` shrinks the top about the centroid, giving a
    frustum whose lateral faces are trapezoids.
    """
    n = _check_n(n)
    height = _positive("height", height)
    top_scale = _positive("top_scale", top_scale)
    base = _regular_polygon(n) if base is None else [tuple(map(float, p)) for p in base]
    if len(base) != n:
        raise InvalidParams("base polygon must have n vertices")
    c = np.mean(np.array(base), axis=0)
    verts = {}
    for k, (x, y) in enumerate(base):
        verts[f"b{k}"] = (x, y, 0.0)
        tx, ty = c + top_scale * (np.array([x, y]) - c)
        verts[f"t{k}"] = (float(tx), float(ty), height)
    faces = [tuple(f"b{k}" for k in reversed(range(n))), tuple(f"t{k}" for k in range(n))]
    for k in range(n):
        j = (k + 1) % n
        faces.append((f"b{k}", f"b{j}", f"t{j}", f"t{k}"))
    return EmbeddedPolyhedron(verts, tuple(faces))


def cube(edge=1.0):
    return prism(4, [(0, 0), (edge, 0), (edge, edge), (0, edge)], edge)


def trapezohedron(n=4, apex_height=1.5):
    """n-gonal trapezohedron: 2n congruent kites, two apices of valency n."""
    n = _check_n(n)
    H = _positive("apex_height", apex_height)
    c = math.cos(math.pi / n)
    h = H * (1 - c) / (1 + c)
    verts = {"top": (0.0, 0.0, H), "bot": (0.0, 0.0, -H)}
    for k in range(n):
        a = 2 * math.pi * k / n
        b = a + math.pi / n
        verts[f"u{k}"] = (math.cos(a), math.sin(a), h)
        verts[f"l{k}"] = (math.cos(b), math.sin(b), -h)
    faces = []
    for k in range(n):
        j = (k + 1) % n
        faces.append(("top", f"u{k}", f"l{k}", f"u{j}"))
        faces.append(("bot", f"l{j}", f"u{j}", f"l{k}"))
    return EmbeddedPolyhedron(verts, tuple(faces))


def antiprism(n=4, height=None):
    """Uniform-looking antiprism: two n-gons joined by 2n triangles."""
    n = _check_n(n)
    h = _positive("height", height) or 0.8
    verts = {}
    for k in range(n):
        a = 2 * math.pi * k / n
        verts[f"u{k}"] = (math.cos(a), math.sin(a), h / 2)
        verts[f"l{k}"] = (math.cos(a + math.pi / n), math.sin(a + math.pi / n), -h / 2)
    faces = [tuple(f"u{k}" for k in range(n)), tuple(f"l{k}" for k in reversed(range(n)))]
    for k in range(n):
        j = (k + 1) % n
        faces.append((f"u{k}", f"l{k}", f"u{j}"))
        faces.append((f"l{k}", f"l{j}", f"u{j}"))
    return EmbeddedPolyhedron(verts, tuple(faces))


def random_convex_suspension(n=5, seed=0):
    """Bipyramid-like suspension with jittered equator and off-axis poles."""
    n = _check_n(n)
    rng = np.random.default_rng(seed)
    for _ in range(1000):
        gaps = rng.uniform(0.6, 1.4, n)
        ang = np.cumsum(gaps) / gaps.sum() * 2 * math.pi
        rad = rng.uniform(0.8, 1.2, n)
        z = rng.uniform(-0.08, 0.08, n)
        verts = {f"e{k}": (rad[k] * math.cos(ang[k]), rad[k] * math.sin(ang[k]), z[k]) for k in range(n)}
        verts["n"] = (*rng.uniform(-0.25, 0.25, 2), rng.uniform(0.6, 1.5))
        verts["s"] = (*rng.uniform(-0.25, 0.25, 2), -rng.uniform(0.6, 1.5))
        faces = []
        for k in range(n):
            a, b = f"e{k}", f"e{(k + 1) % n}"
            faces += [("n", a, b), ("s", b, a)]
        P = EmbeddedPolyhedron(verts, tuple(faces))
        if P.is_strictly_convex(1e-3):
            return P
    raise InvalidParams("could not sample a convex suspension")  # pragma: no cover


def random_affine(rng, sv_range=(0.5, 2.0)) -> AffineMap:
    """Random affine map with singular values in ``sv_range``."""
    q1, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    q2, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    s = rng.uniform(*sv_range, 3)
    return AffineMap(q1 @ np.diag(s) @ q2, rng.normal(size=3))


GENERATORS = {
    "bipyramid": bipyramid,
    "prism": prism,
    "cube": cube,
    "trapezohedron": trapezohedron,
    "antiprism": antiprism,
    "randomConvexSuspension": random_convex_suspension,
}


def generate(kind, **params):
    if kind == "affinePair":
        return affine_pair(**params)
    if kind not in GENERATORS:
        raise InvalidParams(f"unknown generator {kind!r}; choose from {sorted(GENERATORS) + ['affinePair']}")
    try:
        return GENERATORS[kind](**params)
    except TypeError as exc:
        raise InvalidParams(str(exc)) from None


def affine_pair(base="cube", params=None, A=None, seed=0):
    """``(P, A(P), A)``; ``A`` is drawn from ``seed`` when not given."""
    P = generate(base, **(params or {}))
    if A is None:
        A = random_affine(np.random.default_rng(seed))
    return P, apply_affine(P, A), A
