"""Natural developments: planar face polygons glued along edges.

A development is stored exactly as the file format describes it: face
polygons with stable ids, explicit edge gluings and an explicit partition
of face corners into development vertices.  Everything else (stars,
valencies, edges) is derived lazily and cached; instances are immutable.
"""

from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Mapping

from .errors import (
    AffineDevError,
    DevelopmentFormatError,
    InconsistentDistance,
    NotCofacial,
    NotCombinatoriallyEquivalent,
    UnknownVertex,
)

EPS_LEN = 1e-9

Slot = tuple  # (face id, corner or edge index)


@dataclass(frozen=True)
class PlanarPolygon:
    vertices: tuple

    def __post_init__(self):
        object.__setattr__(
            self, "vertices", tuple((float(x), float(y)) for x, y in self.vertices)
        )

    def __len__(self):
        return len(self.vertices)

    def edge_length(self, i):
        (x0, y0), (x1, y1) = self.vertices[i], self.vertices[(i + 1) % len(self)]
        return math.hypot(x1 - x0, y1 - y0)

    def corner_distance(self, i, j):
        (x0, y0), (x1, y1) = self.vertices[i], self.vertices[j]
        return math.hypot(x1 - x0, y1 - y0)

    def corner_sqdist_exact(self, i, j):
        """Squared corner distance as an exact rational of the stored doubles."""
        (x0, y0), (x1, y1) = self.vertices[i], self.vertices[j]
        dx = Fraction(x1) - Fraction(x0)
        dy = Fraction(y1) - Fraction(y0)
        return dx * dx + dy * dy

    def corner_angle(self, i):
        m = len(self)
        px, py = self.vertices[(i - 1) % m]
        cx, cy = self.vertices[i]
        nx, ny = self.vertices[(i + 1) % m]
        ax, ay = px - cx, py - cy
        bx, by = nx - cx, ny - cy
        return abs(math.atan2(ax * by - ay * bx, ax * bx + ay * by))

    def turn_signs(self):
        m = len(self)
        out = []
        for i in range(m):
            x0, y0 = self.vertices[i]
            x1, y1 = self.vertices[(i + 1) % m]
            x2, y2 = self.vertices[(i + 2) % m]
            out.append((x1 - x0) * (y2 - y1) - (y1 - y0) * (x2 - x1))
        return out

    def is_strictly_convex(self, tol=0.0):
        if len(self) < 3 or len(set(self.vertices)) != len(self):
            return False
        scale = max(self.diameter(), 1e-300) ** 2
        crosses = self.turn_signs()
        if all(c > tol * scale for c in crosses):
            return True
        return all(c < -tol * scale for c in crosses)

    def diameter(self):
        m = len(self)
        return max(
            (self.corner_distance(i, j) for i in range(m) for j in range(i + 1, m)),
            default=0.0,
        )


@dataclass(frozen=True)
class Face:
    id: str
    polygon: PlanarPolygon


@dataclass(frozen=True)
class VertexClass:
    id: str
    corners: tuple


@dataclass(frozen=True)
class Star:
    """Faces around a vertex in rotation order.

    ``corners[i]`` is the corner of face ``i``; face ``i`` lies between the
    edge-neighbours ``neighbors[i]`` and ``neighbors[i + 1]`` (indices taken
    mod ``len(neighbors)`` when the star is cyclic).
    """

    center: str
    corners: tuple
    neighbors: tuple
    cyclic: bool

    @property
    def faces(self):
        return tuple(f for f, _ in self.corners)

    def __len__(self):
        return len(self.corners)


@dataclass(frozen=True)
class Issue:
    kind: str
    message: str
    where: tuple = ()


@dataclass(frozen=True)
class ValidationReport:
    issues: tuple = ()

    def __bool__(self):
        return bool(self.issues)

    def __len__(self):
        return len(self.issues)

    def __iter__(self):
        return iter(self.issues)

    @property
    def ok(self):
        return not self.issues

    def kinds(self):
        return [i.kind for i in self.issues]

    def to_dict(self):
        return {
            "valid": self.ok,
            "issues": [
                {"kind": i.kind, "message": i.message, "where": [list(w) for w in i.where]}
                for i in self.issues
            ],
        }


@dataclass(frozen=True, eq=False)
class Development:
    faces: tuple
    gluings: tuple
    vertex_classes: tuple

    def __post_init__(self):
        object.__setattr__(self, "faces", tuple(self.faces))
        object.__setattr__(
            self,
            "gluings",
            tuple((tuple(a), tuple(b)) for a, b in self.gluings),
        )
        object.__setattr__(self, "vertex_classes", tuple(self.vertex_classes))

    # -- indices ---------------------------------------------------------

    @cached_property
    def face_index(self) -> dict:
        return {f.id: f for f in self.faces}

    @cached_property
    def corner_vertex(self) -> dict:
        out = {}
        for vc in self.vertex_classes:
            for c in vc.corners:
                out[tuple(c)] = vc.id
        return out

    @cached_property
    def vertices(self) -> tuple:
        return tuple(vc.id for vc in self.vertex_classes)

    @cached_property
    def partner(self) -> dict:
        out = {}
        for a, b in self.gluings:
            out[a] = b
            out[b] = a
        return out

    @cached_property
    def is_closed(self):
        return all(
            (f.id, i) in self.partner for f in self.faces for i in range(len(f.polygon))
        )

    @cached_property
    def longest_edge(self):
        return max(
            (f.polygon.edge_length(i) for f in self.faces for i in range(len(f.polygon))),
            default=0.0,
        )

    def polygon(self, face_id) -> PlanarPolygon:
        return self.face_index[face_id].polygon

    def face_vertices(self, face_id) -> tuple:
        poly = self.polygon(face_id)
        return tuple(self.corner_vertex[(face_id, i)] for i in range(len(poly)))

    @cached_property
    def vertex_corners(self) -> dict:
        out = defaultdict(list)
        for f in self.faces:
            for i in range(len(f.polygon)):
                out[self.corner_vertex[(f.id, i)]].append((f.id, i))
        return dict(out)

    @cached_property
    def vertex_faces(self) -> dict:
        return {v: tuple(dict.fromkeys(f for f, _ in cs)) for v, cs in self.vertex_corners.items()}

    def _edge_key(self, slot):
        other = self.partner.get(slot)
        return min(slot, other) if other is not None else slot

    @cached_property
    def edges(self) -> dict:
        """Development edges keyed by canonical slot -> (endpoints, slots)."""
        out = {}
        for f in self.faces:
            m = len(f.polygon)
            for i in range(m):
                key = self._edge_key((f.id, i))
                ends = (self.corner_vertex[(f.id, i)], self.corner_vertex[(f.id, (i + 1) % m)])
                entry = out.setdefault(key, (frozenset(ends), []))
                entry[1].append((f.id, i))
        return {k: (ends, tuple(slots)) for k, (ends, slots) in out.items()}

    @cached_property
    def adjacency(self) -> dict:
        adj = defaultdict(set)
        for ends, _ in self.edges.values():
            if len(ends) == 2:
                a, b = tuple(ends)
                adj[a].add(b)
                adj[b].add(a)
        return {v: frozenset(adj.get(v, ())) for v in self.vertices}

    def _check_vertex(self, v):
        if v not in self.vertex_corners:
            raise UnknownVertex(v)

    # -- stars -----------------------------------------------------------

    def star(self, v) -> Star:
        self._check_vertex(v)
        return self._stars[v]

    @cached_property
    def _stars(self) -> dict:
        return {v: self._walk_star(v) for v in self.vertices if v in self.vertex_corners}

    def _walk_star(self, v) -> Star:
        corners = sorted(self.vertex_corners[v], key=lambda s: (self._face_order[s[0]], s[1]))
        corner_set = set(corners)

        def sides(corner):
            f, c = corner
            m = len(self.polygon(f))
            return (f, (c - 1) % m), (f, c)

        def far_end(side, corner):
            f, e = side
            m = len(self.polygon(f))
            a, b = e, (e + 1) % m
            return self.corner_vertex[(f, b if a == corner[1] else a)]

        start, entry = corners[0], sides(corners[0])[0]
        for c in corners:
            for s in sides(c):
                if s not in self.partner:
                    start, entry = c, s
                    break
            else:
                continue
            break
        cyclic = all(s in self.partner for c in corners for s in sides(c))
        if cyclic:
            start = corners[0]
            entry = sides(start)[0]

        order = []
        neighbors = [far_end(entry, start)]
        corner, side_in = start, entry
        while True:
            order.append(corner)
            s0, s1 = sides(corner)
            side_out = s1 if side_in == s0 else s0
            neighbors.append(far_end(side_out, corner))
            nxt = self.partner.get(side_out)
            if nxt is None:
                break
            g, h = nxt
            m = len(self.polygon(g))
            cand = [(g, h), (g, (h + 1) % m)]
            corner = next(c for c in cand if self.corner_vertex.get(c) == v)
            side_in = nxt
            if corner == start:
                break
            if corner in order:
                raise AffineDevError(f"star of vertex {v!r} is not a disk")
        if set(order) != corner_set:
            raise AffineDevError(f"star of vertex {v!r} is not a disk")
        if cyclic:
            neighbors.pop()
        return Star(v, tuple(order), tuple(neighbors), cyclic)

    @cached_property
    def _face_order(self) -> dict:
        return {f.id: i for i, f in enumerate(self.faces)}

    # -- equality / serialization ------------------------------------------

    def to_dict(self):
        return {
            "faces": [
                {"id": f.id, "vertices": [list(p) for p in f.polygon.vertices]}
                for f in self.faces
            ],
            "gluings": [[list(a), list(b)] for a, b in self.gluings],
            "vertexClasses": [
                {"id": vc.id, "corners": [list(c) for c in vc.corners]}
                for vc in self.vertex_classes
            ],
        }

    def dumps(self, indent=None):
        return json.dumps(self.to_dict(), indent=indent)


# ---------------------------------------------------------------------------
# parsing

def _require(obj, key, ctx):
    if not isinstance(obj, dict) or key not in obj:
        raise DevelopmentFormatError(f"{ctx}: missing field {key!r}")
    return obj[key]


def _slot(raw, ctx, face_sizes, kind):
    if (
        not isinstance(raw, (list, tuple))
        or len(raw) != 2
        or not isinstance(raw[0], str)
        or isinstance(raw[1], bool)
        or not isinstance(raw[1], int)
    ):
        raise DevelopmentFormatError(f"{ctx}: expected [faceId, index], got {raw!r}")
    fid, idx = raw
    if fid not in face_sizes:
        raise DevelopmentFormatError(f"{ctx}: dangling face reference {fid!r}")
    if not 0 <= idx < face_sizes[fid]:
        raise DevelopmentFormatError(f"{ctx}: {kind} index {idx} out of range for face {fid!r}")
    return (fid, idx)


def development_from_dict(doc) -> Development:
    faces_raw = _require(doc, "faces", "document")
    if not isinstance(faces_raw, list):
        raise DevelopmentFormatError("document: 'faces' must be a list")
    faces = []
    for k, fr in enumerate(faces_raw):
        fid = _require(fr, "id", f"faces[{k}]")
        verts = _require(fr, "vertices", f"faces[{k}]")
        if not isinstance(fid, str):
            raise DevelopmentFormatError(f"faces[{k}]: id must be a string")
        try:
            poly = PlanarPolygon(tuple((float(p[0]), float(p[1])) for p in verts if len(p) == 2))
        except (TypeError, ValueError, IndexError, KeyError) as exc:
            raise DevelopmentFormatError(f"faces[{k}]: bad vertex list ({exc})") from None
        if len(poly) != len(verts):
            raise DevelopmentFormatError(f"faces[{k}]: every vertex must be [x, y]")
        faces.append(Face(fid, poly))
    sizes = {}
    for f in faces:
        if f.id in sizes:
            raise DevelopmentFormatError(f"duplicate face id {f.id!r}")
        sizes[f.id] = len(f.polygon)
    gluings = []
    for k, g in enumerate(doc.get("gluings", [])):
        if not isinstance(g, (list, tuple)) or len(g) != 2:
            raise DevelopmentFormatError(f"gluings[{k}]: expected a pair of edge slots")
        gluings.append(
            (
                _slot(g[0], f"gluings[{k}][0]", sizes, "edge"),
                _slot(g[1], f"gluings[{k}][1]", sizes, "edge"),
            )
        )
    classes = []
    seen = set()
    for k, vr in enumerate(_require(doc, "vertexClasses", "document")):
        vid = _require(vr, "id", f"vertexClasses[{k}]")
        if not isinstance(vid, str):
            raise DevelopmentFormatError(f"vertexClasses[{k}]: id must be a string")
        if vid in seen:
            raise DevelopmentFormatError(f"duplicate vertex id {vid!r}")
        seen.add(vid)
        corners = tuple(
            _slot(c, f"vertexClasses[{k}].corners[{j}]", sizes, "corner")
            for j, c in enumerate(_require(vr, "corners", f"vertexClasses[{k}]"))
        )
        classes.append(VertexClass(vid, corners))
    covered = defaultdict(list)
    for vc in classes:
        for c in vc.corners:
            covered[c].append(vc.id)
    for f in faces:
        for i in range(len(f.polygon)):
            owners = covered.get((f.id, i), [])
            if len(owners) != 1:
                raise DevelopmentFormatError(
                    f"corner ({f.id!r}, {i}) belongs to {len(owners)} vertex classes"
                )
    return Development(tuple(faces), tuple(gluings), tuple(classes))


def parse_development(text: str) -> Development:
    """Parse a development document.  Geometry is not validated here."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DevelopmentFormatError(exc.msg, exc.lineno, exc.colno) from None
    return development_from_dict(doc)


def load_development(path) -> Development:
    with open(path, encoding="utf-8") as fh:
        return parse_development(fh.read())


def serialize_development(dev: Development, indent=None) -> str:
    return dev.dumps(indent=indent)


def canonical_form(dev: Development):
    """Identifier-free description used to compare developments up to renaming."""
    fid = {f.id: i for i, f in enumerate(dev.faces)}
    polys = tuple(f.polygon.vertices for f in dev.faces)
    glue = frozenset(
        frozenset(((fid[a[0]], a[1]), (fid[b[0]], b[1]))) for a, b in dev.gluings
    )
    classes = frozenset(
        frozenset((fid[f], c) for f, c in vc.corners) for vc in dev.vertex_classes
    )
    return polys, glue, classes


# ---------------------------------------------------------------------------
# validation and metric queries

def validate_development(dev: Development, eps_len: float = EPS_LEN) -> ValidationReport:
    issues = []
    tol = eps_len * max(dev.longest_edge, 1e-300)
    for f in dev.faces:
        poly = f.polygon
        if len(poly) < 3:
            issues.append(Issue("too-few-vertices", f"face {f.id!r} has {len(poly)} vertices", ((f.id,),)))
            continue
        if len(set(poly.vertices)) != len(poly):
            issues.append(Issue("repeated-vertex", f"face {f.id!r} repeats a vertex", ((f.id,),)))
        elif not poly.is_strictly_convex():
            issues.append(Issue("non-convex-face", f"face {f.id!r} is not strictly convex", ((f.id,),)))
        ids = dev.face_vertices(f.id)
        if len(set(ids)) != len(ids):
            issues.append(Issue("repeated-vertex-class", f"face {f.id!r} visits a vertex twice", ((f.id,),)))

    used = defaultdict(int)
    for a, b in dev.gluings:
        used[a] += 1
        used[b] += 1
        if a == b:
            issues.append(Issue("self-gluing", f"edge {a} glued to itself", (a,)))
    for slot, n in sorted(used.items()):
        if n > 1:
            issues.append(Issue("edge-overused", f"edge {slot} appears in {n} gluings", (slot,)))

    for a, b in dev.gluings:
        la = dev.polygon(a[0]).edge_length(a[1])
        lb = dev.polygon(b[0]).edge_length(b[1])
        if abs(la - lb) > tol:
            issues.append(
                Issue("length-mismatch", f"glued edges {a} and {b} have lengths {la!r} and {lb!r}", (a, b))
            )
        ma, mb = len(dev.polygon(a[0])), len(dev.polygon(b[0]))
        ends_a = {dev.corner_vertex[(a[0], a[1])], dev.corner_vertex[(a[0], (a[1] + 1) % ma)]}
        ends_b = {dev.corner_vertex[(b[0], b[1])], dev.corner_vertex[(b[0], (b[1] + 1) % mb)]}
        if ends_a != ends_b:
            issues.append(
                Issue("inconsistent-vertex-classes", f"gluing {a}~{b} joins different vertex classes", (a, b))
            )

    if dev.faces:
        nbrs = defaultdict(set)
        for a, b in dev.gluings:
            nbrs[a[0]].add(b[0])
            nbrs[b[0]].add(a[0])
        seen = {dev.faces[0].id}
        todo = [dev.faces[0].id]
        while todo:
            for g in nbrs[todo.pop()]:
                if g not in seen:
                    seen.add(g)
                    todo.append(g)
        if len(seen) != len(dev.faces):
            missing = tuple(sorted(f.id for f in dev.faces if f.id not in seen))
            issues.append(Issue("disconnected", f"faces {list(missing)} unreachable across glued edges", tuple((m,) for m in missing)))
    return ValidationReport(tuple(issues))


def vertex_valency(dev: Development, v) -> int:
    """Number of distinct development edges incident to ``v``."""
    dev._check_vertex(v)
    return sum(1 for ends, _ in dev.edges.values() if v in ends)


def shared_faces(dev: Development, a, b):
    dev._check_vertex(a)
    dev._check_vertex(b)
    fb = set(dev.vertex_faces[b])
    return [f for f in dev.vertex_faces[a] if f in fb]


def _corner_of(dev, face_id, v):
    return dev.face_vertices(face_id).index(v)


def cofacial_distance(dev: Development, a, b, eps_len: float = EPS_LEN) -> float:
    faces = shared_faces(dev, a, b)
    if not faces:
        raise NotCofacial(f"vertices {a!r} and {b!r} share no face")
    vals = [
        dev.polygon(f).corner_distance(_corner_of(dev, f, a), _corner_of(dev, f, b))
        for f in faces
    ]
    if max(vals) - min(vals) > eps_len * max(dev.longest_edge, 1e-300):
        raise InconsistentDistance(f"faces {faces} disagree on the distance {a!r}-{b!r}: {vals}")
    return sum(vals) / len(vals)


def cofacial_sqdist_exact(dev: Development, a, b, eps_len: float = EPS_LEN) -> Fraction:
    """Exact rational squared distance (mean over shared faces)."""
    cofacial_distance(dev, a, b, eps_len)  # raises on absence / disagreement
    faces = shared_faces(dev, a, b)
    vals = [
        dev.polygon(f).corner_sqdist_exact(_corner_of(dev, f, a), _corner_of(dev, f, b))
        for f in faces
    ]
    return sum(vals, Fraction(0)) / len(vals)


def vertex_curvature(dev: Development, v) -> float:
    dev._check_vertex(v)
    total = sum(dev.polygon(f).corner_angle(c) for f, c in dev.vertex_corners[v])
    return 2 * math.pi - total


# ---------------------------------------------------------------------------
# combinatorial correspondence

@dataclass(frozen=True)
class CombinatorialMap:
    vertex_map: Mapping = field(default_factory=dict)
    face_map: Mapping = field(default_factory=dict)
    edge_map: Mapping = field(default_factory=dict)

    @classmethod
    def identity(cls, dev: Development):
        return build_correspondence(dev, dev, {v: v for v in dev.vertices})

    def inverse(self):
        return CombinatorialMap(
            {b: a for a, b in self.vertex_map.items()},
            {b: a for a, b in self.face_map.items()},
            {b: a for a, b in self.edge_map.items()},
        )


def _edge_table(dev):
    out = {}
    for ends, slots in dev.edges.values():
        key = frozenset(ends)
        faces = frozenset(f for f, _ in slots)
        if key in out:
            out[key] = out[key] | faces
        else:
            out[key] = faces
    return out


def build_correspondence(dev: Development, dev2: Development, vertex_map: Mapping) -> CombinatorialMap:
    """Extend a vertex bijection to faces and edges, checking incidences."""
    vmap = dict(vertex_map)
    missing = [v for v in dev.vertices if v not in vmap]
    if missing:
        raise NotCombinatoriallyEquivalent(f"vertex map undefined on {missing}", ("vertex", missing[0]))
    if sorted(vmap.values()) != sorted(dev2.vertices) or len(set(vmap.values())) != len(vmap):
        raise NotCombinatoriallyEquivalent("vertex map is not a bijection", ("vertex-map", None))
    if len(dev.faces) != len(dev2.faces):
        raise NotCombinatoriallyEquivalent(
            f"face counts differ ({len(dev.faces)} vs {len(dev2.faces)})", ("face-count", None)
        )

    by_vertex_set = {}
    for f in dev2.faces:
        by_vertex_set.setdefault(frozenset(dev2.face_vertices(f.id)), []).append(f.id)
    fmap = {}
    for f in dev.faces:
        cycle = [vmap[v] for v in dev.face_vertices(f.id)]
        cands = by_vertex_set.get(frozenset(cycle), [])
        match = [g for g in cands if _same_cycle(cycle, dev2.face_vertices(g))]
        if len(match) != 1:
            raise NotCombinatoriallyEquivalent(
                f"face {f.id!r} has no unique image", ("face", f.id, tuple(cycle))
            )
        fmap[f.id] = match[0]
    if len(set(fmap.values())) != len(fmap):
        raise NotCombinatoriallyEquivalent("face map is not injective", ("face-map", None))

    e1, e2 = _edge_table(dev), _edge_table(dev2)
    if len(e1) != len(e2):
        raise NotCombinatoriallyEquivalent(
            f"edge counts differ ({len(e1)} vs {len(e2)})", ("edge-count", None)
        )
    emap = {}
    for ends, faces in e1.items():
        img = frozenset(vmap[v] for v in ends)
        if img not in e2:
            raise NotCombinatoriallyEquivalent(
                f"edge {sorted(ends)} has no image edge", ("edge", tuple(sorted(ends)))
            )
        if frozenset(fmap[f] for f in faces) != e2[img]:
            raise NotCombinatoriallyEquivalent(
                f"edge {sorted(ends)} has different incident faces in the image",
                ("edge-faces", tuple(sorted(ends))),
            )
        emap[tuple(sorted(ends))] = tuple(sorted(img))
    return CombinatorialMap(vmap, fmap, emap)


def _same_cycle(a, b):
    if len(a) != len(b):
        return False
    n = len(a)
    if n == 0:
        return True
    try:
        k = list(b).index(a[0])
    except ValueError:
        return False
    fwd = all(a[i] == b[(k + i) % n] for i in range(n))
    bwd = all(a[i] == b[(k - i) % n] for i in range(n))
    return fwd or bwd


def corner_correspondence(dev, dev2, cmap: CombinatorialMap, face_id):
    """Corner index permutation taking face ``face_id`` onto its image."""
    src = dev.face_vertices(face_id)
    dst = list(dev2.face_vertices(cmap.face_map[face_id]))
    return [dst.index(cmap.vertex_map[v]) for v in src]


def parse_vertex_map(text: str) -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DevelopmentFormatError(exc.msg, exc.lineno, exc.colno) from None
    vm = doc.get("vertexMap", doc) if isinstance(doc, dict) else None
    if not isinstance(vm, dict) or not all(
        isinstance(k, str) and isinstance(v, str) for k, v in vm.items()
    ):
        raise DevelopmentFormatError("map document must be {\"vertexMap\": {id: id, ...}}")
    return dict(vm)


def from_face_cycles(polygons: Mapping, cycles: Mapping) -> Development:
    """Build a development from face polygons and their vertex-id cycles.

    Gluings are inferred by matching unordered vertex pairs of face sides;
    a pair shared by more than two sides is rejected.
    """
    faces = tuple(Face(fid, PlanarPolygon(polygons[fid])) for fid in cycles)
    sides = defaultdict(list)
    corners = defaultdict(list)
    for fid, cyc in cycles.items():
        m = len(cyc)
        for i in range(m):
            sides[frozenset((cyc[i], cyc[(i + 1) % m]))].append((fid, i))
            corners[cyc[i]].append((fid, i))
    gluings = []
    for key, slots in sides.items():
        if len(slots) > 2:
            raise AffineDevError(f"edge {sorted(key)} shared by more than two faces")
        if len(slots) == 2:
            gluings.append((slots[0], slots[1]))
    classes = tuple(VertexClass(v, tuple(cs)) for v, cs in corners.items())
    return Development(faces, tuple(gluings), classes)
