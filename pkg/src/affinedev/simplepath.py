"""Face-level verdicts: the per-face affine screen and the valency-3 fast path.

Affine equivalence of two polyhedra forces corresponding faces to be
affinely equivalent polygons, so one failing face pair settles the
question negatively.  When every face pair passes and the development
is simple (valency three everywhere), or carries an edge path through
valency-3 vertices touching every face, the face maps glue into one
affine map; that conclusion still assumes both solids strictly convex
and closed.
"""

from __future__ import annotations

from dataclasses import dataclass

from .cmgeom import polygon_affine_equivalent
from .devmodel import CombinatorialMap, Development, corner_correspondence, vertex_valency
from .errors import DegenerateBase, NotClosed
from .verdict import CONDITIONAL, CONVEXITY_HYPOTHESIS, INCONCLUSIVE, NOT_AFFINE, Verdict

MAX_NODES = 10**6


@dataclass(frozen=True)
class EdgePath:
    vertices: tuple

    @property
    def edges(self):
        return tuple(zip(self.vertices, self.vertices[1:]))

    def __len__(self):
        return max(len(self.vertices) - 1, 0)


def _require_closed(dev):
    if not dev.is_closed:
        raise NotClosed("the development has unglued sides")


def is_simple_development(dev: Development) -> bool:
    _require_closed(dev)
    return all(vertex_valency(dev, v) == 3 for v in dev.vertices)


def covers_all_faces(dev: Development, path: EdgePath) -> bool:
    """Independent check of both path conditions."""
    adj = dev.adjacency
    if not path.vertices:
        return False
    if any(vertex_valency(dev, v) != 3 for v in path.vertices):
        return False
    if any(b not in adj[a] for a, b in path.edges):
        return False
    edges = [frozenset(e) for e in path.edges]
    if len(set(edges)) != len(edges):
        return False
    touched = set()
    for v in path.vertices:
        touched.update(dev.vertex_faces[v])
    return touched == {f.id for f in dev.faces}


def find_gamma_path(dev: Development, max_nodes=MAX_NODES):
    """Shortest simple path through valency-3 vertices touching every face.

    Iterative deepening over the path length, starting vertices and
    neighbours in id order, so the answer is deterministic.  Returns
    ``None`` when no path exists or the node budget runs out.
    """
    _require_closed(dev)
    cubic = sorted(v for v in dev.vertices if vertex_valency(dev, v) == 3)
    if not cubic:
        return None
    all_faces = frozenset(f.id for f in dev.faces)
    vf = {v: frozenset(dev.vertex_faces[v]) for v in cubic}
    cubic_set = set(cubic)
    nbrs = {v: sorted(w for w in dev.adjacency[v] if w in cubic_set) for v in cubic}
    if frozenset().union(*vf.values()) != all_faces:
        return None
    nodes = 0

    def extend(path, seen, covered, budget):
        nonlocal nodes
        nodes += 1
        if nodes > max_nodes:
            raise StopIteration
        if covered == all_faces:
            return list(path)
        if budget == 0:
            return None
        # a valency-3 vertex touches three faces
        if len(all_faces - covered) > 3 * budget:
            return None
        for w in nbrs[path[-1]]:
            if w in seen:
                continue
            path.append(w)
            seen.add(w)
            got = extend(path, seen, covered | vf[w], budget - 1)
            if got:
                return got
            path.pop()
            seen.discard(w)
        return None

    try:
        for length in range(len(cubic)):
            for start in cubic:
                got = extend([start], {start}, vf[start], length)
                if got:
                    return EdgePath(tuple(got))
    except StopIteration:
        return None
    return None


def face_screen(dev: Development, dev2: Development, cmap: CombinatorialMap, eps_aff=1e-9):
    """First face (in development order) whose image is not an affine copy, or ``None``."""
    for f in dev.faces:
        g = cmap.face_map[f.id]
        corr = corner_correspondence(dev, dev2, cmap, f.id)
        try:
            ok = polygon_affine_equivalent(f.polygon, dev2.polygon(g), corr, eps_aff)
        except DegenerateBase:
            continue  # no usable frame on this face; it proves nothing either way
        if ok is None:
            return f.id, g
    return None


def simple_affine_verdict(dev: Development, dev2: Development, cmap: CombinatorialMap, eps_aff=1e-9) -> Verdict:
    _require_closed(dev)
    bad = face_screen(dev, dev2, cmap, eps_aff)
    if bad is not None:
        return Verdict(NOT_AFFINE, stage="faces", detail={"face": bad[0], "image": bad[1]})
    if is_simple_development(dev):
        return Verdict(CONDITIONAL, stage="simple", detail={"hypothesis": CONVEXITY_HYPOTHESIS})
    path = find_gamma_path(dev)
    if path is not None:
        return Verdict(
            CONDITIONAL,
            stage="gamma-path",
            detail={"hypothesis": CONVEXITY_HYPOTHESIS, "path": list(path.vertices)},
        )
    return Verdict(INCONCLUSIVE, stage="fast-path")
