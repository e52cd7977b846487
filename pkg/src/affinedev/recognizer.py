"""Vertex-by-vertex recognition of affine non-equivalence.

Every patch pair yields an outer enclosure of the admissible values of
``(det A)^2``; if the enclosures of the certified patches have empty
intersection, no affine map can take one polyhedron onto the other.

Work proceeds in waves so that results never depend on scheduling:

1. valency-3 patches, which are exact and need no solver;
2. the first valency-4 patch, searched over the whole alpha range;
3. the remaining valency-4 patches, each searched only inside the hull
   of the running intersection;
4. the same two waves for valency five and more.

Restricting a search to a window ``W`` yields an enclosure of the true
set intersected with ``W``.  Each window is built from sound covers, so
it holds the true alpha of any affine pair, and that alpha therefore
survives in every certified enclosure.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction

from . import interval as iv
from .devmodel import CombinatorialMap, Development, build_correspondence
from .errors import Unrealizable
from .patchsys import (
    FREE_SLOTS,
    N3,
    N4,
    N5PLUS,
    corresponding_patch,
    enumerate_patches,
    patch_distances,
    patch_scalar_n3,
    patch_system,
)
from .simplepath import simple_affine_verdict
from .solver import (
    AlphaSet,
    SolverConfig,
    alpha_cover,
    feasible_box,
    intersect_alpha_sets,
    project_alpha,
    solve_positive,
)
from .verdict import CONDITIONAL, CONVEXITY_HYPOTHESIS, INCONCLUSIVE, NOT_AFFINE, Verdict

CERTIFIED, INCOMPLETE, SKIPPED = "Certified", "Incomplete", "Skipped"


@dataclass(frozen=True)
class PatchRecord:
    vertex: str
    window: int
    valency_class: str
    alpha_set: AlphaSet
    status: str
    residual: float = None
    side: str = "P"
    solver: str = ""
    boxes: int = 0
    alpha_window: tuple = None
    cover: AlphaSet = field(default=None, compare=False)
    seconds: float = field(default=0.0, compare=False)
    same_as: tuple = None  # (vertex, window) of the patch whose solve is reused

    @property
    def key(self):
        return (0 if self.side == "P" else 1, self.vertex, self.window)

    def to_dict(self, timings=False):
        d = {
            "vertex": self.vertex,
            "window": self.window,
            "valencyClass": self.valency_class,
            "alphaSet": self.alpha_set.to_list(),
            "status": self.status,
            "residual": self.residual,
        }
        if self.side != "P":
            d["side"] = self.side
        if self.solver:
            d["solver"] = self.solver
            d["boxes"] = self.boxes
        if self.alpha_window is not None:
            d["alphaWindow"] = list(self.alpha_window)
        if self.same_as is not None:
            d["sameAs"] = {"vertex": self.same_as[0], "window": self.same_as[1]}
        if timings:
            d["seconds"] = self.seconds
        return d


@dataclass(frozen=True)
class RecognizerConfig:
    solver: SolverConfig = SolverConfig()
    symmetric: bool = False
    jobs: int = 1
    eps_aff: float = 1e-9
    max_total_boxes: int = 400000  # solver boxes over all patches before the rest are skipped
    # Valency-5+ systems carry a flat-unfolding solution for every alpha, so a
    # long search there cannot narrow anything; this caps the effort per patch.
    n5_max_boxes: int = 150


# ---------------------------------------------------------------------------
# single patches (top-level so worker processes can run them)

def _inflate_rel(x: Fraction, rel):
    lo = iv.from_fraction(x * (1 - Fraction(rel)))[0]
    hi = iv.from_fraction(x * (1 + Fraction(rel)))[1]
    return lo, hi


def alpha_set_n3(zd, zd2, cfg: SolverConfig):
    """Valency-3 alpha set: the ratio of tetrahedron values, widened by ``eps_res``."""
    q, q2 = patch_scalar_n3(zd, zd2)
    if q < 0 or q2 < 0:
        raise Unrealizable(
            f"valency-3 patch at {zd.patch.center!r} has a negative tetrahedron value"
        )
    if q == 0 and q2 == 0:
        # two flat stars: the patch says nothing about alpha
        return AlphaSet(((1.0 / cfg.alpha_bound, cfg.alpha_bound),), True)
    if q == 0 or q2 == 0:
        # an affine map never flattens a proper tetrahedron
        return AlphaSet((), True)
    return AlphaSet((_inflate_rel(Fraction(q2) / Fraction(q), cfg.eps_res),), True)


def patch_task(zd, zd2, cfg: SolverConfig, window=None):
    """Solve one valency-4+ patch pair, ``alpha`` restricted to ``window``."""
    t0 = time.perf_counter()
    system = patch_system(zd, zd2, flat=True)
    box = feasible_box(system, cfg=cfg)
    if window is not None:
        k = system.alpha_index
        s = float(system.scales[k])
        lo = max(box[k][0], iv.down(window[0] / s))
        hi = min(box[k][1], iv.up(window[1] / s))
        box[k] = (lo, max(lo, hi))
    result = solve_positive(system, box, cfg)
    aset = project_alpha(result, cfg)
    return PatchRecord(
        vertex=zd.patch.center,
        window=zd.patch.window,
        valency_class=zd.valency_class,
        alpha_set=aset,
        status=CERTIFIED if aset.certified else INCOMPLETE,
        residual=result.residual,
        solver=result.kind,
        boxes=int(result.stats.get("boxes", 0)),
        alpha_window=tuple(window) if window is not None else None,
        cover=alpha_cover(result, cfg),
        seconds=time.perf_counter() - t0,
    )


def _run_task(args):
    zd, zd2, cfg, window, side = args
    rec = patch_task(zd, zd2, cfg, window)
    if side != "P":
        rec = replace(rec, side=side, alpha_set=rec.alpha_set.inverted(), cover=rec.cover.inverted())
    return rec


# ---------------------------------------------------------------------------

def _patch_pairs(dev, dev2, cmap, side):
    out = []
    for v in sorted(dev.vertices):
        for z in enumerate_patches(dev, v):
            z2 = corresponding_patch(z, cmap)
            out.append((side, z, patch_distances(dev, z), patch_distances(dev2, z2)))
    return out


def _system_key(side, z):
    """Patches on the same points with the same free pairs pose one system up to renaming.

    The four windows of a valency-4 star are an example: each uses the
    centre, all four neighbours and the same two diagonals.
    """
    pts = z.points
    free = frozenset(frozenset((pts[i], pts[j])) for i, j in FREE_SLOTS[z.valency_class])
    return side, z.valency_class, tuple(sorted(pts)), free


def _window(cover):
    h = cover.hull()
    return None if h is None else h


def _certified_empty(records):
    acc = None
    for r in records:
        if r.status != CERTIFIED:
            continue
        acc = r.alpha_set if acc is None else acc.intersect(r.alpha_set)
        if acc.empty:
            return True
    return False


def _witness(records):
    """Two disjoint certified alpha sets, or the set that emptied the running intersection."""
    cert = [r for r in records if r.status == CERTIFIED]
    for i, a in enumerate(cert):
        for b in cert[i + 1:]:
            if a.alpha_set.intersect(b.alpha_set).empty:
                return {
                    "patches": [_ref(a), _ref(b)],
                    "alphaSets": [a.alpha_set.to_list(), b.alpha_set.to_list()],
                }
    acc = None
    for r in cert:
        nxt = r.alpha_set if acc is None else acc.intersect(r.alpha_set)
        if nxt.empty:
            return {"patches": [_ref(r)], "alphaSets": [acc.to_list(), r.alpha_set.to_list()]}
        acc = nxt
    return None


def _intersection(records):
    return intersect_alpha_sets(r.alpha_set for r in records)


def _ref(r):
    d = {"vertex": r.vertex, "window": r.window}
    if r.side != "P":
        d["side"] = r.side
    return d


def recognize(dev: Development, dev2: Development, cmap: CombinatorialMap = None,
              cfg: RecognizerConfig = RecognizerConfig()) -> Verdict:
    if isinstance(cfg, SolverConfig):
        cfg = RecognizerConfig(solver=cfg)
    scfg = cfg.solver
    t_start = time.perf_counter()
    if cmap is None:
        cmap = build_correspondence(dev, dev2, {v: v for v in dev.vertices})
    timings = {}

    fast = simple_affine_verdict(dev, dev2, cmap, cfg.eps_aff)
    timings["fastPath"] = time.perf_counter() - t_start
    if fast.kind == NOT_AFFINE:
        return Verdict(fast.kind, AlphaSet((), True), (), fast.stage, dict(fast.detail), timings)

    pairs = _patch_pairs(dev, dev2, cmap, "P")
    if cfg.symmetric:
        pairs += _patch_pairs(dev2, dev, cmap.inverse(), "P'")
    by_class = {N3: [], N4: [], N5PLUS: []}
    for item in pairs:
        by_class[item[1].valency_class].append(item)

    records = []
    covers = []

    def running():
        acc = AlphaSet(((1.0 / scfg.alpha_bound, scfg.alpha_bound),), False)
        for c in covers:
            acc = acc.intersect(c)
        return acc

    t0 = time.perf_counter()
    for side, z, zd, zd2 in by_class[N3]:
        aset = alpha_set_n3(zd, zd2, scfg)
        if side != "P":
            aset = aset.inverted()
        records.append(PatchRecord(z.center, z.window, N3, aset, CERTIFIED, 0.0, side))
        covers.append(aset)
    timings["valency3"] = time.perf_counter() - t0

    if fast.kind == CONDITIONAL:
        # the valency-3 sets come for free and document the scale of the map
        records.sort(key=lambda r: r.key)
        inter = _intersection(records) if records else AlphaSet((), False)
        timings["total"] = time.perf_counter() - t_start
        return Verdict(fast.kind, inter, tuple(records), fast.stage, dict(fast.detail), timings)

    waves = []
    for cls in (N4, N5PLUS):
        items = by_class[cls]
        if items:
            waves.append((cls, items[:1]))
            waves.append((cls, items[1:]))
    total_boxes = 0
    solved = {}
    pool = ProcessPoolExecutor(cfg.jobs) if cfg.jobs > 1 else None
    try:
        for cls, wave in waves:
            if not wave:
                continue
            stop = _certified_empty(records) or total_boxes >= cfg.max_total_boxes
            if stop:
                for side, z, _, _ in wave:
                    records.append(PatchRecord(z.center, z.window, z.valency_class, AlphaSet((), False), SKIPPED, None, side))
                continue
            win = _window(running())
            if win is None:
                # covers already disjoint: only uncertified sets can be behind this
                win = (1.0 / scfg.alpha_bound, 1.0 / scfg.alpha_bound)
            tasks, keys = [], []
            for side, z, zd, zd2 in wave:
                key = _system_key(side, z)
                if key in solved or key in keys:
                    continue
                w = win if side == "P" else (1.0 / win[1], 1.0 / win[0] if win[0] > 0 else math.inf)
                if not math.isfinite(w[1]):
                    w = (w[0], scfg.alpha_bound)
                pcfg = scfg
                if cls == N5PLUS:
                    pcfg = replace(scfg, max_boxes=min(scfg.max_boxes, cfg.n5_max_boxes))
                tasks.append((zd, zd2, pcfg, w, side))
                keys.append(key)
            t0 = time.perf_counter()
            done = list(pool.map(_run_task, tasks)) if pool and len(tasks) > 1 else [_run_task(t) for t in tasks]
            for key, rec in zip(keys, done):
                solved[key] = rec
                covers.append(rec.cover)
                total_boxes += rec.boxes
            for side, z, _, _ in wave:
                rec = solved[_system_key(side, z)]
                if (rec.vertex, rec.window) != (z.center, z.window) or rec.side != side:
                    rec = replace(rec, vertex=z.center, window=z.window, seconds=0.0, same_as=(rec.vertex, rec.window))
                records.append(rec)
            timings.setdefault("solve", 0.0)
            timings["solve"] += time.perf_counter() - t0
    finally:
        if pool:
            pool.shutdown()

    records.sort(key=lambda r: r.key)
    considered = [r for r in records if r.status != SKIPPED]
    inter = _intersection(considered) if considered else AlphaSet((), False)
    detail = {}
    if _certified_empty(records):
        kind = NOT_AFFINE
        detail["witness"] = _witness(records)
        inter = AlphaSet((), True)
    else:
        kind = INCONCLUSIVE
        flagged = [_ref(r) for r in records if r.status != CERTIFIED]
        if flagged:
            detail["notCertified"] = flagged
    timings["total"] = time.perf_counter() - t_start
    return Verdict(kind, inter, tuple(records), "patches", detail, timings)


# ---------------------------------------------------------------------------
# reports

def report(verdict: Verdict, timings=False) -> dict:
    """Evidence document; identical inputs give identical documents unless ``timings``."""
    doc = {
        "verdict": verdict.kind,
        "stage": verdict.stage,
        "alphaIntersection": verdict.alpha_intersection.to_list(),
        "certified": bool(verdict.alpha_intersection.certified),
        "patches": [r.to_dict(timings) if isinstance(r, PatchRecord) else r for r in verdict.evidence],
        "timings": dict(verdict.timings) if timings else None,
    }
    for k, v in verdict.detail.items():
        doc[k] = v
    if verdict.kind == CONDITIONAL:
        doc["hypothesis"] = CONVEXITY_HYPOTHESIS
    return doc


def report_json(verdict: Verdict, timings=False) -> str:
    return json.dumps(report(verdict, timings), indent=2, sort_keys=True, allow_nan=False, default=_jsonable) + "\n"


def _jsonable(x):
    if isinstance(x, Fraction):
        return float(x)
    raise TypeError(f"not serializable: {type(x).__name__}")


def summary(verdict: Verdict) -> str:
    lines = [f"verdict: {verdict.kind} (stage: {verdict.stage})"]
    if verdict.kind == CONDITIONAL:
        lines.append(CONVEXITY_HYPOTHESIS)
    if verdict.evidence:
        counts = {}
        for r in verdict.evidence:
            counts[r.status] = counts.get(r.status, 0) + 1
        lines.append("patches: " + ", ".join(f"{k} {v}" for k, v in sorted(counts.items())))
        ai = verdict.alpha_intersection.to_list()
        lines.append(f"alpha intersection: {ai if ai else 'empty'}")
    w = verdict.detail.get("witness")
    if w:
        lines.append(f"witness: {w['patches']} with alpha sets {w['alphaSets']}")
    return "\n".join(lines)
