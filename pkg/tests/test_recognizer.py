import json

import numpy as np
import pytest

from _support import affine_pair, dev_pair
from affinedev.oracle import bipyramid, cube, generate
from affinedev.recognizer import RecognizerConfig, recognize, report, report_json, summary
from affinedev.verdict import CONDITIONAL, CONVEXITY_HYPOTHESIS, INCONCLUSIVE, NOT_AFFINE


@pytest.fixture(scope="module")
def octa_pair():
    rng = np.random.default_rng(3)
    return affine_pair(bipyramid(4), rng)


@pytest.fixture(scope="module")
def octa_verdict(octa_pair):
    P, Q, _ = octa_pair
    return recognize(*dev_pair(P, Q))


def test_affine_octahedra_give_certified_alpha(octa_pair, octa_verdict):
    A = octa_pair[2]
    v = octa_verdict
    assert v.kind == INCONCLUSIVE and v.stage == "patches"
    assert all(r.status == "Certified" for r in v.evidence)
    assert A.det**2 in v.alpha_intersection
    lo, hi = v.alpha_intersection.hull()
    assert (hi - lo) / A.det**2 < 1e-6


def test_star_windows_reuse_one_solve(octa_verdict):
    by_vertex = {}
    for r in octa_verdict.evidence:
        by_vertex.setdefault(r.vertex, []).append(r)
    for recs in by_vertex.values():
        assert len(recs) == 4
        assert sum(r.same_as is None for r in recs) == 1
        assert len({r.alpha_set for r in recs}) == 1


def test_perturbed_pair_is_not_affine():
    d1, d2 = dev_pair(bipyramid(3), bipyramid(3, perturbed_edge=1.5))
    v = recognize(d1, d2)
    assert v.kind == NOT_AFFINE
    assert v.detail["witness"]["patches"]
    assert any(r.status == "Skipped" for r in v.evidence)
    doc = report(v)
    assert doc["verdict"] == NOT_AFFINE and doc["alphaIntersection"] == []


def test_symmetric_mode_agrees():
    d1, d2 = dev_pair(bipyramid(3), bipyramid(3, perturbed_edge=1.5))
    v = recognize(d1, d2, cfg=RecognizerConfig(symmetric=True))
    assert v.kind == NOT_AFFINE


def test_cube_images_are_conditional_with_valency3_evidence():
    rng = np.random.default_rng(8)
    P, Q, A = affine_pair(cube(), rng)
    v = recognize(*dev_pair(P, Q))
    assert v.kind == CONDITIONAL and v.stage == "simple"
    assert len(v.evidence) == 8 and A.det**2 in v.alpha_intersection
    assert report(v)["hypothesis"] == CONVEXITY_HYPOTHESIS
    assert "AffineEquivalentConditional" in summary(v)


def test_report_is_stable_and_timings_optional(octa_pair):
    P, Q, _ = octa_pair
    d1, d2 = dev_pair(P, Q)
    a = report_json(recognize(d1, d2))
    b = report_json(recognize(d1, d2))
    assert a == b
    doc = json.loads(a)
    assert doc["timings"] is None
    timed = json.loads(report_json(recognize(d1, d2), timings=True))
    assert timed["timings"]["total"] >= 0


def test_jobs_do_not_change_the_report():
    rng = np.random.default_rng(4)
    P, Q, _ = affine_pair(generate("antiprism", n=3), rng)
    d1, d2 = dev_pair(P, Q)
    one = report_json(recognize(d1, d2, cfg=RecognizerConfig(jobs=1)))
    two = report_json(recognize(d1, d2, cfg=RecognizerConfig(jobs=2)))
    assert one == two


def test_box_budget_skips_remaining_patches():
    rng = np.random.default_rng(6)
    P, Q, _ = affine_pair(bipyramid(4), rng)
    v = recognize(*dev_pair(P, Q), cfg=RecognizerConfig(max_total_boxes=1))
    statuses = {r.status for r in v.evidence}
    assert "Skipped" in statuses and v.kind == INCONCLUSIVE
    assert v.detail["notCertified"]
