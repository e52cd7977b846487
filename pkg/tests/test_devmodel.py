import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from affinedev.devmodel import (
    CombinatorialMap,
    build_correspondence,
    canonical_form,
    cofacial_distance,
    development_from_dict,
    parse_development,
    parse_vertex_map,
    serialize_development,
    validate_development,
    vertex_curvature,
    vertex_valency,
)
from affinedev.errors import DevelopmentFormatError, NotCofacial, NotCombinatoriallyEquivalent, UnknownVertex
from affinedev.oracle import bipyramid, cube, extract_development, generate, trapezohedron

KINDS = st.sampled_from([("bipyramid", 3), ("bipyramid", 5), ("prism", 3), ("prism", 6), ("antiprism", 4),
                         ("trapezohedron", 4), ("cube", None)])


def make(kind, n):
    return generate(kind) if n is None else generate(kind, n=n)


def test_cube_development_is_valid_and_closed():
    dev = extract_development(cube())[0]
    assert validate_development(dev).ok
    assert dev.is_closed
    assert len(dev.faces) == 6 and len(dev.vertices) == 8
    assert all(vertex_valency(dev, v) == 3 for v in dev.vertices)


@given(KINDS)
def test_total_curvature_is_four_pi(kind):
    dev = extract_development(make(*kind))[0]
    total = sum(vertex_curvature(dev, v) for v in dev.vertices)
    assert total == pytest.approx(4 * math.pi, abs=1e-9)


@given(KINDS)
def test_euler_characteristic(kind):
    dev = extract_development(make(*kind))[0]
    assert len(dev.vertices) - len(dev.edges) + len(dev.faces) == 2


@given(KINDS)
def test_serialization_round_trip(kind):
    dev = extract_development(make(*kind))[0]
    again = parse_development(serialize_development(dev))
    assert canonical_form(again) == canonical_form(dev)
    assert serialize_development(again) == serialize_development(dev)


def test_cofacial_distance_matches_embedding():
    P = trapezohedron(5)
    dev = extract_development(P)[0]
    for f in dev.faces:
        ids = dev.face_vertices(f.id)
        for a in ids:
            for b in ids:
                want = np.linalg.norm(np.subtract(P.vertices[a], P.vertices[b]))
                assert cofacial_distance(dev, a, b) == pytest.approx(want, abs=1e-12)


def test_cofacial_distance_errors():
    dev = extract_development(bipyramid(4))[0]
    with pytest.raises(NotCofacial):
        cofacial_distance(dev, "n", "s")
    with pytest.raises(UnknownVertex):
        cofacial_distance(dev, "n", "nowhere")


def test_validation_reports_length_mismatch_and_disconnection():
    doc = extract_development(cube())[0].to_dict()
    doc["faces"][0]["vertices"][0] = [x + 0.25 for x in doc["faces"][0]["vertices"][0]]
    rep = validate_development(development_from_dict(doc))
    assert "length-mismatch" in rep.kinds()
    doc = extract_development(cube())[0].to_dict()
    doc["gluings"] = []
    kinds = validate_development(development_from_dict(doc)).kinds()
    assert "disconnected" in kinds
    assert validate_development(development_from_dict(doc)).to_dict()["valid"] is False


def test_validation_reports_non_convex_face():
    doc = extract_development(cube())[0].to_dict()
    doc["faces"][0]["vertices"] = [[0, 0], [1, 0], [0.5, 0.1], [0, 1]]
    assert "non-convex-face" in validate_development(development_from_dict(doc)).kinds()


@pytest.mark.parametrize(
    "text",
    [
        "not json",
        "{}",
        json.dumps({"faces": [{"id": "a", "vertices": [[0, 0], [1, 0], [0, 1]]}], "vertexClasses": []}),
        json.dumps({"faces": [{"id": 1, "vertices": []}], "vertexClasses": []}),
        json.dumps({"faces": [{"id": "a", "vertices": [[0, 0], [1, 0], [0, 1]]}],
                    "gluings": [[["b", 0], ["a", 1]]], "vertexClasses": []}),
    ],
)
def test_malformed_documents_raise(text):
    with pytest.raises(DevelopmentFormatError):
        parse_development(text)


def test_correspondence_follows_relabelling():
    dev = extract_development(cube())[0]
    doc = dev.to_dict()
    rename = {v: v.upper() for v in dev.vertices}
    for vc in doc["vertexClasses"]:
        vc["id"] = rename[vc["id"]]
    dev2 = development_from_dict(doc)
    cmap = build_correspondence(dev, dev2, rename)
    assert set(cmap.face_map.values()) == {f.id for f in dev2.faces}
    assert len(cmap.edge_map) == 12
    back = cmap.inverse()
    assert back.vertex_map["B0"] == "b0"
    assert CombinatorialMap.identity(dev).vertex_map == {v: v for v in dev.vertices}


def test_correspondence_rejects_mismatched_combinatorics():
    dev = extract_development(cube())[0]
    with pytest.raises(NotCombinatoriallyEquivalent):
        build_correspondence(dev, dev, {"b0": "b1", "b1": "b0", **{v: v for v in dev.vertices if v not in ("b0", "b1")}})
    other = extract_development(generate("prism", n=5))[0]
    with pytest.raises(NotCombinatoriallyEquivalent):
        build_correspondence(dev, other, {v: v for v in dev.vertices})


def test_parse_vertex_map_formats():
    assert parse_vertex_map('{"vertexMap": {"a": "b"}}') == {"a": "b"}
    assert parse_vertex_map('{"a": "b"}') == {"a": "b"}
    with pytest.raises(DevelopmentFormatError):
        parse_vertex_map('{"vertexMap": {"a": 1}}')
    with pytest.raises(DevelopmentFormatError):
        parse_vertex_map("[")


def test_star_of_a_cube_corner():
    dev = extract_development(cube())[0]
    star = dev.star("b0")
    assert star.cyclic and len(star) == 3
    assert sorted(star.neighbors) == ["b1", "b3", "t0"]
