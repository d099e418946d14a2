import pytest

from src.atcore import (ADJACENT_CROSSING_PAIR, BLUE, PURPLE, RED, ATGraph, Graph, build_crossing_graph,
                        certificate_to_json, check_certificate, classify_components, instance_to_json,
                        lambda_of, load_certificate, load_instance, validate)
from src.errors import ComponentTooLarge, MalformedCertificate, MalformedInstance
from src.planted import pattern_instance


def at_graph(edges, crossings=()):
    vertices = sorted({x for _, u, v in edges for x in (u, v)})
    return ATGraph(Graph.build(vertices, edges), frozenset(frozenset(p) for p in crossings))


QUAD = [("s0", "0", "1"), ("s1", "1", "2"), ("s2", "2", "3"), ("s3", "3", "0"),
        ("d0", "0", "2"), ("d1", "1", "3")]


def test_graph_rejects_self_loop_and_parallel_edges():
    with pytest.raises(MalformedInstance):
        Graph.build(["a"], [("e", "a", "a")])
    with pytest.raises(MalformedInstance):
        Graph.build(["a", "b"], [("e", "a", "b"), ("f", "b", "a")])
    g = Graph.build(["a", "b"], [("e", "a", "b"), ("f", "b", "a")], simple=False)
    assert g.degree("a") == 2


def test_graph_rejects_undeclared_endpoint_and_duplicate_ids():
    with pytest.raises(MalformedInstance):
        Graph.build(["a"], [("e", "a", "b")])
    with pytest.raises(MalformedInstance):
        Graph.build(["a", "b", "c"], [("e", "a", "b"), ("e", "b", "c")])


def test_crossing_pair_must_name_known_edges():
    g = Graph.build(["a", "b"], [("e", "a", "b")])
    with pytest.raises(MalformedInstance):
        ATGraph(g, frozenset([frozenset(("e", "zz"))]))


def test_json_round_trip_normalizes_ids_to_strings():
    data = {"vertices": [1, 2, 3], "edges": [{"id": 7, "u": 1, "v": 2}, {"id": 8, "u": 2, "v": 3}],
            "crossings": []}
    a = load_instance(data)
    assert a.graph.vertices == ("1", "2", "3")
    assert instance_to_json(a)["edges"][0] == {"id": "7", "u": "1", "v": "2"}


def test_duplicate_crossing_pair_is_malformed():
    data = {"vertices": ["a", "b", "c", "d"],
            "edges": [{"id": "e", "u": "a", "v": "b"}, {"id": "f", "u": "c", "v": "d"}],
            "crossings": [["e", "f"], ["f", "e"]]}
    with pytest.raises(MalformedInstance):
        load_instance(data)


def test_adjacent_crossing_pair_is_a_no():
    a = at_graph([("e", "a", "b"), ("f", "b", "c")], [("e", "f")])
    assert validate(a) == ADJACENT_CROSSING_PAIR
    assert validate(at_graph(QUAD, [("d0", "d1")])) is None


def test_classification_and_colouring():
    k3 = at_graph([("p", "0", "3"), ("q", "1", "4"), ("t", "2", "5")],
                  [("p", "q"), ("p", "t"), ("q", "t")])
    (comp,) = classify_components(build_crossing_graph(k3))
    assert comp.kind == "K3"
    assert sorted(comp.colors.values()) == sorted([RED, BLUE, PURPLE])

    p3 = at_graph([("m", "0", "3"), ("r", "1", "5"), ("b", "2", "4")], [("m", "r"), ("m", "b")])
    (comp,) = classify_components(build_crossing_graph(p3))
    assert comp.kind == "P3"
    assert comp.colors["m"] == PURPLE
    assert lambda_of(p3) == 3


def test_component_above_three_is_too_large():
    edges = [(f"e{i}", f"a{i}", f"b{i}") for i in range(4)]
    a = at_graph(edges, [("e0", "e1"), ("e1", "e2"), ("e2", "e3")])
    assert lambda_of(a) == 4
    with pytest.raises(ComponentTooLarge):
        classify_components(build_crossing_graph(a))


def test_lambda_of_crossing_free_instance_is_one():
    a = at_graph([("e", "a", "b"), ("f", "b", "c")])
    assert lambda_of(a) == 1


def test_pattern_certificate_is_accepted():
    a, w = pattern_instance("K2")
    assert check_certificate(a, w)
    assert check_certificate(a, load_certificate(certificate_to_json(w)))


def test_tampered_certificate_is_rejected():
    a, w = pattern_instance("K2")
    (dummy, _), = w.dummies
    rot = list(w.rotations[dummy])
    rot[1], rot[2] = rot[2], rot[1]
    tampered = load_certificate(certificate_to_json(w))
    tampered.rotations[dummy] = tuple(rot)
    assert not check_certificate(a, tampered)


def test_certificate_missing_a_crossing_is_rejected():
    a, w = pattern_instance("K2")
    data = certificate_to_json(w)
    data["dummies"] = []
    with pytest.raises(MalformedCertificate):
        check_certificate(a, load_certificate(data))
