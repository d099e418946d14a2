import random

import networkx as nx
import pytest

from src.atcore import build_crossing_graph, check_certificate, classify_components, instance_to_json, lambda_of, validate
from src.planted import (PATTERNS, UNKNOWN_LABEL, YES_LABEL, StackedTriangulation, _Planting, generate, mutate,
                         pattern_instance, planted_yes, random_host)


@pytest.mark.parametrize("kind", PATTERNS)
def test_pattern_drawings_exist(kind):
    a, w = pattern_instance(kind)
    assert len(w.dummies) == {"K2": 1, "P3": 2, "K3": 3}[kind]
    assert check_certificate(a, w)
    (comp,) = classify_components(build_crossing_graph(a))
    assert comp.kind == kind


def test_stacked_host_is_a_planar_triangulation():
    tri = random_host(40, random.Random(1))
    g = tri.graph()
    assert g.number_of_nodes() == 40
    assert g.number_of_edges() == 3 * 40 - 6
    assert nx.check_planarity(g)[0]
    assert all(tri.owner[(a, b)] == k for k, (a, b, _) in enumerate(tri.faces))


def test_across_returns_the_neighbouring_face():
    tri = StackedTriangulation()
    n = tri.stack(0)
    k, w = tri.across(0, 1)
    assert w == 2
    assert set(tri.faces[k]) == {0, 1, 2}
    assert n == 3


def test_plants_use_disjoint_faces():
    rng = random.Random(4)
    planting = _Planting(random_host(60, rng))
    for _ in range(200):
        planting.plant(rng.choice(PATTERNS), rng)
    assert len(planting.kinds) >= 3
    a = planting.instance()
    kinds = sorted(c.kind for c in classify_components(build_crossing_graph(a)))
    assert kinds == sorted(planting.kinds)


def test_planted_yes_carries_a_valid_certificate():
    a, w = planted_yes(25, random.Random(5))
    assert len(a.graph.vertices) >= 25
    assert lambda_of(a) <= 3
    assert validate(a) is None
    assert a.crossings
    assert check_certificate(a, w)


def test_generation_is_seeded():
    first = [instance_to_json(p.instance) for p in generate(3, size=12, seed=9)]
    second = [instance_to_json(p.instance) for p in generate(3, size=12, seed=9)]
    assert first == second


def test_labels_follow_mutation():
    batch = generate(12, size=10, seed=2, mutation_rate=0.5)
    for p in batch:
        assert lambda_of(p.instance) <= 3
        if p.label == YES_LABEL:
            assert check_certificate(p.instance, p.certificate)
        else:
            assert p.label == UNKNOWN_LABEL
            assert p.certificate is None
    assert all(p.label == YES_LABEL for p in generate(5, size=10, seed=2, mutation_rate=0.0))
    assert all(p.label == UNKNOWN_LABEL for p in generate(5, size=10, seed=2, mutation_rate=1.0))


def test_mutation_changes_one_pair():
    a, _ = planted_yes(15, random.Random(11))
    b = mutate(a, random.Random(3))
    assert len(a.crossings ^ b.crossings) == 1
    assert lambda_of(b) <= 3
    assert validate(b) is None


def test_bad_mutation_rate():
    with pytest.raises(ValueError):
        generate(1, mutation_rate=1.5)
