import itertools

import pytest

from src.atcore import Graph
from src.embedding import euler_check, planar_embedding
from src.errors import NotAdjacent, NotBiconnected
from src.spqr import (P, Q, R, S, SkeletonEmbedding, build_spqr, compose_embedding, distribution_vector, is_virtual,
                      merge_nodes)


def graph(edges):
    vertices = sorted({x for _, u, v in edges for x in (u, v)})
    return Graph.build(vertices, edges, simple=False)


def kinds(t):
    return sorted(node.kind for node in t.nodes.values() if node.kind != Q)


def k4():
    vs = "abcd"
    return graph([(u + v, u, v) for u, v in itertools.combinations(vs, 2)])


def theta():
    return graph([("sa", "s", "a"), ("at", "a", "t"), ("sb", "s", "b"), ("bt", "b", "t"),
                  ("sc", "s", "c"), ("ct", "c", "t")])


def test_cycle_is_one_s_node():
    t = build_spqr(graph([(f"e{i}", str(i), str((i + 1) % 5)) for i in range(5)]))
    assert kinds(t) == [S]


def test_k4_is_one_r_node():
    t = build_spqr(k4())
    assert kinds(t) == [R]
    assert len(t.real_edges()) == 6


def test_theta_graph_is_a_bond_with_three_cycles():
    t = build_spqr(theta())
    assert kinds(t) == [P, S, S, S]


def test_every_real_edge_sits_in_a_q_node():
    t = build_spqr(theta())
    for node in t.nodes.values():
        if node.kind != Q:
            assert all(is_virtual(e) for e in node.edges)


def test_parallel_edges_form_a_bond():
    t = build_spqr(graph([("e", "a", "b"), ("f", "a", "b"), ("g", "b", "c"), ("h", "c", "a")]))
    assert kinds(t) == [P, S]


def test_distribution_vector_at_pole():
    t = build_spqr(theta())
    (mu,) = [n for n, node in t.nodes.items() if node.kind == P]
    assert distribution_vector(t, mu, "s") == (1, 1, 1)


def test_composed_embedding_is_planar():
    t = build_spqr(theta())
    rot = compose_embedding(t)
    assert euler_check(rot)
    assert len(rot.rotations["s"]) == 3


def test_not_biconnected():
    with pytest.raises(NotBiconnected):
        build_spqr(graph([("e", "a", "b"), ("f", "b", "c")]))


def test_merging_adjacent_nodes():
    t = build_spqr(theta())
    (mu,) = [n for n, node in t.nodes.items() if node.kind == P]
    s_nodes = [n for n, node in t.nodes.items() if node.kind == S]
    merged = merge_nodes(t, mu, s_nodes[0])
    assert len(kinds(merged)) == 3
    assert kinds(t) == [P, S, S, S]
    with pytest.raises(NotAdjacent):
        merge_nodes(t, s_nodes[0], s_nodes[1])


def two_k4s():
    # K4 on abcd and a second K4 on abxy without its own ab edge
    return graph([(u + v, u, v) for u, v in itertools.combinations("abcd", 2)]
                 + [("ax", "a", "x"), ("ay", "a", "y"), ("bx", "b", "x"), ("by", "b", "y"), ("xy", "x", "y")])


def wheel(k):
    rim = [(f"r{i}", str(i), str((i + 1) % k)) for i in range(k)]
    return graph(rim + [(f"h{i}", "hub", str(i)) for i in range(k)])


@pytest.mark.parametrize("hinted", [False, True])
def test_separation_pair_splits_two_k4s(hinted):
    g = two_k4s()
    t = build_spqr(g, planar_embedding(g) if hinted else None)
    assert kinds(t) == [P, R, R]
    assert euler_check(compose_embedding(t))


def test_subdivided_edge_is_shed_as_a_cycle():
    g = graph([(u + v, u, v) for u, v in itertools.combinations("abcd", 2) if u + v != "ac"]
              + [("ap", "a", "p"), ("pq", "p", "q"), ("qc", "q", "c")])
    t = build_spqr(g, planar_embedding(g))
    assert kinds(t) == [R, S]
    (s,) = [n for n, node in t.nodes.items() if node.kind == S]
    assert len(t.nodes[s].edges) == 4


def test_rigid_rotation_comes_from_the_hint():
    g = wheel(6)
    t = build_spqr(g, planar_embedding(g))
    (r,) = [n for n, node in t.nodes.items() if node.kind == R]
    assert r in t.rigid
    assert SkeletonEmbedding(t).at(r) is t.rigid[r]
    assert sorted(len(order) for order in t.rigid[r].values()) == [3] * 6 + [6]
    assert euler_check(compose_embedding(t))


def test_hint_from_a_larger_graph_is_restricted():
    big = two_k4s()
    small = k4()
    t = build_spqr(small, planar_embedding(big))
    assert kinds(t) == [R]
    assert euler_check(compose_embedding(t))
