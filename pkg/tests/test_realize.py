import itertools

import pytest

from src.acp import contract_crossings, decide_block, split_biconnected
from src.atcore import ATGraph, Graph, build_crossing_graph, check_certificate, classify_components
from src.embedding import euler_check
from src.errors import InternalInconsistency
from src.realize import embed_block, extract_certificate, recombine_and_extract, regroup


def at_graph(edges, crossings=()):
    vertices = sorted({x for _, u, v in edges for x in (u, v)})
    return ATGraph(Graph.build(vertices, edges), frozenset(frozenset(p) for p in crossings))


def contracted(a):
    return contract_crossings(a, classify_components(build_crossing_graph(a)))


K5 = [(f"{u}{v}", u, v) for u, v in itertools.combinations("01234", 2)]
TRIANGLES = [("ab", "a", "b"), ("bc", "b", "c"), ("ca", "c", "a"),
             ("de", "d", "e"), ("ef", "e", "f"), ("fd", "f", "d"), ("cf", "c", "f")]


def test_block_embedding_meets_alternation():
    h = contracted(at_graph(K5, [("02", "13")]))
    plan = split_biconnected(h)
    assert len(plan.blocks) == 1
    block = plan.blocks[0]
    rot = embed_block(block)
    assert rot is not None
    assert euler_check(rot)
    for v, c in block.alternation.items():
        assert c.satisfied(rot.rotations[v])


def test_block_without_feasible_embedding():
    h = contracted(at_graph(TRIANGLES, [("ab", "de")]))
    plan = split_biconnected(h)
    assert [embed_block(b) for b in plan.blocks] == [None]


def test_extracted_certificate_routes_every_crossing():
    a = at_graph(K5, [("02", "13")])
    h = contracted(a)
    plan = split_biconnected(h)
    w = recombine_and_extract(a, h, plan, [decide_block(b.copy()) for b in plan.blocks])
    assert check_certificate(a, w)
    (name, pair), = w.dummies
    assert set(pair) == {"02", "13"}
    assert w.routes["02"] == w.routes["13"] == (name,)
    assert all(w.routes[e] == () for e, _, _ in a.graph.edges if e not in pair)


def test_uncrossed_instance_keeps_its_embedding():
    a = at_graph([("ab", "a", "b"), ("bc", "b", "c"), ("ca", "c", "a")])
    h = contracted(a)
    rot = embed_block(split_biconnected(h).blocks[0])
    w = extract_certificate(a, h, rot)
    assert w.dummies == ()
    assert check_certificate(a, w)


def test_missing_block_embedding_is_searched_exactly(caplog):
    a = at_graph(K5, [("02", "13")])
    h = contracted(a)
    plan = split_biconnected(h)
    w = recombine_and_extract(a, h, plan, [None] * len(plan.blocks))
    assert check_certificate(a, w)
    assert "searching it exactly" in caplog.text


def test_decided_block_meets_its_constraints():
    h = contracted(at_graph(K5, [("02", "13")]))
    block = split_biconnected(h).blocks[0]
    rot = decide_block(block.copy())
    assert euler_check(rot)
    for v, c in block.alternation.items():
        assert c.satisfied(rot.rotations[v])


GROUPS = {"A": ["a1", "a2"], "B": ["b1"], "C": ["c1", "c2"]}


def test_regroup_keeps_runs_intact():
    order = ("a2", "b1", "c1", "c2", "a1")
    assert regroup(order, GROUPS, ("A", "B", "C")) == ("a1", "a2", "b1", "c1", "c2")
    assert regroup(order, GROUPS, ("A", "C", "B")) == ("a1", "a2", "c1", "c2", "b1")


def test_regroup_single_group_is_untouched():
    assert regroup(("a2", "a1"), {"A": ["a1", "a2"]}, ("A",)) == ("a2", "a1")


def test_regroup_rejects_split_run():
    with pytest.raises(InternalInconsistency):
        regroup(("a1", "b1", "a2", "c1", "c2"), GROUPS, ("A", "B", "C"))


def test_regroup_rejects_foreign_dart():
    with pytest.raises(InternalInconsistency):
        regroup(("a1", "a2", "z"), GROUPS, ("A", "B", "C"))
