import itertools
import logging
import re

import pytest

from src.acp import (CUT_VERTEX_CONFLICT, H_NONPLANAR, MONOCHROMATIC_PAIR, PNODE_ORDER_CONFLICT, SNODE_CYCLE_CONFLICT,
                     contract_crossings, eliminate_block, expand_and_embed, find_consecutive_pairs, label,
                     reduce_pnode_3111_P3, reduce_pnode_allones, reduce_pnode_k3_free_or_pq,
                     reduce_snode_k3_cycles, replace_deg4, replace_with_consecutive_pairs, solve,
                     split_biconnected)
from src.atcore import (ADJACENT_CROSSING_PAIR, NO, YES, ATGraph, Graph, build_crossing_graph,
                        check_certificate, classify_components)
from src.embedding import euler_check
from src.oracle import brute_force_satr
from src.planted import PATTERNS, generate, pattern_instance
from src.pqtree import enumerate_orders, is_compatible
from src.spqr import P as PNODE, S as SNODE
from src.spqr import build_spqr

TRACE_LINE = re.compile(r"^LEMMA \S+ vertex=\S+ action=\S+")


def at_graph(edges, crossings=()):
    vertices = sorted({x for _, u, v in edges for x in (u, v)})
    return ATGraph(Graph.build(vertices, edges), frozenset(frozenset(p) for p in crossings))


def complete(n):
    vs = [str(i) for i in range(n)]
    return [(f"{u}{v}", u, v) for u, v in itertools.combinations(vs, 2)]


def k33():
    return [(u + v, u, v) for u in "abc" for v in "xyz"]


def two_triangles(extra=()):
    return [("ab", "a", "b"), ("bc", "b", "c"), ("ca", "c", "a"),
            ("de", "d", "e"), ("ef", "e", "f"), ("fd", "f", "d"), *extra]


def from_pattern(kind):
    return pattern_instance(kind)[0]


def assert_yes(a):
    v = solve(a)
    assert v.answer == YES, v.reason
    assert check_certificate(a, v.witness)
    return v


@pytest.mark.parametrize("kind", PATTERNS)
def test_drawn_patterns_are_realizable(kind):
    assert_yes(from_pattern(kind))


def test_k5_with_one_crossing_is_realizable():
    v = assert_yes(at_graph(complete(5), [("02", "13")]))
    assert len(v.witness.dummies) == 1


def test_k33_with_one_crossing_is_realizable():
    assert_yes(at_graph(k33(), [("ax", "by")]))


def test_k5_without_crossings_fails_planarity():
    v = solve(at_graph(complete(5)))
    assert v.answer == NO
    assert v.reason == H_NONPLANAR
    assert v.witness is None


def test_adjacent_crossing_pair_is_rejected_up_front():
    v = solve(at_graph(two_triangles(), [("ab", "bc")]))
    assert (v.answer, v.reason) == (NO, ADJACENT_CROSSING_PAIR)


def test_disjoint_triangles_cannot_cross_once():
    a = at_graph(two_triangles(), [("ab", "de")])
    v = solve(a)
    assert (v.answer, v.reason) == (NO, CUT_VERTEX_CONFLICT)
    h = contract_crossings(a, classify_components(build_crossing_graph(a)))
    assert split_biconnected(h) == CUT_VERTEX_CONFLICT


def test_joined_triangles_cannot_cross_once():
    v = solve(at_graph(two_triangles([("cf", "c", "f")]), [("ab", "de")]))
    assert v.answer == NO


def test_planted_instances_are_solved():
    for inst in generate(4, size=14, seed=3, mutation_rate=0.0):
        assert_yes(inst.instance)


def test_trace_lines_name_step_vertex_and_action():
    v = solve(from_pattern("K3"))
    assert v.trace
    assert all(TRACE_LINE.match(line) for line in v.trace)
    assert any(line.startswith("LEMMA contract") for line in v.trace)


def test_degree_four_crossing_becomes_a_pq_tree():
    a = from_pattern("K2")
    h = contract_crossings(a, classify_components(build_crossing_graph(a)))
    (x,) = h.constrained()
    replace_deg4(h, x)
    assert x not in h.alternation and x in h.pq
    assert h.trace[-1] == "LEMMA deg4 vertex=X0 action=pq=K2"


def test_quadrilateral_with_crossing_diagonals():
    a = at_graph([("s0", "0", "1"), ("s1", "1", "2"), ("s2", "2", "3"), ("s3", "3", "0"),
                  ("d0", "0", "2"), ("d1", "1", "3")], [("d0", "d1")])
    v = assert_yes(a)
    assert "LEMMA deg4 vertex=X0 action=pq=K2" in v.trace
    (name, pair), = v.witness.dummies
    assert set(pair) == {"d0", "d1"}


# ---------------------------------------------------------------- lemma instances

K3_EDGES = [("a", "1", "4"), ("b", "2", "5"), ("c", "3", "6")]
K3_CROSSINGS = [("a", "b"), ("a", "c"), ("b", "c")]


def hub(paired=()):
    """A K3 crossing whose six endpoints hang off a hub; `paired` endpoints
    reach the hub through a shared vertex m instead."""
    spokes = [(f"h{i}", "0", str(i)) for i in range(1, 7) if str(i) not in paired]
    extra = [(f"m{x}", "m", x) for x in paired] + ([("hm", "0", "m")] if paired else [])
    return at_graph(K3_EDGES + spokes + extra, K3_CROSSINGS)


def two_k3_on_a_hexagon():
    w = [f"w{i}" for i in range(6)]
    first = [(f"a{i}", w[2 * i], w[2 * i + 1]) for i in range(3)]
    second = [(f"b{i}", w[2 * i + 1], w[(2 * i + 2) % 6]) for i in range(3)]
    crossings = [p for group in (first, second) for p in itertools.combinations([e for e, _, _ in group], 2)]
    return at_graph(first + second, crossings)


def k3_cycle(shift):
    """Three K3 crossings in a ring: crossing i joins the endpoints shared
    with crossing i-1 to those shared with crossing i+1."""
    edges, crossings = [], []
    for i in range(3):
        level = [(f"e{i}{j}", f"w{(i - 1) % 3}{j}", f"w{i}{(j + (shift if i == 0 else 0)) % 3}")
                 for j in range(3)]
        edges += level
        crossings += itertools.combinations([e for e, _, _ in level], 2)
    return at_graph(edges, crossings)


def two_cut_k3():
    """Two K3 crossings, each with a pendant edge, joined through three
    shared endpoints and a hub q."""
    first = [("a0", "a", "p1"), ("a1", "y1", "p2"), ("a2", "y2", "p3")]
    second = [("b0", "b", "p1"), ("b1", "z1", "p2"), ("b2", "z2", "p3")]
    plain = [(f"q{x}", "q", x) for x in ("y1", "y2", "z1", "z2")]
    crossings = [p for group in (first, second) for p in itertools.combinations([e for e, _, _ in group], 2)]
    return at_graph(first + second + plain, crossings)


def p3_between_two_hubs():
    edges = [("r", "a1", "b1"), ("p", "a2", "b2"), ("bl", "a3", "b3"), ("qs", "q", "s")]
    edges += [(f"q{i}", "q", f"b{i}") for i in (1, 2, 3)] + [(f"s{i}", "s", f"a{i}") for i in (1, 2, 3)]
    return at_graph(edges, [("r", "p"), ("p", "bl")])


def k3_beside_k2():
    edges = [("e1", "a1", "b1"), ("e2", "a2", "b2"), ("e3", "a3", "b3"),
             ("f", "b1", "b2"), ("g", "b3", "r")] + [(f"r{i}", "r", f"a{i}") for i in (1, 2, 3)]
    return at_graph(edges, [("e1", "e2"), ("e1", "e3"), ("e2", "e3"), ("f", "g")])


def contracted(a):
    return contract_crossings(a, classify_components(build_crossing_graph(a)))


def pnode_between(t, x, y):
    return next(mu for mu in t.nodes_containing(x, PNODE) if set(t.nodes[mu].poles()) == {x, y})


def agrees_with_oracle(a):
    v, expected = solve(a), brute_force_satr(a)
    assert v.answer == expected.answer, v.reason
    if v.answer == YES:
        assert check_certificate(a, v.witness)
    return v


def no_exact_fallback(caplog):
    return not [r for r in caplog.records if r.name.startswith("src.") and r.levelno >= logging.WARNING]


def test_consecutive_pair_found_through_a_shared_neighbour():
    h = contracted(hub(paired=("1", "2")))
    x = ("x", 0)
    pairs = find_consecutive_pairs(build_spqr(h.graph), h, x)
    assert pairs == [tuple(sorted((h.graph.dart(("p", "a", 0), x), h.graph.dart(("p", "b", 0), x)), key=repr))]
    assert replace_with_consecutive_pairs(h, x, pairs) is None
    assert x in h.pq and x not in h.alternation
    assert len(enumerate_orders(h.pq[x])) == 4
    assert h.trace[-1].startswith("LEMMA consecutive-pair vertex=X0 action=pq=consec6")


def test_same_colour_consecutive_pair_is_rejected():
    a = hub(paired=("1", "4"))
    h = contracted(a)
    x = ("x", 0)
    pairs = find_consecutive_pairs(build_spqr(h.graph), h, x)
    assert len(pairs) == 1
    assert replace_with_consecutive_pairs(h, x, pairs) == MONOCHROMATIC_PAIR
    v = solve(a)
    assert (v.answer, v.reason) == (NO, MONOCHROMATIC_PAIR)
    assert brute_force_satr(a).answer == NO


def test_synchronized_trees_are_embedded():
    h = contracted(hub(paired=("1", "2")))
    assert eliminate_block(h) is None
    x = ("x", 0)
    assert h.pq[x].sync
    rot = expand_and_embed(h)
    assert euler_check(rot)
    assert is_compatible(h.pq[x], rot.rotations[x])
    assert h.crossing[x].component.kind == "K3"


def test_all_ones_drop_is_replayed(caplog):
    a = hub()
    h = contracted(a)
    x = ("x", 0)
    t = build_spqr(h.graph)
    mu = pnode_between(t, x, ("v", "0"))
    assert reduce_pnode_allones(h, t, mu, x) is None
    assert x not in h.alternation
    step = h.steps[-1]
    assert (step.lemma, step.action) == ("pnode-allones", "drop")
    assert len(step.data["hinges"][0].at_first) == 6
    v = agrees_with_oracle(a)
    assert v.answer == YES
    assert "LEMMA pnode-allones vertex=X0 action=drop" in v.trace
    assert no_exact_fallback(caplog)


def test_two_alternating_poles_with_incompatible_orders():
    a = two_k3_on_a_hexagon()
    v = agrees_with_oracle(a)
    assert (v.answer, v.reason) == (NO, PNODE_ORDER_CONFLICT)
    assert any(line.startswith("LEMMA pnode-allones") for line in v.trace)


def test_p3_with_a_three_edge_group():
    a = p3_between_two_hubs()
    h = contracted(a)
    x = ("x", 0)
    t = build_spqr(h.graph)
    mu = pnode_between(t, x, ("v", "q"))
    assert reduce_pnode_3111_P3(h, t, mu, x) is None
    assert x in h.pq
    assert any(line.startswith("LEMMA pnode-3111-p3 vertex=X0") for line in h.trace)
    assert agrees_with_oracle(a).answer == YES


def test_k3_opposite_a_pq_vertex():
    a = k3_beside_k2()
    h = contracted(a)
    (x,) = [v for v in h.constrained() if h.graph.degree(v) == 6]
    (q,) = [v for v in h.constrained() if h.graph.degree(v) == 4]
    replace_deg4(h, q)
    t = build_spqr(h.graph)
    assert reduce_pnode_k3_free_or_pq(h, t, pnode_between(t, x, q), x) is None
    assert x in h.pq
    assert f"LEMMA pnode-k3-free-or-pq vertex={label(x)} action=pairs=2" in h.trace
    agrees_with_oracle(a)


def test_k3_opposite_a_free_vertex_is_dropped(caplog):
    a = p3_between_two_hubs()
    edges = [(e, *a.graph.ends(e)) for e, _, _ in a.graph.edges]
    a = at_graph(edges, [("r", "p"), ("p", "bl"), ("r", "bl")])
    h = contracted(a)
    x = ("x", 0)
    t = build_spqr(h.graph)
    assert reduce_pnode_k3_free_or_pq(h, t, pnode_between(t, x, ("v", "q")), x) is None
    assert x not in h.alternation and x not in h.pq
    assert agrees_with_oracle(a).answer == YES
    assert no_exact_fallback(caplog)


def test_surgery_splits_two_k3_minus_r_poles(caplog):
    a = two_cut_k3()
    h = contracted(a)
    plan = split_biconnected(h)
    block = max(plan.blocks, key=lambda b: len(b.graph.edges))
    assert sorted(c.kind for c in block.alternation.values()) == ["K3minusR", "K3minusR"]
    pieces = eliminate_block(block.copy())
    assert isinstance(pieces, list) and len(pieces) == 2
    assert any(line.startswith("LEMMA pnode-2111") and "surgery-with" in line for line in h.trace)
    inner, outer = pieces
    assert any(e[0] == "s" for e, _, _ in inner.graph.edges)
    v = agrees_with_oracle(a)
    if v.answer == YES:
        assert no_exact_fallback(caplog)


@pytest.mark.parametrize("shift", [1, 2])
def test_ring_of_k3_crossings(shift, caplog):
    a = k3_cycle(shift)
    h = contracted(a)
    t = build_spqr(h.graph)
    ring = {("x", i) for i in range(3)}
    (mu,) = [n for n in t.nodes_containing(("x", 0), SNODE) if set(t.nodes[n].vertices()) == ring]
    result = reduce_snode_k3_cycles(h, t, mu)
    assert result in (None, SNODE_CYCLE_CONFLICT)
    v = agrees_with_oracle(a)
    assert (v.answer == YES) == (result is None)
    assert any(line.startswith("LEMMA snode-k3") for line in v.trace)
    if v.answer == YES:
        assert no_exact_fallback(caplog)


def test_replay_fails_over_to_exact_search_only_when_needed(caplog):
    with caplog.at_level(logging.WARNING):
        for inst in generate(6, size=30, seed=8, mutation_rate=0.0):
            assert_yes(inst.instance)
    assert no_exact_fallback(caplog)
