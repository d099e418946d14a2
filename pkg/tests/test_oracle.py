import itertools
import random

import networkx as nx
import pytest

from src.acp import solve
from src.atcore import NO, YES, ATGraph, Graph, check_certificate, lambda_of, validate
from src.errors import LimitExceeded
from src.oracle import (NO_REALIZATION, OracleLimits, automorphisms, brute_force_satr, count_orderings,
                        crossing_orderings, enumerate_realizations, splitter_orders)

K4 = [(f"{u}{v}", u, v) for u, v in itertools.combinations("0123", 2)]
K4_PAIRS = [("01", "23"), ("02", "13"), ("03", "12")]
HEXAGON = [(f"s{i}", str(i), str((i + 1) % 6)) for i in range(6)]
DIAGONALS = [("p", "0", "3"), ("q", "1", "4"), ("t", "2", "5")]
DIAGONAL_PAIRS = [("p", "q"), ("p", "t"), ("q", "t")]


def at_graph(edges, crossings=()):
    vertices = sorted({x for _, u, v in edges for x in (u, v)})
    return ATGraph(Graph.build(vertices, edges), frozenset(frozenset(p) for p in crossings))


def subsets(items):
    return [c for k in range(len(items) + 1) for c in itertools.combinations(items, k)]


def agree(a):
    expected = brute_force_satr(a)
    got = solve(a)
    assert got.answer == expected.answer, (sorted(map(sorted, a.crossings)), got.reason)
    if got.answer == YES:
        assert check_certificate(a, expected.witness)
        assert check_certificate(a, got.witness)
    return expected.answer


@pytest.mark.parametrize("pairs", subsets(K4_PAIRS))
def test_k4_crossing_subsets(pairs):
    agree(at_graph(K4, pairs))


@pytest.mark.parametrize("pairs", subsets(DIAGONAL_PAIRS))
def test_hexagon_diagonal_subsets(pairs):
    answer = agree(at_graph(HEXAGON + DIAGONALS, pairs))
    if len(pairs) == 3:
        assert answer == YES
    if not pairs:
        assert answer == NO


def test_oracle_reason_for_no():
    v = brute_force_satr(at_graph(HEXAGON + DIAGONALS))
    assert (v.answer, v.reason) == (NO, NO_REALIZATION)


def test_enumerated_realizations_all_verify():
    a = at_graph(K4)
    found = enumerate_realizations(a)
    # a 3-connected planar graph has one embedding and its mirror
    assert len(found) == 2
    assert all(check_certificate(a, w) for w in found)
    crossed = at_graph(K4, [K4_PAIRS[0]])
    assert enumerate_realizations(crossed)
    assert all(check_certificate(crossed, w) for w in enumerate_realizations(crossed))


def test_limits_are_enforced():
    a = at_graph(K4, [K4_PAIRS[0]])
    with pytest.raises(LimitExceeded):
        brute_force_satr(a, OracleLimits(max_planarization_vertices=3))
    with pytest.raises(LimitExceeded):
        enumerate_realizations(a, OracleLimits(max_rotation_systems=1))
    with pytest.raises(ValueError):
        OracleLimits(max_orderings=0)


def test_ordering_count():
    assert count_orderings(at_graph(HEXAGON + DIAGONALS, DIAGONAL_PAIRS)) == 8


def random_instance(rng):
    n = rng.randint(4, 6)
    vs = [str(i) for i in range(n)]
    pool = list(itertools.combinations(vs, 2))
    chosen = rng.sample(pool, min(len(pool), rng.randint(n, 9)))
    edges = [(f"{u}{v}", u, v) for u, v in chosen]
    g = Graph.build(vs, edges)
    free = [(e, f) for (e, _, _), (f, _, _) in itertools.combinations(edges, 2) if not g.adjacent(e, f)]
    pairs = rng.sample(free, min(len(free), rng.randint(0, 3)))
    return ATGraph(g, frozenset(frozenset(p) for p in pairs))


@pytest.mark.slow
def test_random_small_instances_agree_with_oracle():
    rng = random.Random(7)
    checked = 0
    while checked < 60:
        a = random_instance(rng)
        if lambda_of(a) > 3 or validate(a):
            continue
        agree(a)
        checked += 1


@pytest.mark.slow
def test_split_gadget_orders_are_the_two_mirrors():
    found = splitter_orders()
    assert found
    assert found <= {("b1", "f1", "b2", "f2", "b3", "f3"), ("f1", "b1", "f2", "b2", "f3", "b3")}


def test_automorphisms_keep_crossing_pairs():
    a = at_graph(HEXAGON + DIAGONALS, DIAGONAL_PAIRS)
    group = automorphisms(a)
    # dihedral group of the hexagon
    assert len(group) == 12
    assert all(image[e] == (e, 0) for e, image in ((e, group[0]) for e, _, _ in HEXAGON + DIAGONALS))
    for image in group:
        assert {frozenset(image[e][0] for e in pair) for pair in a.crossings} == set(a.crossings)


def test_reduced_orderings_are_fewer_and_decide_the_same():
    a = at_graph(HEXAGON + DIAGONALS, DIAGONAL_PAIRS)
    full = list(crossing_orderings(a))
    reduced = list(crossing_orderings(a, reduce=True))
    assert len(full) == count_orderings(a) == 8
    assert 0 < len(reduced) < len(full)
    assert all(r in full for r in reduced)


@pytest.mark.parametrize("edges, pool", [(K4, K4_PAIRS), (HEXAGON + DIAGONALS, DIAGONAL_PAIRS)])
def test_reduction_does_not_change_answers(edges, pool):
    for pairs in subsets(pool):
        a = at_graph(edges, pairs)
        reduced, full = brute_force_satr(a, reduce=True), brute_force_satr(a, reduce=False)
        assert (reduced.answer, reduced.reason) == (full.answer, full.reason)
        if reduced.answer == YES:
            assert check_certificate(a, reduced.witness)


def test_mirror_reduction_halves_the_realizations():
    a = at_graph(K4)
    assert len(enumerate_realizations(a, up_to_mirror=True)) == 1
    crossed = at_graph(K4, [K4_PAIRS[0]])
    every = enumerate_realizations(crossed)
    halves = enumerate_realizations(crossed, up_to_mirror=True)
    assert len(every) == 2 * len(halves)
    assert all(check_certificate(crossed, w) for w in halves)


def test_worker_count_does_not_change_the_result():
    a = at_graph(HEXAGON + DIAGONALS, DIAGONAL_PAIRS)
    one, two = brute_force_satr(a, jobs=1, reduce=False), brute_force_satr(a, jobs=2, reduce=False)
    assert one.answer == two.answer == YES
    assert dict(one.witness.routes) == dict(two.witness.routes)
    assert check_certificate(a, two.witness)
    no = brute_force_satr(at_graph(HEXAGON + DIAGONALS), jobs=3)
    assert (no.answer, no.reason) == (NO, NO_REALIZATION)
    with pytest.raises(ValueError):
        brute_force_satr(a, jobs=0)


def atlas_hosts():
    for g in nx.graph_atlas_g():
        if 2 <= g.number_of_nodes() <= 6 and g.number_of_edges() <= 9 and nx.is_connected(g):
            yield g


def crossing_components(edges, free):
    """Crossing components on at most three edges, as sets of crossing pairs."""
    names = [e for e, _, _ in edges]
    comps = [frozenset({pair}) for pair in free]
    for e in names:
        partners = [f for f in names if frozenset((e, f)) in free]
        for f, h in itertools.combinations(partners, 2):
            if frozenset((f, h)) in free:
                comps.append(frozenset({frozenset((e, f)), frozenset((e, h)), frozenset((f, h))}))
            else:
                comps.append(frozenset({frozenset((e, f)), frozenset((e, h))}))
    return list(dict.fromkeys(comps))


def canonical(pairs, group):
    return min(tuple(sorted(tuple(sorted(image[e][0] for e in pair)) for pair in pairs)) for image in group)


def exhaustive_instances():
    for g in atlas_hosts():
        edges = [(f"{u}-{v}", str(u), str(v)) for u, v in g.edges]
        host = ATGraph(Graph.build([str(x) for x in g.nodes], edges), frozenset())
        group = automorphisms(host)
        free = {frozenset((e, f)) for (e, _, _), (f, _, _) in itertools.combinations(edges, 2)
                if not host.graph.adjacent(e, f)}
        comps = crossing_components(edges, free)
        touched = [frozenset(x for pair in c for x in pair) for c in comps]
        choices = [frozenset()] + comps
        choices += [c | d for (c, tc), (d, td) in itertools.combinations(zip(comps, touched), 2) if not tc & td]
        seen = set()
        for pairs in choices:
            key = canonical(pairs, group)
            if key in seen:
                continue
            seen.add(key)
            yield ATGraph(host.graph, frozenset(pairs))


@pytest.mark.slow
def test_small_hosts_agree_with_oracle_exhaustively():
    answers = {YES: 0, NO: 0}
    for a in exhaustive_instances():
        assert lambda_of(a) <= 3
        answers[agree(a)] += 1
    assert answers[YES] and answers[NO]
