import random
from pathlib import Path

import pytest

from src.atcore import instance_to_json, lambda_of
from src.errors import PreconditionFailed
from src.hardness import (NOT_PLANAR, NOT_TRICONNECTED, TOO_SMALL, CNF, assemble, build_skeleton,
                          build_variable_clause_graph, check_precondition, parse_dimacs, random_cnf,
                          read_dimacs, search_formulas, self_check, split_fragment)

FIXTURES = Path(__file__).parent / "fixtures" / "cnf"
GOOD = ["cube_a", "cube_b", "bipyramid_a", "bipyramid_b", "octahedron"]


def fixture(name):
    return read_dimacs(FIXTURES / f"{name}.dimacs")


def test_parse_dimacs_skips_comments_and_joins_lines():
    phi = parse_dimacs("c hello\np cnf 4 2\n1 -2\n3 0\n2 3 -4 0\n%\n")
    assert phi.variables == 4
    assert phi.clauses == ((1, -2, 3), (2, 3, -4))
    assert parse_dimacs(phi.to_dimacs()) == phi


@pytest.mark.parametrize("text", ["p cnf 3 1\n1 2 0\n", "p cnf 3 1\n1 1 2 0\n", "p dnf 3 1\n1 2 3 0\n",
                                  "p cnf 3 1\n1 two 3 0\n"])
def test_bad_formulas_are_rejected(text):
    with pytest.raises(PreconditionFailed):
        parse_dimacs(text)


def test_literal_out_of_range():
    with pytest.raises(PreconditionFailed):
        CNF(2, ((1, 2, 3),))


def test_precondition_reasons():
    assert check_precondition(build_variable_clause_graph(fixture("k23"))) == NOT_TRICONNECTED
    assert check_precondition(build_variable_clause_graph(CNF(3, ()))) == TOO_SMALL
    for name in GOOD:
        assert check_precondition(build_variable_clause_graph(fixture(name))) is None


def test_k33_incidences_are_not_planar():
    # three clauses over the same three variables
    phi = CNF(3, ((1, 2, 3), (-1, 2, 3), (1, -2, -3)))
    assert check_precondition(build_variable_clause_graph(phi)) == NOT_PLANAR


def test_random_formulas_respect_literal_rules():
    phi = random_cnf(6, 10, random.Random(1))
    assert len(phi.clauses) == 10
    assert all(len({abs(x) for x in c}) == 3 for c in phi.clauses)


def test_formula_search_only_keeps_valid_graphs():
    for phi in search_formulas(2, seed=4, max_attempts=20000):
        assert check_precondition(build_variable_clause_graph(phi)) is None


@pytest.mark.parametrize("name", GOOD)
def test_skeleton_is_four_regular(name):
    g = build_variable_clause_graph(fixture(name))
    skeleton = build_skeleton(g)
    assert {skeleton.graph.degree(x) for x in skeleton.graph.vertices} == {4}
    incidences = g.graph.number_of_edges()
    assert len(skeleton.variable_edge) == len(skeleton.clause_edge) == incidences
    assert len(skeleton.pipes) == incidences


@pytest.mark.parametrize("name", GOOD)
def test_assembled_instance_passes_self_check(name):
    phi = fixture(name)
    gi = assemble(phi)
    report = self_check(gi)
    assert report.ok, report.problems
    assert report.lam == 6
    assert report.max_degree == 3
    assert report.crossing_graph_planar
    incidences = 3 * len(phi.clauses)
    assert report.shapes == {
        "pair": 3 * incidences,
        "path3": 5 * incidences,
        "path4": 2 * incidences,
        "double-star": incidences,
        "prism": len(phi.clauses),
    }
    assert report.to_json()["ok"] is True


def test_identified_edges_follow_aliases():
    gi = assemble(fixture("cube_a"))
    ids = {e for e, _, _ in gi.instance.graph.edges}
    for label in gi.aliases:
        assert gi.edge(label) in ids
        assert label not in ids


def test_assembly_is_deterministic():
    phi = fixture("bipyramid_a")
    assert instance_to_json(assemble(phi).instance) == instance_to_json(assemble(phi).instance)


def test_precondition_failure_stops_assembly():
    with pytest.raises(PreconditionFailed):
        assemble(fixture("k23"))


def test_split_fragment_has_one_double_star():
    a = split_fragment()
    assert lambda_of(a) == 6
    assert {"l1", "l2", "l3", "b1", "f1"} <= {e for e, _, _ in a.graph.edges}
