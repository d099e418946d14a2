import itertools
import math

import pytest

from src.atcore import Graph
from src.embedding import (RotationSystem, circular_orders, enumerate_rotation_systems, euler_check,
                           exhaustive_is_planar, is_planar, planar_embedding, trace_faces, twin)
from src.errors import NotPlanar


def complete(n):
    vs = [str(i) for i in range(n)]
    return Graph.build(vs, [(f"{u}{v}", u, v) for u, v in itertools.combinations(vs, 2)])


def k33():
    left, right = ["a", "b", "c"], ["x", "y", "z"]
    return Graph.build(left + right, [(u + v, u, v) for u in left for v in right])


def test_twin_flips_side():
    assert twin(("e", 2, 0)) == ("e", 2, 1)


def test_circular_orders_count():
    orders = list(circular_orders("abcde"))
    assert len(orders) == math.factorial(4)
    assert all(o[0] == "a" for o in orders)


def test_planar_embedding_of_k4_has_four_faces():
    rot = planar_embedding(complete(4))
    assert euler_check(rot)
    assert len(trace_faces(rot).faces) == 4


def test_k5_and_k33_are_not_planar():
    for g in (complete(5), k33()):
        assert not is_planar(g)
        with pytest.raises(NotPlanar):
            planar_embedding(g)


def test_exhaustive_planarity_agrees_with_networkx():
    assert exhaustive_is_planar(complete(4))
    assert not exhaustive_is_planar(k33())


def test_parallel_edges_are_embedded():
    g = Graph.build(["a", "b", "c"], [("e", "a", "b"), ("f", "a", "b"), ("g", "b", "c"), ("h", "c", "a")],
                    simple=False)
    rot = planar_embedding(g)
    assert euler_check(rot)
    assert len(rot.rotations["a"]) == 3


def test_mirrored_rotation_system_stays_planar():
    rot = planar_embedding(complete(4))
    assert euler_check(rot.mirrored())


def test_some_rotation_of_k4_has_genus_one():
    assert not all(euler_check(r) for r in enumerate_rotation_systems(complete(4)))


def test_dart_without_twin_is_rejected():
    with pytest.raises(ValueError):
        RotationSystem({"a": (("e", 0, 0),)})
