import time

import pytest

from src.acp import solve
from src.atcore import YES, ATGraph, Graph
from src.planted import generate
from src.stats import component_histogram, instance_stats, scaling_slope, stats_frame

HEXAGON = [(f"s{i}", str(i), str((i + 1) % 6)) for i in range(6)]
DIAGONALS = [("p", "0", "3"), ("q", "1", "4"), ("t", "2", "5")]


def at_graph(edges, crossings=()):
    vertices = sorted({x for _, u, v in edges for x in (u, v)})
    return ATGraph(Graph.build(vertices, edges), frozenset(frozenset(p) for p in crossings))


def test_component_histogram_by_kind():
    assert component_histogram(at_graph(HEXAGON + DIAGONALS, [("p", "q"), ("p", "t"), ("q", "t")])) == {"K3": 1}
    assert component_histogram(at_graph(HEXAGON + DIAGONALS, [("p", "q"), ("p", "t")])) == {"P3": 1}
    assert component_histogram(at_graph(HEXAGON + DIAGONALS, [("s0", "s3"), ("p", "q")])) == {"K2": 2}
    assert component_histogram(at_graph(HEXAGON)) == {}


def test_instance_stats():
    s = instance_stats(at_graph(HEXAGON + DIAGONALS, [("p", "q")]))
    assert s["n_vertices"] == 6
    assert s["n_edges"] == 9
    assert s["n_crossings"] == 1
    assert s["lambda"] == 2
    assert (s["degree_min"], s["degree_max"], s["degree_mean"]) == (3, 3, 3.0)


def test_stats_frame_fills_missing_kinds():
    df = stats_frame({
        "k3": at_graph(HEXAGON + DIAGONALS, [("p", "q"), ("p", "t"), ("q", "t")]),
        "k2": at_graph(HEXAGON + DIAGONALS, [("p", "q")]),
    })
    assert list(df.index) == ["k3", "k2"]
    assert df.loc["k2", "n_K3"] == 0
    assert df.loc["k3", "n_K3"] == 1
    assert df["n_edges"].tolist() == [9, 9]


def test_scaling_slope_recovers_exponent():
    sizes = [10, 20, 40, 80]
    assert scaling_slope(sizes, [s ** 2 * 1e-4 for s in sizes]) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        scaling_slope([10], [1.0])


@pytest.mark.slow
def test_solver_runtime_is_near_linear():
    sizes, seconds = [10 ** 3, 10 ** 4, 10 ** 5], []
    for size in sizes:
        (inst,) = generate(1, size=size, seed=size, mutation_rate=0.0)
        start = time.perf_counter()
        assert solve(inst.instance).answer == YES
        seconds.append(time.perf_counter() - start)
        assert seconds[-1] < 10.0, f"size {size} took {seconds[-1]:.1f}s"
    assert scaling_slope(sizes, seconds) <= 1.3
