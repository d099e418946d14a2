"""
Random λ ≤ 3 instances with a planted realization.

The host is a random stacked triangulation held as a networkx graph: start
from a triangle and keep dropping a new vertex into a random face. Patterns
are then planted in disjoint regions of it:

    K2  two triangles sharing an edge become a quadrilateral whose two
        diagonals cross
    P3  a triangle and its three neighbours become a hexagon; one long
        diagonal is crossed by two short chords
    K3  the same hexagon with its three long diagonals crossing pairwise

Each pattern fixes the order of the crossings along its chords, so the
certificate comes from embedding the planarization with those routes.

A fraction of instances is mutated by toggling one crossing pair. Those lose
their certificate and are labelled unknown.
"""
import logging
import random
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Set, Tuple

import networkx as nx

from src.atcore import ATGraph, Graph, PlanarizationCertificate, lambda_of
from src.errors import InternalInconsistency
from src.oracle import embed_routes

logger = logging.getLogger(__name__)

YES_LABEL, UNKNOWN_LABEL = "yes", "unknown"

DEFAULT_SIZE = 30
DEFAULT_MUTATION_RATE = 0.2
# host vertices per planted pattern
PLANT_SPACING = 8
PLANT_ATTEMPTS = 20
MUTATION_ATTEMPTS = 50

Routes = Dict[str, Tuple[str, ...]]
Dummies = Dict[str, Tuple[str, str]]


@dataclass(frozen=True)
class Layout:
    """Chords between corners of a face; `meets[i]` lists the chords crossed
    by chord i, in order from its first corner."""

    corners: int
    chords: Tuple[Tuple[int, int], ...]
    meets: Tuple[Tuple[int, ...], ...]


LAYOUTS: Dict[str, Layout] = {
    "K2": Layout(4, ((0, 2), (1, 3)), ((1,), (0,))),
    "P3": Layout(6, ((0, 3), (1, 5), (2, 4)), ((1, 2), (0,), (0,))),
    "K3": Layout(6, ((0, 3), (1, 4), (2, 5)), ((1, 2), (0, 2), (0, 1))),
}
PATTERNS = tuple(LAYOUTS)


@dataclass(frozen=True)
class PlantedInstance:
    instance: ATGraph
    certificate: Optional[PlanarizationCertificate]
    label: str


def _crossing_routes(layout: Layout, names: Sequence[str], fresh: Callable[[], str]) -> Tuple[Routes, Dummies]:
    dummy_of: Dict[frozenset, str] = {}
    dummies: Dummies = {}
    for i, met in enumerate(layout.meets):
        for j in met:
            key = frozenset((i, j))
            if key not in dummy_of:
                dummy_of[key] = fresh()
                dummies[dummy_of[key]] = (names[min(i, j)], names[max(i, j)])
    routes = {names[i]: tuple(dummy_of[frozenset((i, j))] for j in met) for i, met in enumerate(layout.meets)}
    return routes, dummies


def _counter(prefix: str) -> Callable[[], str]:
    state = [0]

    def fresh() -> str:
        state[0] += 1
        return f"{prefix}{state[0] - 1}"
    return fresh


def _certify(a: ATGraph, routes: Routes, dummies: Dummies, what: str) -> PlanarizationCertificate:
    witness = embed_routes(a, routes, dummies)
    if witness is None:
        raise InternalInconsistency(f"{what} has no drawing with its crossing orders")
    return witness


def pattern_instance(kind: str) -> Tuple[ATGraph, PlanarizationCertificate]:
    """One pattern drawn inside its bare face: sides s<i>, chords c<i>."""
    layout = LAYOUTS[kind]
    k = layout.corners
    vertices = [str(i) for i in range(k)]
    names = [f"c{i}" for i in range(len(layout.chords))]
    edges = [(f"s{i}", str(i), str((i + 1) % k)) for i in range(k)]
    edges += [(name, str(i), str(j)) for name, (i, j) in zip(names, layout.chords)]
    routes, dummies = _crossing_routes(layout, names, _counter("#"))
    for e, _, _ in edges:
        routes.setdefault(e, ())
    a = ATGraph(Graph.build(vertices, edges), frozenset(frozenset(p) for p in dummies.values()))
    return a, _certify(a, routes, dummies, f"pattern {kind}")


@dataclass
class StackedTriangulation:
    """Faces of a triangulated sphere as oriented triangles; `owner` maps
    each directed edge to the face on its left."""

    faces: List[Tuple[int, int, int]] = field(default_factory=lambda: [(0, 1, 2), (0, 2, 1)])
    owner: Dict[Tuple[int, int], int] = field(default_factory=dict)
    vertices: int = 3

    def __post_init__(self):
        for k, face in enumerate(self.faces):
            self._own(k, face)

    def _own(self, k: int, face: Tuple[int, int, int]) -> None:
        a, b, c = face
        if k == len(self.faces):
            self.faces.append(face)
        self.faces[k] = face
        self.owner[(a, b)] = self.owner[(b, c)] = self.owner[(c, a)] = k

    def stack(self, k: int) -> int:
        """Put a new vertex inside face k."""
        a, b, c = self.faces[k]
        n = self.vertices
        self.vertices += 1
        self._own(k, (a, b, n))
        self._own(len(self.faces), (b, c, n))
        self._own(len(self.faces), (c, a, n))
        return n

    def across(self, u: int, v: int) -> Tuple[int, int]:
        """Face on the other side of the directed edge u->v, and its third corner."""
        k = self.owner[(v, u)]
        (w,) = set(self.faces[k]) - {u, v}
        return k, w

    def graph(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(self.vertices))
        for a, b, c in self.faces:
            g.add_edges_from(((a, b), (b, c), (c, a)))
        return g


def random_host(size: int, rng: random.Random) -> StackedTriangulation:
    tri = StackedTriangulation()
    while tri.vertices < size:
        tri.stack(rng.randrange(len(tri.faces)))
    return tri


class _Planting:
    """Host graph with patterns cut into disjoint groups of faces."""

    def __init__(self, tri: StackedTriangulation):
        self.tri = tri
        self.host = tri.graph()
        self.used: Set[int] = set()
        self.routes: Routes = {}
        self.dummies: Dummies = {}
        self.kinds: List[str] = []
        self._dummy = _counter("#")
        self._chords = 0

    def region(self, kind: str, k: int, rng: random.Random) -> Tuple[List[int], List[int], List[Tuple[int, int]]]:
        """Faces, boundary corners in order and interior edges of the region
        grown from face k."""
        a, b, c = self.tri.faces[k]
        if kind == "K2":
            u, w = rng.choice(((a, b), (b, c), (c, a)))
            (x,) = {a, b, c} - {u, w}
            j, y = self.tri.across(u, w)
            return [k, j], [u, y, w, x], [(u, w)]
        faces, corners = [k], []
        for u, w in ((a, b), (b, c), (c, a)):
            j, y = self.tri.across(u, w)
            faces.append(j)
            corners += [u, y]
        return faces, corners, [(a, b), (b, c), (c, a)]

    def plant(self, kind: str, rng: random.Random) -> bool:
        layout = LAYOUTS[kind]
        faces, corners, interior = self.region(kind, rng.randrange(len(self.tri.faces)), rng)
        if len(set(faces)) != len(faces) or self.used.intersection(faces):
            return False
        if len(set(corners)) != layout.corners:
            return False
        gone = {frozenset(e) for e in interior}
        ends = [(corners[i], corners[j]) for i, j in layout.chords]
        if any(self.host.has_edge(u, w) and frozenset((u, w)) not in gone for u, w in ends):
            return False
        self.used.update(faces)
        self.host.remove_edges_from(interior)
        names = [f"c{self._chords + i}" for i in range(len(ends))]
        self._chords += len(ends)
        for name, (u, w) in zip(names, ends):
            self.host.add_edge(u, w, chord=name)
        routes, dummies = _crossing_routes(layout, names, self._dummy)
        self.routes.update(routes)
        self.dummies.update(dummies)
        self.kinds.append(kind)
        return True

    def instance(self) -> ATGraph:
        vertices = [f"v{x}" for x in sorted(self.host.nodes)]
        edges, plain = [], 0
        for u, w, data in sorted(self.host.edges(data=True), key=lambda t: (min(t[:2]), max(t[:2]))):
            name = data.get("chord")
            if name is None:
                name, plain = f"e{plain}", plain + 1
            edges.append((name, f"v{u}", f"v{w}"))
        return ATGraph(Graph.build(vertices, edges), frozenset(frozenset(p) for p in self.dummies.values()))


def planted_yes(size: int, rng: random.Random) -> Tuple[ATGraph, PlanarizationCertificate]:
    """A realizable instance on about `size` vertices and its certificate."""
    planting = _Planting(random_host(max(size, 3), rng))
    wanted = max(1, size // PLANT_SPACING)
    for _ in range(wanted * PLANT_ATTEMPTS):
        if len(planting.kinds) == wanted:
            break
        planting.plant(rng.choice(PATTERNS), rng)
    logger.debug("planted %s in a host of %d vertices", planting.kinds, planting.tri.vertices)
    a = planting.instance()
    routes = {e: planting.routes.get(e, ()) for e, _, _ in a.graph.edges}
    return a, _certify(a, routes, planting.dummies, "planted instance")


def mutate(a: ATGraph, rng: random.Random) -> ATGraph:
    """Toggle one crossing pair, keeping pairs non-adjacent and λ ≤ 3."""
    edges = [e for e, _, _ in a.graph.edges]
    if len(edges) >= 2 and (not a.crossings or rng.random() < 0.5):
        for _ in range(MUTATION_ATTEMPTS):
            e, f = rng.sample(edges, 2)
            pair = frozenset((e, f))
            if a.graph.adjacent(e, f) or pair in a.crossings:
                continue
            b = ATGraph(a.graph, a.crossings | {pair})
            if lambda_of(b) <= 3:
                return b
    if not a.crossings:
        raise ValueError("instance has no crossing pair to toggle")
    pairs = sorted(a.crossings, key=lambda p: sorted(map(str, p)))
    return ATGraph(a.graph, a.crossings - {rng.choice(pairs)})


def generate(count: int, size: int = DEFAULT_SIZE, seed: Optional[int] = None,
             mutation_rate: float = DEFAULT_MUTATION_RATE) -> List[PlantedInstance]:
    if not 0.0 <= mutation_rate <= 1.0:
        raise ValueError(f"mutation rate {mutation_rate} outside [0, 1]")
    rng = random.Random(seed)
    out = []
    for _ in range(count):
        a, w = planted_yes(size, rng)
        if rng.random() < mutation_rate:
            out.append(PlantedInstance(mutate(a, rng), None, UNKNOWN_LABEL))
        else:
            out.append(PlantedInstance(a, w, YES_LABEL))
    return out
