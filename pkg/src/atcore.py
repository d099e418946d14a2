"""
AT-graph data model for SATR.

Provides:
- Graph / ATGraph value types and their JSON form
- the crossing graph, lambda and the K2/P3/K3 classification with colouring
- validate: adjacent crossing pairs are a NO
- PlanarizationCertificate and an independent check_certificate

Instance JSON:
    {"vertices": [id, ...],
     "edges": [{"id": str, "u": id, "v": id}, ...],
     "crossings": [[eid, eid], ...]}
Ids are normalized to strings on load.
"""
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, FrozenSet, Hashable, Iterable, List, Mapping, Optional, Sequence, Tuple

import networkx as nx

from src.embedding import Dart, RotationSystem, euler_check
from src.errors import MalformedCertificate, MalformedInstance, ComponentTooLarge

logger = logging.getLogger(__name__)

RED, BLUE, PURPLE = "red", "blue", "purple"
COLORS = (RED, BLUE, PURPLE)

YES, NO = "YES", "NO"

# NO reason codes
ADJACENT_CROSSING_PAIR = "AdjacentCrossingPair"


@dataclass(frozen=True)
class Graph:
    """Undirected graph with named edges. `simple=False` admits parallel edges."""

    vertices: Tuple[Hashable, ...]
    edges: Tuple[Tuple[Hashable, Hashable, Hashable], ...]
    simple: bool = True
    _ends: Dict[Hashable, Tuple[Hashable, Hashable]] = field(
        init=False, repr=False, compare=False, hash=False)
    _incident: Dict[Hashable, List[Hashable]] = field(
        init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        ends: Dict[Hashable, Tuple[Hashable, Hashable]] = {}
        incident: Dict[Hashable, List[Hashable]] = {}
        for v in self.vertices:
            if v in incident:
                raise MalformedInstance(f"duplicate vertex {v!r}")
            incident[v] = []
        seen_pairs = set()
        for eid, u, v in self.edges:
            if eid in ends:
                raise MalformedInstance(f"duplicate edge id {eid!r}")
            if u not in incident or v not in incident:
                raise MalformedInstance(f"edge {eid!r} has an undeclared endpoint")
            if u == v:
                raise MalformedInstance(f"edge {eid!r} is a self-loop")
            key = frozenset((u, v))
            if self.simple and key in seen_pairs:
                raise MalformedInstance(f"edge {eid!r} is parallel to another edge")
            seen_pairs.add(key)
            ends[eid] = (u, v)
            incident[u].append(eid)
            incident[v].append(eid)
        object.__setattr__(self, "_ends", ends)
        object.__setattr__(self, "_incident", incident)

    @classmethod
    def build(cls, vertices: Iterable[Hashable], edges: Iterable[Sequence[Hashable]],
              simple: bool = True) -> "Graph":
        return cls(tuple(vertices), tuple((e, u, v) for e, u, v in edges), simple)

    def ends(self, eid: Hashable) -> Tuple[Hashable, Hashable]:
        return self._ends[eid]

    def has_edge(self, eid: Hashable) -> bool:
        return eid in self._ends

    def incident(self, v: Hashable) -> Tuple[Hashable, ...]:
        return tuple(self._incident[v])

    def degree(self, v: Hashable) -> int:
        return len(self._incident[v])

    def other(self, eid: Hashable, v: Hashable) -> Hashable:
        u, w = self._ends[eid]
        return w if v == u else u

    def side(self, eid: Hashable, v: Hashable) -> int:
        """0 if v is the first endpoint of eid, 1 otherwise."""
        return 0 if self._ends[eid][0] == v else 1

    def dart(self, eid: Hashable, v: Hashable) -> Dart:
        return (eid, 0, self.side(eid, v))

    def adjacent(self, e: Hashable, f: Hashable) -> bool:
        return bool(set(self._ends[e]) & set(self._ends[f]))

    def to_networkx(self) -> nx.MultiGraph:
        g = nx.MultiGraph()
        g.add_nodes_from(self.vertices)
        for eid, u, v in self.edges:
            g.add_edge(u, v, key=eid)
        return g


@dataclass(frozen=True)
class ATGraph:
    graph: Graph
    crossings: FrozenSet[FrozenSet[Hashable]]

    def __post_init__(self):
        for pair in self.crossings:
            if len(pair) != 2:
                raise MalformedInstance(f"crossing pair {sorted(pair, key=str)} needs two distinct edges")
            for e in pair:
                if not self.graph.has_edge(e):
                    raise MalformedInstance(f"crossing pair references unknown edge {e!r}")


@dataclass(frozen=True)
class CrossingGraph:
    nodes: Tuple[Hashable, ...]
    links: FrozenSet[FrozenSet[Hashable]]

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(self.nodes)
        g.add_edges_from(tuple(pair) for pair in self.links)
        return g

    def components(self) -> List[List[Hashable]]:
        comps = [sorted(c, key=str) for c in nx.connected_components(self.to_networkx())]
        return sorted(comps, key=lambda c: str(c[0]))


@dataclass(frozen=True)
class CrossingComponent:
    kind: str
    edges: Tuple[Hashable, ...]
    colors: Mapping[Hashable, str]

    def edge_of(self, color: str) -> Hashable:
        return next(e for e in self.edges if self.colors[e] == color)


@dataclass(frozen=True)
class PlanarizationCertificate:
    dummies: Tuple[Tuple[str, Tuple[Hashable, Hashable]], ...]
    routes: Mapping[Hashable, Tuple[str, ...]]
    rotations: Mapping[Hashable, Tuple[Dart, ...]]


@dataclass(frozen=True)
class Verdict:
    answer: str
    witness: Optional[PlanarizationCertificate] = None
    reason: Optional[str] = None
    trace: Tuple[str, ...] = ()

    def __post_init__(self):
        if (self.answer == YES) != (self.witness is not None):
            raise ValueError("witness must be present exactly on YES")


# ---------------------------------------------------------------- JSON forms

def load_instance(data: Mapping[str, Any]) -> ATGraph:
    try:
        vertices = [str(v) for v in data["vertices"]]
        edges = [(str(e["id"]), str(e["u"]), str(e["v"])) for e in data["edges"]]
        raw_pairs = [tuple(str(x) for x in pair) for pair in data.get("crossings", [])]
    except (KeyError, TypeError) as exc:
        raise MalformedInstance(f"instance JSON is missing a field: {exc}") from exc
    pairs = set()
    for pair in raw_pairs:
        key = frozenset(pair)
        if key in pairs:
            raise MalformedInstance(f"crossing pair {list(pair)} appears twice")
        pairs.add(key)
    return ATGraph(Graph.build(vertices, edges), frozenset(pairs))


def instance_to_json(a: ATGraph) -> Dict[str, Any]:
    return {
        "vertices": list(a.graph.vertices),
        "edges": [{"id": e, "u": u, "v": v} for e, u, v in a.graph.edges],
        "crossings": sorted(sorted(pair, key=str) for pair in a.crossings),
    }


def _canonical_cycle(darts: Sequence[Dart]) -> List[Dart]:
    if not darts:
        return []
    start = min(range(len(darts)), key=lambda i: _dart_key(darts[i]))
    return list(darts[start:]) + list(darts[:start])


def _dart_key(d: Dart):
    return (str(d[0]), d[1], d[2])


def certificate_to_json(w: PlanarizationCertificate) -> Dict[str, Any]:
    return {
        "dummies": [[d, list(pair)] for d, pair in w.dummies],
        "routes": {str(e): list(r) for e, r in sorted(w.routes.items(), key=lambda kv: str(kv[0]))},
        "rotations": {
            str(x): [list(d) for d in _canonical_cycle(rot)]
            for x, rot in sorted(w.rotations.items(), key=lambda kv: str(kv[0]))
        },
    }


def load_certificate(data: Mapping[str, Any]) -> PlanarizationCertificate:
    try:
        dummies = tuple((str(d), (str(pair[0]), str(pair[1]))) for d, pair in data["dummies"])
        routes = {str(e): tuple(str(x) for x in r) for e, r in data["routes"].items()}
        rotations = {
            str(x): tuple((str(d[0]), int(d[1]), int(d[2])) for d in rot)
            for x, rot in data["rotations"].items()
        }
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise MalformedCertificate(f"certificate JSON is malformed: {exc}") from exc
    return PlanarizationCertificate(dummies, routes, rotations)


# ---------------------------------------------------------------- crossing graph

def build_crossing_graph(a: ATGraph) -> CrossingGraph:
    return CrossingGraph(tuple(e for e, _, _ in a.graph.edges), a.crossings)


def lambda_of(a: ATGraph) -> int:
    """Vertex count of the largest crossing-graph component (0 for an edgeless graph)."""
    comps = build_crossing_graph(a).components()
    return max((len(c) for c in comps), default=0)


def classify_components(c: CrossingGraph) -> List[CrossingComponent]:
    g = c.to_networkx()
    out: List[CrossingComponent] = []
    for comp in c.components():
        if len(comp) == 1:
            continue
        if len(comp) > 3:
            raise ComponentTooLarge(f"crossing component of {len(comp)} edges")
        if len(comp) == 2:
            colors = {comp[0]: RED, comp[1]: BLUE}
            out.append(CrossingComponent("K2", tuple(comp), colors))
            continue
        degrees = {e: g.degree(e) for e in comp}
        if all(d == 2 for d in degrees.values()):
            colors = {comp[0]: RED, comp[1]: BLUE, comp[2]: PURPLE}
            out.append(CrossingComponent("K3", tuple(comp), colors))
        else:
            middle = next(e for e in comp if degrees[e] == 2)
            ends = [e for e in comp if e != middle]
            colors = {ends[0]: RED, ends[1]: BLUE, middle: PURPLE}
            out.append(CrossingComponent("P3", (ends[0], middle, ends[1]), colors))
    return out


def validate(a: ATGraph) -> Optional[str]:
    """NO reason for instances no simple drawing can realize, None when fine."""
    for pair in a.crossings:
        e, f = tuple(pair)
        if a.graph.adjacent(e, f):
            logger.debug("crossing pair %s shares an endpoint", sorted(pair, key=str))
            return ADJACENT_CROSSING_PAIR
    return None


# ---------------------------------------------------------------- certificate check

def _alternates(rot: Sequence[Dart], e: Hashable, f: Hashable) -> bool:
    if len(rot) != 4:
        return False
    owners = [d[0] for d in rot]
    return owners[0] == owners[2] and owners[1] == owners[3] and {owners[0], owners[1]} == {e, f}


def check_certificate(a: ATGraph, w: PlanarizationCertificate) -> bool:
    """Independent verifier: dummies match crossings, alternation, one crossing
    per pair, and genus zero of the planarization."""
    g = a.graph
    vertex_set = set(g.vertices)
    dummy_pair: Dict[str, FrozenSet[Hashable]] = {}
    for d, pair in w.dummies:
        if d in vertex_set or d in dummy_pair:
            raise MalformedCertificate(f"dummy id {d!r} collides with another node")
        for e in pair:
            if not g.has_edge(e):
                raise MalformedCertificate(f"dummy {d!r} references unknown edge {e!r}")
        dummy_pair[d] = frozenset(pair)
    for e, route in w.routes.items():
        if not g.has_edge(e):
            raise MalformedCertificate(f"route for unknown edge {e!r}")
        for d in route:
            if d not in dummy_pair:
                raise MalformedCertificate(f"route of {e!r} visits unknown dummy {d!r}")

    pairs = list(dummy_pair.values())
    if len(set(pairs)) != len(pairs) or set(pairs) != set(a.crossings):
        logger.debug("dummies do not biject with the crossing pairs")
        return False
    if any(len(p) != 2 or g.adjacent(*tuple(p)) for p in pairs):
        return False
    for e, route in w.routes.items():
        if len(set(route)) != len(route):
            return False
        if any(e not in dummy_pair[d] for d in route):
            return False
    for d, pair in dummy_pair.items():
        if any(d not in w.routes.get(e, ()) for e in pair):
            return False

    expected: Dict[Hashable, set] = {x: set() for x in vertex_set}
    expected.update({d: set() for d in dummy_pair})
    for eid, u, v in g.edges:
        route = w.routes.get(eid, ())
        stops = [u] + list(route) + [v]
        for i in range(len(stops) - 1):
            expected[stops[i]].add((eid, i, 0))
            expected[stops[i + 1]].add((eid, i, 1))
    for x in w.rotations:
        if x not in expected:
            raise MalformedCertificate(f"rotation given for unknown node {x!r}")
    rotations: Dict[Hashable, Tuple[Dart, ...]] = {}
    for x, darts in expected.items():
        rot = tuple(w.rotations.get(x, ()))
        if len(set(rot)) != len(rot) or set(rot) != darts:
            raise MalformedCertificate(f"rotation at {x!r} does not list exactly its darts")
        rotations[x] = rot

    for d, pair in dummy_pair.items():
        e, f = tuple(pair)
        if not _alternates(rotations[d], e, f):
            logger.debug("dummy %s does not alternate its edges", d)
            return False
    return euler_check(RotationSystem(rotations))
