"""
Combinatorial embeddings.

A dart is (edge id, segment index, side); side 0 sits at the end toward the
edge's first endpoint. Plain graphs use segment 0 only, planarizations number
the pieces of a crossed edge 0..k. The twin of a dart flips its side.

Functions here take any graph object exposing `vertices` and `edges`
(triples (eid, u, v), parallel edges allowed), so they serve the input
graphs, the contracted graph H, gadget expansions and SPQR skeletons alike.
"""
import itertools
import logging
from dataclasses import dataclass, field
from typing import Dict, Hashable, Iterator, List, Mapping, Optional, Sequence, Tuple

import networkx as nx

from src.errors import NotPlanar

logger = logging.getLogger(__name__)

Dart = Tuple[Hashable, int, int]


def twin(d: Dart) -> Dart:
    return (d[0], d[1], 1 - d[2])


@dataclass(frozen=True)
class RotationSystem:
    rotations: Mapping[Hashable, Tuple[Dart, ...]]
    _node: Dict[Dart, Hashable] = field(init=False, repr=False, compare=False, hash=False)
    _pos: Dict[Dart, int] = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        node: Dict[Dart, Hashable] = {}
        pos: Dict[Dart, int] = {}
        for x, rot in self.rotations.items():
            for i, d in enumerate(rot):
                if d in node:
                    raise ValueError(f"dart {d!r} appears twice")
                node[d] = x
                pos[d] = i
        for d in node:
            if twin(d) not in node:
                raise ValueError(f"dart {d!r} has no twin")
        object.__setattr__(self, "_node", node)
        object.__setattr__(self, "_pos", pos)

    def node_of(self, d: Dart) -> Hashable:
        return self._node[d]

    def succ(self, d: Dart) -> Dart:
        rot = self.rotations[self._node[d]]
        return rot[(self._pos[d] + 1) % len(rot)]

    def pred(self, d: Dart) -> Dart:
        rot = self.rotations[self._node[d]]
        return rot[(self._pos[d] - 1) % len(rot)]

    def darts(self) -> List[Dart]:
        return list(self._node)

    def mirrored(self) -> "RotationSystem":
        return RotationSystem({x: tuple(reversed(rot)) for x, rot in self.rotations.items()})


@dataclass(frozen=True)
class FaceSet:
    faces: Tuple[Tuple[Dart, ...], ...]

    def __len__(self) -> int:
        return len(self.faces)


def trace_faces(r: RotationSystem) -> FaceSet:
    """Faces as dart cycles, following next(d) = successor of twin(d)."""
    seen = set()
    faces = []
    for start in r.darts():
        if start in seen:
            continue
        face = []
        d = start
        while d not in seen:
            seen.add(d)
            face.append(d)
            d = r.succ(twin(d))
        faces.append(tuple(face))
    return FaceSet(tuple(faces))


def _components(r: RotationSystem) -> Dict[Hashable, Hashable]:
    parent = {x: x for x in r.rotations}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for d in r.darts():
        a, b = find(r.node_of(d)), find(r.node_of(twin(d)))
        if a != b:
            parent[a] = b
    return {x: find(x) for x in r.rotations}


def euler_check(r: RotationSystem) -> bool:
    """True iff every connected component satisfies V - E + F = 2."""
    comp = _components(r)
    counts: Dict[Hashable, List[int]] = {}
    for x, c in comp.items():
        counts.setdefault(c, [0, 0, 0])[0] += 1
    for d in r.darts():
        counts[comp[r.node_of(d)]][1] += 1
    for face in trace_faces(r).faces:
        counts[comp[r.node_of(face[0])]][2] += 1
    for c, (v, darts, f) in counts.items():
        if darts == 0:
            f = 1
        if v - darts // 2 + f != 2:
            return False
    return True


@dataclass(frozen=True)
class _Subdivision:
    eid: Hashable


def _simple_networkx(g) -> Tuple[nx.Graph, Dict[Tuple[Hashable, Hashable], Hashable]]:
    """networkx graph of g with every repeated parallel edge subdivided once."""
    nxg = nx.Graph()
    nxg.add_nodes_from(g.vertices)
    direct: Dict[Tuple[Hashable, Hashable], Hashable] = {}
    for eid, u, v in g.edges:
        if (u, v) in direct:
            mid = _Subdivision(eid)
            nxg.add_edge(u, mid)
            nxg.add_edge(mid, v)
        else:
            direct[(u, v)] = eid
            direct[(v, u)] = eid
            nxg.add_edge(u, v)
    return nxg, direct


def is_planar(g) -> bool:
    nxg, _ = _simple_networkx(g)
    return nx.check_planarity(nxg)[0]


def planar_embedding(g) -> RotationSystem:
    nxg, direct = _simple_networkx(g)
    ok, emb = nx.check_planarity(nxg)
    if not ok:
        raise NotPlanar("graph is not planar")
    first = {eid: u for eid, u, _ in g.edges}
    rotations: Dict[Hashable, Tuple[Dart, ...]] = {}
    for x in g.vertices:
        darts = []
        if x in emb:
            for nbr in emb.neighbors_cw_order(x):
                eid = nbr.eid if isinstance(nbr, _Subdivision) else direct[(x, nbr)]
                darts.append((eid, 0, 0 if first[eid] == x else 1))
        rotations[x] = tuple(darts)
    return RotationSystem(rotations)


def darts_at(g) -> Dict[Hashable, List[Dart]]:
    out: Dict[Hashable, List[Dart]] = {x: [] for x in g.vertices}
    for eid, u, v in g.edges:
        out[u].append((eid, 0, 0))
        out[v].append((eid, 0, 1))
    return out


def circular_orders(items: Sequence) -> Iterator[Tuple]:
    """Every circular order of items once, each starting with items[0]."""
    items = list(items)
    if len(items) <= 2:
        yield tuple(items)
        return
    for rest in itertools.permutations(items[1:]):
        yield (items[0],) + rest


def enumerate_rotation_systems(g, limit: Optional[int] = None) -> Iterator[RotationSystem]:
    """All rotation systems of g; exponential, meant for tiny graphs."""
    at = darts_at(g)
    nodes = list(at)
    choices = [list(circular_orders(at[x])) for x in nodes]
    for n, combo in enumerate(itertools.product(*choices)):
        if limit is not None and n >= limit:
            return
        yield RotationSystem(dict(zip(nodes, combo)))


def exhaustive_is_planar(g) -> bool:
    return any(euler_check(r) for r in enumerate_rotation_systems(g))
