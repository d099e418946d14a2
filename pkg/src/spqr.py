"""
SPQR-trees of biconnected multigraphs.

Construction sheds bonds and chains of degree-2 vertices, then splits the
remaining piece at a separation pair found from the faces of a planar
rotation: two vertices sharing two faces that are not just the two sides of
the edge joining them. Pieces without such a pair are triconnected; the
rotation that showed it is kept as the skeleton's rigid embedding. Graphs
that are not planar fall back to an articulation search after deleting each
vertex. Adjacent bonds and adjacent cycles are merged at the end.

Every real edge ends up in its own Q-node, so all skeleton edges of S-, P-
and R-nodes are virtual. A virtual edge and its twin share a link number and
differ in side.
"""
import copy
import itertools
import logging
from dataclasses import dataclass, field
from typing import Dict, Hashable, List, Optional, Sequence, Set, Tuple

import networkx as nx

from src.atcore import Graph
from src.embedding import Dart, RotationSystem, planar_embedding
from src.errors import NotAdjacent, NotBiconnected, NotPlanar, VertexNotInSkeleton

logger = logging.getLogger(__name__)

S, P, Q, R = "S", "P", "Q", "R"

Piece = Dict[Hashable, Tuple[Hashable, Hashable]]
# vertex -> edge ids in rotation order
Rotation = Dict[Hashable, List[Hashable]]


@dataclass(frozen=True, order=True)
class VirtualEdge:
    link: int
    side: int

    def twin(self) -> "VirtualEdge":
        return VirtualEdge(self.link, 1 - self.side)

    def __str__(self) -> str:
        return f"~{self.link}.{self.side}"


def is_virtual(e: Hashable) -> bool:
    return isinstance(e, VirtualEdge)


@dataclass
class SkeletonNode:
    kind: str
    edges: Dict[Hashable, Tuple[Hashable, Hashable]]
    _at: Optional[Dict[Hashable, List[Hashable]]] = field(default=None, repr=False, compare=False)

    def touch(self) -> None:
        """Forget the incidence index after `edges` changed."""
        self._at = None

    def _incidence(self) -> Dict[Hashable, List[Hashable]]:
        if self._at is None:
            at: Dict[Hashable, List[Hashable]] = {}
            for e, (u, v) in self.edges.items():
                at.setdefault(u, []).append(e)
                at.setdefault(v, []).append(e)
            self._at = at
        return self._at

    def vertices(self) -> List[Hashable]:
        return list(self._incidence())

    def has_vertex(self, x: Hashable) -> bool:
        return x in self._incidence()

    def incident(self, x: Hashable) -> List[Hashable]:
        return list(self._incidence().get(x, ()))

    def virtual_edges(self) -> List[VirtualEdge]:
        return [e for e in self.edges if is_virtual(e)]

    def real_edges(self) -> List[Hashable]:
        return [e for e in self.edges if not is_virtual(e)]

    def poles(self) -> Tuple[Hashable, Hashable]:
        a, b = sorted(self.vertices(), key=repr)
        return a, b

    def to_graph(self) -> Graph:
        return Graph.build(self.vertices(), ((e, u, v) for e, (u, v) in self.edges.items()),
                           simple=False)


@dataclass
class SPQRTree:
    nodes: Dict[int, SkeletonNode] = field(default_factory=dict)
    owner: Dict[Hashable, int] = field(default_factory=dict)
    next_node: int = 0
    next_link: int = 0
    # R-node -> skeleton rotation found while building
    rigid: Dict[int, Rotation] = field(default_factory=dict)
    _index: Optional[Dict[Hashable, List[int]]] = field(default=None, repr=False, compare=False)

    def add_node(self, kind: str, edges: Dict[Hashable, Tuple[Hashable, Hashable]]) -> int:
        n = self.next_node
        self.next_node += 1
        self.nodes[n] = SkeletonNode(kind, dict(edges))
        for e in edges:
            self.owner[e] = n
        self._index = None
        return n

    def new_link(self) -> Tuple[VirtualEdge, VirtualEdge]:
        k = self.next_link
        self.next_link += 1
        return VirtualEdge(k, 0), VirtualEdge(k, 1)

    def remove_node(self, n: int) -> None:
        for e in self.nodes[n].edges:
            self.owner.pop(e, None)
        del self.nodes[n]
        self.rigid.pop(n, None)
        self._index = None

    def across(self, ve: VirtualEdge) -> int:
        return self.owner[ve.twin()]

    def adjacent(self, n: int) -> List[Tuple[VirtualEdge, int]]:
        return [(ve, self.across(ve)) for ve in self.nodes[n].virtual_edges()]

    def real_ends(self, e: Hashable) -> Tuple[Hashable, Hashable]:
        return self.nodes[self.owner[e]].edges[e]

    def real_edges(self) -> List[Hashable]:
        return [e for e in self.owner if not is_virtual(e)]

    def vertex_index(self) -> Dict[Hashable, List[int]]:
        if self._index is None:
            index: Dict[Hashable, List[int]] = {}
            for n, node in self.nodes.items():
                for x in node.vertices():
                    index.setdefault(x, []).append(n)
            self._index = index
        return self._index

    def nodes_containing(self, x: Hashable, kinds: str = "SPR") -> List[int]:
        return [n for n in self.vertex_index().get(x, ()) if self.nodes[n].kind in kinds]

    def edges_behind(self, ve: VirtualEdge) -> List[Hashable]:
        """Real edges of the subtree reached through ve."""
        out = []
        stack = [(self.across(ve), ve.twin())]
        while stack:
            n, entry = stack.pop()
            for e in self.nodes[n].edges:
                if e == entry:
                    continue
                if is_virtual(e):
                    stack.append((self.across(e), e.twin()))
                else:
                    out.append(e)
        return out

    def edges_behind_at(self, ve: VirtualEdge, x: Hashable) -> List[Hashable]:
        """Real edges incident to x in the subtree reached through ve.

        Only skeleton edges at x are followed; nodes containing x form a
        connected subtree."""
        out = []
        stack = [(self.across(ve), ve.twin())]
        while stack:
            n, entry = stack.pop()
            for e in self.nodes[n].incident(x):
                if e == entry:
                    continue
                if is_virtual(e):
                    stack.append((self.across(e), e.twin()))
                else:
                    out.append(e)
        return out

    def copy(self) -> "SPQRTree":
        return copy.deepcopy(self)


# ---------------------------------------------------------------- construction

def _require_biconnected(g) -> None:
    vertices = list(g.vertices)
    simple = nx.Graph()
    simple.add_nodes_from(vertices)
    simple.add_edges_from((u, v) for _, u, v in g.edges)
    if len(vertices) == 2 and len(g.edges) >= 2 and simple.number_of_edges() == 1:
        return
    if len(vertices) < 3 or not nx.is_biconnected(simple):
        raise NotBiconnected(f"graph on {len(vertices)} vertices is not biconnected")


def _incidence(piece: Piece) -> Dict[Hashable, List[Hashable]]:
    at: Dict[Hashable, List[Hashable]] = {}
    for e, (u, v) in piece.items():
        at.setdefault(u, []).append(e)
        at.setdefault(v, []).append(e)
    return at


def _restrict(piece: Piece, rotation: Optional[RotationSystem]) -> Optional[Rotation]:
    if rotation is None:
        return None
    out: Rotation = {}
    for x in _incidence(piece):
        out[x] = [d[0] for d in rotation.rotations.get(x, ()) if d[0] in piece]
    return out


def _replace_run(order: Sequence[Hashable], members: Set[Hashable], new: Hashable) -> Optional[List[Hashable]]:
    """order with its circular run of members replaced by new; None if the
    members are not contiguous."""
    run = _run(order, members)
    if run is None:
        return None
    if len(run) == len(order):
        return [new]
    rest = [e for e in order if e not in members]
    i = order.index(run[0])
    before = sum(1 for e in order[:i] if e not in members)
    return rest[:before] + [new] + rest[before:]


def _run(order: Sequence[Hashable], members: Set[Hashable]) -> Optional[List[Hashable]]:
    """The members of order as one circular run, or None if they are split."""
    inside = [e for e in order if e in members]
    if len(inside) == len(order):
        return list(order)
    n = len(order)
    start = next((i for i in range(n) if order[i] in members and order[i - 1] not in members), None)
    if start is None:
        return None
    run = []
    for k in range(n):
        e = order[(start + k) % n]
        if e not in members:
            break
        run.append(e)
    return run if len(run) == len(inside) else None


def _shed_bonds(t: SPQRTree, piece: Piece, rot: Optional[Rotation]):
    """Split every bundle of parallel edges off into its own bond."""
    bundles: Dict[frozenset, List[Hashable]] = {}
    for e, (u, v) in piece.items():
        bundles.setdefault(frozenset((u, v)), []).append(e)
    groups = [group for group in bundles.values() if len(group) >= 2]
    if not groups:
        return None
    rest = dict(piece)
    rest_rot = {x: list(order) for x, order in rot.items()} if rot is not None else None
    bonds = []
    for group in groups:
        a, b = piece[group[0]]
        one_side, other_side = t.new_link()
        bonds.append({**{e: piece[e] for e in group}, one_side: (a, b)})
        for e in group:
            del rest[e]
        rest[other_side] = (a, b)
        if rest_rot is not None:
            for x in (a, b):
                order = _replace_run(rest_rot[x], set(group), other_side)
                if order is None:
                    rest_rot = None
                    break
                rest_rot[x] = order
    return rest, rest_rot, bonds


def _shed_chains(t: SPQRTree, piece: Piece, rot: Optional[Rotation]):
    """Split every maximal path of degree-2 vertices off into a cycle."""
    at = _incidence(piece)

    def other(e: Hashable, x: Hashable) -> Hashable:
        u, v = piece[e]
        return v if u == x else u

    seen: Set[Hashable] = set()
    chains = []
    for x, incident in at.items():
        if len(incident) != 2 or x in seen:
            continue
        seen.add(x)
        halves = []
        for e in incident:
            f, y, walked = e, other(e, x), [e]
            while len(at[y]) == 2 and y != x:
                seen.add(y)
                f = at[y][0] if at[y][1] == f else at[y][1]
                y = other(f, y)
                walked.append(f)
            halves.append((y, f, walked))
        (a, ea, back), (b, eb, ahead) = halves
        chains.append((a, ea, b, eb, back[::-1] + ahead))
    if not chains:
        return None
    rest = dict(piece)
    rest_rot = {x: list(order) for x, order in rot.items()} if rot is not None else None
    cycles = []
    for a, ea, b, eb, path in chains:
        one_side, other_side = t.new_link()
        cycles.append({**{e: piece[e] for e in path}, one_side: (a, b)})
        inner = {y for e in path for y in piece[e]} - {a, b}
        for e in path:
            del rest[e]
        rest[other_side] = (a, b)
        if rest_rot is not None:
            for y in inner:
                del rest_rot[y]
            rest_rot[a] = [other_side if e == ea else e for e in rest_rot[a]]
            rest_rot[b] = [other_side if e == eb else e for e in rest_rot[b]]
    return rest, rest_rot, cycles


def _plane_faces(piece: Piece, rot: Optional[Rotation]):
    """Faces of rot as lists of corners (vertex, position after which the
    corner sits), plus the face on each side of every edge; None when rot
    is not a planar rotation system of the piece."""
    if rot is None:
        return None
    at = _incidence(piece)
    if set(at) != set(rot) or any(len(rot[x]) != len(at[x]) or set(rot[x]) != set(at[x]) for x in at):
        return None
    pos = {x: {e: i for i, e in enumerate(order)} for x, order in rot.items()}
    face_of: Dict[Tuple[Hashable, Hashable], int] = {}
    faces: List[List[Tuple[Hashable, int]]] = []
    for e, (u0, v0) in piece.items():
        for tail in (u0, v0):
            if (e, tail) in face_of:
                continue
            k = len(faces)
            corners: List[Tuple[Hashable, int]] = []
            f, x = e, tail
            while (f, x) not in face_of:
                face_of[(f, x)] = k
                u, v = piece[f]
                y = v if u == x else u
                i = pos[y][f]
                corners.append((y, i))
                f, x = rot[y][(i + 1) % len(rot[y])], y
            faces.append(corners)
    if len(at) - len(piece) + len(faces) != 2:
        return None
    return faces, face_of


def _face_split(piece: Piece, rot: Rotation, faces, face_of):
    """A separation pair and the edges on one side of it, or None when the
    piece is triconnected."""
    between: Dict[frozenset, Hashable] = {frozenset(ends): e for e, ends in piece.items()}
    shared: Dict[frozenset, List[int]] = {}
    corner_of: Dict[Tuple[int, Hashable], int] = {}
    found = None
    for k, corners in enumerate(faces):
        for x, i in corners:
            corner_of[(k, x)] = i
        for (a, _), (b, _) in itertools.combinations(corners, 2):
            if a == b:
                continue
            key = frozenset((a, b))
            for g in shared.get(key, ()):
                e = between.get(key)
                if e is not None and {face_of[(e, a)], face_of[(e, b)]} == {g, k}:
                    continue
                found = (a, b, g, k)
                break
            if found:
                break
            shared.setdefault(key, []).append(k)
        if found:
            break
    if found is None:
        return None
    a, b, g, k = found
    order = rot[a]
    n = len(order)
    c1, c2 = corner_of[(g, a)], corner_of[(k, a)]
    arc = [order[(c1 + 1 + j) % n] for j in range((c2 - c1) % n)]
    at = _incidence(piece)

    def other(e: Hashable, x: Hashable) -> Hashable:
        u, v = piece[e]
        return v if u == x else u

    side: Set[Hashable] = set()
    stack = [other(e, a) for e in arc if other(e, a) != b]
    while stack:
        x = stack.pop()
        if x in side:
            continue
        side.add(x)
        stack.extend(y for e in at[x] for y in (other(e, x),) if y not in (a, b) and y not in side)
    part = {e for x in side for e in at[x]} | {e for e in arc if other(e, a) == b}
    return a, b, part


def _articulation_split(piece: Piece):
    """Separation pair by deleting each vertex in turn; for pieces without a
    planar rotation."""
    nxg = nx.Graph()
    nxg.add_edges_from(piece.values())
    for a in sorted(nxg.nodes, key=repr):
        rest = nxg.copy()
        rest.remove_node(a)
        cuts = sorted(nx.articulation_points(rest), key=repr)
        if not cuts:
            continue
        b = cuts[0]
        rest.remove_node(b)
        side = min(nx.connected_components(rest), key=lambda c: min(repr(x) for x in c))
        part = {e for e, (u, v) in piece.items() if u in side or v in side}
        return a, b, part
    return None


def _side_rotation(rot: Optional[Rotation], side: Piece, ve: VirtualEdge,
                   a: Hashable, b: Hashable) -> Optional[Rotation]:
    if rot is None:
        return None
    out: Rotation = {}
    members = set(side)
    for x in _incidence(side):
        if x in (a, b):
            run = _run(rot[x], members)
            if run is None:
                return None
            out[x] = run + [ve]
        else:
            out[x] = list(rot[x])
    return out


def _fresh_rotation(piece: Piece) -> Optional[Rotation]:
    g = Graph.build(_incidence(piece), ((e, u, v) for e, (u, v) in piece.items()), simple=False)
    try:
        emb = planar_embedding(g)
    except NotPlanar:
        return None
    return {x: [d[0] for d in darts] for x, darts in emb.rotations.items()}


def _piece_kind(piece: Piece) -> str:
    at = _incidence(piece)
    if len(at) == 2:
        return P
    if all(len(es) == 2 for es in at.values()):
        return S
    return R


def build_spqr(g, rotation: Optional[RotationSystem] = None) -> SPQRTree:
    """SPQR-tree of a biconnected multigraph. `rotation` may be a planar
    rotation system of g or of any graph containing it."""
    t = SPQRTree()
    edges = {eid: (u, v) for eid, u, v in g.edges}
    if len(edges) == 1:
        t.add_node(Q, edges)
        return t
    _require_biconnected(g)
    pending: List[Tuple[Piece, Optional[Rotation]]] = [(edges, _restrict(edges, rotation))]
    final: List[Tuple[Piece, Optional[Rotation]]] = []
    while pending:
        piece, rot = pending.pop()
        if _piece_kind(piece) != R:
            final.append((piece, None))
            continue
        shed = _shed_bonds(t, piece, rot) or _shed_chains(t, piece, rot)
        if shed is not None:
            rest, rest_rot, done = shed
            final.extend((p, None) for p in done)
            pending.append((rest, rest_rot))
            continue
        plane = _plane_faces(piece, rot)
        if plane is None:
            rot = _fresh_rotation(piece)
            plane = _plane_faces(piece, rot)
        split = _face_split(piece, rot, *plane) if plane is not None else _articulation_split(piece)
        if plane is None:
            rot = None
        if split is None:
            final.append((piece, rot))
            continue
        a, b, part = split
        one_side, other_side = t.new_link()
        first = {e: ends for e, ends in piece.items() if e in part}
        second = {e: ends for e, ends in piece.items() if e not in part}
        first[one_side] = (a, b)
        second[other_side] = (a, b)
        pending.append((first, _side_rotation(rot, first, one_side, a, b)))
        pending.append((second, _side_rotation(rot, second, other_side, a, b)))
    hints = {}
    for piece, rot in final:
        n = t.add_node(_piece_kind(piece), piece)
        if rot is not None and t.nodes[n].kind == R:
            hints[n] = rot
    _merge_same_kind(t)
    inner = _attach_q_nodes(t)
    for n, rot in hints.items():
        t.rigid[n] = {x: [inner.get(e, e) for e in order] for x, order in rot.items()}
    logger.debug("SPQR-tree with %d nodes for %d edges", len(t.nodes), len(edges))
    return t


def _merge_same_kind(t: SPQRTree) -> None:
    for n in sorted(t.nodes):
        if n not in t.nodes or t.nodes[n].kind not in (S, P):
            continue
        while True:
            link = next(((ve, m) for ve, m in t.adjacent(n) if t.nodes[m].kind == t.nodes[n].kind), None)
            if link is None:
                break
            _merge_in_place(t, n, link[1], link[0])


def _attach_q_nodes(t: SPQRTree) -> Dict[Hashable, VirtualEdge]:
    """Give each real edge a Q-node; returns the skeleton edge now standing
    for each real edge."""
    inner_of: Dict[Hashable, VirtualEdge] = {}
    for n in sorted(t.nodes):
        node = t.nodes[n]
        if node.kind == Q:
            continue
        rebuilt: Dict[Hashable, Tuple[Hashable, Hashable]] = {}
        for e, ends in node.edges.items():
            if is_virtual(e):
                rebuilt[e] = ends
                continue
            inner, outer = t.new_link()
            rebuilt[inner] = ends
            inner_of[e] = inner
            t.owner[inner] = n
            t.add_node(Q, {e: ends, outer: ends})
        node.edges = rebuilt
        node.touch()
    t._index = None
    return inner_of


def _merge_in_place(t: SPQRTree, keep: int, gone: int, ve: VirtualEdge) -> None:
    kept, absorbed = t.nodes[keep], t.nodes[gone]
    kinds = {kept.kind, absorbed.kind}
    if len(kinds) == 1:
        kind = kept.kind
    elif Q in kinds:
        kind = (kinds - {Q}).pop()
    else:
        kind = R
    del kept.edges[ve]
    del absorbed.edges[ve.twin()]
    del t.owner[ve]
    del t.owner[ve.twin()]
    for e, ends in absorbed.edges.items():
        kept.edges[e] = ends
        t.owner[e] = keep
    del t.nodes[gone]
    kept.kind = kind
    kept.touch()
    t.rigid.pop(keep, None)
    t.rigid.pop(gone, None)
    t._index = None


def merge_nodes(t: SPQRTree, mu: int, nu: int) -> SPQRTree:
    """Copy of t with mu and nu merged along their shared virtual edge."""
    link = next((ve for ve, m in t.adjacent(mu) if m == nu), None)
    if link is None:
        raise NotAdjacent(f"nodes {mu} and {nu} are not adjacent")
    out = t.copy()
    _merge_in_place(out, mu, nu, link)
    return out


# ---------------------------------------------------------------- distribution

def distribution(t: SPQRTree, n: int, x: Hashable) -> Dict[Hashable, List[Hashable]]:
    """Real edges at x grouped by the skeleton edge of n that carries them."""
    node = t.nodes[n]
    if not node.has_vertex(x):
        raise VertexNotInSkeleton(f"{x!r} is not in the skeleton of node {n}")
    out: Dict[Hashable, List[Hashable]] = {}
    for e in node.incident(x):
        out[e] = t.edges_behind_at(e, x) if is_virtual(e) else [e]
    return out


def distribution_vector(t: SPQRTree, n: int, x: Hashable) -> Tuple[int, ...]:
    return tuple(sorted((len(g) for g in distribution(t, n, x).values()), reverse=True))


# ---------------------------------------------------------------- embeddings

class SkeletonEmbedding:
    """Skeleton rotations per node: R-nodes from a planar embedding (optionally
    flipped), P-nodes from a chosen edge order (reversed at the second pole)."""

    def __init__(self, t: SPQRTree, flips: Optional[Dict[int, bool]] = None,
                 orders: Optional[Dict[int, Sequence[Hashable]]] = None,
                 rigid: Optional[Dict[int, Rotation]] = None):
        self.t = t
        self.flips = flips or {}
        self.orders = orders or {}
        self.rigid = rigid if rigid is not None else t.rigid
        self._seen: Dict[int, Dict[Hashable, List[Hashable]]] = {}

    def rigid_rotation(self, n: int) -> Rotation:
        if n not in self.rigid:
            rot = planar_embedding(self.t.nodes[n].to_graph())
            self.rigid[n] = {x: [d[0] for d in darts] for x, darts in rot.rotations.items()}
        return self.rigid[n]

    def at(self, n: int) -> Dict[Hashable, List[Hashable]]:
        if n not in self._seen:
            self._seen[n] = self._skeleton_rotation(n)
        return self._seen[n]

    def _skeleton_rotation(self, n: int) -> Dict[Hashable, List[Hashable]]:
        node = self.t.nodes[n]
        if node.kind == P:
            a, b = node.poles()
            seq = list(self.orders.get(n, list(node.edges)))
            return {a: seq, b: seq[::-1]}
        if node.kind == R:
            base = self.rigid_rotation(n)
            if self.flips.get(n, False):
                return {x: rot[::-1] for x, rot in base.items()}
            return base
        return {x: node.incident(x) for x in node.vertices()}


def rotation_at(t: SPQRTree, emb: SkeletonEmbedding, x: Hashable, home: int) -> Tuple[Dart, ...]:
    """Rotation of x in the composed embedding; each virtual edge is replaced
    by the rotation of its twin's node, read after the twin in the same direction."""
    out: List[Dart] = []
    stack = [iter(emb.at(home)[x])]
    while stack:
        e = next(stack[-1], None)
        if e is None:
            stack.pop()
            continue
        if is_virtual(e):
            tw = e.twin()
            rot = emb.at(t.owner[tw])[x]
            i = rot.index(tw)
            stack.append(iter(rot[i + 1:] + rot[:i]))
        else:
            u, _ = t.real_ends(e)
            out.append((e, 0, 0 if u == x else 1))
    return tuple(out)


def compose_embedding(t: SPQRTree, emb: Optional[SkeletonEmbedding] = None) -> RotationSystem:
    emb = emb or SkeletonEmbedding(t)
    index = t.vertex_index()
    return RotationSystem({x: rotation_at(t, emb, x, nodes[0]) for x, nodes in index.items()})


def circular_edge_orders(node: SkeletonNode) -> List[Tuple[Hashable, ...]]:
    """All circular orders of a P-node's skeleton edges, first edge fixed."""
    edges = list(node.edges)
    return [(edges[0],) + rest for rest in itertools.permutations(edges[1:])]


# ---------------------------------------------------------------- debug

def dump(t: SPQRTree) -> str:
    lines = []
    for n in sorted(t.nodes):
        node = t.nodes[n]
        lines.append(f"{node.kind}{n}:")
        for x in sorted(node.vertices(), key=repr):
            parts = []
            for e in node.incident(x):
                u, v = node.edges[e]
                other = v if u == x else u
                tag = f"{e}->{t.across(e)}" if is_virtual(e) else str(e)
                parts.append(f"{other}[{tag}]")
            lines.append(f"  {x}: " + " ".join(parts))
    return "\n".join(lines)
