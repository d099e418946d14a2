"""
Certificate extraction for YES instances.

The embedding of each block comes out of the solver: every piece is embedded
through its PQ gadgets, pieces cut apart by a surgery are glued back at
their split pair, and the piece's steps are replayed newest first. A step
that dropped a constraint recorded the P-node it relied on; replaying it
reorders that node's children until the dropped constraint holds again.

`embed_block` is an exact search over a block's SPQR-tree: every R-node next
to a constrained vertex may be reflected, every such P-node may permute its
children, and pycosat picks a consistent assignment. It cross-checks blocks
the solver rejects and stands in when a replayed embedding fails to verify.

Blocks are then glued at cut vertices (mirroring child blocks where a
crossing vertex needs it), and each crossing vertex is replaced by the
dummies of its untangled arrangement.
"""
import itertools
import logging
from collections import deque
from dataclasses import dataclass
from typing import TYPE_CHECKING, Any, Dict, Hashable, List, Mapping, Optional, Sequence, Tuple

import pycosat

from src.atcore import ATGraph, PlanarizationCertificate
from src.constraints import AlternationConstraint
from src.embedding import Dart, RotationSystem, circular_orders, euler_check, planar_embedding, trace_faces, twin
from src.errors import InternalInconsistency, NotPlanar
from src.pqtree import canonical_order, is_compatible
from src.spqr import P as PNODE, R as RNODE
from src.spqr import SkeletonEmbedding, build_spqr, circular_edge_orders, compose_embedding, rotation_at
from src.untangle import LETTER_OF, untangle

if TYPE_CHECKING:
    from src.acp import ACPInstance, SplitPlan, Step

logger = logging.getLogger(__name__)

Rotations = Dict[Hashable, Tuple[Dart, ...]]


# ---------------------------------------------------------------- replay

@dataclass(frozen=True, eq=False)
class Hinge:
    """A P-node seen from its poles: the darts behind each skeleton edge."""
    first: Hashable
    second: Hashable
    at_first: Mapping[Hashable, List[Dart]]
    at_second: Mapping[Hashable, List[Dart]]


def _holds(need: Any, order: Sequence[Dart]) -> bool:
    if isinstance(need, AlternationConstraint):
        return need.satisfied(order)
    return is_compatible(need, order)


def regroup(order: Sequence[Dart], groups: Mapping[Hashable, Sequence[Dart]],
            sigma: Sequence[Hashable]) -> Tuple[Dart, ...]:
    """The rotation `order` with its groups (each a contiguous run) put in
    the circular order sigma; runs keep their internal order."""
    owner = {d: e for e, darts in groups.items() for d in darts}
    if any(d not in owner for d in order):
        raise InternalInconsistency("rotation holds darts outside the P-node groups")
    n = len(order)
    start = next((i for i in range(n) if owner[order[i]] != owner[order[i - 1]]), None)
    if start is None:
        return tuple(order)
    runs: Dict[Hashable, List[Dart]] = {}
    previous = None
    for i in range(n):
        d = order[(start + i) % n]
        e = owner[d]
        if e != previous and e in runs:
            raise InternalInconsistency(f"darts behind {e} are not contiguous")
        runs.setdefault(e, []).append(d)
        previous = e
    return tuple(d for e in sigma for d in runs.get(e, ()))


def _reorder_pnode(rot: Rotations, hinge: Hinge, needs: Mapping[Hashable, Any]) -> None:
    x, y = hinge.first, hinge.second
    for sigma in circular_orders(sorted(hinge.at_first, key=repr)):
        at_x = regroup(rot[x], hinge.at_first, sigma)
        at_y = regroup(rot[y], hinge.at_second, sigma[::-1])
        if all(_holds(needs[z], r) for z, r in ((x, at_x), (y, at_y)) if z in needs):
            rot[x], rot[y] = at_x, at_y
            return
    raise InternalInconsistency(f"no order of the P-node at {x!r}, {y!r} meets the dropped constraint")


def _reorder_cycle(rot: Rotations, hinges: Sequence[Hinge], needs: Mapping[Hashable, Any]) -> None:
    """Reorder the P-nodes around an S-node cycle; hinge i joins the vertex
    shared with hinge i-1 to the one shared with hinge i+1."""
    k = len(hinges)
    options = [list(circular_orders(sorted(hg.at_first, key=repr))) for hg in hinges]

    def at(i: int, before: Sequence[Hashable], after: Sequence[Hashable]) -> Tuple[Dart, ...]:
        x = hinges[i].first
        turned = regroup(rot[x], hinges[i - 1].at_second, before[::-1])
        return regroup(turned, hinges[i].at_first, after)

    for s0 in options[0]:
        layers: List[Dict[Tuple, Optional[Tuple]]] = [{s0: None}]
        for i in range(1, k):
            layer = {}
            for s in options[i]:
                back = next((p for p in layers[-1] if _holds(needs[hinges[i].first], at(i, p, s))), None)
                if back is not None:
                    layer[s] = back
            if not layer:
                break
            layers.append(layer)
        if len(layers) < k:
            continue
        last = next((p for p in layers[-1] if _holds(needs[hinges[0].first], at(0, p, s0))), None)
        if last is None:
            continue
        chosen = [last]
        for i in range(k - 1, 0, -1):
            chosen.append(layers[i][chosen[-1]])
        chosen.reverse()
        fresh = {hinges[i].first: at(i, chosen[i - 1], chosen[i]) for i in range(k)}
        rot.update(fresh)
        return
    raise InternalInconsistency(f"no P-node orders around the cycle at {hinges[0].first!r} meet its constraints")


def replay(steps: Sequence["Step"], rot: RotationSystem) -> RotationSystem:
    """Undo the constraint drops of a piece, newest first."""
    rotations = dict(rot.rotations)
    for step in reversed(steps):
        hinges = step.data.get("hinges")
        if not hinges:
            continue
        if len(hinges) == 1:
            _reorder_pnode(rotations, hinges[0], step.data["needs"])
        else:
            _reorder_cycle(rotations, hinges, step.data["needs"])
        logger.debug("replayed %s at %r", step.lemma, step.vertex)
    return RotationSystem(rotations)


def _opened(order: Sequence[Dart], d: Dart) -> Tuple[Dart, ...]:
    i = order.index(d)
    return tuple(order[i + 1:]) + tuple(order[:i])


def glue_pieces(step: "Step", inner: RotationSystem, outer: RotationSystem) -> RotationSystem:
    """Rotation system of a piece split by a surgery: the piece holding the
    surgery edge is drawn inside a face of the other piece that meets both
    poles, mirrored if needed, and the surgery edge is removed."""
    edge = step.data["edge"]
    needs = step.data["needs"]
    v = step.vertex
    (u,) = [x for x in needs if x != v]
    corners: Dict[Hashable, List[Tuple[int, int]]] = {}
    for k, face in enumerate(trace_faces(outer).faces):
        for d in face:
            x = outer.node_of(twin(d))
            if x in (v, u):
                corners.setdefault(k, []).append((x, outer.rotations[x].index(twin(d))))
    candidates = []
    for spots in corners.values():
        at_v = [i for x, i in spots if x == v]
        at_u = [i for x, i in spots if x == u]
        candidates += [(i, j) for i in at_v for j in at_u]
    for mirror in (False, True):
        piece = inner.mirrored() if mirror else inner
        opened = {}
        for x in (v, u):
            (d,) = [d for d in piece.rotations[x] if d[0] == edge]
            opened[x] = _opened(piece.rotations[x], d)
        for i, j in candidates:
            rv = outer.rotations[v][:i + 1] + opened[v] + outer.rotations[v][i + 1:]
            ru = outer.rotations[u][:j + 1] + opened[u] + outer.rotations[u][j + 1:]
            if not (_holds(needs[v], rv) and _holds(needs[u], ru)):
                continue
            rotations = {x: r for x, r in piece.rotations.items() if x not in (v, u)}
            rotations.update((x, r) for x, r in outer.rotations.items() if x not in (v, u))
            rotations[v], rotations[u] = rv, ru
            glued = RotationSystem(rotations)
            if euler_check(glued):
                return glued
    raise InternalInconsistency(f"pieces split at {v!r}, {u!r} cannot be glued back")


# ---------------------------------------------------------------- blocks

def _options(t, n: int) -> list:
    if t.nodes[n].kind == RNODE:
        return [False, True]
    return circular_edge_orders(t.nodes[n])


def embed_block(block: "ACPInstance") -> Optional[RotationSystem]:
    """Planar rotation system of a block meeting its alternation
    constraints, or None when there is none."""
    g = block.graph
    try:
        if not block.alternation:
            return planar_embedding(g)
        t = build_spqr(g)
        emb = SkeletonEmbedding(t)
        for n, node in t.nodes.items():
            if node.kind == RNODE:
                emb.rigid_rotation(n)
    except NotPlanar:
        return None
    index = t.vertex_index()

    literals: Dict[int, object] = {}
    clauses: List[List[int]] = []
    count = 0

    def literal(n: int, option) -> int:
        nonlocal count
        if n not in literals:
            if t.nodes[n].kind == RNODE:
                count += 1
                literals[n] = count
            else:
                opts = _options(t, n)
                literals[n] = {o: count + 1 + i for i, o in enumerate(opts)}
                count += len(opts)
                lits = list(literals[n].values())
                clauses.append(lits)
                clauses.extend([-a, -b] for a, b in itertools.combinations(lits, 2))
        if t.nodes[n].kind == RNODE:
            return literals[n] if option else -literals[n]
        return literals[n][option]

    for v in sorted(block.alternation, key=repr):
        c = block.alternation[v]
        nodes = [n for n in index[v] if t.nodes[n].kind in (PNODE, RNODE)]
        allowed = 0
        for combo in itertools.product(*(_options(t, n) for n in nodes)):
            trial = _trial(t, emb, nodes, combo)
            if c.satisfied(rotation_at(t, trial, v, index[v][0])):
                allowed += 1
            else:
                clauses.append([-literal(n, o) for n, o in zip(nodes, combo)])
        if not allowed:
            logger.debug("no skeleton choice satisfies %s at %s", c, v)
            return None
        for n in nodes:
            literal(n, _options(t, n)[0])

    solution = pycosat.solve(clauses) if clauses else []
    if solution == "UNSAT":
        return None
    chosen = set(lit for lit in solution if lit > 0)
    flips, orders = {}, {}
    for n, lits in literals.items():
        if t.nodes[n].kind == RNODE:
            flips[n] = lits in chosen
        else:
            orders[n] = next(o for o, x in lits.items() if x in chosen)
    rot = compose_embedding(t, SkeletonEmbedding(t, flips, orders, emb.rigid))
    for v, c in block.alternation.items():
        if not c.satisfied(rot.rotations[v]):
            raise InternalInconsistency(f"block embedding breaks {c} at {v}")
    if not euler_check(rot):
        raise InternalInconsistency("block embedding is not planar")
    return rot


def _trial(t, emb: SkeletonEmbedding, nodes: Sequence[int], combo: Sequence) -> SkeletonEmbedding:
    flips = {n: o for n, o in zip(nodes, combo) if t.nodes[n].kind == RNODE}
    orders = {n: o for n, o in zip(nodes, combo) if t.nodes[n].kind == PNODE}
    return SkeletonEmbedding(t, flips, orders, emb.rigid)


# ---------------------------------------------------------------- cut vertices

def _same_cycle(a: Sequence[Dart], b: Sequence[Dart]) -> bool:
    return canonical_order(a) == canonical_order(b)


def _interleave(order: Sequence[Dart], first: set, second: set) -> bool:
    marks = [0 if d in first else 1 for d in order if d in first or d in second]
    changes = sum(1 for i in range(len(marks)) if marks[i] != marks[i - 1])
    return changes > 2


def _merge_constrained(c, parent: Tuple[Dart, ...], children: List[Tuple[Dart, ...]]
                       ) -> Tuple[Tuple[Dart, ...], List[bool]]:
    groups = [parent] + children
    sets = [set(g) for g in groups]
    for order in circular_orders([d for g in groups for d in g]):
        if not c.satisfied(order):
            continue
        if not _same_cycle([d for d in order if d in sets[0]], parent):
            continue
        flips = []
        for g, s in zip(children, sets[1:]):
            seen = [d for d in order if d in s]
            if _same_cycle(seen, g):
                flips.append(False)
            elif _same_cycle(seen, g[::-1]):
                flips.append(True)
            else:
                break
        if len(flips) != len(children):
            continue
        if any(_interleave(order, a, b) for a, b in itertools.combinations(sets, 2)):
            continue
        return tuple(order), flips
    raise InternalInconsistency(f"blocks cannot be glued under {c}")


def recombine(h: "ACPInstance", plan: "SplitPlan", embedded: List[RotationSystem]) -> RotationSystem:
    """Rotation system of H from block embeddings."""
    blocks_at: Dict[int, List[Hashable]] = {i: [] for i in range(len(plan.blocks))}
    for v, idx in plan.cut_vertices.items():
        for i in idx:
            blocks_at[i].append(v)
    mirrored = [False] * len(plan.blocks)

    def rotation(i: int, v: Hashable) -> Tuple[Dart, ...]:
        rot = tuple(embedded[i].rotations[v])
        return rot[::-1] if mirrored[i] else rot

    final: Dict[Hashable, Tuple[Dart, ...]] = {}
    visited = set()
    for root in range(len(plan.blocks)):
        if root in visited:
            continue
        visited.add(root)
        queue = deque([root])
        while queue:
            i = queue.popleft()
            for v in sorted(blocks_at[i], key=repr):
                if v in final:
                    continue
                children = [j for j in plan.cut_vertices[v] if j not in visited]
                parent = rotation(i, v)
                if v in plan.original:
                    order, flips = _merge_constrained(plan.original[v], parent,
                                                      [rotation(j, v) for j in children])
                else:
                    order = parent + tuple(d for j in children for d in rotation(j, v))
                    flips = [False] * len(children)
                final[v] = order
                for j, flip in zip(children, flips):
                    mirrored[j] = flip
                    visited.add(j)
                    queue.append(j)
    for i, block in enumerate(plan.blocks):
        for v in block.graph.vertices:
            if v not in plan.cut_vertices:
                final[v] = rotation(i, v)
    for v in h.graph.vertices:
        final.setdefault(v, ())
    out = RotationSystem(final)
    for v, c in h.alternation.items():
        if not c.satisfied(out.rotations[v]):
            raise InternalInconsistency(f"recombined rotation breaks {c}")
    if not euler_check(out):
        raise InternalInconsistency("recombined rotation system is not planar")
    return out


# ---------------------------------------------------------------- crossings

def _dummy_namer(taken: set):
    n = 0

    def fresh() -> str:
        nonlocal n
        while f"#x{n}" in taken:
            n += 1
        name = f"#x{n}"
        taken.add(name)
        return name
    return fresh


def extract_certificate(a: ATGraph, h: "ACPInstance", rot: RotationSystem) -> PlanarizationCertificate:
    """Planarization certificate from a rotation system of H."""
    fresh = _dummy_namer(set(a.graph.vertices))
    dummies: List[Tuple[str, Tuple[Hashable, Hashable]]] = []
    routes: Dict[Hashable, Tuple[str, ...]] = {e: () for e, _, _ in a.graph.edges}
    rotations: Dict[Hashable, Tuple[Dart, ...]] = {}
    for x in sorted(h.crossing, key=repr):
        cv = h.crossing[x]
        comp = cv.component
        edge_of = {LETTER_OF[comp.colors[e]]: e for e in comp.edges}
        role = {(pid, 0, 1): f"{LETTER_OF[comp.colors[e]]}{end}" for (e, end), pid in cv.portions.items()}
        arrangement, local = untangle(comp.kind, [role[d] for d in rot.rotations[x]])
        names = {key: fresh() for key in sorted(local)}
        for key, name in names.items():
            pair = tuple(sorted((edge_of[key[0]], edge_of[key[1]]), key=str))
            dummies.append((name, pair))
            rotations[name] = tuple((edge_of[c], j, s) for c, j, s in local[key])
        for c, seq in arrangement.items():
            crossed = ["".join(sorted((c, o), key="rbp".index)) for o in seq]
            routes[edge_of[c]] = tuple(names[k] for k in crossed)
    for x in a.graph.vertices:
        darts = []
        for hid, _, side in rot.rotations[("v", x)]:
            if hid[0] == "e":
                darts.append((hid[1], 0, side))
            elif hid[2] == 0:
                darts.append((hid[1], 0, 0))
            else:
                darts.append((hid[1], len(routes[hid[1]]), 1))
        rotations[x] = tuple(darts)
    return PlanarizationCertificate(tuple(dummies), routes, rotations)


def _verified(block: "ACPInstance", rot: RotationSystem) -> bool:
    if set(rot.rotations) != set(block.graph.vertices):
        return False
    if any(not c.satisfied(rot.rotations[v]) for v, c in block.alternation.items()):
        return False
    return euler_check(rot)


def recombine_and_extract(a: ATGraph, h: "ACPInstance", plan: "SplitPlan",
                          embedded: Sequence[Optional[RotationSystem]]) -> PlanarizationCertificate:
    """Certificate from the solver's block embeddings; a block whose
    embedding is missing or fails its constraints is searched exactly."""
    blocks = []
    for i, (block, rot) in enumerate(zip(plan.blocks, embedded)):
        if rot is None or not _verified(block, rot):
            logger.warning("embedding of block %d does not verify; searching it exactly", i)
            rot = embed_block(block)
            if rot is None:
                raise InternalInconsistency(f"block {i} was accepted but has no feasible embedding")
        blocks.append(rot)
    witness = extract_certificate(a, h, recombine(h, plan, blocks))
    logger.debug("certificate with %d dummies", len(witness.dummies))
    return witness
