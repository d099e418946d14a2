"""
Alternation-constrained planarity: the solver pipeline for AT-graphs whose
crossing components have at most three edges.

Pipeline (solve):
    validate -> crossing graph -> contract_crossings -> planarity_gate
    -> split_biconnected -> per block: constraint elimination over the
    SPQR-tree -> expand_and_embed -> realize.recombine_and_extract

Internal ids: H vertices are ("v", id) for input vertices and ("x", k) for
crossing vertices; H edges are ("e", id) for uncrossed edges and
("p", id, end) for the two portions of a crossed edge (end 0 leaves the
edge's first endpoint). Surgery adds ("s", k) edges to block pieces only.

Every applied transformation appends a provenance Step and one trace line
"LEMMA <id> vertex=<v> action=<...>".
"""
import itertools
import logging
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Any, Dict, Hashable, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import networkx as nx
import pycosat

from src.atcore import (BLUE, COLORS, NO, PURPLE, RED, YES, ATGraph, CrossingComponent, Graph, Verdict,
                        build_crossing_graph, check_certificate, classify_components, validate)
from src.constraints import (ALWAYS, K2, K3, K3_MINUS_R, K3_MINUS_RB, MUST_ALTERNATE, NEVER, P3,
                             P3_MINUS_P, P3_MINUS_PP, AlternationConstraint, normalize_constraint)
from src.embedding import Dart, RotationSystem, circular_orders, euler_check, planar_embedding, twin
from src.errors import CaseNotApplicable, Infeasible, InternalInconsistency, NotPlanar, StructureViolation
from src.pqtree import (CANNED_SIGNATURES, LEAF, Q, PQTree, apply_consecutivity, canned_tree,
                        enumerate_orders, is_compatible, restrict)
from src.realize import Hinge, embed_block, glue_pieces, recombine_and_extract, replay
from src.spqr import P as PNODE, R as RNODE, S as SNODE
from src.spqr import SPQRTree, SkeletonEmbedding, build_spqr, compose_embedding, distribution, is_virtual

logger = logging.getLogger(__name__)

# NO reason codes
H_NONPLANAR = "HNonplanar"
CUT_VERTEX_CONFLICT = "CutVertexConflict"
CONSTRAINT_UNSATISFIABLE = "ConstraintUnsatisfiable"
MONOCHROMATIC_PAIR = "MonochromaticPair"
PNODE_ORDER_CONFLICT = "PNodeOrderConflict"
SNODE_CYCLE_CONFLICT = "SNodeCycleConflict"
WHEEL_NONPLANAR = "WheelNonplanar"
SYNC_UNSATISFIABLE = "SyncUnsatisfiable"

Outcome = Optional[str]


def label(x: Hashable) -> str:
    """Printable name of an H vertex."""
    if isinstance(x, tuple) and len(x) == 2 and x[0] == "v":
        return str(x[1])
    if isinstance(x, tuple) and len(x) == 2 and x[0] == "x":
        return f"X{x[1]}"
    return str(x)


@dataclass(frozen=True)
class CrossingVertex:
    vertex: Hashable
    component: CrossingComponent
    # (input edge, end) -> portion edge id in H
    portions: Mapping[Tuple[Hashable, int], Hashable]


@dataclass(frozen=True)
class Step:
    lemma: str
    vertex: Hashable
    action: str
    data: Mapping[str, Any] = field(default_factory=dict)


@dataclass
class ACPInstance:
    graph: Graph
    alternation: Dict[Hashable, AlternationConstraint] = field(default_factory=dict)
    pq: Dict[Hashable, PQTree] = field(default_factory=dict)
    crossing: Dict[Hashable, CrossingVertex] = field(default_factory=dict)
    provenance: List[Step] = field(default_factory=list)
    trace: List[str] = field(default_factory=list)
    next_surgery: List[int] = field(default_factory=lambda: [0])
    # steps applied to this piece only, replayed when its embedding is built
    steps: List[Step] = field(default_factory=list)
    # planar rotation system of H, shared by the pieces cut from it
    embedding: Optional[RotationSystem] = None

    def __post_init__(self):
        both = set(self.alternation) & set(self.pq)
        if both:
            raise StructureViolation(f"vertices {sorted(map(label, both))} carry two constraints")

    def constrained(self) -> List[Hashable]:
        return sorted(self.alternation, key=repr)

    def record(self, lemma: str, vertex: Hashable, action: str, **data) -> Step:
        step = Step(lemma, vertex, action, data)
        self.provenance.append(step)
        self.steps.append(step)
        line = f"LEMMA {lemma} vertex={label(vertex)} action={action}"
        self.trace.append(line)
        logger.debug(line)
        return step

    def set_pq(self, v: Hashable, tree: PQTree) -> None:
        self.alternation.pop(v, None)
        self.pq[v] = tree

    def drop(self, v: Hashable) -> None:
        self.alternation.pop(v, None)

    def darts_at(self, v: Hashable) -> List[Dart]:
        return [self.graph.dart(e, v) for e in self.graph.incident(v)]

    def restricted(self, edges: Iterable[Hashable], extra: Sequence[Tuple[Hashable, Hashable, Hashable]] = ()
                   ) -> "ACPInstance":
        """Sub-instance on the given edges (plus new ones); constraints of
        the kept vertices are carried over."""
        chosen = [(e, *self.graph.ends(e)) for e in edges] + list(extra)
        vertices: Dict[Hashable, None] = {}
        for _, u, v in chosen:
            vertices.setdefault(u)
            vertices.setdefault(v)
        graph = Graph.build(vertices, chosen, simple=False)
        return ACPInstance(
            graph,
            {x: self.alternation[x] for x in vertices if x in self.alternation},
            {x: self.pq[x] for x in vertices if x in self.pq},
            {x: self.crossing[x] for x in vertices if x in self.crossing},
            self.provenance, self.trace, self.next_surgery,
            embedding=None if extra else self.embedding,
        )

    def copy(self) -> "ACPInstance":
        return ACPInstance(self.graph, dict(self.alternation), dict(self.pq), dict(self.crossing),
                           self.provenance, self.trace, self.next_surgery, embedding=self.embedding)


# ---------------------------------------------------------------- contraction

def contract_crossings(a: ATGraph, comps: Sequence[CrossingComponent]) -> ACPInstance:
    g = a.graph
    crossed = {e for comp in comps for e in comp.edges}
    vertices = [("v", x) for x in g.vertices] + [("x", k) for k in range(len(comps))]
    edges = [(("e", e), ("v", u), ("v", v)) for e, u, v in g.edges if e not in crossed]
    alternation: Dict[Hashable, AlternationConstraint] = {}
    crossing: Dict[Hashable, CrossingVertex] = {}
    for k, comp in enumerate(comps):
        x = ("x", k)
        colors: Dict[Dart, str] = {}
        portions: Dict[Tuple[Hashable, int], Hashable] = {}
        for e in comp.edges:
            for end, w in enumerate(g.ends(e)):
                pid = ("p", e, end)
                edges.append((pid, ("v", w), x))
                colors[(pid, 0, 1)] = comp.colors[e]
                portions[(e, end)] = pid
        alternation[x] = AlternationConstraint(comp.kind, colors)
        crossing[x] = CrossingVertex(x, comp, portions)
    h = ACPInstance(Graph.build(vertices, edges, simple=False), alternation, {}, crossing)
    for x in sorted(crossing, key=repr):
        h.record("contract", x, f"kind={crossing[x].component.kind}")
    return h


def planarity_gate(h: ACPInstance) -> Outcome:
    try:
        h.embedding = planar_embedding(h.graph)
        return None
    except NotPlanar:
        pass
    h.record("planarity", "H", "reject")
    return H_NONPLANAR


# ---------------------------------------------------------------- cut vertices

def blocks_of(graph: Graph) -> List[List[Hashable]]:
    """Edge ids of each biconnected block; parallel edges stay together."""
    bundles: Dict[frozenset, List[Hashable]] = {}
    nxg = nx.Graph()
    nxg.add_nodes_from(graph.vertices)
    for e, u, v in graph.edges:
        nxg.add_edge(u, v)
        bundles.setdefault(frozenset((u, v)), []).append(e)
    out = []
    for comp in nx.biconnected_component_edges(nxg):
        eids = [e for u, v in comp for e in bundles[frozenset((u, v))]]
        out.append(sorted(eids, key=repr))
    return sorted(out, key=lambda es: repr(es[0]))


@dataclass
class SplitPlan:
    blocks: List[ACPInstance]
    # cut vertex -> indices of the blocks containing it
    cut_vertices: Dict[Hashable, List[int]]
    # constraints of H at cut vertices, enforced again on recombination
    original: Dict[Hashable, AlternationConstraint]


def _same_color_pairs(c: AlternationConstraint, part: Sequence[Dart]) -> set:
    counts = Counter(c.colors[d] for d in part)
    return {color for color, n in counts.items() if n >= 2}


def _split_conflict(c: AlternationConstraint, parts: List[List[Dart]]) -> bool:
    mono = [_same_color_pairs(c, part) for part in parts]
    if c.kind in (K3, K3_MINUS_R, K2) and sum(1 for m in mono if m) >= 2:
        return True
    if c.kind == P3:
        for i, mi in enumerate(mono):
            if PURPLE in mi and any(mj & {RED, BLUE} for j, mj in enumerate(mono) if j != i):
                return True
        if len(parts) == 3 and all(len(p) == 2 for p in parts) and any(m & {RED, BLUE} for m in mono):
            return True
    return False


def split_biconnected(h: ACPInstance) -> Union[SplitPlan, str]:
    blocks = blocks_of(h.graph)
    membership: Dict[Hashable, List[int]] = {}
    for i, eids in enumerate(blocks):
        for x in {w for e in eids for w in h.graph.ends(e)}:
            membership.setdefault(x, []).append(i)
    cut_vertices = {x: sorted(idx) for x, idx in membership.items() if len(idx) > 1}
    derived: List[Dict[Hashable, AlternationConstraint]] = [{} for _ in blocks]
    block_sets = [set(eids) for eids in blocks]
    for v in sorted(cut_vertices, key=repr):
        if v not in h.alternation:
            continue
        c = h.alternation[v]
        parts = [[d for d in c.darts() if d[0] in block_sets[i]] for i in cut_vertices[v]]
        sizes = tuple(sorted((len(p) for p in parts), reverse=True))
        if _split_conflict(c, parts):
            h.record("cut-vertex", v, f"reject split={sizes}")
            return CUT_VERTEX_CONFLICT
        for i, part in zip(cut_vertices[v], parts):
            if len(part) <= 3:
                continue
            removed = [d for d in c.darts() if d not in set(part)]
            together = len(removed) == 2 and any(set(removed) <= set(p) for p in parts)
            result = normalize_constraint(c, removed, together)
            if result == NEVER:
                h.record("cut-vertex", v, f"reject split={sizes}")
                return CUT_VERTEX_CONFLICT
            if result != ALWAYS:
                derived[i][v] = result
        h.record("cut-vertex", v, f"split={sizes}")
    out = []
    for i, eids in enumerate(blocks):
        block = h.restricted(eids)
        for v in [x for x in block.alternation if x in cut_vertices]:
            del block.alternation[v]
        block.alternation.update(derived[i])
        out.append(block)
    logger.debug("H splits into %d blocks with %d cut vertices", len(out), len(cut_vertices))
    return SplitPlan(out, cut_vertices, {v: h.alternation[v] for v in cut_vertices if v in h.alternation})


# ---------------------------------------------------------------- degree 4

DEG4_PATTERNS = {K2: "K2", P3_MINUS_PP: "P3-pp", K3_MINUS_RB: "K3-(rb)"}


def replace_deg4(h: ACPInstance, v: Hashable) -> None:
    c = h.alternation[v]
    if c.kind not in DEG4_PATTERNS:
        raise CaseNotApplicable(f"{c.kind} is not a degree-4 constraint")
    r, b, p = c.of(RED), c.of(BLUE), c.of(PURPLE)
    if c.kind == K2:
        labels = [r[0], b[0], r[1], b[1]]
    elif c.kind == P3_MINUS_PP:
        labels = [r[0], r[1], b[0], b[1]]
    else:
        labels = [r[0], b[0], p[0], p[1]]
    pattern = DEG4_PATTERNS[c.kind]
    h.set_pq(v, canned_tree(pattern, list(zip(labels, CANNED_SIGNATURES[pattern]))))
    h.record("deg4", v, f"pq={pattern}")


# ---------------------------------------------------------------- consecutive pairs

def dart_groups(h: ACPInstance, t: SPQRTree, n: int, v: Hashable) -> Dict[Hashable, List[Dart]]:
    return {e: sorted((h.graph.dart(f, v) for f in real), key=repr)
            for e, real in distribution(t, n, v).items()}


def find_consecutive_pairs(t: SPQRTree, h: ACPInstance, v: Hashable) -> List[Tuple[Dart, Dart]]:
    deg = h.graph.degree(v)
    everything = set(h.darts_at(v))
    pairs = set()
    for n in t.nodes_containing(v):
        groups = dart_groups(h, t, n, v)
        for group in groups.values():
            if len(group) == 2:
                pairs.add(frozenset(group))
            if len(group) == deg - 2:
                pairs.add(frozenset(everything - set(group)))
        if t.nodes[n].kind == RNODE:
            rot = SkeletonEmbedding(t).at(n)[v]
            for e, f in zip(rot, rot[1:] + rot[:1]):
                if len(groups[e]) == 1 and len(groups[f]) == 1:
                    pairs.add(frozenset(groups[e] + groups[f]))
    return sorted((tuple(sorted(p, key=repr)) for p in pairs), key=repr)


def _partner(c: AlternationConstraint, d: Dart) -> Dart:
    return next(x for x in c.of(c.colors[d]) if x != d)


def _consecutive_pattern(c: AlternationConstraint, pairs: List[Tuple[Dart, Dart]]) -> Tuple[str, List[Dart]]:
    col = c.colors
    x, y = pairs[0]
    cx, cy = col[x], col[y]
    if c.kind == K3:
        (third,) = [k for k in COLORS if k not in (cx, cy)]
        return "consec6-a", [x, y, _partner(c, x), _partner(c, y), *c.of(third)]
    if c.kind in (P3, P3_MINUS_P):
        six = c.kind == P3
        if cx == cy:
            other = BLUE if cx == RED else RED
            return "consec5-a", [x, y, *c.of(other), *c.of(PURPLE)]
        if PURPLE not in (cx, cy):
            r1, b1 = (x, y) if cx == RED else (y, x)
            pattern = "consec6-b" if six else "consec5-b"
            return pattern, [r1, b1, _partner(c, r1), _partner(c, b1), *c.of(PURPLE)]
        p1, x1 = (x, y) if cx == PURPLE else (y, x)
        other = BLUE if col[x1] == RED else RED
        if six:
            return "consec6-c", [p1, x1, _partner(c, p1), _partner(c, x1), *c.of(other)]
        return "consec5-c", [p1, x1, _partner(c, x1), *c.of(other)]
    if c.kind == K3_MINUS_R:
        (r,) = c.of(RED)
        with_red = [pr for pr in pairs if r in pr]
        if with_red:
            z = next(d for d in with_red[0] if d != r)
            other = PURPLE if col[z] == BLUE else BLUE
            return "consec5-d", [r, z, _partner(c, z), *c.of(other)]
        if len(pairs) >= 2:
            first, second = set(pairs[0]), set(pairs[1])
            if not first & second:
                ordered = [sorted(pr, key=lambda d: col[d] != BLUE) for pr in (pairs[0], pairs[1])]
                return "consec5-e", [*ordered[0], *ordered[1], r]
            (z,) = set(c.darts()) - first - second - {r}
            other = PURPLE if col[z] == BLUE else BLUE
            return "consec5-d", [r, z, _partner(c, z), *c.of(other)]
    raise CaseNotApplicable(f"no consecutive-pair replacement for {c.kind} with pairs {pairs}")


def replace_with_consecutive_pairs(h: ACPInstance, v: Hashable, pairs: Sequence[Tuple[Dart, Dart]]) -> Outcome:
    c = h.alternation[v]
    pairs = sorted((tuple(sorted(p, key=repr)) for p in pairs), key=repr)
    if not pairs:
        raise CaseNotApplicable("no consecutive pair given")
    for x, y in pairs:
        if c.colors[x] == c.colors[y] and c.colors[x] in MUST_ALTERNATE[c.kind]:
            h.record("consecutive-pair", v, f"reject {c.colors[x]}-{c.colors[y]}")
            return MONOCHROMATIC_PAIR
    pattern, labels = _consecutive_pattern(c, pairs)
    h.set_pq(v, canned_tree(pattern, list(zip(labels, CANNED_SIGNATURES[pattern]))))
    h.record("consecutive-pair", v, f"pq={pattern}")
    return None


# ---------------------------------------------------------------- P-node reductions

def _other_pole(t: SPQRTree, mu: int, v: Hashable) -> Hashable:
    a, b = t.nodes[mu].poles()
    return b if a == v else a


def _hinge(h: ACPInstance, t: SPQRTree, mu: int, v: Hashable, u: Hashable,
           groups_v: Optional[Dict[Hashable, List[Dart]]] = None,
           groups_u: Optional[Dict[Hashable, List[Dart]]] = None) -> Hinge:
    """Dart groups of P-node mu at both poles, kept so a dropped constraint
    can be met later by reordering mu's children."""
    return Hinge(v, u, groups_v if groups_v is not None else dart_groups(h, t, mu, v),
                 groups_u if groups_u is not None else dart_groups(h, t, mu, u))


def _need(h: ACPInstance, x: Hashable) -> Dict[Hashable, Any]:
    if x in h.alternation:
        return {x: h.alternation[x]}
    if x in h.pq:
        return {x: h.pq[x]}
    return {}


def _pole_feasible(h: ACPInstance, u: Hashable, groups: Sequence[Sequence[Dart]]) -> bool:
    """Whether u's constraint admits its darts grouped as given, groups in
    this circular order and each group in some internal order."""
    if u in h.alternation:
        c = h.alternation[u]
        choices = [list(itertools.permutations(g)) for g in groups]
        return any(c.satisfied([d for part in combo for d in part]) for combo in itertools.product(*choices))
    tree = h.pq[u]
    if all(len(g) <= 2 for g in groups):
        choices = [[tuple(g), tuple(reversed(g))] if len(g) == 2 else [tuple(g)] for g in groups]
        return any(is_compatible(tree, [d for part in combo for d in part])
                   for combo in itertools.product(*choices))
    for g in groups:
        if len(g) > 1:
            try:
                tree = apply_consecutivity(tree, g)
            except Infeasible:
                return False
    reps = [g[0] for g in groups]
    return is_compatible(restrict(tree, reps), reps)


def reduce_pnode_allones(h: ACPInstance, t: SPQRTree, mu: int, v: Hashable) -> Outcome:
    groups_v = dart_groups(h, t, mu, v)
    if any(len(g) != 1 for g in groups_v.values()):
        raise CaseNotApplicable("distribution is not all ones")
    c = h.alternation[v]
    u = _other_pole(t, mu, v)
    groups_u = dart_groups(h, t, mu, u)
    hinge = _hinge(h, t, mu, v, u, groups_v, groups_u)
    if u not in h.alternation and u not in h.pq:
        h.drop(v)
        h.record("pnode-allones", v, "drop", hinges=[hinge], needs={v: c})
        return None
    for sigma in circular_orders(list(groups_v)):
        if not c.satisfied([groups_v[e][0] for e in sigma]):
            continue
        if _pole_feasible(h, u, [groups_u[e] for e in reversed(sigma)]):
            needs = {v: c, **_need(h, u)}
            h.drop(v)
            if u in h.alternation:
                h.drop(u)
                h.record("pnode-allones", v, f"drop-with={label(u)}", hinges=[hinge], needs=needs)
            else:
                h.record("pnode-allones", v, "drop", hinges=[hinge], needs=needs)
            return None
    h.record("pnode-allones", v, "reject")
    return PNODE_ORDER_CONFLICT


def _big_group(groups: Mapping[Hashable, List[Dart]], size: int) -> Tuple[Hashable, List[Dart]]:
    sizes = sorted((len(g) for g in groups.values()), reverse=True)
    if len(sizes) != 4 or sizes != [size, 1, 1, 1]:
        raise CaseNotApplicable(f"distribution {sizes} is not ({size},1,1,1)")
    return next((e, g) for e, g in groups.items() if len(g) == size)


def reduce_pnode_3111_P3(h: ACPInstance, t: SPQRTree, mu: int, v: Hashable) -> Outcome:
    c = h.alternation[v]
    if c.kind != P3:
        raise CaseNotApplicable("not a P3 vertex")
    _, group = _big_group(dart_groups(h, t, mu, v), 3)
    colors = Counter(c.colors[d] for d in group)
    if colors[PURPLE] != 1:
        h.record("pnode-3111-p3", v, "reject")
        return CONSTRAINT_UNSATISFIABLE
    (p,) = [d for d in group if c.colors[d] == PURPLE]
    if colors[RED] == 1:
        outside = [d for d in c.darts() if d not in group]
        r2 = next(d for d in outside if c.colors[d] == RED)
        b2 = next(d for d in outside if c.colors[d] == BLUE)
        pairs = [(r2, b2)]
    else:
        pairs = [(p, d) for d in group if d != p]
    h.record("pnode-3111-p3", v, "pairs=" + ",".join(f"{c.colors[x][0]}{c.colors[y][0]}" for x, y in pairs))
    return replace_with_consecutive_pairs(h, v, pairs)


def reduce_pnode_k3_free_or_pq(h: ACPInstance, t: SPQRTree, mu: int, v: Hashable) -> Outcome:
    c = h.alternation[v]
    if c.kind not in (K3, K3_MINUS_R):
        raise CaseNotApplicable("not a K3 or K3minusR vertex")
    u = _other_pole(t, mu, v)
    if u in h.alternation:
        raise CaseNotApplicable("other pole carries an alternation constraint")
    groups_v = dart_groups(h, t, mu, v)
    big, group = _big_group(groups_v, 3 if c.kind == K3 else 2)
    wanted = set(COLORS) if c.kind == K3 else {BLUE, PURPLE}
    if {c.colors[d] for d in group} != wanted:
        h.record("pnode-k3-free-or-pq", v, "reject")
        return CONSTRAINT_UNSATISFIABLE
    if u not in h.pq:
        h.drop(v)
        h.record("pnode-k3-free-or-pq", v, "drop", hinges=[_hinge(h, t, mu, v, u, groups_v)], needs={v: c})
        return None
    groups_u = dart_groups(h, t, mu, u)
    tree = h.pq[u]
    try:
        for g in groups_u.values():
            if len(g) > 1:
                tree = apply_consecutivity(tree, g)
    except Infeasible:
        h.record("pnode-k3-free-or-pq", v, "reject")
        return CONSTRAINT_UNSATISFIABLE
    h.pq[u] = tree
    rep = {g[0]: e for e, g in groups_u.items()}
    f1 = groups_u[big][0]
    orders = enumerate_orders(restrict(tree, list(rep)))
    if len(orders) == 6:
        h.drop(v)
        h.record("pnode-k3-free-or-pq", v, "drop", hinges=[_hinge(h, t, mu, v, u, groups_v, groups_u)],
                 needs={v: c, u: tree})
        return None
    pairs = []
    for x, y in itertools.combinations(sorted((r for r in rep if r != f1), key=repr), 2):
        if all(_adjacent_in(order, x, y) for order in orders):
            pairs.append((groups_v[rep[x]][0], groups_v[rep[y]][0]))
    if c.kind == K3_MINUS_R:
        pairs.append(tuple(group))
    h.record("pnode-k3-free-or-pq", v, f"pairs={len(pairs)}")
    return replace_with_consecutive_pairs(h, v, pairs)


def _adjacent_in(order: Sequence[Hashable], x: Hashable, y: Hashable) -> bool:
    n = len(order)
    return (order.index(x) - order.index(y)) % n in (1, n - 1)


def reduce_pnode_2111_two_alternation(h: ACPInstance, t: SPQRTree, mu: int, v: Hashable
                                      ) -> Union[None, str, List[ACPInstance]]:
    c = h.alternation[v]
    if c.kind != K3_MINUS_R:
        raise CaseNotApplicable("not a K3minusR vertex")
    u = _other_pole(t, mu, v)
    if u not in h.alternation:
        raise CaseNotApplicable("other pole has no alternation constraint")
    groups_v = dart_groups(h, t, mu, v)
    e1v, _ = _big_group(groups_v, 2)
    cu = h.alternation[u]
    if cu.kind not in (K3, K3_MINUS_R):
        raise StructureViolation(f"{label(u)} carries {cu.kind} opposite a K3minusR pole")
    groups_u = dart_groups(h, t, mu, u)
    e1u, _ = _big_group(groups_u, cu.degree - 3)
    if e1v != e1u:
        h.drop(v)
        h.record("pnode-2111", v, "drop", hinges=[_hinge(h, t, mu, v, u, groups_v, groups_u)],
                 needs={v: c, u: cu})
        return None

    (red,) = c.of(RED)
    e_r = next(e for e, g in groups_v.items() if red in g)
    if not is_virtual(e_r):
        raise StructureViolation("red edge of a 2111 pole is not behind a virtual edge")
    k = h.next_surgery[0]
    h.next_surgery[0] += 1
    new_edge = ("s", k)
    g1_edges = t.edges_behind(e_r)
    g1 = h.restricted(g1_edges, [(new_edge, v, u)])
    g1.drop(v)
    g1.drop(u)
    behind = set(g1_edges)
    g2 = h.restricted([e for e, _, _ in h.graph.edges if e not in behind])
    g2.drop(v)
    g2.drop(u)
    b, p = (sorted(c.of(BLUE), key=lambda d: d not in groups_v[e1v]),
            sorted(c.of(PURPLE), key=lambda d: d not in groups_v[e1v]))
    g2.set_pq(v, canned_tree("pqnew-a", list(zip([b[0], p[0], b[1], p[1]], CANNED_SIGNATURES["pqnew-a"]))))
    (lost,) = groups_u[e_r]
    if cu.kind == K3:
        g2.alternation[u] = normalize_constraint(cu, [lost])
    elif cu.colors[lost] == RED:
        ub, up = cu.of(BLUE), cu.of(PURPLE)
        g2.set_pq(u, canned_tree("pqnew-a", list(zip([ub[0], up[0], ub[1], up[1]],
                                                     CANNED_SIGNATURES["pqnew-a"]))))
    else:
        pair = groups_u[e1u]
        if {cu.colors[d] for d in pair} != {BLUE, PURPLE}:
            raise StructureViolation(f"{label(u)} has a non blue-purple pair")
        gone = cu.colors[lost]
        mate = next(d for d in pair if cu.colors[d] == gone)
        partner = next(d for d in pair if d != mate)
        (r,) = cu.of(RED)
        (rest,) = [d for d in cu.of(cu.colors[partner]) if d != partner]
        g2.set_pq(u, canned_tree("pqnew-b", list(zip([mate, partner, r, rest], CANNED_SIGNATURES["pqnew-b"]))))
    h.record("pnode-2111", v, f"surgery-with={label(u)}", edge=new_edge, needs={v: c, u: cu})
    return [g1, g2]


PNODE_LEMMAS = (reduce_pnode_allones, reduce_pnode_3111_P3,
                reduce_pnode_k3_free_or_pq, reduce_pnode_2111_two_alternation)


# ---------------------------------------------------------------- S-node reduction

def _cycle_walk(node) -> Tuple[List[Hashable], List[Hashable]]:
    """Vertices v_0..v_{k-1} and edges e_0..e_{k-1} of a cycle skeleton,
    e_i joining v_i and v_{i+1}."""
    start = sorted(node.vertices(), key=repr)[0]
    vertices, edges = [start], []
    x, prev = start, None
    while True:
        e = next(f for f in node.incident(x) if f != prev)
        a, b = node.edges[e]
        x = b if a == x else a
        edges.append(e)
        prev = e
        if x == start:
            return vertices, edges
        vertices.append(x)


def reduce_snode_k3_cycles(h: ACPInstance, t: SPQRTree, mu: int) -> Outcome:
    node = t.nodes[mu]
    cycle, links = _cycle_walk(node)
    k = len(cycle)
    for x in cycle:
        c = h.alternation.get(x)
        if c is None or c.kind != K3 or sorted(len(g) for g in dart_groups(h, t, mu, x).values()) != [3, 3]:
            raise StructureViolation(f"S-node cycle through {label(x)} is not all K3 with split (3,3)")
    # children[i]: skeleton edges of nu_i other than the twin of e_i
    children: List[List[Hashable]] = []
    near: List[Dict[Hashable, str]] = []
    far: List[Dict[Hashable, str]] = []
    hinges: List[Hinge] = []
    for i, e in enumerate(links):
        vi, vj = cycle[i], cycle[(i + 1) % k]
        if not is_virtual(e) or t.nodes[t.across(e)].kind != PNODE:
            raise StructureViolation(f"S-node edge {e} does not lead to a P-node")
        nu = t.across(e)
        if set(t.nodes[nu].poles()) != {vi, vj}:
            raise StructureViolation("P-node poles differ from the S-node edge")
        gi, gj = dart_groups(h, t, nu, vi), dart_groups(h, t, nu, vj)
        kids = [f for f in t.nodes[nu].edges if f != e.twin()]
        if len(kids) != 3 or any(len(gi[f]) != 1 or len(gj[f]) != 1 for f in kids):
            raise StructureViolation("P-node next to an S-node cycle is not (3,1,1,1)")
        children.append(kids)
        hinges.append(Hinge(vi, vj, gi, gj))
        near.append({f: h.alternation[vi].colors[gi[f][0]] for f in kids})
        far.append({f: h.alternation[vj].colors[gj[f][0]] for f in kids})
        if set(near[i].values()) != set(COLORS) or set(far[i].values()) != set(COLORS):
            h.record("snode-k3", vi, "reject")
            return SNODE_CYCLE_CONFLICT
    for sigma0 in itertools.permutations(children[0]):
        sigma = list(sigma0)
        ok = True
        for i in range(k):
            seq = [far[i][f] for f in reversed(sigma)]
            if i + 1 == k:
                ok = seq == [near[0][f] for f in sigma0]
                break
            by_color = {near[i + 1][f]: f for f in children[i + 1]}
            sigma = [by_color[color] for color in seq]
        if ok:
            needs = {x: h.alternation[x] for x in cycle}
            for x in cycle:
                h.drop(x)
            h.record("snode-k3", cycle[0], f"drop-cycle={k}", hinges=hinges, needs=needs)
            return None
    h.record("snode-k3", cycle[0], "reject")
    return SNODE_CYCLE_CONFLICT


# ---------------------------------------------------------------- elimination loop

def _pnode_pass(h: ACPInstance, t: SPQRTree) -> Union[None, bool, str, List[ACPInstance]]:
    """One sweep of the P-node lemmas, in order, over the constrained
    vertices; every lemma that applies removes the constraint at v."""
    progressed = None
    for lemma in PNODE_LEMMAS:
        for v in h.constrained():
            for mu in t.nodes_containing(v, PNODE):
                if v not in h.alternation:
                    break
                try:
                    result = lemma(h, t, mu, v)
                except CaseNotApplicable:
                    continue
                if result is not None:
                    return result
                progressed = True
    return progressed


def _snode_pass(h: ACPInstance, t: SPQRTree) -> Union[None, bool, str]:
    progressed = None
    for v in h.constrained():
        for mu in t.nodes_containing(v, SNODE):
            if v not in h.alternation:
                break
            if sorted(len(g) for g in dart_groups(h, t, mu, v).values()) == [3, 3]:
                result = reduce_snode_k3_cycles(h, t, mu)
                if result is not None:
                    return result
                progressed = True
    return progressed


def eliminate_block(h: ACPInstance) -> Union[None, str, List[ACPInstance]]:
    """Remove every alternation constraint of a biconnected piece.

    Returns None when only PQ-constraints remain, a NO reason, or the two
    pieces produced by a surgery (to be eliminated separately)."""
    for v in h.constrained():
        if h.graph.degree(v) == 4:
            replace_deg4(h, v)
    if not h.alternation:
        return None
    t = build_spqr(h.graph, h.embedding)
    # pairs depend only on the tree and the constraint at v
    for v in h.constrained():
        pairs = find_consecutive_pairs(t, h, v)
        if not pairs:
            continue
        try:
            out = replace_with_consecutive_pairs(h, v, pairs)
        except CaseNotApplicable:
            continue
        if out:
            return out
    while h.alternation:
        result = _pnode_pass(h, t)
        if result is None:
            result = _snode_pass(h, t)
        if result is None:
            raise StructureViolation(
                "no reduction applies to " + ", ".join(str(h.alternation[v]) for v in h.constrained()))
        if result is not True:
            return result
    return None


def decide_block(block: ACPInstance) -> Union[RotationSystem, str, None]:
    """Embedding of a block meeting its constraints, or a NO reason.

    Pieces are eliminated and embedded first; then, children before
    parents, surgery pieces are glued back and each piece's drops replayed.
    None means the block is feasible but its replay broke down."""
    found = [block]
    queue = deque([block])
    split: Dict[int, Tuple[Step, List[ACPInstance]]] = {}
    embedded: Dict[int, RotationSystem] = {}
    while queue:
        piece = queue.popleft()
        result = eliminate_block(piece)
        if isinstance(result, str):
            return result
        if isinstance(result, list):
            split[id(piece)] = (next(s for s in reversed(piece.steps) if "edge" in s.data), result)
            queue.extend(result)
            found.extend(result)
            continue
        rot = expand_and_embed(piece)
        if isinstance(rot, str):
            return rot
        embedded[id(piece)] = rot
    try:
        for piece in reversed(found):
            if id(piece) in split:
                step, (inner, outer) = split[id(piece)]
                embedded[id(piece)] = glue_pieces(step, embedded[id(inner)], embedded[id(outer)])
            embedded[id(piece)] = replay(piece.steps, embedded[id(piece)])
    except InternalInconsistency as exc:
        logger.warning("replaying the steps of a block failed: %s", exc)
        return None
    return embedded[id(block)]


# ---------------------------------------------------------------- PQ gadgets

def _gadget(v: Hashable, tree: PQTree):
    """Vertices, edges and leaf attachment points of the gadget of v's tree:
    a P-node becomes a vertex, a Q-node a wheel whose rim follows the
    node's stored neighbour order."""
    vertices: List[Hashable] = []
    edges: List[Tuple[Hashable, Hashable, Hashable]] = []

    def point(n: int, towards: int) -> Hashable:
        if tree.kinds[n] == Q:
            return ("g", v, n, tree.adj[n].index(towards))
        return ("g", v, n)

    internal = tree.internal_nodes()
    for n in internal:
        if tree.kinds[n] != Q:
            vertices.append(("g", v, n))
            continue
        k = len(tree.adj[n])
        hub = ("g", v, n, "hub")
        rims = [("g", v, n, i) for i in range(k)]
        vertices += [hub] + rims
        for i in range(k):
            edges.append((("g", v, n, "rim", i), rims[i], rims[(i + 1) % k]))
            edges.append((("g", v, n, "spoke", i), hub, rims[i]))
    for n in internal:
        for m in tree.adj[n]:
            if tree.kinds[m] != LEAF and n < m:
                edges.append((("g", v, "t", n, m), point(n, m), point(m, n)))
    attach = {lab: point(tree.adj[leaf][0], leaf) for leaf, lab in tree.labels.items()}
    return vertices, edges, attach


def expand_gadgets(h: ACPInstance) -> Tuple[Graph, Dict[Hashable, Tuple[List[Hashable], List[Hashable]]]]:
    """H* plus, per PQ-constrained vertex, its gadget vertices and edges."""
    endpoint: Dict[Tuple[Hashable, int], Hashable] = {}
    gadgets: Dict[Hashable, Tuple[List[Hashable], List[Hashable]]] = {}
    extra_vertices: List[Hashable] = []
    extra_edges: List[Tuple[Hashable, Hashable, Hashable]] = []
    for v in sorted(h.pq, key=repr):
        vertices, edges, attach = _gadget(v, h.pq[v])
        for (eid, _, side), x in attach.items():
            endpoint[(eid, side)] = x
        gadgets[v] = (vertices, [e for e, _, _ in edges])
        extra_vertices += vertices
        extra_edges += edges
    kept = [x for x in h.graph.vertices if x not in h.pq]
    edges = [(e, endpoint.get((e, 0), u), endpoint.get((e, 1), w)) for e, u, w in h.graph.edges]
    return Graph.build(kept + extra_vertices, edges + extra_edges, simple=False), gadgets


def _contract(rot: RotationSystem, hstar: Graph, vertices: List[Hashable], internal: List[Hashable]) -> List[Dart]:
    """Rotation of a gadget shrunk to one vertex: spanning-tree edges are
    contracted (the far rotation is spliced in after the twin), the other
    gadget edges deleted."""
    adjacency: Dict[Hashable, List[Tuple[Hashable, Hashable]]] = {x: [] for x in vertices}
    for e in internal:
        a, b = hstar.ends(e)
        adjacency[a].append((e, b))
        adjacency[b].append((e, a))
    root = vertices[0]
    merged = list(rot.rotations[root])
    seen = {root}
    queue = deque([root])
    while queue:
        x = queue.popleft()
        for e, y in adjacency[x]:
            if y in seen:
                continue
            seen.add(y)
            queue.append(y)
            dx = hstar.dart(e, x)
            i = merged.index(dx)
            ry = list(rot.rotations[y])
            j = ry.index(twin(dx))
            merged[i:i + 1] = ry[j + 1:] + ry[:j]
    gone = set(internal)
    return [d for d in merged if d[0] not in gone]


def _wheel_orientation(t: SPQRTree, emb: SkeletonEmbedding, v: Hashable, tree: PQTree, n: int
                       ) -> Tuple[int, int]:
    """R-node holding the wheel of Q-node n and 1 when its unflipped rim
    order runs against the stored order."""
    hub = ("g", v, n, "hub")
    owners = t.nodes_containing(hub, RNODE)
    if len(owners) != 1:
        raise StructureViolation(f"wheel hub of {label(v)} lies in {len(owners)} R-nodes")
    r = owners[0]
    skeleton = t.nodes[r]
    seq = []
    for e in emb.at(r)[hub]:
        a, b = skeleton.edges[e]
        seq.append((b if a == hub else a)[3])
    k = len(tree.adj[n])
    forward = all((seq[(j + 1) % len(seq)] - seq[j]) % k == 1 for j in range(len(seq)))
    return r, 0 if forward else 1


def _synchronized_embedding(h: ACPInstance, hstar: Graph) -> Union[RotationSystem, str]:
    t = build_spqr(hstar, planar_embedding(hstar))
    emb = SkeletonEmbedding(t)
    var: Dict[int, int] = {}
    clauses: List[List[int]] = []
    for v in sorted(h.pq, key=repr):
        tree = h.pq[v]
        for pair in sorted(tree.sync, key=sorted):
            a, b = sorted(pair)
            (ra, ba), (rb, bb) = _wheel_orientation(t, emb, v, tree, a), _wheel_orientation(t, emb, v, tree, b)
            if ra == rb:
                if ba != bb:
                    h.record("wheel-2sat", v, "reject")
                    return SYNC_UNSATISFIABLE
                continue
            xa, xb = var.setdefault(ra, len(var) + 1), var.setdefault(rb, len(var) + 1)
            if ba == bb:
                clauses += [[xa, -xb], [-xa, xb]]
            else:
                clauses += [[xa, xb], [-xa, -xb]]
    solution = pycosat.solve(clauses) if clauses else []
    if solution == "UNSAT":
        h.record("wheel-2sat", sorted(h.pq, key=repr)[0], "reject")
        return SYNC_UNSATISFIABLE
    chosen = {lit for lit in solution if lit > 0}
    flips = {r: x in chosen for r, x in var.items()}
    return compose_embedding(t, SkeletonEmbedding(t, flips=flips, rigid=emb.rigid))


def expand_and_embed(h: ACPInstance) -> Union[RotationSystem, str]:
    """Planar rotation system of a piece honouring its PQ-constraints, or a
    NO reason."""
    if h.alternation:
        raise StructureViolation("alternation constraints left before gadget expansion")
    hstar, gadgets = expand_gadgets(h)
    try:
        if any(tree.sync for tree in h.pq.values()):
            rot = _synchronized_embedding(h, hstar)
            if isinstance(rot, str):
                return rot
        else:
            rot = planar_embedding(hstar)
    except NotPlanar:
        h.record("planarity", sorted(h.pq, key=repr)[0] if h.pq else "H", "reject-gadgets")
        return WHEEL_NONPLANAR
    rotations: Dict[Hashable, Tuple[Dart, ...]] = {
        x: rot.rotations[x] for x in h.graph.vertices if x not in h.pq}
    for v, (vertices, internal) in gadgets.items():
        rotations[v] = tuple(_contract(rot, hstar, vertices, internal))
        if not is_compatible(h.pq[v], rotations[v]):
            raise InternalInconsistency(f"gadget contraction at {label(v)} breaks its PQ-tree")
    out = RotationSystem(rotations)
    if not euler_check(out):
        raise InternalInconsistency("gadget contraction produced a non-planar rotation system")
    return out


# ---------------------------------------------------------------- entry point

def solve(a: ATGraph) -> Verdict:
    """Decide simple realizability of an AT-graph with lambda <= 3."""
    reason = validate(a)
    if reason:
        return Verdict(NO, reason=reason)
    comps = classify_components(build_crossing_graph(a))
    h = contract_crossings(a, comps)
    logger.info("H has %d vertices, %d edges, %d crossing vertices",
                len(h.graph.vertices), len(h.graph.edges), len(comps))

    def rejected(why: str) -> Verdict:
        logger.info("verdict NO (%s)", why)
        return Verdict(NO, reason=why, trace=tuple(h.trace))

    why = planarity_gate(h)
    if why:
        return rejected(why)
    plan = split_biconnected(h)
    if isinstance(plan, str):
        return rejected(plan)
    embedded = []
    for block in plan.blocks:
        rot = decide_block(block.copy())
        if isinstance(rot, str):
            if embed_block(block) is not None:
                raise InternalInconsistency(f"block rejected with {rot} admits an embedding")
            return rejected(rot)
        embedded.append(rot)
    witness = recombine_and_extract(a, h, plan, embedded)
    if not check_certificate(a, witness):
        raise InternalInconsistency("extracted certificate fails verification")
    logger.info("verdict YES with %d dummies", len(witness.dummies))
    return Verdict(YES, witness, trace=tuple(h.trace))
