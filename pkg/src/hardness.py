"""
Hardness instances: from a 3-connected planar 3-SAT formula to an AT-graph
whose crossing graph has components of up to six vertices.

The instance is built on a skeleton (one cycle per variable, a triangle per
clause, two pipe edges per literal) into which one split gadget per literal
and one clause gadget per clause are wired. Edge ids spell out the role of
every edge, e.g. `S[x2,1].c3` is edge c_3 of the first split gadget of x2 and
`Q[c4].g_y` is edge g_y of the clause gadget of c4.
"""
import itertools
import logging
import random
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Set, Tuple, Union

import networkx as nx

from src.atcore import ATGraph, Graph, build_crossing_graph, lambda_of
from src.errors import InternalInconsistency, PreconditionFailed

logger = logging.getLogger(__name__)

# reject reasons of check_precondition
NOT_PLANAR = "not planar"
NOT_TRICONNECTED = "not 3-connected"
TOO_SMALL = "fewer than four nodes"

# non-trivial crossing-graph components the construction may produce,
# as (nodes, links)
SHAPES = {
    (2, 1): "pair",
    (3, 2): "path3",
    (4, 3): "path4",
    (6, 5): "double-star",
    (6, 9): "prism",
}
# vertex and edge cap per variable or clause; the gadgets stay well below it
SIZE_FACTOR = 200

ROLES = ("x", "y", "z")


# ---------------------------------------------------------------- formulas

@dataclass(frozen=True)
class CNF:
    variables: int
    clauses: Tuple[Tuple[int, int, int], ...]

    def __post_init__(self):
        for clause in self.clauses:
            if len(clause) != 3:
                raise PreconditionFailed(f"clause {list(clause)} does not have three literals")
            if 0 in clause or any(abs(lit) > self.variables for lit in clause):
                raise PreconditionFailed(f"clause {list(clause)} has a literal out of range")
            if len({abs(lit) for lit in clause}) != 3:
                raise PreconditionFailed(f"clause {list(clause)} repeats a variable")

    def to_dimacs(self) -> str:
        lines = [f"p cnf {self.variables} {len(self.clauses)}"]
        lines += [" ".join(str(lit) for lit in clause) + " 0" for clause in self.clauses]
        return "\n".join(lines) + "\n"


def parse_dimacs(text: str) -> CNF:
    variables = 0
    clauses: List[Tuple[int, ...]] = []
    pending: List[int] = []
    for raw in text.splitlines():
        s = raw.strip()
        if not s or s.startswith("c") or s.startswith("%"):
            continue
        if s.startswith("p"):
            parts = s.split()
            if len(parts) < 3 or parts[1] != "cnf":
                raise PreconditionFailed(f"bad DIMACS header: {s!r}")
            variables = int(parts[2])
            continue
        try:
            numbers = [int(x) for x in s.split()]
        except ValueError as exc:
            raise PreconditionFailed(f"bad DIMACS line: {s!r}") from exc
        for lit in numbers:
            if lit == 0:
                clauses.append(tuple(pending))
                pending = []
            else:
                pending.append(lit)
    if pending:
        clauses.append(tuple(pending))
    variables = max([variables] + [abs(lit) for clause in clauses for lit in clause])
    return CNF(variables, tuple(clauses))


def read_dimacs(path: Union[str, Path]) -> CNF:
    return parse_dimacs(Path(path).read_text(encoding="utf-8"))


def random_cnf(variables: int, clauses: int, rng: random.Random) -> CNF:
    out = []
    for _ in range(clauses):
        chosen = rng.sample(range(1, variables + 1), 3)
        out.append(tuple(v if rng.random() < 0.5 else -v for v in chosen))
    return CNF(variables, tuple(out))


def search_formulas(count: int, seed: int = 0, max_variables: int = 8,
                    max_attempts: int = 100000) -> List[CNF]:
    """Random small formulas whose variable-clause graph passes check_precondition."""
    rng = random.Random(seed)
    found: List[CNF] = []
    seen = set()
    for _ in range(max_attempts):
        if len(found) >= count:
            break
        n = rng.randint(4, max_variables)
        m = rng.randint(max(2, n - 2), 2 * n - 4) if n > 4 else 4
        phi = random_cnf(n, m, rng)
        key = tuple(sorted(tuple(sorted(c)) for c in phi.clauses))
        if key in seen:
            continue
        seen.add(key)
        if check_precondition(build_variable_clause_graph(phi)) is None:
            found.append(phi)
    logger.debug("formula search kept %d formulas", len(found))
    return found


# ---------------------------------------------------------------- variable-clause graph

def var_name(i: int) -> str:
    return f"x{i}"


def clause_name(j: int) -> str:
    return f"c{j}"


@dataclass
class VariableClauseGraph:
    """Bipartite literal incidence graph; edge attribute `positive` is the sign."""

    graph: nx.Graph
    variables: Tuple[str, ...]
    clauses: Tuple[str, ...]

    def positive(self, v: str, c: str) -> bool:
        return self.graph.edges[v, c]["positive"]


def build_variable_clause_graph(phi: CNF) -> VariableClauseGraph:
    g = nx.Graph()
    variables = tuple(var_name(i) for i in range(1, phi.variables + 1))
    clauses = tuple(clause_name(j) for j in range(1, len(phi.clauses) + 1))
    g.add_nodes_from(variables, side="variable")
    g.add_nodes_from(clauses, side="clause")
    for c, clause in zip(clauses, phi.clauses):
        for lit in clause:
            g.add_edge(var_name(abs(lit)), c, positive=lit > 0)
    return VariableClauseGraph(g, variables, clauses)


def check_precondition(g: VariableClauseGraph) -> Optional[str]:
    """None when the graph is planar and 3-connected, else the reason."""
    if g.graph.number_of_nodes() < 4:
        return TOO_SMALL
    planar, _ = nx.check_planarity(g.graph)
    if not planar:
        return NOT_PLANAR
    if not nx.is_connected(g.graph) or nx.node_connectivity(g.graph) < 3:
        return NOT_TRICONNECTED
    return None


def _cw(embedding: nx.PlanarEmbedding, node: str) -> Tuple[str, ...]:
    order = list(embedding.neighbors_cw_order(node))
    i = order.index(min(order, key=_natural))
    return tuple(order[i:] + order[:i])


def _natural(name: str):
    return (name[0], int(name[1:]))


# ---------------------------------------------------------------- skeleton

@dataclass
class SkeletonGraph:
    graph: Graph
    variable_edge: Dict[Tuple[str, str], str]
    clause_edge: Dict[Tuple[str, str], str]
    pipes: Dict[Tuple[str, str], Tuple[str, str]]
    clause_order: Dict[str, Tuple[str, ...]]
    variable_order: Dict[str, Tuple[str, ...]]


def _ring(name: str, i: int, k: int) -> str:
    return f"{name}.{i % k}"


def build_skeleton(g: VariableClauseGraph) -> SkeletonGraph:
    reason = check_precondition(g)
    if reason:
        raise PreconditionFailed(f"variable-clause graph is {reason}")
    _, embedding = nx.check_planarity(g.graph)
    clause_order = {v: _cw(embedding, v) for v in g.variables}
    variable_order = {c: _cw(embedding, c) for c in g.clauses}

    vertices: List[str] = []
    edges: List[Tuple[str, str, str]] = []
    variable_edge, clause_edge, ends = {}, {}, {}
    for owner, order, table in [(v, clause_order[v], variable_edge) for v in g.variables] + \
                               [(c, variable_order[c], clause_edge) for c in g.clauses]:
        k = len(order)
        vertices += [_ring(owner, i, k) for i in range(k)]
        for i, other in enumerate(order):
            eid = f"e[{owner},{other}]"
            # e_{owner,other} runs clockwise from ring vertex i-1 to ring vertex i
            u, w = _ring(owner, i - 1, k), _ring(owner, i, k)
            edges.append((eid, u, w))
            table[(owner, other)] = eid
            ends[eid] = (u, w)
    pipes = {}
    for v in g.variables:
        for c in clause_order[v]:
            p, q = ends[variable_edge[(v, c)]]
            s, t = ends[clause_edge[(c, v)]]
            first, second = f"pipe[{v},{c}]0", f"pipe[{v},{c}]1"
            edges += [(first, p, t), (second, q, s)]
            pipes[(v, c)] = (first, second)
    skeleton = SkeletonGraph(Graph.build(vertices, edges), variable_edge, clause_edge, pipes,
                             clause_order, variable_order)
    _verify_skeleton(skeleton)
    return skeleton


def _verify_skeleton(skeleton: SkeletonGraph) -> None:
    h = skeleton.graph
    bad = [v for v in h.vertices if h.degree(v) != 4]
    if bad:
        raise InternalInconsistency(f"skeleton is not 4-regular at {bad[:3]}")
    nxg = nx.Graph(h.to_networkx())
    if not nx.check_planarity(nxg)[0]:
        raise InternalInconsistency("skeleton is not planar")
    if nx.node_connectivity(nxg) < 3:
        raise InternalInconsistency("skeleton is not 3-connected")


# ---------------------------------------------------------------- gadgets

class _Builder:
    """Vertices, edges and crossing pairs under construction. Edges with a
    dangling end can be identified, which glues their attached ends."""

    def __init__(self):
        self.vertices: Dict[str, None] = {}
        self.edges: Dict[str, List[str]] = {}
        self.dangling: Set[str] = set()
        self.crossings: List[Tuple[str, str]] = []
        self.alias: Dict[str, str] = {}

    def vertex(self, name: str) -> str:
        self.vertices.setdefault(name, None)
        return name

    def loose(self, name: str) -> str:
        self.dangling.add(self.vertex(name))
        return name

    def edge(self, eid: str, u: str, v: str) -> str:
        if eid in self.edges:
            raise InternalInconsistency(f"edge {eid} built twice")
        self.edges[eid] = [self.vertex(u), self.vertex(v)]
        return eid

    def path(self, names: Sequence[str], start: str, end: str) -> None:
        stops = [start] + [f"{names[i]}~{names[i + 1]}" for i in range(len(names) - 1)] + [end]
        for i, eid in enumerate(names):
            self.edge(eid, stops[i], stops[i + 1])

    def cross(self, e: str, f: str) -> None:
        self.crossings.append((e, f))

    def resolve(self, eid: str) -> str:
        while eid in self.alias:
            eid = self.alias[eid]
        return eid

    def identify(self, keep: str, drop: str) -> None:
        keep, drop = self.resolve(keep), self.resolve(drop)
        ends = []
        for eid in (keep, drop):
            loose = [x for x in self.edges[eid] if x in self.dangling]
            fixed = [x for x in self.edges[eid] if x not in self.dangling]
            if len(loose) != 1:
                raise InternalInconsistency(f"edge {eid} has no single dangling end")
            del self.vertices[loose[0]]
            self.dangling.discard(loose[0])
            ends.append(fixed[0])
        del self.edges[drop]
        self.edges[keep] = ends
        self.alias[drop] = keep

    def at_graph(self) -> ATGraph:
        pairs = frozenset(frozenset((self.resolve(e), self.resolve(f))) for e, f in self.crossings)
        g = Graph.build(self.vertices, ((eid, u, v) for eid, (u, v) in self.edges.items()))
        return ATGraph(g, pairs)


def split_gadget(b: _Builder, prefix: str) -> None:
    """Outer cycle l1 l2 l3, triangle v1 v2 v3 with a red path
    a-b-c-d and a blue path e-f-g-h into every v_j, and the four
    crossover paths pi13, pi23, psi13, psi23."""
    p = prefix
    for j in (1, 2, 3):
        b.edge(f"{p}l{j}", f"{p}o{j}", f"{p}o{j % 3 + 1}")
        b.edge(f"{p}v{j}v{j % 3 + 1}", f"{p}v{j}", f"{p}v{j % 3 + 1}")
    for j in (1, 2, 3):
        for letters in ("abcd", "efgh"):
            b.path([f"{p}{x}{j}" for x in letters], b.loose(f"{p}{letters[0]}{j}*"), f"{p}v{j}")
    for name in ("pi13", "pi23", "psi13", "psi23"):
        b.path([f"{p}{name}'", f"{p}{name}''", f"{p}{name}'''"],
               b.loose(f"{p}{name}<"), b.loose(f"{p}{name}>"))

    for j in (1, 2, 3):
        b.cross(f"{p}l{j}", f"{p}b{j}")
        b.cross(f"{p}l{j}", f"{p}f{j}")
    for j in (1, 2):
        b.cross(f"{p}pi{j}3''", f"{p}psi{j}3''")
        b.cross(f"{p}c{j}", f"{p}g{j}")
        b.cross(f"{p}c{j}", f"{p}pi{j}3'")
        b.cross(f"{p}g{j}", f"{p}psi{j}3'")
    b.cross(f"{p}c3", f"{p}g3")
    for j in (1, 2):
        b.cross(f"{p}c3", f"{p}pi{j}3'''")
        b.cross(f"{p}g3", f"{p}psi{j}3'''")


def split_prefix(v: str, i: int) -> str:
    return f"S[{v},{i}]."


def clause_prefix(c: str) -> str:
    return f"Q[{c}]."


def variable_gadget(b: _Builder, v: str, k: int) -> None:
    for i in range(1, k + 1):
        split_gadget(b, split_prefix(v, i))
    for i in range(1, k + 1):
        here, there = split_prefix(v, i), split_prefix(v, i % k + 1)
        b.identify(f"{here}a2", f"{there}a3")
        b.identify(f"{here}e2", f"{there}e3")
        b.cross(f"{here}a2", f"{here}e2")


def clause_gadget(b: _Builder, c: str) -> None:
    p = clause_prefix(c)
    for r in ROLES:
        for letters in ("abc", "efg"):
            b.path([f"{p}{x}_{r}" for x in letters],
                   b.loose(f"{p}{letters}_{r}<"), b.loose(f"{p}{letters}_{r}>"))
    for first, second in itertools.combinations(ROLES, 2):
        b.cross(f"{p}c_{first}", f"{p}c_{second}")
        b.cross(f"{p}g_{first}", f"{p}g_{second}")
    for r, s in zip(ROLES, ("z", "x", "y")):
        b.cross(f"{p}c_{r}", f"{p}g_{s}")


@dataclass
class GadgetInstance:
    instance: ATGraph
    skeleton: SkeletonGraph
    split_gadgets: Tuple[str, ...]
    clause_gadgets: Tuple[str, ...]
    aliases: Dict[str, str] = field(default_factory=dict)

    def edge(self, label: str) -> str:
        """Surviving edge id for a gadget label, following identifications."""
        while label in self.aliases:
            label = self.aliases[label]
        return label


def assemble(phi: CNF) -> GadgetInstance:
    g = build_variable_clause_graph(phi)
    skeleton = build_skeleton(g)
    b = _Builder()
    for x in skeleton.graph.vertices:
        b.vertex(x)
    for eid, u, v in skeleton.graph.edges:
        b.edge(eid, u, v)

    splits = []
    for v in g.variables:
        order = skeleton.clause_order[v]
        variable_gadget(b, v, len(order))
        splits += [split_prefix(v, i) for i in range(1, len(order) + 1)]
    for c in g.clauses:
        clause_gadget(b, c)

    for v in g.variables:
        for i, c in enumerate(skeleton.clause_order[v], start=1):
            s, q = split_prefix(v, i), clause_prefix(c)
            role = ROLES[skeleton.variable_order[c].index(v)]
            skeleton_edge = skeleton.variable_edge[(v, c)]
            b.cross(f"{s}a1", skeleton_edge)
            b.cross(f"{s}e1", skeleton_edge)
            b.cross(f"{q}f_{role}", skeleton.clause_edge[(c, v)])
            b.cross(f"{q}b_{role}", skeleton.clause_edge[(c, v)])
            if g.positive(v, c):
                b.identify(f"{s}a1", f"{q}a_{role}")
                b.identify(f"{s}e1", f"{q}e_{role}")
            else:
                b.identify(f"{s}a1", f"{q}e_{role}")
                b.identify(f"{s}e1", f"{q}a_{role}")

    a = b.at_graph()
    bound = SIZE_FACTOR * (len(g.variables) + len(g.clauses))
    if len(a.graph.vertices) > bound or len(a.graph.edges) > bound:
        raise InternalInconsistency(f"instance exceeds linear size bound {bound}")
    logger.debug("hardness instance: %d vertices, %d edges, %d crossing pairs",
                 len(a.graph.vertices), len(a.graph.edges), len(a.crossings))
    return GadgetInstance(a, skeleton, tuple(splits),
                          tuple(clause_prefix(c) for c in g.clauses), dict(b.alias))


def split_fragment() -> ATGraph:
    """A single split gadget on its own."""
    b = _Builder()
    split_gadget(b, "")
    return b.at_graph()


# ---------------------------------------------------------------- checks

@dataclass
class HardnessReport:
    lam: int
    max_degree: int
    crossing_graph_planar: bool
    shapes: Dict[str, int]
    big_components: int
    expected_big_components: int
    problems: List[str]

    @property
    def ok(self) -> bool:
        return not self.problems

    def to_json(self) -> Dict[str, object]:
        return {
            "lambda": self.lam,
            "max_degree": self.max_degree,
            "crossing_graph_planar": self.crossing_graph_planar,
            "shapes": dict(sorted(self.shapes.items())),
            "big_components": self.big_components,
            "expected_big_components": self.expected_big_components,
            "ok": self.ok,
            "problems": list(self.problems),
        }


def _shape(sub: nx.Graph) -> Optional[str]:
    name = SHAPES.get((sub.number_of_nodes(), sub.number_of_edges()))
    degrees = sorted(d for _, d in sub.degree())
    if name in ("path3", "path4") and max(degrees) > 2:
        return None
    if name == "double-star" and degrees != [1, 1, 1, 1, 3, 3]:
        return None
    if name == "prism" and degrees != [3] * 6:
        return None
    return name


def self_check(gi: GadgetInstance) -> HardnessReport:
    a = gi.instance
    c = build_crossing_graph(a).to_networkx()
    problems: List[str] = []
    shapes: Counter = Counter()
    skeleton_edges = {e for e, _, _ in gi.skeleton.graph.edges}
    for comp in nx.connected_components(c):
        if len(comp) < 2:
            continue
        sub = c.subgraph(comp)
        shape = _shape(sub)
        if shape is None:
            problems.append(f"component {sorted(comp)[:3]}... has an uncatalogued shape")
            continue
        shapes[shape] += 1
        on_skeleton = sorted(comp & skeleton_edges)
        if on_skeleton:
            if shape != "path3" or len(on_skeleton) != 1 or sub.degree(on_skeleton[0]) != 2:
                problems.append(f"skeleton edge component {sorted(comp)} is not a path centred on it")
    lam = lambda_of(a)
    max_degree = max((d for _, d in c.degree()), default=0)
    planar = nx.check_planarity(c)[0]
    big = shapes["double-star"] + shapes["prism"]
    expected = len(gi.split_gadgets) + len(gi.clause_gadgets)
    if lam != 6:
        problems.append(f"lambda is {lam}, not 6")
    if max_degree != 3:
        problems.append(f"crossing graph has maximum degree {max_degree}, not 3")
    if not planar:
        problems.append("crossing graph is not planar")
    if big != expected:
        problems.append(f"{big} components of size six, expected {expected}")
    if shapes["prism"] != len(gi.clause_gadgets):
        problems.append(f"{shapes['prism']} prism components for {len(gi.clause_gadgets)} clauses")
    report = HardnessReport(lam, max_degree, planar, dict(shapes), big, expected, problems)
    for problem in problems:
        logger.warning("hardness self-check: %s", problem)
    return report
