"""
Exhaustive SATR decider for small instances.

Guess the order of the crossings along every edge, build the
planarization, and ask whether it has a planar embedding in which every
dummy alternates its two edges. The alternation is enforced by blowing each
dummy up into a 4-wheel, whose rim order is fixed up to reflection, and
testing planarity with networkx. Works for any lambda; limits keep runs
bounded.

Orderings that an automorphism of the instance maps onto one already tried
are skipped, and enumerated realizations can be taken up to reflection.
Planarity tests of the orderings can be spread over worker processes; the
answer does not depend on the number of workers.
"""
import itertools
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial
from typing import Dict, Hashable, Iterable, Iterator, List, Mapping, Optional, Sequence, Set, Tuple

import networkx as nx
from networkx.algorithms.isomorphism import GraphMatcher

from src.atcore import NO, YES, ATGraph, Graph, PlanarizationCertificate, Verdict, check_certificate, validate
from src.embedding import Dart, RotationSystem, circular_orders, euler_check, planar_embedding
from src.errors import InternalInconsistency, LimitExceeded, NotPlanar
from src.hardness import split_fragment

logger = logging.getLogger(__name__)

NO_REALIZATION = "NoRealization"
# automorphisms kept for skipping orderings; a partial group is still sound
MAX_AUTOMORPHISMS = 256
ORDERINGS_PER_TASK = 32

Routes = Dict[Hashable, Tuple[str, ...]]
Dummies = Dict[str, Tuple[Hashable, Hashable]]
# edge -> (image edge, 1 when the image runs the other way)
EdgeMap = Dict[Hashable, Tuple[Hashable, int]]

@dataclass(frozen=True)
class OracleLimits:
    max_planarization_vertices: int = 200
    max_total_darts: int = 2000
    max_rotation_systems: int = 200000
    max_orderings: int = 100000

    def __post_init__(self):
        for name, value in vars(self).items():
            if value <= 0:
                raise ValueError(f"{name} must be positive, got {value}")


def dummy_name(pair: Sequence[Hashable], taken: set) -> str:
    e, f = sorted(pair, key=str)
    name = f"#{e}x{f}"
    while name in taken:
        name = "#" + name
    return name


def _partners(a: ATGraph) -> Dict[Hashable, List[Hashable]]:
    partners: Dict[Hashable, List[Hashable]] = {e: [] for e, _, _ in a.graph.edges}
    for pair in a.crossings:
        e, f = sorted(pair, key=str)
        partners[e].append(f)
        partners[f].append(e)
    return {e: sorted(p, key=str) for e, p in partners.items()}


def count_orderings(a: ATGraph) -> int:
    return math.prod(math.factorial(len(p)) for p in _partners(a).values())


def _check_size(a: ATGraph, lim: OracleLimits) -> None:
    vertices = len(a.graph.vertices) + len(a.crossings)
    darts = 2 * (len(a.graph.edges) + 2 * len(a.crossings))
    if vertices > lim.max_planarization_vertices:
        raise LimitExceeded(f"planarization has {vertices} vertices (limit {lim.max_planarization_vertices})")
    if darts > lim.max_total_darts:
        raise LimitExceeded(f"planarization has {darts} darts (limit {lim.max_total_darts})")
    orderings = count_orderings(a)
    if orderings > lim.max_orderings:
        raise LimitExceeded(f"{orderings} crossing orderings (limit {lim.max_orderings})")



def automorphisms(a: ATGraph, limit: int = MAX_AUTOMORPHISMS) -> List[EdgeMap]:
    """Edge maps of vertex automorphisms that send crossing pairs to crossing
    pairs, the identity first."""
    g = nx.Graph()
    g.add_nodes_from(a.graph.vertices)
    between = {}
    for e, u, v in a.graph.edges:
        g.add_edge(u, v)
        between[frozenset((u, v))] = e
    identity: EdgeMap = {e: (e, 0) for e, _, _ in a.graph.edges}
    out: List[EdgeMap] = [identity]
    for sigma in GraphMatcher(g, g).isomorphisms_iter():
        image: EdgeMap = {}
        for e, u, v in a.graph.edges:
            f = between[frozenset((sigma[u], sigma[v]))]
            image[e] = (f, 0 if a.graph.ends(f)[0] == sigma[u] else 1)
        if image != identity and all(frozenset(image[e][0] for e in pair) in a.crossings for pair in a.crossings):
            out.append(image)
            if len(out) >= limit:
                break
    return out


def _image(order: Mapping[Hashable, Tuple[Hashable, ...]], image: EdgeMap) -> Tuple:
    mapped = {}
    for e, seq in order.items():
        f, flip = image[e]
        seq = tuple(image[x][0] for x in seq)
        mapped[f] = seq[::-1] if flip else seq
    return tuple(mapped[e] for e in order)


def crossing_orderings(a: ATGraph, reduce: bool = False) -> Iterator[Tuple[Routes, Dummies]]:
    """Every choice of crossing order along the edges, as routes over named
    dummies. With `reduce`, orderings equivalent under an automorphism to
    one already yielded are skipped."""
    taken = set(a.graph.vertices)
    names: Dict[frozenset, str] = {}
    dummies: Dummies = {}
    for pair in sorted(a.crossings, key=lambda p: sorted(p, key=str)):
        name = dummy_name(tuple(pair), taken)
        taken.add(name)
        names[pair] = name
        dummies[name] = tuple(sorted(pair, key=str))
    partners = _partners(a)
    edges = [e for e, _, _ in a.graph.edges]
    group = automorphisms(a)[1:] if reduce and a.crossings else []
    seen: Set[Tuple] = set()
    skipped = 0
    choices = [list(itertools.permutations(partners[e])) for e in edges]
    for combo in itertools.product(*choices):
        if group:
            if any(_image(dict(zip(edges, combo)), image) in seen for image in group):
                skipped += 1
                continue
            seen.add(combo)
        routes = {e: tuple(names[frozenset((e, f))] for f in seq) for e, seq in zip(edges, combo)}
        yield routes, dummies
    if skipped:
        logger.debug("skipped %d orderings equivalent under %d automorphisms", skipped, len(group))


def planarization(a: ATGraph, routes: Mapping[Hashable, Sequence[str]],
                  dummies: Mapping[str, Tuple[Hashable, Hashable]]) -> Graph:
    """Segment (e, i) runs from the i-th to the (i+1)-th stop of edge e."""
    edges = []
    for eid, u, v in a.graph.edges:
        stops = [u, *routes.get(eid, ()), v]
        edges += [((eid, i), stops[i], stops[i + 1]) for i in range(len(stops) - 1)]
    return Graph.build(list(a.graph.vertices) + sorted(dummies), edges, simple=False)


def _dummy_ring(routes: Mapping[Hashable, Sequence[str]], d: str, pair: Tuple[Hashable, Hashable]) -> List[Dart]:
    """Planarization darts at d in one alternating order."""
    e, f = pair
    i, j = list(routes[e]).index(d), list(routes[f]).index(d)
    return [((e, i), 0, 1), ((f, j), 0, 1), ((e, i + 1), 0, 0), ((f, j + 1), 0, 0)]


def _wheel_expansion(p: Graph, rings: Mapping[str, List[Dart]]) -> Graph:
    endpoint = {}
    vertices = [x for x in p.vertices if x not in rings]
    extra = []
    for d, ring in rings.items():
        hub = ("hub", d)
        vertices.append(hub)
        for k, (seg, _, side) in enumerate(ring):
            rim = ("rim", d, k)
            vertices.append(rim)
            endpoint[(seg, side)] = rim
            extra.append((("rimedge", d, k), rim, ("rim", d, (k + 1) % 4)))
            extra.append((("spoke", d, k), hub, rim))
    edges = [(e, endpoint.get((e, 0), u), endpoint.get((e, 1), v)) for e, u, v in p.edges]
    return Graph.build(vertices, edges + extra, simple=False)


def _certificate(a: ATGraph, routes, dummies, p: Graph, rings, rot: RotationSystem) -> PlanarizationCertificate:
    rotations = {}
    for x in a.graph.vertices:
        rotations[x] = tuple((seg[0], seg[1], side) for seg, _, side in rot.rotations[x])
    for d, ring in rings.items():
        seq = [dart[0][2] for dart in rot.rotations[("hub", d)]]
        rotations[d] = tuple((ring[k][0][0], ring[k][0][1], ring[k][2]) for k in seq)
    return PlanarizationCertificate(
        tuple(sorted(dummies.items())),
        {e: tuple(r) for e, r in routes.items()},
        rotations,
    )



def embed_routes(a: ATGraph, routes: Mapping[Hashable, Sequence[str]],
                 dummies: Mapping[str, Tuple[Hashable, Hashable]]) -> Optional[PlanarizationCertificate]:
    """Certificate for fixed crossing orders, or None when they admit no
    planar alternating embedding."""
    p = planarization(a, routes, dummies)
    rings = {d: _dummy_ring(routes, d, pair) for d, pair in dummies.items()}
    try:
        rot = planar_embedding(_wheel_expansion(p, rings))
    except NotPlanar:
        return None
    return _certificate(a, routes, dummies, p, rings, rot)


def _first_embedded(a: ATGraph, batch: Iterable[Tuple[int, Tuple[Routes, Dummies]]]
                    ) -> Optional[Tuple[int, PlanarizationCertificate]]:
    for i, (routes, dummies) in batch:
        witness = embed_routes(a, routes, dummies)
        if witness is not None:
            return i, witness
    return None


def _batches(items: Iterable, size: int) -> Iterator[list]:
    it = iter(items)
    while True:
        chunk = list(itertools.islice(it, size))
        if not chunk:
            return
        yield chunk


def _search(a: ATGraph, orderings: Iterable[Tuple[Routes, Dummies]], jobs: int
            ) -> Optional[Tuple[int, PlanarizationCertificate]]:
    """First realizable ordering in enumeration order, with its certificate."""
    numbered = enumerate(orderings)
    if jobs <= 1:
        return _first_embedded(a, numbered)
    pool = ProcessPoolExecutor(max_workers=jobs)
    try:
        # map yields in submission order, so the first hit is the sequential one
        for found in pool.map(partial(_first_embedded, a), _batches(numbered, ORDERINGS_PER_TASK)):
            if found is not None:
                return found
        return None
    finally:
        pool.shutdown(wait=True, cancel_futures=True)


def brute_force_satr(a: ATGraph, lim: OracleLimits = OracleLimits(), jobs: int = 1,
                     reduce: bool = True) -> Verdict:
    if jobs < 1:
        raise ValueError(f"jobs must be positive, got {jobs}")
    reason = validate(a)
    if reason:
        return Verdict(NO, reason=reason)
    _check_size(a, lim)
    found = _search(a, crossing_orderings(a, reduce), jobs)
    if found is None:
        logger.debug("no realization among %d orderings before reduction", count_orderings(a))
        return Verdict(NO, reason=NO_REALIZATION)
    tried, witness = found
    if not check_certificate(a, witness):
        raise InternalInconsistency("oracle produced a certificate that fails verification")
    logger.debug("realization found at ordering %d", tried)
    return Verdict(YES, witness)


def _mirror_free(at: Sequence[Dart], orders: Iterable[Tuple[Dart, ...]]) -> List[Tuple[Dart, ...]]:
    """One order of each mirrored pair: the second dart precedes the last in `at`."""
    pos = {d: i for i, d in enumerate(at)}
    return [o for o in orders if pos[o[1]] < pos[o[-1]]]


def enumerate_realizations(a: ATGraph, lim: OracleLimits = OracleLimits(),
                           up_to_mirror: bool = False) -> List[PlanarizationCertificate]:
    """Every accepting certificate, one per rotation system, or one per
    mirrored pair of rotation systems."""
    if validate(a):
        return []
    _check_size(a, lim)
    found = []
    for routes, dummies in crossing_orderings(a):
        p = planarization(a, routes, dummies)
        rings = {d: _dummy_ring(routes, d, pair) for d, pair in dummies.items()}
        at: Dict[Hashable, List[Dart]] = {x: [] for x in p.vertices}
        for e, u, v in p.edges:
            at[u].append((e, 0, 0))
            at[v].append((e, 0, 1))
        choices = []
        pinned = not up_to_mirror
        for x in p.vertices:
            if x in rings:
                ring = rings[x]
                choices.append([tuple(ring)] if not pinned else [tuple(ring), (ring[0], ring[3], ring[2], ring[1])])
                pinned = True
            elif not pinned and len(at[x]) >= 3:
                choices.append(_mirror_free(at[x], circular_orders(at[x])))
                pinned = True
            else:
                choices.append(list(circular_orders(at[x])))
        total = math.prod(len(c) for c in choices)
        if total > lim.max_rotation_systems:
            raise LimitExceeded(f"{total} rotation systems (limit {lim.max_rotation_systems})")
        for combo in itertools.product(*choices):
            rot = RotationSystem(dict(zip(p.vertices, combo)))
            if not euler_check(rot):
                continue
            found.append(PlanarizationCertificate(
                tuple(sorted(dummies.items())),
                {e: tuple(r) for e, r in routes.items()},
                {x: tuple((seg[0], seg[1], side) for seg, _, side in darts) for x, darts in rot.rotations.items()},
            ))
    return found


def splitter_orders(a: Optional[ATGraph] = None, outer: Sequence[Hashable] = ("l1", "l2", "l3"),
                    lim: OracleLimits = OracleLimits()) -> Set[Tuple[Hashable, ...]]:
    """Realizable sequences of edges crossing the cycle `outer`, read along
    the cycle. Defaults to a lone split gadget."""
    if a is None:
        a = split_fragment()
    _check_size(a, lim)
    found: Set[Tuple[Hashable, ...]] = set()
    tried = 0
    for routes, dummies in crossing_orderings(a):
        seq = tuple(next(e for e in dummies[d] if e != l) for l in outer for d in routes[l])
        if seq in found:
            continue
        tried += 1
        if embed_routes(a, routes, dummies) is not None:
            found.add(seq)
    logger.debug("splitter: %d planarity tests, %d realizable sequences", tried, len(found))
    return found
