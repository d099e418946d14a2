"""
Unrooted PQ-trees over circular orders, with synchronized Q-nodes.

A tree is a value: every operation returns a new PQTree.

Representation:
- `kinds[n]` is "P", "Q" or "L" (leaf); `labels[n]` names a leaf
- `adj[n]` lists the neighbours of n; for a Q-node this list is its stored
  cyclic order (the reference order)
- a Q-node is forward when the clockwise order of its neighbours equals the
  stored order; `sync` holds Q-node pairs that must share orientation

Circular orders are tuples rotated so that the smallest label comes first.
Reversal is not factored out.
"""
import copy
import itertools
import logging
import math
import re
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Hashable, Iterable, List, Optional, Sequence, Set, Tuple

from src.errors import CapExceeded, Infeasible, SignatureMismatch

logger = logging.getLogger(__name__)

DEFAULT_ORDER_CAP = 50000

P, Q, LEAF = "P", "Q", "L"


@dataclass
class PQTree:
    kinds: Dict[int, str] = field(default_factory=dict)
    labels: Dict[int, Hashable] = field(default_factory=dict)
    adj: Dict[int, List[int]] = field(default_factory=dict)
    sync: Set[FrozenSet[int]] = field(default_factory=set)

    def leaf_labels(self) -> Set[Hashable]:
        return set(self.labels.values())

    def leaf_of(self, label: Hashable) -> int:
        return next(n for n, lab in self.labels.items() if lab == label)

    def internal_nodes(self) -> List[int]:
        return [n for n, k in self.kinds.items() if k != LEAF]

    def _new(self, kind: str, label: Hashable = None) -> int:
        n = max(self.kinds, default=-1) + 1
        self.kinds[n] = kind
        self.adj[n] = []
        if kind == LEAF:
            self.labels[n] = label
        return n

    def copy(self) -> "PQTree":
        return copy.deepcopy(self)

    def __str__(self) -> str:
        return to_sexpr(self)


def _link(t: PQTree, a: int, b: int) -> None:
    t.adj[a].append(b)
    t.adj[b].append(a)


def _sort_key(label):
    return (type(label).__name__, label)


# ---------------------------------------------------------------- construction

def universal(labels: Iterable[Hashable]) -> PQTree:
    labels = sorted(set(labels), key=_sort_key)
    if not labels:
        raise ValueError("a PQ-tree needs at least one label")
    t = PQTree()
    leaves = [t._new(LEAF, lab) for lab in labels]
    if len(leaves) == 2:
        _link(t, leaves[0], leaves[1])
    elif len(leaves) > 2:
        hub = t._new(P)
        for leaf in leaves:
            _link(t, hub, leaf)
    return t


def _is_inner(node) -> bool:
    # leaves may themselves be tuples (darts)
    return (isinstance(node, tuple) and len(node) in (2, 3) and node[0] in (P, Q)
            and isinstance(node[1], list))


def from_nested(spec, sync_tags: Sequence[Tuple[str, str]] = ()) -> PQTree:
    """Build a tree from nested ("P"|"Q", [children], tag) tuples.

    The outermost tuple lists all neighbours of its node. Every nested node
    lists its children after the implicit parent, so a nested Q-node's stored
    order is [parent] + children. Tags name Q-nodes for `sync_tags`.
    """
    t = PQTree()
    tagged: Dict[str, int] = {}

    def build(node, parent: Optional[int]) -> int:
        if not _is_inner(node):
            leaf = t._new(LEAF, node)
            if parent is not None:
                _link(t, parent, leaf)
            return leaf
        kind, children = node[0], node[1]
        n = t._new(kind)
        if len(node) > 2:
            tagged[node[2]] = n
        if parent is not None:
            _link(t, parent, n)
        for child in children:
            build(child, n)
        return n

    build(spec, None)
    for a, b in sync_tags:
        t.sync.add(frozenset((tagged[a], tagged[b])))
    return t


# ---------------------------------------------------------------- S-expressions

def to_sexpr(t: PQTree) -> str:
    """Debug form rooted at the neighbour of the smallest leaf: P(...) and Q[...]."""
    if not t.labels:
        return "()"
    root_leaf = min(t.labels, key=lambda n: _sort_key(t.labels[n]))
    if not t.adj[root_leaf]:
        return str(t.labels[root_leaf])
    synced = {n: i for i, pair in enumerate(sorted(t.sync, key=sorted)) for n in pair}
    min_label = _min_labels(t, root_leaf)

    def render(n: int, parent: int) -> str:
        if t.kinds[n] == LEAF:
            return str(t.labels[n])
        if t.kinds[n] == Q:
            nb = t.adj[n]
            i = nb.index(parent)
            kids = nb[i + 1:] + nb[:i]
            body = "Q[" + " ".join(render(k, n) for k in kids) + "]"
            return body + (f"~{synced[n]}" if n in synced else "")
        kids = sorted((k for k in t.adj[n] if k != parent), key=lambda k: _sort_key(min_label[k]))
        return "P(" + " ".join(render(k, n) for k in kids) + ")"

    top = t.adj[root_leaf][0]
    return f"{t.labels[root_leaf]} {render(top, root_leaf)}"


def _min_labels(t: PQTree, root: int) -> Dict[int, Hashable]:
    out: Dict[int, Hashable] = {}
    for n, parent in reversed(_preorder(t, root)):
        if t.kinds[n] == LEAF:
            out[n] = t.labels[n]
        else:
            out[n] = min((out[k] for k in t.adj[n] if k != parent), key=_sort_key)
    return out


def _preorder(t: PQTree, root: int) -> List[Tuple[int, Optional[int]]]:
    order = []
    stack = [(root, None)]
    while stack:
        n, parent = stack.pop()
        order.append((n, parent))
        for k in t.adj[n]:
            if k != parent:
                stack.append((k, n))
    return order


# ---------------------------------------------------------------- enumeration

def canonical_order(order: Sequence[Hashable]) -> Tuple[Hashable, ...]:
    order = list(order)
    if not order:
        return ()
    i = min(range(len(order)), key=lambda k: _sort_key(order[k]))
    return tuple(order[i:] + order[:i])


def count_upper_bound(t: PQTree) -> int:
    total = 2 ** len([n for n in t.kinds if t.kinds[n] == Q])
    for n, kind in t.kinds.items():
        if kind == P:
            total *= math.factorial(len(t.adj[n]) - 1)
    return total


def _children(t: PQTree, n: int, parent: int, forward: bool = True) -> List[int]:
    nb = t.adj[n]
    if t.kinds[n] == Q:
        i = nb.index(parent)
        kids = nb[i + 1:] + nb[:i]
        return kids if forward else kids[::-1]
    return [k for k in nb if k != parent]


def _sync_classes(t: PQTree) -> List[List[int]]:
    parent = {n: n for n in t.kinds if t.kinds[n] == Q}

    def find(x):
        while parent[x] != x:
            x = parent[x]
        return x

    for pair in t.sync:
        a, b = tuple(pair)
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
    classes: Dict[int, List[int]] = {}
    for n in parent:
        classes.setdefault(find(n), []).append(n)
    return list(classes.values())


def enumerate_orders(t: PQTree, cap: int = DEFAULT_ORDER_CAP) -> Set[Tuple[Hashable, ...]]:
    labels = sorted(t.leaf_labels(), key=_sort_key)
    if len(labels) <= 2:
        return {tuple(labels)}
    if count_upper_bound(t) > cap:
        raise CapExceeded(f"tree represents more than {cap} orders")
    root_leaf = t.leaf_of(labels[0])
    top = t.adj[root_leaf][0]
    classes = _sync_classes(t)
    result: Set[Tuple[Hashable, ...]] = set()
    for flips in itertools.product((True, False), repeat=len(classes)):
        forward = {n: f for cls, f in zip(classes, flips) for n in cls}

        def gen(n: int, parent: int):
            if t.kinds[n] == LEAF:
                yield [t.labels[n]]
                return
            kids = _children(t, n, parent, forward.get(n, True))
            perms = itertools.permutations(kids) if t.kinds[n] == P else [kids]
            for perm in perms:
                for parts in itertools.product(*[list(gen(k, n)) for k in perm]):
                    yield [x for part in parts for x in part]

        for seq in gen(top, root_leaf):
            result.add(tuple([labels[0]] + seq))
    return result


def is_compatible(t: PQTree, order: Sequence[Hashable]) -> bool:
    """Membership test without enumeration: subtree leaf sets must be arcs,
    Q-nodes must keep their stored order or its reverse, synced Q-nodes agree."""
    order = canonical_order(order)
    if set(order) != t.leaf_labels() or len(order) != len(t.labels):
        return False
    if len(order) <= 3:
        return True
    pos = {lab: i for i, lab in enumerate(order)}
    root_leaf = t.leaf_of(order[0])
    span: Dict[int, Tuple[int, int, int]] = {}
    orientation: Dict[int, bool] = {}
    for n, parent in reversed(_preorder(t, root_leaf)):
        if t.kinds[n] == LEAF:
            p = pos[t.labels[n]]
            span[n] = (p, p, 1)
            continue
        if n == root_leaf:
            continue
        kids = _children(t, n, parent)
        lo = min(span[k][0] for k in kids)
        hi = max(span[k][1] for k in kids)
        size = sum(span[k][2] for k in kids)
        if hi - lo + 1 != size:
            return False
        span[n] = (lo, hi, size)
        if t.kinds[n] == Q:
            by_pos = sorted(kids, key=lambda k: span[k][0])
            if by_pos == kids:
                orientation[n] = True
            elif by_pos == kids[::-1]:
                orientation[n] = False
            else:
                return False
    for pair in t.sync:
        a, b = tuple(pair)
        if a in orientation and b in orientation and orientation[a] != orientation[b]:
            return False
    return True


# ---------------------------------------------------------------- consecutivity

EMPTY, FULL, PARTIAL = "E", "F", "P"


@dataclass
class _RNode:
    """Rooted working node used during reduction."""
    kind: str
    children: List["_RNode"] = field(default_factory=list)
    label: Hashable = None
    qid: Optional[int] = None
    # original Q ids folded into this node, with True when stored reversed
    absorbed: List[Tuple[int, bool]] = field(default_factory=list)
    count: int = 0
    size: int = 0


def _rooted(t: PQTree, n: int, parent: int) -> _RNode:
    if t.kinds[n] == LEAF:
        return _RNode(LEAF, label=t.labels[n])
    kids = [_rooted(t, k, n) for k in _children(t, n, parent)]
    node = _RNode(t.kinds[n], kids)
    if t.kinds[n] == Q:
        node.qid = n
        node.absorbed = [(n, False)]
    return node


def _annotate(node: _RNode, subset: Set[Hashable]) -> None:
    if node.kind == LEAF:
        node.size = 1
        node.count = 1 if node.label in subset else 0
        return
    for k in node.children:
        _annotate(k, subset)
    node.size = sum(k.size for k in node.children)
    node.count = sum(k.count for k in node.children)


def _status(node: _RNode) -> str:
    if node.count == 0:
        return EMPTY
    if node.count == node.size:
        return FULL
    return PARTIAL


def _group(nodes: List[_RNode]) -> Optional[_RNode]:
    if not nodes:
        return None
    if len(nodes) == 1:
        return nodes[0]
    grouped = _RNode(P, list(nodes))
    _recount(grouped)
    return grouped


def _flip(absorbed: List[Tuple[int, bool]]) -> List[Tuple[int, bool]]:
    return [(q, not rev) for q, rev in absorbed]


def _reduce_partial(node: _RNode) -> _RNode:
    """Reduce a non-root pertinent node; the result is a Q-node whose
    children run from empty to full."""
    if _status(node) != PARTIAL:
        return node
    kids = [_reduce_partial(k) for k in node.children]
    statuses = [_status(k) for k in kids]
    if node.kind == P:
        empties = [k for k, s in zip(kids, statuses) if s == EMPTY]
        fulls = [k for k, s in zip(kids, statuses) if s == FULL]
        partials = [k for k, s in zip(kids, statuses) if s == PARTIAL]
        if len(partials) > 1:
            raise Infeasible("two partial children below a P-node")
        seq: List[_RNode] = []
        absorbed: List[Tuple[int, bool]] = []
        e, f = _group(empties), _group(fulls)
        if e:
            seq.append(e)
        if partials:
            seq.extend(partials[0].children)
            absorbed.extend(partials[0].absorbed)
        if f:
            seq.append(f)
        out = _RNode(Q, seq, absorbed=absorbed)
        _recount(out)
        return out
    pattern = "".join(statuses)
    if re.fullmatch(r"E*P?F*", pattern):
        reverse = False
    elif re.fullmatch(r"E*P?F*", pattern[::-1]):
        reverse = True
        kids = kids[::-1]
        statuses = statuses[::-1]
    else:
        raise Infeasible("subset is not contiguous under a Q-node")
    seq = []
    absorbed = [(q, rev != reverse) for q, rev in node.absorbed]
    for k, s in zip(kids, statuses):
        if s == PARTIAL:
            seq.extend(k.children)
            absorbed.extend(k.absorbed)
        else:
            seq.append(k)
    out = _RNode(Q, seq, absorbed=absorbed)
    _recount(out)
    return out


def _recount(node: _RNode) -> None:
    node.size = sum(k.size for k in node.children)
    node.count = sum(k.count for k in node.children)


def _reduce_root(node: _RNode) -> _RNode:
    """Reduce the pertinent root; returns its replacement."""
    kids = [_reduce_partial(k) for k in node.children]
    statuses = [_status(k) for k in kids]
    if node.kind == P:
        empties = [k for k, s in zip(kids, statuses) if s == EMPTY]
        fulls = [k for k, s in zip(kids, statuses) if s == FULL]
        partials = [k for k, s in zip(kids, statuses) if s == PARTIAL]
        if len(partials) > 2:
            raise Infeasible("three partial children below the pertinent root")
        f = _group(fulls)
        if not partials:
            return _RNode(P, empties + [f])
        seq = list(partials[0].children)
        absorbed = list(partials[0].absorbed)
        if f:
            seq.append(f)
        if len(partials) == 2:
            seq.extend(reversed(partials[1].children))
            absorbed.extend(_flip(partials[1].absorbed))
        merged = _RNode(Q, seq, absorbed=absorbed)
        if not empties:
            return merged
        return _RNode(P, empties + [merged])
    pattern = "".join(statuses)
    if not re.fullmatch(r"E*P?F*P?E*", pattern):
        raise Infeasible("subset is not contiguous under the pertinent Q-node")
    first_nonempty = next(i for i, s in enumerate(statuses) if s != EMPTY)
    seq = []
    absorbed = list(node.absorbed)
    for i, (k, s) in enumerate(zip(kids, statuses)):
        if s != PARTIAL:
            seq.append(k)
        elif i == first_nonempty:
            seq.extend(k.children)
            absorbed.extend(k.absorbed)
        else:
            seq.extend(reversed(k.children))
            absorbed.extend(_flip(k.absorbed))
    return _RNode(Q, seq, absorbed=absorbed)


def _pertinent_path(root: _RNode, total: int) -> List[_RNode]:
    path = [root]
    while True:
        nxt = next((k for k in path[-1].children if k.count == total), None)
        if nxt is None or nxt.kind == LEAF:
            return path
        path.append(nxt)


def apply_consecutivity(t: PQTree, subset: Iterable[Hashable]) -> PQTree:
    subset = set(subset)
    labels = t.leaf_labels()
    if not subset <= labels:
        raise ValueError("subset contains unknown labels")
    if len(subset) <= 1 or len(subset) >= len(labels) - 1:
        return t.copy()
    outside = min(labels - subset, key=_sort_key)
    root_leaf = t.leaf_of(outside)
    top = _rooted(t, t.adj[root_leaf][0], root_leaf)
    _annotate(top, subset)
    path = _pertinent_path(top, len(subset))
    pert = path[-1]
    if _status(pert) == FULL:
        return t.copy()
    replacement = _reduce_root(pert)
    if len(path) == 1:
        top = replacement
    else:
        parent = path[-2]
        parent.children = [replacement if k is pert else k for k in parent.children]
    return _unroot(t, top, outside)


def _unroot(t: PQTree, top: _RNode, outside: Hashable) -> PQTree:
    out = PQTree()
    # original Q id -> (new node, stored reversed)
    mapping: Dict[int, Tuple[int, bool]] = {}
    root_leaf = out._new(LEAF, outside)

    def emit(node: _RNode, parent: int) -> int:
        if node.kind == LEAF:
            n = out._new(LEAF, node.label)
            _link(out, parent, n)
            return n
        n = out._new(node.kind)
        _link(out, parent, n)
        for q, rev in node.absorbed:
            mapping[q] = (n, rev)
        for k in node.children:
            emit(k, n)
        return n

    emit(top, root_leaf)
    _carry_sync(t, out, mapping)
    return normalize(out)


def _carry_sync(old: PQTree, new: PQTree, mapping: Dict[int, Tuple[int, bool]]) -> None:
    """Re-express sync links after reduction; reversed relations are fixed by
    reversing stored orders of whole classes."""
    parent: Dict[int, Tuple[int, bool]] = {}

    def find(x: int) -> Tuple[int, bool]:
        parity = False
        while x in parent:
            x, p = parent[x][0], parity != parent[x][1]
            parity = p
        return x, parity

    for pair in old.sync:
        a, b = tuple(pair)
        if a not in mapping or b not in mapping:
            continue
        (na, ra), (nb, rb) = mapping[a], mapping[b]
        (root_a, pa), (root_b, pb) = find(na), find(nb)
        want = ra ^ rb
        if root_a == root_b:
            if pa ^ pb ^ want:
                raise Infeasible("consecutivity contradicts synchronized Q-nodes")
            continue
        parent[root_a] = (root_b, pa ^ pb ^ want)
    classes: Dict[int, List[Tuple[int, bool]]] = {}
    for n in {m for m, _ in mapping.values()} | set(parent):
        root, parity = find(n)
        classes.setdefault(root, []).append((n, parity))
    for root, members in classes.items():
        if len(members) < 2:
            continue
        for n, parity in members:
            if parity:
                new.adj[n].reverse()
            if n != root:
                new.sync.add(frozenset((n, root)))


# ---------------------------------------------------------------- restriction

def normalize(t: PQTree) -> PQTree:
    """Drop empty branches, smooth degree-2 nodes, and turn unsynced
    degree-3 Q-nodes into P-nodes."""
    changed = True
    while changed:
        changed = False
        for n in list(t.kinds):
            if n not in t.kinds or t.kinds[n] == LEAF:
                continue
            deg = len(t.adj[n])
            synced = any(n in pair for pair in t.sync)
            if deg <= 1:
                for k in t.adj[n]:
                    t.adj[k].remove(n)
                _drop(t, n)
                changed = True
            elif deg == 2:
                a, b = t.adj[n]
                t.adj[a][t.adj[a].index(n)] = b
                t.adj[b][t.adj[b].index(n)] = a
                _drop(t, n)
                changed = True
            elif deg == 3 and t.kinds[n] == Q and not synced:
                t.kinds[n] = P
                changed = True
    return t


def _drop(t: PQTree, n: int) -> None:
    del t.kinds[n]
    del t.adj[n]
    t.sync = {pair for pair in t.sync if n not in pair}


def restrict(t: PQTree, f: Iterable[Hashable]) -> PQTree:
    """Tree over f whose orders are the projections of t's orders."""
    f = set(f)
    if len(f) <= 2:
        return universal(f)
    out = t.copy()
    for n, lab in list(out.labels.items()):
        if lab not in f:
            for k in out.adj[n]:
                out.adj[k].remove(n)
            del out.labels[n]
            del out.kinds[n]
            del out.adj[n]
    return normalize(out)


# ---------------------------------------------------------------- canned trees

R, B, PU = "red", "blue", "purple"

# pattern id -> (colour signature of the darts in call order, builder)
CANNED_SIGNATURES = {
    "K2": (R, B, R, B),
    "P3-pp": (R, R, B, B),
    "K3-(rb)": (R, B, PU, PU),
    "consec6-a": (R, B, R, B, PU, PU),
    "consec6-b": (R, B, R, B, PU, PU),
    "consec6-c": (PU, R, PU, R, B, B),
    "consec5-a": (R, R, B, B, PU),
    "consec5-b": (R, B, R, B, PU),
    "consec5-c": (PU, R, R, B, B),
    "consec5-d": (R, B, B, PU, PU),
    "consec5-e": (B, PU, B, PU, R),
    "pqnew-a": (B, PU, B, PU),
    "pqnew-b": (B, PU, R, PU),
}


def canned_tree(pattern: str, darts: Sequence[Tuple[Hashable, str]]) -> PQTree:
    """Replacement tree for an alternation constraint.

    `darts` lists (label, colour) in the pattern's signature order; patterns
    that start from a consecutive pair list that pair first:
    - K2 r1 b1 r2 b2; P3-pp r1 r2 b1 b2; K3-(rb) r b p1 p2
    - consec6-a/b: pair r1 b1, then r2 b2 p1 p2
    - consec6-c: pair p1 r1, then p2 r2 b1 b2
    - consec5-a: pair r1 r2, then b1 b2 p
    - consec5-b: pair r1 b1, then r2 b2 p
    - consec5-c: pair p r1, then r2 b1 b2
    - consec5-d: pair r b1, then b2 p1 p2
    - consec5-e: pairs b1 p1 and b2 p2, then r
    - pqnew-a: b1 p1 b2 p2 (blue and purple alternate)
    - pqnew-b: pair b p, then r p'
    """
    if pattern not in CANNED_SIGNATURES:
        raise SignatureMismatch(f"unknown pattern {pattern!r}")
    signature = CANNED_SIGNATURES[pattern]
    if tuple(c for _, c in darts) != signature:
        raise SignatureMismatch(f"pattern {pattern} expects colours {signature}")
    x = [lab for lab, _ in darts]
    if pattern == "K2":
        return from_nested((Q, [x[0], x[1], x[2], x[3]]))
    if pattern in ("P3-pp", "K3-(rb)"):
        return from_nested((P, [x[0], x[1], (P, [x[2], x[3]])]))
    if pattern == "consec6-a":
        r1, b1, r2, b2, p1, p2 = x
        return from_nested((Q, [(Q, [r1, b1], "e1"), p1, (Q, [r2, b2], "e2"), p2]),
                           [("e1", "e2")])
    if pattern == "consec6-b":
        r1, b1, r2, b2, p1, p2 = x
        return from_nested((Q, [p1, (Q, [r1, b1], "e1"), p2, (Q, [b2, r2], "e2")]),
                           [("e1", "e2")])
    if pattern == "consec6-c":
        p1, r1, p2, r2, b1, b2 = x
        return from_nested((Q, [(Q, [b1, p2, b2]), r2, p1, r1]))
    if pattern == "consec5-a":
        r1, r2, b1, b2, p = x
        return from_nested((Q, [p, b1, (P, [r1, r2]), b2]))
    if pattern == "consec5-b":
        r1, b1, r2, b2, p = x
        return from_nested((P, [p, (Q, [b1, r1], "e1"), (Q, [r2, b2], "e2")]),
                           [("e1", "e2")])
    if pattern == "consec5-c":
        p, r1, r2, b1, b2 = x
        return from_nested((Q, [p, r1, (P, [b1, b2]), r2]))
    if pattern == "consec5-d":
        r, b1, b2, p1, p2 = x
        return from_nested((Q, [(P, [r, b1]), p1, b2, p2]))
    if pattern == "consec5-e":
        b1, p1, b2, p2, r = x
        return from_nested((P, [r, (Q, [b1, p1], "e1"), (Q, [b2, p2], "e2")]),
                           [("e1", "e2")])
    if pattern == "pqnew-a":
        b1, p1, b2, p2 = x
        return from_nested((Q, [b1, p1, b2, p2]))
    b, p, r, p2 = x
    return from_nested((P, [r, p2, (P, [b, p])]))
