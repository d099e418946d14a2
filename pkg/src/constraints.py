"""
Alternation constraints on the rotation of a single vertex.

A constraint colours the darts at a vertex red, blue or purple and says which
colour pairs must (or must not) alternate. The kinds that survive
normalization are:

    K3         2r 2b 2p   every colour pair alternates
    P3         2r 2b 2p   r/p and b/p alternate, r/b do not
    K2         2r 2b      r/b alternate
    K3minusR   1r 2b 2p   b/p alternate
    P3minusP   2r 2b 1p   r/b do not alternate and p sits between the reds
                          or between the blues
    P3minusPP  2r 2b      the reds are consecutive
    K3minusRB  1r 1b 2p   the purples are consecutive

Cutting a constrained vertex derives raw constraints: darts that moved to
another block are re-inserted anywhere, or as one adjacent pair when they
share a two-dart block. normalize_constraint maps each raw constraint onto a
kind above, ALWAYS or NEVER.
"""
import logging
from collections import Counter
from dataclasses import dataclass
from typing import Hashable, Iterable, List, Mapping, Sequence, Set, Tuple, Union

from src.atcore import BLUE, COLORS, PURPLE, RED
from src.embedding import Dart, circular_orders
from src.errors import SignatureMismatch
from src.pqtree import canonical_order

logger = logging.getLogger(__name__)

K3, P3, K2 = "K3", "P3", "K2"
K3_MINUS_R, P3_MINUS_P = "K3minusR", "P3minusP"
P3_MINUS_PP, K3_MINUS_RB = "P3minusPP", "K3minusRB"
KINDS = (K3, P3, K2, K3_MINUS_R, P3_MINUS_P, P3_MINUS_PP, K3_MINUS_RB)

ALWAYS, NEVER = "alwaysSatisfied", "neverSatisfiable"

COLOR_COUNTS = {
    K3: {RED: 2, BLUE: 2, PURPLE: 2},
    P3: {RED: 2, BLUE: 2, PURPLE: 2},
    K2: {RED: 2, BLUE: 2},
    K3_MINUS_R: {RED: 1, BLUE: 2, PURPLE: 2},
    P3_MINUS_P: {RED: 2, BLUE: 2, PURPLE: 1},
    P3_MINUS_PP: {RED: 2, BLUE: 2},
    K3_MINUS_RB: {RED: 1, BLUE: 1, PURPLE: 2},
}

# colours whose two darts can never sit next to each other
MUST_ALTERNATE = {
    K3: {RED, BLUE, PURPLE},
    P3: {RED, BLUE, PURPLE},
    K2: {RED, BLUE},
    K3_MINUS_R: {BLUE, PURPLE},
    P3_MINUS_P: set(),
    P3_MINUS_PP: set(),
    K3_MINUS_RB: set(),
}


@dataclass(frozen=True)
class AlternationConstraint:
    kind: str
    colors: Mapping[Dart, str]

    def __post_init__(self):
        if self.kind not in COLOR_COUNTS:
            raise SignatureMismatch(f"unknown constraint kind {self.kind!r}")
        counts = Counter(self.colors.values())
        if dict(counts) != COLOR_COUNTS[self.kind]:
            raise SignatureMismatch(f"{self.kind} needs colours {COLOR_COUNTS[self.kind]}, got {dict(counts)}")

    @property
    def degree(self) -> int:
        return len(self.colors)

    def darts(self) -> List[Dart]:
        return sorted(self.colors, key=repr)

    def of(self, color: str) -> List[Dart]:
        return [d for d in self.darts() if self.colors[d] == color]

    def satisfied(self, order: Sequence[Dart]) -> bool:
        return satisfies(self, order)

    def recolored(self, mapping: Mapping[str, str], kind: str,
                  keep: Iterable[Dart]) -> "AlternationConstraint":
        return AlternationConstraint(kind, {d: mapping[self.colors[d]] for d in keep})

    def __str__(self) -> str:
        body = " ".join(f"{d[0]}:{self.colors[d][0]}" for d in self.darts())
        return f"{self.kind}({body})"


Normalized = Union[AlternationConstraint, str]


# ---------------------------------------------------------------- predicates

def alternate(order: Sequence[Hashable], first: Sequence[Hashable], second: Sequence[Hashable]) -> bool:
    """True iff the two 2-sets interleave in the circular order."""
    pos = {x: i for i, x in enumerate(order)}
    lo, hi = sorted(pos[x] for x in first)
    inside = sum(1 for x in second if lo < pos[x] < hi)
    return inside == 1


def consecutive(order: Sequence[Hashable], pair: Sequence[Hashable]) -> bool:
    n = len(order)
    i, j = (order.index(x) for x in pair)
    return (i - j) % n in (1, n - 1)


def satisfies(c: AlternationConstraint, order: Sequence[Dart]) -> bool:
    order = list(order)
    if len(order) != c.degree or set(order) != set(c.colors):
        return False
    r, b, p = c.of(RED), c.of(BLUE), c.of(PURPLE)
    if c.kind == K3:
        return alternate(order, r, b) and alternate(order, r, p) and alternate(order, b, p)
    if c.kind == P3:
        return alternate(order, r, p) and alternate(order, b, p) and not alternate(order, r, b)
    if c.kind == K2:
        return alternate(order, r, b)
    if c.kind == K3_MINUS_R:
        return alternate(order, b, p)
    if c.kind == P3_MINUS_P:
        i = order.index(p[0])
        left, right = order[i - 1], order[(i + 1) % len(order)]
        return not alternate(order, r, b) and c.colors[left] == c.colors[right]
    if c.kind == P3_MINUS_PP:
        return consecutive(order, r)
    return consecutive(order, p)


def satisfying_orders(c: AlternationConstraint) -> Set[Tuple[Dart, ...]]:
    return {canonical_order(o) for o in circular_orders(c.darts()) if satisfies(c, o)}


# ---------------------------------------------------------------- raw derived constraints

def _insertions(order: Sequence[Dart], block: Sequence[Dart]) -> Iterable[List[Dart]]:
    for i in range(len(order)):
        yield list(order[:i + 1]) + list(block) + list(order[i + 1:])


def raw_feasible(base: AlternationConstraint, removed: Sequence[Dart], consecutive_pair: bool,
                 order: Sequence[Dart]) -> bool:
    """Whether the removed darts can be put back into `order` so base holds."""
    order = list(order)
    if not order:
        candidates: Iterable[List[Dart]] = (list(o) for o in circular_orders(removed))
        return any(satisfies(base, o) for o in candidates)
    if len(removed) == 1:
        return any(satisfies(base, o) for o in _insertions(order, removed))
    d1, d2 = removed
    if consecutive_pair:
        return any(satisfies(base, o)
                   for block in ((d1, d2), (d2, d1))
                   for o in _insertions(order, block))
    return any(satisfies(base, full)
               for partial in _insertions(order, (d1,))
               for full in _insertions(partial, (d2,)))


def raw_orders(base: AlternationConstraint, removed: Sequence[Dart],
               consecutive_pair: bool = False) -> Set[Tuple[Dart, ...]]:
    rest = [d for d in base.darts() if d not in set(removed)]
    return {canonical_order(o) for o in circular_orders(rest)
            if raw_feasible(base, removed, consecutive_pair, o)}


# ---------------------------------------------------------------- normalization

def _others(*colors: str) -> List[str]:
    return [c for c in COLORS if c not in colors]


def normalize_constraint(base: AlternationConstraint, removed: Sequence[Dart],
                         consecutive_pair: bool = False) -> Normalized:
    """Canonical form of base with `removed` re-insertable (as an adjacent pair
    when consecutive_pair). Returns a constraint on the remaining darts, ALWAYS
    or NEVER."""
    removed = list(removed)
    keep = [d for d in base.darts() if d not in set(removed)]
    lost = sorted(base.colors[d] for d in removed)
    kind = base.kind
    if len(removed) == 2 and consecutive_pair and lost[0] == lost[1]:
        return NEVER if lost[0] in MUST_ALTERNATE[kind] else ALWAYS
    if len(keep) <= 3 or not removed:
        return base if not removed else ALWAYS

    if len(removed) == 1:
        (c,) = lost
        if kind == K3:
            b, p = _others(c)
            return base.recolored({c: RED, b: BLUE, p: PURPLE}, K3_MINUS_R, keep)
        if kind == P3:
            if c == PURPLE:
                return base.recolored({RED: RED, BLUE: BLUE, PURPLE: PURPLE}, P3_MINUS_P, keep)
            other = BLUE if c == RED else RED
            return base.recolored({c: RED, other: BLUE, PURPLE: PURPLE}, K3_MINUS_R, keep)
        if kind == K3_MINUS_R:
            if c == RED:
                return base.recolored({BLUE: BLUE, PURPLE: RED}, K2, keep)
            return ALWAYS
        if kind == P3_MINUS_P:
            if c == PURPLE:
                return base.recolored({RED: RED, BLUE: BLUE}, P3_MINUS_PP, keep)
            return ALWAYS
        return ALWAYS

    c1, c2 = lost
    if kind == K3:
        if consecutive_pair:
            (third,) = _others(c1, c2)
            first, second = (base.colors[d] for d in removed)
            return base.recolored({first: RED, second: BLUE, third: PURPLE}, K3_MINUS_RB, keep)
        if c1 == c2:
            a, b = _others(c1)
            return base.recolored({a: RED, b: BLUE}, K2, keep)
        return ALWAYS
    if kind == P3:
        if consecutive_pair:
            if PURPLE in lost:
                c = c1 if c2 == PURPLE else c2
                other = BLUE if c == RED else RED
                return base.recolored({c: RED, PURPLE: RED, other: BLUE}, K2, keep)
            return base.recolored({RED: RED, BLUE: BLUE, PURPLE: PURPLE}, K3_MINUS_RB, keep)
        if c1 == c2 == PURPLE:
            return base.recolored({RED: RED, BLUE: BLUE}, P3_MINUS_PP, keep)
        if c1 == c2:
            other = BLUE if c1 == RED else RED
            return base.recolored({other: BLUE, PURPLE: RED}, K2, keep)
        return ALWAYS
    return ALWAYS
