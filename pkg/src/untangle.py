"""
Putting crossings back into a crossing vertex.

A crossing vertex X stands for two or three pairwise crossing edges. Its
rotation lists the six (four for K2) edge ends by role: `r0` is the end of
the red edge toward its first endpoint, `r1` the other, and so on. An
arrangement says in which order each edge meets the others (e.g.
"r:bp,b:rp,p:rb"). It is valid for a rotation when the dummies can be
rotated so that the local picture, with all ends attached to an outer vertex
in X's rotation, has genus zero.

The valid arrangements of every K3 and P3 rotation are stored in
untangle_table.json; generate_table recomputes them.
"""
import functools
import itertools
import json
import logging
from pathlib import Path
from typing import Dict, Iterator, List, Mapping, Sequence, Tuple

from src.atcore import BLUE, PURPLE, RED
from src.constraints import K2, K3, P3, AlternationConstraint
from src.embedding import RotationSystem, circular_orders, euler_check
from src.errors import InternalInconsistency

logger = logging.getLogger(__name__)

TABLE_PATH = Path(__file__).with_name("untangle_table.json")

LETTERS = "rbp"
LETTER_OF = {RED: "r", BLUE: "b", PURPLE: "p"}
PARTNERS = {
    K2: {"r": "b", "b": "r"},
    P3: {"r": "p", "b": "p", "p": "rb"},
    K3: {"r": "bp", "b": "rp", "p": "rb"},
}

LocalDart = Tuple[str, int, int]
Arrangement = Dict[str, str]


def arrangement_key(arrangement: Mapping[str, str]) -> str:
    return ",".join(f"{c}:{arrangement[c]}" for c in LETTERS if c in arrangement)


def parse_arrangement(text: str) -> Arrangement:
    return dict(part.split(":") for part in text.split(","))


def arrangements_for(kind: str) -> Iterator[Arrangement]:
    partners = PARTNERS[kind]
    letters = [c for c in LETTERS if c in partners]
    choices = [["".join(p) for p in itertools.permutations(partners[c])] for c in letters]
    for seqs in itertools.product(*choices):
        yield dict(zip(letters, seqs))


def role_constraint(kind: str) -> AlternationConstraint:
    letters = PARTNERS[kind]
    colors = {f"{LETTER_OF[color]}{end}": color
              for color in (RED, BLUE, PURPLE) if LETTER_OF[color] in letters for end in (0, 1)}
    return AlternationConstraint(kind, colors)


def _dummy_options(arrangement: Mapping[str, str]) -> Dict[str, List[Tuple[LocalDart, ...]]]:
    """Both alternating rotations of every dummy, keyed by its letter pair."""
    ends: Dict[str, Dict[str, Tuple[LocalDart, LocalDart]]] = {}
    for c, seq in arrangement.items():
        for j, other in enumerate(seq):
            key = "".join(sorted((c, other), key=LETTERS.index))
            ends.setdefault(key, {})[c] = ((c, j, 1), (c, j + 1, 0))
    options = {}
    for key, by_letter in ends.items():
        (a_in, a_out), (b_in, b_out) = by_letter[key[0]], by_letter[key[1]]
        options[key] = [(a_in, b_in, a_out, b_out), (a_in, b_out, a_out, b_in)]
    return options


def local_rotations(rotation: Sequence[str], arrangement: Mapping[str, str]
                    ) -> Iterator[Dict[str, Tuple[LocalDart, ...]]]:
    """Dummy rotations under which the arrangement is planar inside X."""
    ends = {}
    for c, seq in arrangement.items():
        ends[f"{c}0"] = (c, 0, 0)
        ends[f"{c}1"] = (c, len(seq), 1)
    # seen from outside the disk the order of the ends is reversed
    outer = tuple(ends[role] for role in reversed(list(rotation)))
    options = _dummy_options(arrangement)
    keys = sorted(options)
    for combo in itertools.product(*(options[k] for k in keys)):
        rotations = {"w": outer, **dict(zip(keys, combo))}
        if euler_check(RotationSystem(rotations)):
            yield dict(zip(keys, combo))


def generate_table() -> Dict[str, List[Dict[str, List[str]]]]:
    table = {}
    for kind in (K3, P3):
        c = role_constraint(kind)
        roles = ["r0"] + sorted(r for r in c.colors if r != "r0")
        entries = []
        for rotation in circular_orders(roles):
            if not c.satisfied(rotation):
                continue
            valid = sorted(arrangement_key(arr) for arr in arrangements_for(kind)
                           if next(local_rotations(rotation, arr), None) is not None)
            entries.append({"arrangements": valid, "rotation": list(rotation)})
        table[kind] = sorted(entries, key=lambda e: e["rotation"])
    return table


def table_text(table: Mapping) -> str:
    return json.dumps(table, sort_keys=True, separators=(",", ":")) + "\n"


@functools.lru_cache(maxsize=1)
def load_table() -> Dict[str, List[Dict[str, List[str]]]]:
    return json.loads(TABLE_PATH.read_text())


def untangle(kind: str, rotation: Sequence[str]) -> Tuple[Arrangement, Dict[str, Tuple[LocalDart, ...]]]:
    """Arrangement and dummy rotations for a crossing vertex whose ends
    appear in `rotation` (role names, clockwise)."""
    rotation = list(rotation)
    i = rotation.index("r0")
    rotation = rotation[i:] + rotation[:i]
    candidates = list(arrangements_for(kind))
    if kind != K2:
        entry = next((e for e in load_table()[kind] if e["rotation"] == rotation), None)
        listed = [parse_arrangement(text) for text in entry["arrangements"]] if entry else []
        if not listed:
            logger.warning("no tabled arrangement for %s rotation %s", kind, " ".join(rotation))
        candidates = listed + [a for a in candidates if a not in listed]
    for arrangement in candidates:
        found = next(local_rotations(rotation, arrangement), None)
        if found is not None:
            return arrangement, found
    raise InternalInconsistency(f"{kind} rotation {' '.join(rotation)} has no untangled expansion")
