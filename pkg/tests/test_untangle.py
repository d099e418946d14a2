import pytest

from src.constraints import K2, K3, P3
from src.errors import InternalInconsistency
from src.untangle import (TABLE_PATH, arrangement_key, arrangements_for, generate_table, load_table,
                          local_rotations, parse_arrangement, role_constraint, table_text, untangle)


def test_committed_table_is_reproducible():
    assert table_text(generate_table()) == TABLE_PATH.read_text()


def test_table_covers_every_satisfying_rotation():
    table = load_table()
    assert len(table[K3]) == 8
    for kind in (K3, P3):
        c = role_constraint(kind)
        for entry in table[kind]:
            assert entry["arrangements"]
            assert c.satisfied(entry["rotation"])


def test_arrangement_key_round_trip():
    arr = {"r": "bp", "b": "pr", "p": "rb"}
    assert parse_arrangement(arrangement_key(arr)) == arr
    assert len(list(arrangements_for(K3))) == 8
    assert len(list(arrangements_for(P3))) == 2


def test_k2_has_a_single_dummy():
    arrangement, local = untangle(K2, ["r0", "b0", "r1", "b1"])
    assert arrangement == {"r": "b", "b": "r"}
    assert list(local) == ["rb"]


@pytest.mark.parametrize("kind", [K3, P3])
def test_untangled_rotations_are_planar(kind):
    for entry in load_table()[kind]:
        arrangement, local = untangle(kind, entry["rotation"])
        assert local in list(local_rotations(entry["rotation"], arrangement))
        assert len(local) == (3 if kind == K3 else 2)


def test_rotation_breaking_the_constraint_has_no_expansion():
    with pytest.raises(InternalInconsistency):
        untangle(K2, ["r0", "r1", "b0", "b1"])

