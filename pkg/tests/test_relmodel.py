import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import rel, relations, world
from wsa.errors import EnumerationCap, SchemaMismatch
from wsa.relmodel import (BOT, ONE, ZERO, Relation, World, canonicalize, make_worldset,
                          powerset_relations, value_key, world_equals)


def test_bot_is_distinct_from_everything():
    assert BOT != ZERO and BOT != ONE
    assert BOT != "_bot"
    assert BOT not in {0, 1, "a", "bot"}


def test_value_order_reserved_then_ints_then_symbols():
    vals = ["b", 3, BOT, "a", 0, -1]
    assert sorted(vals, key=value_key) == [BOT, -1, 0, 3, "a", "b"]


def test_canonical_rows_sorted():
    assert canonicalize(rel("A", ("b",), ("a",))).rows() == (("a",), ("b",))
    assert canonicalize(rel("A")).rows() == ()
    assert canonicalize(rel("A B", (1, BOT), (1, 1))).rows() == ((1, BOT), (1, 1))


def test_relation_rejects_bad_rows():
    with pytest.raises(SchemaMismatch):
        Relation(("A", "A"), [])
    with pytest.raises(SchemaMismatch):
        Relation(("A",), [(1, 2)])
    with pytest.raises(TypeError):
        Relation(("A",), [(True,)])


def test_nullary_relations():
    assert len(Relation((), [()])) == 1
    assert not Relation((), [])


def test_powerset_examples():
    assert len(list(powerset_relations(rel("A", ("a",), ("b",))))) == 4
    assert list(powerset_relations(rel("A"))) == [rel("A")]
    three = rel("A", ("a",), ("b",), ("c",))
    masks = {frozenset(r for i, r in enumerate(sorted(three.tuples)) if m >> i & 1) for m in range(8)}
    assert {r.tuples for r in powerset_relations(three)} == masks


def test_powerset_cap():
    with pytest.raises(EnumerationCap):
        list(powerset_relations(Relation(("A",), [(i,) for i in range(5)]), cap=16))


def test_world_equality():
    w1 = world(R=rel("A", ("a",), ("b",)))
    w2 = world(R=rel("A", ("b",), ("a",)))
    assert world_equals(w1, w2)
    assert not world_equals(w1, world(R=rel("A", ("a",))))
    with pytest.raises(SchemaMismatch):
        world_equals(w1, world(S=rel("A")))


def test_worldset_dedup_and_name_check():
    w = world(R=rel("A", ("a",)))
    assert len(make_worldset([w, World({"R": rel("A", ("a",))})])) == 1
    with pytest.raises(SchemaMismatch):
        make_worldset([w, world(S=rel("A"))])


@given(relations(("A", "B")))
def test_canonicalize_idempotent(r):
    once = canonicalize(r)
    assert canonicalize(once) == once and canonicalize(once).rows() == once.rows()


@given(relations(("A",), max_rows=5))
def test_powerset_size_distinct_subsets(r):
    subs = list(powerset_relations(r))
    assert len(subs) == 2 ** len(r)
    assert len(set(subs)) == len(subs)
    assert all(s.tuples <= r.tuples and s.schema == r.schema for s in subs)


@given(st.lists(relations(("A",), max_rows=3), min_size=1, max_size=4))
def test_world_equality_is_an_equivalence(rs):
    ws = [world(R=r) for r in rs]
    for a in ws:
        assert world_equals(a, a)
        for b in ws:
            assert world_equals(a, b) == world_equals(b, a)
            for c in ws:
                if world_equals(a, b) and world_equals(b, c):
                    assert world_equals(a, c)
    assert make_worldset(ws + ws) == make_worldset(ws)
