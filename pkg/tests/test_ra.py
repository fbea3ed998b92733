import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import rel, relations
from wsa import ra
from wsa.errors import SchemaMismatch, UnknownAttribute
from wsa.ra import P_TRUE, Attr, Cmp, Const, conj, disj, eq, neq
from wsa.relmodel import BOT

VALS = ("a", "b", 0)

preds = st.recursive(
    st.builds(Cmp, st.sampled_from(("=", "!=")),
              st.one_of(st.sampled_from((Attr("A"), Attr("B"))), st.sampled_from(VALS).map(Const)),
              st.one_of(st.sampled_from((Attr("A"), Attr("B"))), st.sampled_from(VALS).map(Const))),
    lambda inner: st.one_of(st.lists(inner, min_size=1, max_size=3).map(lambda xs: conj(*xs)),
                            st.lists(inner, min_size=1, max_size=3).map(lambda xs: disj(*xs)),
                            inner.map(ra.Neg)),
    max_leaves=6,
)


def _holds(p, row):
    """Direct reading of a predicate on a row over (A, B)."""
    env = dict(zip(("A", "B"), row))
    if isinstance(p, Cmp):
        v = [env[t.name] if isinstance(t, Attr) else t.value for t in (p.left, p.right)]
        return (v[0] == v[1]) == (p.op == "=")
    if isinstance(p, ra.Conj):
        return all(_holds(q, row) for q in p.items)
    if isinstance(p, ra.Disj):
        return any(_holds(q, row) for q in p.items)
    if isinstance(p, ra.Neg):
        return not _holds(p.item, row)
    return p.value


def test_select_examples():
    r = rel("A", ("a",), ("b",))
    assert ra.select(eq("A", Const("a")), r) == rel("A", ("a",))
    assert ra.select(neq("A", "A"), r) == rel("A")
    assert ra.select(eq("T", 1), rel("X T", ("x", BOT), ("x", 1))) == rel("X T", ("x", 1))
    with pytest.raises(UnknownAttribute):
        ra.select(eq("Z", 1), r)


def test_project_examples():
    assert ra.project(["C"], rel("C E", ("c1", "e11"), ("c1", "e12"))) == rel("C", ("c1",))
    assert ra.project([], rel("A", ("a",))) == rel((), ())
    assert ra.project([], rel("A")) == rel(())


def test_rename_product_union_difference():
    assert ra.rename({"A": "B"}, rel("A", ("a",))) == rel("B", ("a",))
    assert ra.product(rel("A", ("a",)), rel("B", (0,), (1,))) == rel("A B", ("a", 0), ("a", 1))
    assert ra.difference(rel("A", ("a",), ("b",)), rel("A", ("b",))) == rel("A", ("a",))
    assert ra.union(rel((), ()), rel(())) == rel((), ())
    with pytest.raises(SchemaMismatch):
        ra.product(rel("A"), rel("A"))
    with pytest.raises(SchemaMismatch):
        ra.union(rel("A"), rel("B"))
    with pytest.raises(SchemaMismatch):
        ra.rename({"A": "B"}, rel("A B"))


def test_joins():
    r, s = rel("A", ("a",), ("b",)), rel("B", ("a",), ("c",))
    assert ra.join_theta(P_TRUE, r, s) == ra.product(r, s)
    assert ra.natural_join(r, s) == ra.product(r, s)
    assert ra.join_theta(eq("A", "B"), r, s) == rel("A B", ("a", "a"))
    assert ra.natural_join(rel("A B", ("a", 1), ("b", 2)), rel("B C", (1, "x"))) == rel("A B C", ("a", 1, "x"))


@given(preds, relations(("A", "B"), VALS))
def test_select_matches_comprehension(p, r):
    assert ra.select(p, r).tuples == {t for t in r.tuples if _holds(p, t)}
    assert ra.select(p, r).tuples <= r.tuples


@given(relations(("A", "B"), VALS), st.lists(st.sampled_from(("A", "B")), unique=True))
def test_project_matches_comprehension(r, attrs):
    pos = [("A", "B").index(a) for a in attrs]
    got = ra.project(attrs, r)
    assert got.tuples == {tuple(t[i] for i in pos) for t in r.tuples}
    assert len(got) <= len(r)


@given(relations(("A",), VALS), relations(("B", "C"), VALS))
def test_product_matches_comprehension(r, s):
    assert ra.product(r, s).tuples == {x + y for x in r.tuples for y in s.tuples}


@given(relations(("A", "B"), VALS), relations(("A", "B"), VALS), relations(("A", "B"), VALS))
def test_boolean_algebra_laws(x, y, z):
    u, d, i = ra.union, ra.difference, ra.intersection
    assert u(x, y) == u(y, x)
    assert u(u(x, y), z) == u(x, u(y, z))
    assert d(x, u(y, z)) == d(d(x, y), z)
    assert d(x, d(x, y)) == i(x, y)
    assert u(d(x, y), i(x, y)) == x


@given(relations(("A", "B"), VALS), relations(("B", "A"), VALS))
def test_union_aligns_by_name(x, y):
    assert ra.union(x, y).tuples == x.tuples | {(b, a) for a, b in y.tuples}


@given(preds, relations(("A",), VALS), relations(("B",), VALS))
def test_theta_join_is_select_of_product(p, r, s):
    assert ra.join_theta(p, r, s) == ra.select(p, ra.product(r, s))
