import pytest
from hypothesis import given

from conftest import rel, seeds, worldsets
from wsa import workloads as WL
from wsa.errors import FormatError, SchemaMismatch, WorldSetExplosion
from wsa.eval import EvalLimits, evaluate
from wsa.lang.parser import parse_wsa
from wsa.lang.typecheck import typecheck
from wsa.relmodel import Relation, World
from wsa.repstore import COND, Representation, build_representation, expand_worlds, from_world


def rep(variables, literals, **rels):
    return Representation(Relation(("P",), [(v,) for v in variables]),
                          Relation(("C", "P", "S"), literals), rels)


def test_no_variables_gives_one_world():
    r = rep([], [], R=rel(f"A {COND}", ("a", "c0")))
    assert expand_worlds(r) == frozenset([World({"R": rel("A", ("a",))})])


def test_one_variable_gives_two_worlds():
    r = rep(["p"], [("c1", "p", 1)], R=rel(f"A {COND}", ("a", "c0"), ("b", "c1")))
    got = expand_worlds(r)
    assert got == frozenset([World({"R": rel("A", ("a",))}), World({"R": rel("A", ("a",), ("b",))})])


def test_negative_literal():
    r = rep(["p"], [("c1", "p", 0)], R=rel(f"A {COND}", ("b", "c1")))
    assert expand_worlds(r) == frozenset([World({"R": rel("A")}), World({"R": rel("A", ("b",))})])


def test_company_worlds_round_trip():
    w = WL.acquisition_db()
    q = typecheck(parse_wsa("choiceof[C, E](Company_Emp)"), w.catalog())
    ws = frozenset(World({"U": r}) for r in evaluate(q, frozenset([w]))[w])
    assert len(ws) == 5
    r = build_representation(ws)
    assert len(r.variables) == 3
    assert expand_worlds(r) == ws
    assert expand_worlds(from_world(r.to_world())) == ws


@given(worldsets({"R": ("A", "B"), "S": ("C",)}, ("a", "b", 0), max_worlds=6, max_rows=3))
def test_round_trip(ws):
    r = build_representation(ws)
    assert expand_worlds(r) == ws
    assert len(ws) <= 2 ** len(r.variables)


@given(seeds)
def test_expansion_bounds(rng):
    nvars = rng.randint(0, 3)
    variables = [f"p{i}" for i in range(nvars)]
    lits = [(f"c{rng.randint(0, 3)}", v, rng.randint(0, 1)) for v in variables if rng.random() < 0.7]
    rows = [(x, f"c{rng.randint(0, 4)}") for x in "abc" if rng.random() < 0.8]
    r = rep(variables, lits, R=Relation(("A", COND), rows))
    ws = expand_worlds(r)
    assert 1 <= len(ws) <= 2 ** nvars
    every = {t[:-1] for t in rows}
    for w in ws:
        assert w["R"].tuples <= every


def test_validation_errors():
    with pytest.raises(FormatError):
        rep(["p"], [("c", "q", 1)])
    with pytest.raises(FormatError):
        rep(["p"], [("c", "p", 2)])
    with pytest.raises(FormatError):
        rep([], [], R=rel("A"))
    with pytest.raises(FormatError):
        from_world(World({"R": rel("A")}))
    with pytest.raises(SchemaMismatch):
        build_representation(frozenset())


def test_expansion_limit():
    r = rep([f"p{i}" for i in range(12)], [])
    with pytest.raises(WorldSetExplosion):
        expand_worlds(r, EvalLimits(max_worlds=1000))
