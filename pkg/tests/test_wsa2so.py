import pytest
from hypothesis import given, settings

from conftest import query, rel, seeds, world
from wsa import workloads as WL
from wsa.acceptance import MEMBERSHIP_OPS, membership_check
from wsa.errors import SizeExplosion, UnboundVariable
from wsa.lang import so_ast as S
from wsa.lang.parser import parse_so
from wsa.so_eval import Assignment, eval_so, satisfying_relations, structure_from_world
from wsa.wsa2so import expand_defs, translate


def candidates(w, text, dom):
    tr = translate(query(text, w), w.catalog())
    s = structure_from_world(w, dom)
    return {r.tuples for r in satisfying_relations(tr.formula, tr.result, tr.arity, s, defs=tr.defs)}


def test_selection_translates_to_its_single_answer():
    w = world(R=rel("A B", ("a", "b"), ("b", "b")))
    assert candidates(w, "sigma[A = 'a'](R)", {"a", "b"}) == {frozenset({("a", "b")})}


def test_repairkey_translation_has_two_witnesses():
    w = world(R=rel("A"))
    assert candidates(w, "repairkey[]({0} U {1})", {0, 1}) == {frozenset({(0,)}), frozenset({(1,)})}


def test_translation_reports_arity_and_result_name():
    w = world(R=rel("A B"))
    tr = translate(query("R", w), w.catalog(), result="Out")
    assert tr.result == "Out" and tr.arity == 2
    assert "Out" in S.free_so(tr.formula)


@settings(max_examples=30)
@given(seeds)
def test_membership_law_on_random_queries(rng):
    schemas = {"R": ("A", "B"), "S": ("C",)}
    w = WL.small_world(rng, (0, 1), schemas, max_rows=3)
    q, _ = WL.QueryGen(rng, schemas, (0, 1), MEMBERSHIP_OPS, max_arity=2).gen(rng.randint(1, 5))
    assert membership_check(q, w) == []


def test_expand_defs_is_identity_without_definitions():
    f = parse_so("exists x . R(x) and not x = 'a'")
    g = expand_defs(f, {})
    assert S.size(g) == S.size(f)
    w = world(R=rel("A", ("a",), ("b",)))
    s = structure_from_world(w, {"a", "b"})
    assert eval_so(f, s) == eval_so(g, s)


def test_expand_defs_copies_each_use():
    defs = {"psi": (("X",), parse_so("exists x . X(x)"))}
    f = S.And((S.DefRef("psi", ("R",)), S.DefRef("psi", ("T",))))
    g = expand_defs(f, defs)
    atoms = sorted(a.rel for a in S.walk(g) if isinstance(a, S.Atom))
    assert atoms == ["R", "T"]
    bound = [h.var for h in S.walk(g) if isinstance(h, S.Exists)]
    assert len(set(bound)) == 2
    with pytest.raises(UnboundVariable):
        expand_defs(S.DefRef("nope", ()), {})
    with pytest.raises(SizeExplosion):
        expand_defs(f, defs, max_size=3)


def test_expand_defs_preserves_meaning_of_translations():
    w = world(R=rel("A", (0,), (1,)))
    tr = translate(query("let V := repairkey[](R) in possible(V)", w), w.catalog())
    flat = expand_defs(tr.formula, tr.defs)
    s = structure_from_world(w, {0, 1})
    for cand in (frozenset(), frozenset({(0,)}), frozenset({(0,), (1,)})):
        a = Assignment(so={tr.result: cand})
        assert eval_so(flat, s, a) == eval_so(tr.formula, s, a, defs=tr.defs)
