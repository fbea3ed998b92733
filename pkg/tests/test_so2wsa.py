import itertools

import pytest
from hypothesis import given, settings

from conftest import rel, seeds
from wsa import workloads as WL
from wsa.checks import compile_context, run_routes, single_answer, so_structure
from wsa.errors import UnsupportedFeature
from wsa.eval import eval_closed, evaluate
from wsa.lang import ast as A
from wsa.lang import so_ast as S
from wsa.lang.parser import parse_so, parse_so_program, parse_wsa
from wsa.lang.typecheck import typecheck
from wsa.oracles import sigma2_qbf
from wsa.relmodel import BOT, Relation, World
from wsa.so2wsa import (_Builder, _Names, compile_no_defs, compile_qf, compile_with_defs, compl_indicators,
                        compl_tt, fo_to_ra, indicator, k_product, normalize_qf)
from wsa.so_eval import answer_relation, eval_so


def db(dom, **rels) -> World:
    w = {"D": Relation(("D",), [(v,) for v in dom])}
    w.update(rels)
    return World(w)


def results(e, w):
    q = typecheck(e, w.catalog())
    return eval_closed(q, frozenset([w])).answers


def rows(rs):
    return {r.tuples for r in rs}


def ubits(names, bit):
    return A.Product(A.RenameTo(tuple(names), A.RelRef("D")), A.const_column([0, 1], bit))


# -- indicator relations -------------------------------------------------------------

def test_indicator_of_stored_relation():
    w = db("ab", R=rel("A", ("a",)))
    ctx = compile_context(w)
    assert rows(results(indicator("R", ctx, 1), w)) == {frozenset({("a", 1), ("b", 0)})}


def test_indicator_of_relation_variable_over_declared_universe():
    w = db("u", U=rel("A", ("u",)))
    ctx = compile_context(w, universes={"X": parse_wsa("U")})
    got = rows(results(indicator("X", ctx, 1, relation_variable=True), w))
    assert got == {frozenset({("u", 0)}), frozenset({("u", 1)})}


def test_indicator_of_relation_variable_counts_subsets():
    w = db("ab")
    ctx = compile_context(w)
    assert len(results(indicator("X", ctx, 1, relation_variable=True), w)) == 4


class Fresh:
    def __init__(self):
        self.n = 0

    def fresh(self, stem):
        self.n += 1
        return f"{stem}_{self.n}"


def _kprod(k, w):
    ctx = compile_context(w)
    ind = lambda names, bit: indicator("R", ctx, 1, names=names, bit=bit)  # noqa: E731
    slots = [((f"a{i}",), f"b{i}") for i in range(k)]
    return k_product(ind, ubits, slots, Fresh()), ind, slots


def test_k_product_small_cases():
    w = db("ab", R=rel("A", ("a",)))
    e, ind, _ = _kprod(0, w)
    assert e == A.TRUE_EXPR
    e, ind, slots = _kprod(1, w)
    assert e == ind(*slots[0])


@pytest.mark.parametrize("k", [2, 3])
def test_k_product_matches_naive_product(k):
    w = db("ab", R=rel("A", ("a",)))
    e, ind, slots = _kprod(k, w)
    one = next(iter(results(ind(("x",), "y"), w))).tuples
    naive = {sum(c, ()) for c in itertools.product(sorted(one), repeat=k)}
    assert rows(results(e, w)) == {frozenset(naive)}
    # the indicator subexpression occurs once: two references to R
    assert A.rel_occurrences(e)["R"] == 2


def test_k_product_of_guessed_indicator_has_one_repairkey():
    w = db("ab")
    ctx = compile_context(w)
    ind = lambda names, bit: indicator("X", ctx, 1, relation_variable=True, names=names, bit=bit)  # noqa: E731
    e = k_product(ind, ubits, [((f"a{i}",), f"b{i}") for i in range(3)], Fresh())
    assert sum(isinstance(n, A.RepairKey) for n in A.walk(e)) == 1
    got = results(e, w)
    assert len(got) == 4
    for r in got:
        per_copy = [{(t[2 * i], t[2 * i + 1]) for t in r.tuples} for i in range(3)]
        assert per_copy[0] == per_copy[1] == per_copy[2]


# -- complements ---------------------------------------------------------------------

def test_compl_indicators_examples():
    w = db("ab", R=rel("A", ("a",)), Full=rel("A", ("a",), ("b",)))
    ctx = compile_context(w)
    blocks = [(ubits, ("A1",), "B")]
    e = compl_indicators(indicator("R", ctx, 1), blocks, Fresh())
    assert rows(results(e, w)) == {frozenset({("a", 0), ("b", 1)})}
    e = compl_indicators(indicator("Full", ctx, 1), blocks, Fresh())
    assert rows(results(e, w)) == {frozenset({("a", 0), ("b", 0)})}


def test_compl_indicators_two_blocks_vs_naive():
    w = db("ab", R=rel("A", ("a",)), S=rel("A", ("a",), ("b",)))
    ctx = compile_context(w)
    operand = A.Product(indicator("R", ctx, 1, names=("x",), bit="bx"),
                        indicator("S", ctx, 1, names=("y",), bit="by"))
    blocks = [(ubits, ("x",), "bx"), (ubits, ("y",), "by")]
    got = next(iter(results(compl_indicators(operand, blocks, Fresh()), w))).tuples
    full = {(x, bx, y, by) for x in "ab" for bx in (0, 1) for y in "ab" for by in (0, 1)}
    have = next(iter(results(operand, w))).tuples
    assert got == full - have


def _theta(w, truth: dict):
    """Truth table over one free column x with PBIT column T."""
    rows_ = [(v, BOT) for v in truth] + [(v, 1) for v, t in truth.items() if t]
    return A.RenameTo(("x", "T"), A.ConstRel(tuple(sorted(rows_, key=repr)), 2))


def test_compl_tt_negates_truth_tables():
    w = db("ab")
    ctx = compile_context(w)
    b = _Builder(ctx, _Names({"D", "x", "T"}))
    for truth in ({"a": True, "b": True}, {"a": True, "b": False}, {"a": False, "b": False}):
        theta = _theta(w, truth)
        neg = compl_tt(theta, [], ("x",), "T", b)
        got = next(iter(results(neg, w))).tuples
        expected = {(v, BOT) for v in truth} | {(v, 1) for v, t in truth.items() if not t}
        assert got == expected
        back = compl_tt(neg, [], ("x",), "T", b)
        assert results(back, w) == results(theta, w)


def test_pbit_negation_and_or():
    w = db("a")
    false, true = "{_bot}", "{_bot, 1}"
    for b_text, val in ((false, False), (true, True)):
        neg = parse_wsa(f"{{_bot, 1}} - ({b_text} - ({b_text} - {{1}}))")
        got = next(iter(results(neg, w))).tuples
        assert ((1,) in got) is (not val) and (BOT,) in got
    for x, y in itertools.product((false, true), repeat=2):
        got = next(iter(results(parse_wsa(f"{x} U {y}"), w))).tuples
        assert ((1,) in got) is (x == true or y == true)


# -- normal form ---------------------------------------------------------------------

def test_normal_form_counts():
    nf = normalize_qf(parse_so("R(x)"))
    assert nf.slots == {"R": 1} and nf.positive == {"R": 1}
    nf = normalize_qf(parse_so("R(x) or not R(y)"), merged=False)
    assert (nf.positive, nf.negative, nf.slots) == ({"R": 1}, {"R": 1}, {"R": 2})
    nf = normalize_qf(parse_so("R(x) and R(y)"))
    assert nf.positive == {"R": 2} and nf.slots == {"R": 2}
    with pytest.raises(UnsupportedFeature):
        normalize_qf(parse_so("exists x . R(x)"))


def test_compile_qf_true_and_atoms():
    w = db("ab", R=rel("A", ("a",)), E=rel("A B", ("a", "b")))
    ctx = compile_context(w)
    assert rows(results(compile_qf(parse_so("true"), ctx), w)) == {frozenset({()})}
    got = results(compile_qf(parse_so("E(x, y) and not R(y)"), ctx), w)
    assert rows(got) == {frozenset({("a", "b")})}


@given(seeds)
def test_compile_qf_matches_model_checker(rng):
    w = db((0, 1), P=Relation(("A",), [(v,) for v in (0, 1) if rng.random() < 0.5]),
           E=Relation(("A", "B"), [p for p in itertools.product((0, 1), repeat=2) if rng.random() < 0.5]))

    def atom():
        v = lambda: S.Var(rng.choice("xy"))  # noqa: E731
        r = rng.random()
        if r < 0.4:
            return S.Atom("P", (v(),))
        if r < 0.8:
            return S.Atom("E", (v(), v()))
        return S.Equals(v(), rng.choice([v(), S.Var("x")]))

    def gen(n):
        if n <= 1:
            return atom()
        r = rng.random()
        if r < 0.25:
            return S.Not(gen(n - 1))
        k = rng.randint(1, n - 1)
        return (S.And if r < 0.6 else S.Or)((gen(k), gen(n - k)))

    f = gen(rng.randint(1, 6))
    ctx = compile_context(w)
    xs = tuple(sorted(S.free_fo(f)))
    expected = answer_relation(f, so_structure(w), xs).tuples
    assert next(iter(results(compile_qf(f, ctx), w))).tuples == expected


# -- first-order to relational algebra ------------------------------------------------

def test_fo_to_ra_examples():
    w = db("abc", R=rel("A", ("a",), ("b",)), S=rel("A", ("b",)), E=rel("A B", ("a", "b"), ("c", "c")))
    ctx = compile_context(w)
    q = fo_to_ra(parse_so("R(x) and not S(x)"), ctx)
    assert not any(isinstance(n, (A.RepairKey, A.Let, A.PossibleGrp)) for n in A.walk(q))
    assert rows(results(q, w)) == {frozenset({("a",)})}
    q = fo_to_ra(parse_so("exists y . E(x, y)"), ctx)
    assert rows(results(q, w)) == {frozenset({("a",), ("c",)})}
    with pytest.raises(UnsupportedFeature):
        fo_to_ra(parse_so("existsR X:1 . X('a')"), ctx)


def test_fo_to_ra_qbf_clause_formula():
    inst = WL.QbfInstance(("p1",), ("p2",), (frozenset({("p1", True)}), frozenset({("p2", False)})))
    w = inst.db().extend("P1", rel("P", ("p1",))).extend("P2", rel("P"))
    f = parse_so("exists c in C . not exists p . (L(c, p, 0) and (P1(p) or P2(p))) "
                 "or (L(c, p, 1) and not (P1(p) or P2(p)))")
    assert rows(results(fo_to_ra(f, compile_context(w)), w)) == {frozenset({()})}


# -- the two compilers ---------------------------------------------------------------

def test_with_defs_qbf_structure():
    prog = parse_so_program(WL.QBF_SENTENCE)
    w = WL.QbfInstance(("p1",), ("p2",), ()).db()
    q = compile_with_defs(prog.formula, compile_context(w, prog.universes))
    kinds = [type(n) for n in A.walk(q)]
    assert A.Let in kinds and A.PossibleGrp in kinds
    lets = [n for n in A.walk(q) if isinstance(n, A.Let)]
    assert all(isinstance(n.bound, A.Subset) for n in lets)


def test_with_defs_empty_relation_witness():
    w = db("ab")
    f = parse_so("existsR X:1 . forall x . not X(x)")
    assert single_answer(compile_with_defs(f, compile_context(w)), w).tuples == {()}


def test_no_defs_basics():
    w = db("ab")
    ctx = compile_context(w)
    q = compile_no_defs(parse_so("exists x . D(x)"), ctx)
    assert single_answer(q, w).tuples == {()}
    assert not any(isinstance(n, A.Let) for n in A.walk(q))


def test_compilation_is_deterministic():
    prog = parse_so_program(WL.QBF_SENTENCE)
    w = WL.QbfInstance(("p1",), ("p2",), ()).db()
    ctx = compile_context(w, prog.universes)
    assert compile_no_defs(prog.formula, ctx) == compile_no_defs(prog.formula, ctx)
    assert compile_with_defs(prog.formula, ctx) == compile_with_defs(prog.formula, ctx)


def test_no_defs_single_occurrence_of_indicators():
    prog = parse_so_program(WL.THREE_COLOR_SENTENCE)
    w = WL.triangle().db()
    q = compile_no_defs(prog.formula, compile_context(w, prog.universes))
    assert sum(isinstance(n, A.RepairKey) for n in A.walk(q)) == 1
    assert A.rel_occurrences(q)["E"] == 2


def test_no_defs_qbf_small_instances():
    prog = parse_so_program(WL.QBF_SENTENCE)
    for inst in WL.all_qbf_instances(max_vars=2, max_clauses=1):
        w = inst.db()
        q = compile_no_defs(prog.formula, compile_context(w, prog.universes))
        assert bool(single_answer(q, w).tuples) == sigma2_qbf(inst.outer, inst.inner, inst.clauses)


def test_truth_table_invariant():
    w = db("ab", E=rel("A B", ("a", "b")))
    f = parse_so("existsR X:1 . X(x) and exists y . E(x, y)")
    tt = compile_no_defs(f, compile_context(w), output="tt")
    s = so_structure(w)
    for r in results(tt, w):
        for v in "ab":
            assert (v, BOT) in r.tuples
        truth = answer_relation(f, s, ("x",)).tuples
        assert {(t[0],) for t in r.tuples if t[1] == 1} == truth


def test_linear_size_ratio():
    ratios = []
    for n in range(1, 11):
        f = WL.qbf_family_sentence(n)
        q = compile_no_defs(f, compile_context(db("a")))
        ratios.append(A.size(q) / S.size(f))
    tail = ratios[4:]
    assert max(tail) / min(tail) < 1.2


@settings(max_examples=25)
@given(seeds)
def test_compilers_agree_with_model_checker(rng):
    case = WL.random_so_case(rng, max_domain=2, world_budget=5)
    rep = run_routes(case.formula, case.world)
    direct = rep.answers["direct"].tuples
    assert rep.answers["with_defs"].tuples == direct
    assert rep.answers["no_defs"].tuples == direct


def test_separate_slots_agree_with_merged():
    w = db("ab", P=rel("A", ("a",)))
    f = parse_so("existsR X:1 . forall x . X(x) or not P(x)")
    ctx = compile_context(w)
    merged = single_answer(compile_no_defs(f, ctx), w)
    split = single_answer(compile_no_defs(f, ctx, merged=False), w)
    assert merged == split == Relation((), [()])
    assert eval_so(f, so_structure(w))
    assert evaluate(compile_no_defs(f, ctx, prune_keys=True), frozenset([w]))
