import itertools

import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

import naive_wsa
from conftest import VALUES, query, rel, relations, seeds, world, worldsets
from wsa import workloads as WL
from wsa.errors import TupleExplosion, UnknownRelation, WorldSetExplosion
from wsa.eval import EvalLimits, eval_closed, eval_independent, eval_wsa, evaluate, sup_inf
from wsa.lang import ast as A
from wsa.lang.desugar import desugar
from wsa.lang.parser import parse_wsa
from wsa.lang.printer import to_text
from wsa.lang.typecheck import typecheck
from wsa.oracles import is_three_colorable
from wsa.relmodel import Relation, World

SCHEMAS = {"R": ("A", "B"), "S": ("C",)}


def single(w: World) -> frozenset:
    return frozenset([w])


def test_repairkey_of_zero_one():
    w = world(R=rel("A"))
    got = eval_wsa(query("repairkey[]({0} U {1})", w), w, single(w))
    assert got == {rel("_1", (0,)), rel("_1", (1,))}


def test_subset_is_powerset():
    w = world(R=rel("A", ("a",), ("b",)))
    got = eval_wsa(query("subset(R)", w), w, single(w))
    assert len(got) == 4 and rel("A") in got and w["R"] in got


def test_company_example_result_everywhere():
    w = WL.acquisition_db()
    res = eval_closed(typecheck(WL.acquisition_query(), w.catalog()), single(w))
    assert res.answers == {rel("C", ("c1",))}


def test_company_intermediate_answer():
    w = WL.acquisition_db()
    text = WL.ACQUISITION_STEPS
    q = parse_wsa(f"let U := {text['U']} in let V := {text['V']} in let W := {text['W']} in "
                  "possible(pi[C](sigma[S = 's1'](W)))")
    assert eval_closed(typecheck(q, w.catalog()), single(w)).answers == {rel("C", ("c1",))}


@pytest.mark.parametrize("graph, expected", [(WL.triangle(), True), (WL.k4(), False)])
def test_three_color_query(graph, expected):
    w = graph.db()
    q = typecheck(parse_wsa(WL.THREE_COLOR_QUERY), w.catalog())
    got = eval_closed(q, single(w)).single()
    assert bool(got) is expected is is_three_colorable(graph.vertices, graph.edges)


def test_let_worlds_are_deduplicated():
    w = world(R=rel("A", ("a",), ("b",)))
    res = eval_closed(query("let V := pi[](subset(R)) in V", w), single(w))
    assert res.answers == {rel((), ()), rel(())}


def test_limits():
    w = world(R=Relation(("A",), [(i,) for i in range(20)]))
    with pytest.raises(WorldSetExplosion):
        evaluate(query("subset(R)", w), single(w), EvalLimits(max_worlds=1000))
    with pytest.raises(TupleExplosion):
        evaluate(query("R x rho[B](R) x rho[C](R)", w), single(w), EvalLimits(max_tuples=1000))
    with pytest.raises(UnknownRelation):
        evaluate(A.RelRef("Nope", schema=("A",)), single(w))


def test_eval_wsa_needs_member_world():
    w = world(R=rel("A"))
    with pytest.raises(ValueError):
        eval_wsa(query("R", w), world(R=rel("A", ("a",))), single(w))


def test_independent_examples():
    got = eval_independent(parse_wsa("subset(R)"), {"R": [rel("A", ("a",))]})
    assert got == {rel("A"), rel("A", ("a",))}
    got = eval_independent(parse_wsa("R x S"), {"R": [rel("A", ("a",)), rel("A")],
                                                "S": [rel("B", ("b",)), rel("B", ("c",))]})
    assert len(got) <= 4 and rel("A B", ("a", "b")) in got


def test_sup_inf_examples():
    power = {rel("A"), rel("A", ("a",)), rel("A", ("b",)), rel("A", ("a",), ("b",))}
    assert sup_inf(power) == (rel("A", ("a",), ("b",)), rel("A"))
    assert sup_inf({rel("A", (0,)), rel("A", (1,))}) == (None, None)


# -- two-implementation conformance --------------------------------------------

def _random_query(rng, ops=WL.QueryGen.ALL_OPS, lets=2):
    gen = WL.QueryGen(rng, SCHEMAS, ("a", "b"), ops=ops)
    return gen.with_lets(rng.randint(1, 6), rng.randint(0, lets))


@given(seeds, worldsets(SCHEMAS, ("a", "b"), max_worlds=4, max_rows=3))
def test_engine_matches_naive_semantics(rng, ws):
    q = typecheck(_random_query(rng), next(iter(ws)).catalog())
    try:
        fast = evaluate(q, ws, EvalLimits(max_worlds=4096))
    except WorldSetExplosion:
        assume(False)
    assert fast == naive_wsa.per_world(q, ws)


SUGAR_OPS = {"select": 1, "project": 1, "union": 1, "product": 1, "subset": 1, "repairkey": 1}


@given(seeds, worldsets(SCHEMAS, ("a", "b"), max_worlds=4, max_rows=3),
       st.sampled_from(["certain[{k}]", "choiceof[{k}]", "possible({e})", "certain({e})"]))
def test_sugar_engine_matches_naive(rng, ws, shape):
    cat = next(iter(ws)).catalog()
    inner = typecheck(_random_query(rng, SUGAR_OPS, lets=0), cat)
    keys = ", ".join(a for a in inner.schema if rng.random() < 0.5)
    text = to_text(inner)
    outer = shape.format(k=keys, e=text) if "{e}" in shape else shape.format(k=keys) + f"({text})"
    q = typecheck(parse_wsa(outer), cat)
    try:
        direct = evaluate(q, ws, EvalLimits(max_worlds=4096))
    except WorldSetExplosion:
        assume(False)
    assert direct == naive_wsa.per_world(q, ws)


@given(seeds, worldsets(SCHEMAS, ("a", "b"), max_worlds=3, max_rows=2))
def test_desugared_core_matches_naive_sugar(rng, ws):
    cat = next(iter(ws)).catalog()
    inner = typecheck(_random_query(rng, SUGAR_OPS, lets=0), cat)
    keys = tuple(a for a in inner.schema if rng.random() < 0.5)
    op = rng.choice([A.CertainGrp, A.ChoiceOf, A.Possible, A.Certain, A.Subset])
    q = op(keys, inner) if op in (A.CertainGrp, A.ChoiceOf) else op(inner)
    q = typecheck(q, cat)
    try:
        core = evaluate(desugar(q), ws, EvalLimits(max_worlds=4096))
    except WorldSetExplosion:
        assume(False)
    oracle = naive_wsa.per_world(q, ws)
    if op is A.ChoiceOf:
        # an empty operand has no choice; the desugared form keeps it instead
        assume(all(r for w in ws for r in naive_wsa.results(inner, w, ws)))
    assert core == oracle


# -- repair-key, possible ----------------------------------------------------------

@given(relations(("A", "B", "C"), ("a", "b"), max_rows=6),
       st.lists(st.sampled_from(("A", "B", "C")), unique=True, max_size=2))
def test_repairkey_outputs(r, key):
    w = world(R=r)
    q = query(f"repairkey[{', '.join(key)}](R)", w)
    got = eval_wsa(q, w, single(w))
    pos = [("A", "B", "C").index(a) for a in key]
    groups = {}
    for t in r.tuples:
        groups.setdefault(tuple(t[i] for i in pos), []).append(t)
    expected_count = 1
    for g in groups.values():
        expected_count *= len(g)
    assert len(got) == expected_count
    for rep in got:
        assert rep.tuples <= r.tuples
        keys = [tuple(t[i] for i in pos) for t in rep.tuples]
        assert set(keys) == set(groups) and len(keys) == len(set(keys))


@given(seeds, worldsets(SCHEMAS, ("a", "b"), max_worlds=6))
def test_possible_grouping_idempotent(rng, ws):
    cat = next(iter(ws)).catalog()
    inner = _random_query(rng, lets=0)
    sch = typecheck(inner, cat).schema
    keys = tuple(a for a in sch if rng.random() < 0.5)
    once = A.PossibleGrp(keys, inner)
    twice = A.PossibleGrp(keys, once)
    try:
        a = evaluate(typecheck(once, cat), ws, EvalLimits(max_worlds=4096))
    except WorldSetExplosion:
        assume(False)
    assert a == evaluate(typecheck(twice, cat), ws, EvalLimits(max_worlds=4096))


# -- relation-independent databases ----------------------------------------------

INDEPENDENT = {"R": ("A", "B"), "S": ("C",), "T": ("D",)}
LINEAR_OPS = ("select", "project", "rename", "product", "union", "difference",
              "repairkey", "possible", "subset")


@given(seeds, st.fixed_dictionaries({n: st.lists(relations(s, ("a", "b"), 2), min_size=1, max_size=3)
                                     for n, s in INDEPENDENT.items()}))
def test_independent_semantics_on_independent_operands(rng, inputs):
    gen = WL.QueryGen(rng, INDEPENDENT, ("a", "b"), ops=LINEAR_OPS)
    e, _ = gen.gen(rng.randint(1, 6))
    occ = A.rel_occurrences(e)
    assume(all(n <= 1 for n in occ.values()))
    names = sorted(inputs)
    ws = frozenset(World(dict(zip(names, combo)))
                   for combo in itertools.product(*(inputs[n] for n in names)))
    q = typecheck(e, next(iter(ws)).catalog())
    try:
        flat = set().union(*evaluate(q, ws, EvalLimits(max_worlds=4096)).values())
        alt = eval_independent(q, {n: set(v) for n, v in inputs.items()}, EvalLimits(max_worlds=4096))
    except WorldSetExplosion:
        assume(False)
    assert flat == alt


# -- supremum and infimum ---------------------------------------------------------

RA_SUBSET = {"select": 2, "project": 2, "rename": 1, "product": 1, "union": 2, "difference": 2, "subset": 3}


@given(seeds, worldsets(SCHEMAS, VALUES, max_worlds=1, max_rows=3))
def test_ra_subset_results_have_sup_and_inf(rng, ws):
    cat = next(iter(ws)).catalog()
    gen = WL.QueryGen(rng, SCHEMAS, VALUES, ops=RA_SUBSET)
    e, _ = gen.gen(rng.randint(1, 7))
    try:
        res = eval_closed(typecheck(e, cat), ws, EvalLimits(max_worlds=4096)).answers
    except WorldSetExplosion:
        assume(False)
    sup, inf = sup_inf(res)
    assert sup is not None and inf is not None
