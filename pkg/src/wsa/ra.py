"""Relational algebra on :class:`~wsa.relmodel.Relation`.

Besides the textbook operators this module provides :func:`spj`, an exact
evaluator for ``project(select(product(...)))`` blocks.  It splits the
selection predicate into disjunctive normal form and, per disjunct, pushes
filters into factors, joins on cross-factor equalities with hash tables and
drops columns as soon as nothing downstream needs them.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product as _cartesian
from operator import itemgetter
from typing import Callable, Iterable, Union

from .errors import SchemaMismatch, TupleExplosion, UnknownAttribute
from .relmodel import BOT, Relation


# predicates ----------------------------------------------------------------

@dataclass(frozen=True)
class Attr:
    name: str


@dataclass(frozen=True)
class Const:
    value: object


Term = Union[Attr, Const]


@dataclass(frozen=True)
class Cmp:
    op: str  # "=" or "!="
    left: Term
    right: Term


@dataclass(frozen=True)
class Conj:
    items: tuple


@dataclass(frozen=True)
class Disj:
    items: tuple


@dataclass(frozen=True)
class Neg:
    item: object


@dataclass(frozen=True)
class Truth:
    value: bool


Predicate = Union[Cmp, Conj, Disj, Neg, Truth]
P_TRUE = Truth(True)
P_FALSE = Truth(False)


def eq(a, b) -> Cmp:
    return Cmp("=", _term(a), _term(b))


def neq(a, b) -> Cmp:
    return Cmp("!=", _term(a), _term(b))


def _term(x) -> Term:
    if isinstance(x, (Attr, Const)):
        return x
    if isinstance(x, str):
        return Attr(x)
    return Const(x)


def conj(*items) -> Predicate:
    flat = []
    for it in items:
        if isinstance(it, Conj):
            flat.extend(it.items)
        elif it == P_TRUE:
            continue
        else:
            flat.append(it)
    if not flat:
        return P_TRUE
    return flat[0] if len(flat) == 1 else Conj(tuple(flat))


def disj(*items) -> Predicate:
    flat = []
    for it in items:
        if isinstance(it, Disj):
            flat.extend(it.items)
        elif it == P_FALSE:
            continue
        else:
            flat.append(it)
    if not flat:
        return P_FALSE
    return flat[0] if len(flat) == 1 else Disj(tuple(flat))


def pred_attrs(p: Predicate) -> set:
    out: set = set()
    stack = [p]
    while stack:
        q = stack.pop()
        if isinstance(q, Cmp):
            for t in (q.left, q.right):
                if isinstance(t, Attr):
                    out.add(t.name)
        elif isinstance(q, (Conj, Disj)):
            stack.extend(q.items)
        elif isinstance(q, Neg):
            stack.append(q.item)
    return out


def map_pred_attrs(p: Predicate, f: Callable[[str], str]) -> Predicate:
    if isinstance(p, Cmp):
        return Cmp(p.op, _map_term(p.left, f), _map_term(p.right, f))
    if isinstance(p, Conj):
        return Conj(tuple(map_pred_attrs(q, f) for q in p.items))
    if isinstance(p, Disj):
        return Disj(tuple(map_pred_attrs(q, f) for q in p.items))
    if isinstance(p, Neg):
        return Neg(map_pred_attrs(p.item, f))
    return p


def _map_term(t: Term, f) -> Term:
    return Attr(f(t.name)) if isinstance(t, Attr) else t


def pred_size(p: Predicate) -> int:
    if isinstance(p, Cmp):
        return 3
    if isinstance(p, (Conj, Disj)):
        return 1 + sum(pred_size(q) for q in p.items)
    if isinstance(p, Neg):
        return 1 + pred_size(p.item)
    return 1


def compile_predicate(p: Predicate, schema: tuple) -> Callable[[tuple], bool]:
    """Turn a predicate into a fast row test for rows laid out as ``schema``."""
    index = {a: i for i, a in enumerate(schema)}
    consts: list = []

    def term(t: Term) -> str:
        if isinstance(t, Attr):
            if t.name not in index:
                raise UnknownAttribute(f"attribute {t.name!r} not in {schema}")
            return f"t[{index[t.name]}]"
        consts.append(t.value)
        return f"c[{len(consts) - 1}]"

    def go(q: Predicate) -> str:
        if isinstance(q, Cmp):
            op = "==" if q.op == "=" else "!="
            return f"({term(q.left)} {op} {term(q.right)})"
        if isinstance(q, Conj):
            return "(" + " and ".join(go(x) for x in q.items) + ")" if q.items else "True"
        if isinstance(q, Disj):
            return "(" + " or ".join(go(x) for x in q.items) + ")" if q.items else "False"
        if isinstance(q, Neg):
            return f"(not {go(q.item)})"
        return "True" if q.value else "False"

    src = go(p)
    return eval(f"lambda t, c=c: {src}", {"c": consts})


def eval_predicate(p: Predicate, schema: tuple, row: tuple) -> bool:
    return compile_predicate(p, schema)(row)


# basic operators --------------------------------------------------------------

def _positions(schema: tuple, attrs: Iterable[str]) -> list:
    idx = {a: i for i, a in enumerate(schema)}
    try:
        return [idx[a] for a in attrs]
    except KeyError as exc:
        raise UnknownAttribute(f"attribute {exc.args[0]!r} not in {schema}") from None


def _getter(pos: list):
    if not pos:
        return lambda t: ()
    if len(pos) == 1:
        i = pos[0]
        return lambda t: (t[i],)
    return itemgetter(*pos)


def select(p: Predicate, r: Relation) -> Relation:
    test = compile_predicate(p, r.schema)
    return Relation.trusted(r.schema, frozenset(t for t in r.tuples if test(t)))


def project(attrs: Iterable[str], r: Relation) -> Relation:
    attrs = tuple(attrs)
    if len(set(attrs)) != len(attrs):
        raise SchemaMismatch(f"duplicate attribute in projection {attrs}")
    pos = _positions(r.schema, attrs)
    if pos == list(range(len(r.schema))):
        return r
    g = _getter(pos)
    return Relation.trusted(attrs, frozenset(map(g, r.tuples)))


def rename(mapping: dict, r: Relation) -> Relation:
    for old in mapping:
        if old not in r.schema:
            raise UnknownAttribute(f"cannot rename missing attribute {old!r}")
    new = tuple(mapping.get(a, a) for a in r.schema)
    if len(set(new)) != len(new):
        raise SchemaMismatch(f"renaming produces duplicate attributes {new}")
    return Relation.trusted(new, r.tuples)


def product(r1: Relation, r2: Relation, max_tuples: int | None = None) -> Relation:
    if set(r1.schema) & set(r2.schema):
        raise SchemaMismatch(f"product of overlapping schemas {r1.schema} and {r2.schema}")
    if max_tuples is not None and len(r1) * len(r2) > max_tuples:
        raise TupleExplosion(f"product of {len(r1)} x {len(r2)} rows")
    return Relation.trusted(r1.schema + r2.schema, frozenset(a + b for a in r1.tuples for b in r2.tuples))


def align(r: Relation, schema: tuple) -> Relation:
    """Reorder columns of ``r`` to ``schema`` (same attribute set required)."""
    if r.schema == schema:
        return r
    if set(r.schema) != set(schema) or len(r.schema) != len(schema):
        raise SchemaMismatch(f"schemas {r.schema} and {schema} differ")
    return project(schema, r)


def union(r1: Relation, r2: Relation) -> Relation:
    r2 = align(r2, r1.schema)
    return Relation.trusted(r1.schema, r1.tuples | r2.tuples)


def difference(r1: Relation, r2: Relation) -> Relation:
    r2 = align(r2, r1.schema)
    return Relation.trusted(r1.schema, r1.tuples - r2.tuples)


def intersection(r1: Relation, r2: Relation) -> Relation:
    r2 = align(r2, r1.schema)
    return Relation.trusted(r1.schema, r1.tuples & r2.tuples)


def join_theta(p: Predicate, r1: Relation, r2: Relation, max_tuples: int | None = None) -> Relation:
    rows = spj([r1, r2], p, None, max_tuples=max_tuples)
    return Relation.trusted(r1.schema + r2.schema, rows)


def natural_join(r1: Relation, r2: Relation) -> Relation:
    shared = [a for a in r1.schema if a in r2.schema]
    rest2 = [a for a in r2.schema if a not in shared]
    p1 = _getter(_positions(r1.schema, shared))
    p2 = _getter(_positions(r2.schema, shared))
    g2 = _getter(_positions(r2.schema, rest2))
    table: dict = {}
    for t in r2.tuples:
        table.setdefault(p2(t), []).append(g2(t))
    out = set()
    for t in r1.tuples:
        for extra in table.get(p1(t), ()):
            out.add(t + extra)
    return Relation.trusted(r1.schema + tuple(rest2), frozenset(out))


# select-project-product evaluation ------------------------------------------

DNF_CAP = 512


def _negate(c: Cmp) -> Cmp:
    return Cmp("!=" if c.op == "=" else "=", c.left, c.right)


def to_dnf(p: Predicate, negated: bool = False, cap: int = DNF_CAP):
    """List of conjunctions (lists of :class:`Cmp`), or ``None`` past ``cap``."""
    if isinstance(p, Truth):
        return [[]] if p.value != negated else []
    if isinstance(p, Cmp):
        return [[_negate(p) if negated else p]]
    if isinstance(p, Neg):
        return to_dnf(p.item, not negated, cap)
    is_and = isinstance(p, Conj) != negated
    parts = []
    for q in p.items:
        d = to_dnf(q, negated, cap)
        if d is None:
            return None
        parts.append(d)
    if not is_and:
        out = [c for d in parts for c in d]
        return out if len(out) <= cap else None
    out = [[]]
    for d in parts:
        out = [a + b for a in out for b in d]
        if len(out) > cap:
            return None
    return out


def spj(factors: list, pred: Predicate, out: tuple | None, max_tuples: int | None = None) -> frozenset:
    """Rows of ``project(out, select(pred, product(*factors)))``.

    Factors must have pairwise disjoint schemas. ``out=None`` keeps every column.
    """
    schema = tuple(a for f in factors for a in f.schema)
    if len(set(schema)) != len(schema):
        raise SchemaMismatch(f"product of overlapping schemas {schema}")
    if out is None:
        out = schema
    missing = [a for a in tuple(out) + tuple(pred_attrs(pred)) if a not in set(schema)]
    if missing:
        raise UnknownAttribute(f"attribute {missing[0]!r} not in {schema}")
    dnf = to_dnf(pred)
    if dnf is None:
        return _spj_naive(factors, pred, out, max_tuples)
    result: set = set()
    owner = {a: i for i, f in enumerate(factors) for a in f.schema}
    filt_cache: dict = {}
    for conjunct in dnf:
        rows = _spj_conjunct(factors, owner, conjunct, tuple(out), filt_cache, max_tuples)
        if rows:
            result |= rows
            if max_tuples is not None and len(result) > max_tuples:
                raise TupleExplosion(f"selection result exceeds {max_tuples} rows")
    return frozenset(result)


def _spj_naive(factors, pred, out, max_tuples):
    schema = tuple(a for f in factors for a in f.schema)
    total = 1
    for f in factors:
        total *= len(f)
    if max_tuples is not None and total > max_tuples:
        raise TupleExplosion(f"product of {total} rows")
    test = compile_predicate(pred, schema)
    g = _getter(_positions(schema, out))
    res = set()
    for combo in _cartesian(*[f.tuples for f in factors]):
        t = sum(combo, ())
        if test(t):
            res.add(g(t))
    return frozenset(res)


def _spj_conjunct(factors, owner, conjunct, out, filt_cache, max_tuples):
    local: dict[int, list] = {}
    cross_eq: list = []
    residual: list = []
    for c in conjunct:
        l_attr = isinstance(c.left, Attr)
        r_attr = isinstance(c.right, Attr)
        if not l_attr and not r_attr:
            same = c.left.value == c.right.value
            if same != (c.op == "="):
                return set()
            continue
        if l_attr and r_attr:
            fl, fr = owner[c.left.name], owner[c.right.name]
            if c.left.name == c.right.name:
                if c.op == "!=":
                    return set()
                continue
            if fl == fr:
                local.setdefault(fl, []).append(c)
            elif c.op == "=":
                cross_eq.append(c)
            else:
                residual.append(c)
        else:
            name = c.left.name if l_attr else c.right.name
            local.setdefault(owner[name], []).append(c)

    cross_cols = set()
    for c in cross_eq + residual:
        cross_cols.add(c.left.name)
        cross_cols.add(c.right.name)
    out_set = set(out)

    parts = []  # (cols, rows)
    for i, f in enumerate(factors):
        conds = local.get(i)
        key = (i, tuple(sorted(map(repr, conds)))) if conds else (i, ())
        rows = filt_cache.get(key)
        if rows is None:
            if conds:
                test = compile_predicate(Conj(tuple(conds)), f.schema)
                rows = frozenset(t for t in f.tuples if test(t))
            else:
                rows = f.tuples
            filt_cache[key] = rows
        if not rows:
            return set()
        need = [a for a in f.schema if a in out_set or a in cross_cols]
        if not need:
            continue
        if len(need) == len(f.schema):
            parts.append((list(f.schema), rows))
        else:
            g = _getter(_positions(f.schema, need))
            parts.append((need, frozenset(map(g, rows))))

    if not parts:
        return {()} if not out else set()

    pending_eq = list(cross_eq)
    pending_res = list(residual)
    parts.sort(key=lambda p: len(p[1]))
    cols, rows = parts.pop(0)
    rows = set(rows) if not isinstance(rows, set) else rows
    while parts:
        colset = set(cols)
        pick = None
        for j, (pc, pr) in enumerate(parts):
            pcs = set(pc)
            if any((c.left.name in colset and c.right.name in pcs) or
                   (c.right.name in colset and c.left.name in pcs) for c in pending_eq):
                if pick is None or len(pr) < len(parts[pick][1]):
                    pick = j
        if pick is None:
            pick = 0
        pc, pr = parts.pop(pick)
        pcs = set(pc)
        keys_l, keys_r, used = [], [], []
        for c in pending_eq:
            if c.left.name in colset and c.right.name in pcs:
                keys_l.append(c.left.name)
                keys_r.append(c.right.name)
                used.append(c)
            elif c.right.name in colset and c.left.name in pcs:
                keys_l.append(c.right.name)
                keys_r.append(c.left.name)
                used.append(c)
        for c in used:
            pending_eq.remove(c)
        if keys_l:
            gl = _getter(_positions(tuple(cols), keys_l))
            gr = _getter(_positions(tuple(pc), keys_r))
            table: dict = {}
            for t in pr:
                table.setdefault(gr(t), []).append(t)
            joined = set()
            for t in rows:
                for u in table.get(gl(t), ()):
                    joined.add(t + u)
        else:
            if max_tuples is not None and len(rows) * len(pr) > max_tuples:
                raise TupleExplosion(f"intermediate product of {len(rows)} x {len(pr)} rows")
            joined = {t + u for t in rows for u in pr}
        cols = cols + pc
        colset = set(cols)
        # equalities and residual tests that are now fully bound
        ready = [c for c in pending_eq + pending_res if c.left.name in colset and c.right.name in colset]
        if ready:
            test = compile_predicate(Conj(tuple(ready)), tuple(cols))
            joined = {t for t in joined if test(t)}
            pending_eq = [c for c in pending_eq if c not in ready]
            pending_res = [c for c in pending_res if c not in ready]
        still = set(out)
        for c in pending_eq + pending_res:
            still.add(c.left.name)
            still.add(c.right.name)
        keep = [a for a in cols if a in still]
        if len(keep) < len(cols):
            g = _getter(_positions(tuple(cols), keep))
            joined = set(map(g, joined))
            cols = keep
        rows = joined
        if max_tuples is not None and len(rows) > max_tuples:
            raise TupleExplosion(f"intermediate result exceeds {max_tuples} rows")
        if not rows:
            return set()
    leftovers = pending_eq + pending_res
    if leftovers:
        test = compile_predicate(Conj(tuple(leftovers)), tuple(cols))
        rows = {t for t in rows if test(t)}
    if tuple(cols) != tuple(out):
        g = _getter(_positions(tuple(cols), out))
        rows = set(map(g, rows))
    return rows


__all__ = [
    "Attr", "Const", "Cmp", "Conj", "Disj", "Neg", "Truth", "P_TRUE", "P_FALSE",
    "eq", "neq", "conj", "disj", "pred_attrs", "map_pred_attrs", "compile_predicate",
    "eval_predicate", "select", "project", "rename", "product", "union", "difference",
    "intersection", "join_theta", "natural_join", "spj", "to_dnf", "align", "BOT",
]
