"""A second, deliberately literal implementation of the possible-worlds
semantics, used only as a test oracle.

``results(q, a, W)`` is the set of relations ``q`` may return in world ``a``
of world-set ``W``.  No caching, no block evaluation, no shortcuts: every
operator clause is transcribed as a set comprehension.  The column order is
the type checker's schema.

Grouping by the empty attribute list puts every result in one group (the
closing reading of ``possible[]``), even though ``pi[]`` tells an empty
relation from a nonempty one.
"""

from itertools import combinations, product

from wsa import ra
from wsa.lang import ast as A
from wsa.relmodel import Relation, World


def _rel(schema, rows) -> Relation:
    return Relation(schema, rows)


def _positions(schema, attrs):
    return [schema.index(a) for a in attrs]


def _proj(rows, pos):
    return frozenset(tuple(t[i] for i in pos) for t in rows)


def all_repairs(r: Relation, attrs) -> set:
    """Maximal subsets on which ``attrs`` is a key, found by filtering the powerset."""
    pos = _positions(r.schema, attrs)
    full = _proj(r.tuples, pos)
    rows = sorted(r.tuples, key=repr)
    out = set()
    for k in range(len(rows) + 1):
        for sub in combinations(rows, k):
            keys = [tuple(t[i] for i in pos) for t in sub]
            if len(set(keys)) == len(keys) and set(keys) == full:
                out.add(_rel(r.schema, sub))
    return out


def all_subsets(r: Relation) -> set:
    rows = sorted(r.tuples, key=repr)
    return {_rel(r.schema, sub) for k in range(len(rows) + 1) for sub in combinations(rows, k)}


def results(q: A.Expr, a: World, W) -> set:
    sch = q.schema
    if isinstance(q, A.ConstRel):
        return {_rel(sch, q.rows)}
    if isinstance(q, A.RelRef):
        return {_rel(sch, a[q.name].tuples)}
    if isinstance(q, A.Let):
        W2 = {b.extend(q.name, r) for b in W for r in results(q.bound, b, W)}
        out = set()
        for r in results(q.bound, a, W):
            out |= results(q.body, a.extend(q.name, r), W2)
        return out
    if isinstance(q, (A.PossibleGrp, A.CertainGrp)):
        union = isinstance(q, A.PossibleGrp)
        pos = _positions(q.expr.schema, q.attrs)
        everywhere = [r for b in W for r in results(q.expr, b, W)]

        def same_group(x, r):
            return not pos or _proj(x.tuples, pos) == _proj(r.tuples, pos)

        out = set()
        for r in results(q.expr, a, W):
            group = [x.tuples for x in everywhere if same_group(x, r)]
            rows = frozenset().union(*group) if union else frozenset.intersection(*group)
            out.add(_rel(sch, rows))
        return out
    if isinstance(q, (A.Possible, A.Certain)):
        everywhere = [r.tuples for b in W for r in results(q.expr, b, W)]
        if not everywhere:
            return set()
        rows = frozenset().union(*everywhere) if isinstance(q, A.Possible) else frozenset.intersection(*everywhere)
        return {_rel(sch, rows)}
    if isinstance(q, (A.Product, A.Union, A.Difference, A.JoinTheta, A.NaturalJoin)):
        ls, rs = results(q.left, a, W), results(q.right, a, W)
        return {_binary(q, x, y) for x, y in product(ls, rs)}
    out = set()
    for r in results(q.expr, a, W):
        out |= _unary(q, r)
    return out


def _binary(q, x: Relation, y: Relation) -> Relation:
    if isinstance(q, A.Product):
        return _rel(q.schema, {s + t for s in x.tuples for t in y.tuples})
    if isinstance(q, A.Union):
        return _rel(q.schema, x.tuples | y.tuples)
    if isinstance(q, A.Difference):
        return _rel(q.schema, x.tuples - y.tuples)
    if isinstance(q, A.JoinTheta):
        sch = q.left.schema + q.right.schema
        return _rel(q.schema, {s + t for s in x.tuples for t in y.tuples
                               if ra.eval_predicate(q.pred, sch, s + t)})
    shared = [c for c in q.left.schema if c in q.right.schema]
    extra = [i for i, c in enumerate(q.right.schema) if c not in shared]
    rows = set()
    for s in x.tuples:
        for t in y.tuples:
            if all(s[q.left.schema.index(c)] == t[q.right.schema.index(c)] for c in shared):
                rows.add(s + tuple(t[i] for i in extra))
    return _rel(q.schema, rows)


def _unary(q, r: Relation) -> set:
    src = q.expr.schema
    if isinstance(q, A.Select):
        return {_rel(q.schema, {t for t in r.tuples if ra.eval_predicate(q.pred, src, t)})}
    if isinstance(q, A.Project):
        return {_rel(q.schema, _proj(r.tuples, _positions(src, q.attrs)))}
    if isinstance(q, (A.Rename, A.RenameTo)):
        return {_rel(q.schema, r.tuples)}
    if isinstance(q, A.RepairKey):
        return {_rel(q.schema, x.tuples) for x in all_repairs(r, q.attrs)}
    if isinstance(q, A.Subset):
        return {_rel(q.schema, x.tuples) for x in all_subsets(r)}
    if isinstance(q, A.ChoiceOf):
        pos = _positions(src, q.attrs)
        return {_rel(q.schema, {t for t in r.tuples if tuple(t[i] for i in pos) == key})
                for key in _proj(r.tuples, pos)}
    raise TypeError(f"no naive rule for {type(q).__name__}")


def per_world(q: A.Expr, W) -> dict:
    return {a: frozenset(results(q, a, W)) for a in W}
