"""Rewriting of derived operators into the core algebra, and let hoisting.

Rewrites (``V`` is a fresh view name, ``T`` a fresh attribute)::

    subset(Q)        -> pi[sch Q](sigma[T=1](repairkey[sch Q](Q x rho[T]({0, 1}))))
    possible(Q)      -> possible[](Q)
    certain(Q)       -> certain[](Q)
    choiceof[A](Q)   -> Q join repairkey[](pi[A](Q))
    certain[A](Q)    -> V - pi[sch Q](sigma[T=1](possible[A](((possible[A](V) - V) x {T:1})
                                                           U (V x {T:0}))))
    join(L, R)       -> pi(sigma[shared equal](L x rho[fresh](R)))

Whenever the rewrite mentions its operand more than once and the operand can
have several results per world, the operand is first bound with ``let`` so
that every copy sees the same choice.
"""

from __future__ import annotations

from itertools import count

from ..ra import Attr, Cmp, Const, conj
from . import ast as A


class _Fresh:
    def __init__(self, taken: set):
        self.taken = set(taken)
        self.counter = count(1)

    def name(self, stem: str) -> str:
        while True:
            cand = f"_{stem}{next(self.counter)}"
            if cand not in self.taken:
                self.taken.add(cand)
                return cand


def _names_in(e: A.Expr) -> set:
    out = set()
    for n in A.walk(e):
        if isinstance(n, A.RelRef):
            out.add(n.name)
        elif isinstance(n, A.Let):
            out.add(n.name)
        if n.schema:
            out.update(n.schema)
    return out


def is_deterministic(e: A.Expr) -> bool:
    """True when ``e`` has exactly one result in every world."""
    return not any(isinstance(n, (A.RepairKey, A.Subset, A.ChoiceOf)) for n in A.walk(e))


def desugar(e: A.Expr) -> A.Expr:
    """Rewrite a type-checked tree into core operators; schemas stay annotated."""
    fresh = _Fresh(_names_in(e))
    return _ds(e, fresh)


def _s(node, schema):
    object.__setattr__(node, "schema", tuple(schema))
    return node


def _bit_column(value, name):
    return _s(A.Rename((("_1", name),), _s(A.ConstRel(((value,),), 1), ("_1",))), (name,))


def _share(q: A.Expr, fresh: _Fresh, build):
    """Call ``build(ref)`` with a reference to ``q``; bind ``q`` via let when needed."""
    if is_deterministic(q):
        return build(q)
    v = fresh.name("v")
    ref = _s(A.RelRef(v), q.schema)
    body = build(ref)
    return _s(A.Let(v, q, body), body.schema)


def _ds(e: A.Expr, fresh: _Fresh) -> A.Expr:
    kids = tuple(_ds(c, fresh) for c in e.children())
    if kids:
        from dataclasses import replace
        changes = {}
        it = iter(kids)
        for f in ("expr", "left", "right", "bound", "body"):
            if isinstance(getattr(e, f, None), A.Expr):
                changes[f] = next(it)
        e = replace(e, **changes)
    sch = e.schema
    if isinstance(e, A.Subset):
        t = fresh.name("t")
        q = e.expr
        prod = _s(A.Product(q, _s(A.Union(_bit_column(0, t), _bit_column(1, t)), (t,))), sch + (t,))
        rk = _s(A.RepairKey(sch, prod), prod.schema)
        sel = _s(A.Select(Cmp("=", Attr(t), Const(1)), rk), prod.schema)
        return _s(A.Project(sch, sel), sch)
    if isinstance(e, A.Possible):
        return _s(A.PossibleGrp((), e.expr), sch)
    if isinstance(e, A.Certain):
        return _certain((), e.expr, fresh)
    if isinstance(e, A.CertainGrp):
        return _certain(e.attrs, e.expr, fresh)
    if isinstance(e, A.ChoiceOf):
        attrs = e.attrs

        def build(ref):
            keys = _s(A.RepairKey((), _s(A.Project(attrs, ref), attrs)), attrs)
            return _natural_join(ref, keys, fresh)
        return _share(e.expr, fresh, build)
    if isinstance(e, A.JoinTheta):
        prod = _s(A.Product(e.left, e.right), sch)
        return _s(A.Select(e.pred, prod), sch)
    if isinstance(e, A.NaturalJoin):
        return _natural_join(e.left, e.right, fresh)
    return _s(e, sch)


def _natural_join(l: A.Expr, r: A.Expr, fresh: _Fresh) -> A.Expr:
    shared = [a for a in l.schema if a in r.schema]
    if not shared:
        return _s(A.Product(l, r), l.schema + r.schema)
    mapping = tuple((a, fresh.name("j")) for a in shared)
    r_schema = tuple(dict(mapping).get(a, a) for a in r.schema)
    rr = _s(A.Rename(mapping, r), r_schema)
    prod = _s(A.Product(l, rr), l.schema + r_schema)
    pred = conj(*[Cmp("=", Attr(a), Attr(b)) for a, b in mapping])
    sel = _s(A.Select(pred, prod), prod.schema)
    out = l.schema + tuple(a for a in r.schema if a not in shared)
    return _s(A.Project(out, sel), out)


def _certain(attrs: tuple, q: A.Expr, fresh: _Fresh) -> A.Expr:
    sch = q.schema
    t = fresh.name("t")

    def build(ref):
        poss = _s(A.PossibleGrp(attrs, ref), sch)
        missing = _s(A.Difference(poss, ref), sch)
        tagged = _s(A.Union(_s(A.Product(missing, _bit_column(1, t)), sch + (t,)),
                            _s(A.Product(ref, _bit_column(0, t)), sch + (t,))), sch + (t,))
        grouped = _s(A.PossibleGrp(attrs, tagged), sch + (t,))
        lost = _s(A.Project(sch, _s(A.Select(Cmp("=", Attr(t), Const(1)), grouped), sch + (t,))), sch)
        return _s(A.Difference(ref, lost), sch)
    return _share(q, fresh, build)


# let hoisting ----------------------------------------------------------------------

def rename_lets_apart(e: A.Expr, taken: set | None = None) -> A.Expr:
    """Give every let a distinct name (needed before hoisting sibling lets)."""
    seen: set = set(taken or ())
    fresh = _Fresh(_names_in(e) | seen)

    def go(n: A.Expr, env: dict) -> A.Expr:
        if isinstance(n, A.RelRef):
            return _s(A.RelRef(env.get(n.name, n.name)), n.schema) if n.name in env else n
        if isinstance(n, A.Let):
            b = go(n.bound, env)
            name = n.name
            if name in seen:
                name = fresh.name("v")
            seen.add(name)
            inner = dict(env)
            if name != n.name:
                inner[n.name] = name
            else:
                inner.pop(n.name, None)
            return _s(A.Let(name, b, go(n.body, inner)), n.schema)
        kids = tuple(go(c, env) for c in n.children())
        if not kids:
            return n
        out = n.with_children(kids)
        return _s(out, n.schema) if n.schema is not None else out

    return go(e, {})


def pull_lets_up(e: A.Expr) -> A.Expr:
    """Hoist every let binding to a prefix ``let V1 := Q1 in ... in Q``."""
    e = rename_lets_apart(e)
    bindings: list = []

    def go(n: A.Expr) -> A.Expr:
        if isinstance(n, A.Let):
            b = go(n.bound)
            bindings.append((n.name, b))
            return go(n.body)
        kids = n.children()
        if not kids:
            return n
        out = n.with_children(tuple(go(c) for c in kids))
        return _s(out, n.schema) if n.schema is not None else out

    core = go(e)
    for name, b in reversed(bindings):
        core = A.Let(name, b, core, schema=core.schema)
    return core
