"""Translation of world-set algebra queries into second-order logic.

``translate(Q)`` yields a formula with one free relation variable (the
result, ``R_Q`` by default) whose satisfying assignments over a single input
world are exactly the possible results of ``Q``.  Every intermediate result
becomes an existentially quantified relation defined by a first-order
formula.  Each ``let V := Q1 in ...`` contributes a named definition
``psi_V(V_1, ..., V_k, V)`` whose parameters are the enclosing views plus
``V``; grouping operators re-enumerate the views through these definitions.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import count

from .errors import SizeExplosion, UnboundVariable
from .lang import ast as A
from .lang import so_ast as S
from .lang.desugar import desugar, rename_lets_apart
from .lang.typecheck import typecheck
from .ra import Attr, Cmp, Conj, Const, Disj, Neg

import logging

log = logging.getLogger(__name__)


@dataclass
class Translation:
    formula: S.Formula
    defs: dict           # name -> (params, body)
    result: str
    arity: int


def _exists(vs, body):
    for v in reversed(vs):
        body = S.Exists(v, body)
    return body


def _forall(vs, body):
    for v in reversed(vs):
        body = S.Forall(v, body)
    return body


def _atom(name, vs):
    return S.Atom(name, tuple(S.Var(v) for v in vs))


def _eqs(xs, ys):
    return S.conj(*[S.Equals(S.Var(a), S.Var(b)) for a, b in zip(xs, ys)])


class Translator:
    def __init__(self, taken: set):
        self.taken = set(taken)
        self.defs: dict = {}
        self._n = count(1)
        self._x = count(1)

    def rel(self, stem: str = "R") -> str:
        while True:
            cand = f"{stem}_{next(self._n)}"
            if cand not in self.taken:
                self.taken.add(cand)
                return cand

    def vars(self, k: int) -> list:
        out = []
        while len(out) < k:
            cand = f"x{next(self._x)}"
            if cand not in self.taken:
                out.append(cand)
        return out

    # helpers over relation variables of a given arity
    def subset_of(self, r, s, ar):
        xs = self.vars(ar)
        return _forall(xs, S.Implies(_atom(r, xs), _atom(s, xs)))

    def key(self, r, positions, ar):
        if ar == 0:
            return S.TOP
        xs, ys = self.vars(ar), self.vars(ar)
        same_key = [S.Equals(S.Var(xs[i]), S.Var(ys[i])) for i in positions]
        body = S.Implies(S.conj(_atom(r, xs), _atom(r, ys), *same_key), _eqs(xs, ys))
        return _forall(xs + ys, body)

    def same_projection(self, r, s, positions, ar):
        if not positions:
            return S.TOP
        xs, ys = self.vars(ar), self.vars(ar)
        match = S.conj(*[S.Equals(S.Var(xs[i]), S.Var(ys[i])) for i in positions])
        left = _forall(xs, S.Implies(_atom(r, xs), _exists(ys, S.conj(_atom(s, ys), match))))
        xs2, ys2 = self.vars(ar), self.vars(ar)
        match2 = S.conj(*[S.Equals(S.Var(xs2[i]), S.Var(ys2[i])) for i in positions])
        right = _forall(ys2, S.Implies(_atom(s, ys2), _exists(xs2, S.conj(_atom(r, xs2), match2))))
        return S.conj(left, right)

    def pred(self, p, env: dict):
        if isinstance(p, Cmp):
            l, r = self._pterm(p.left, env), self._pterm(p.right, env)
            eq = S.Equals(l, r)
            return eq if p.op == "=" else S.Not(eq)
        if isinstance(p, Conj):
            return S.conj(*[self.pred(q, env) for q in p.items])
        if isinstance(p, Disj):
            return S.disj(*[self.pred(q, env) for q in p.items])
        if isinstance(p, Neg):
            return S.Not(self.pred(p.item, env))
        return S.TOP if p.value else S.BOTTOM

    @staticmethod
    def _pterm(t, env):
        if isinstance(t, Attr):
            return S.Var(env[t.name])
        return Const(t.value)

    # the translation proper
    def tr(self, n: A.Expr, scope: tuple, names: dict, rq: str) -> S.Formula:
        """Formula over ``rq`` for query ``n``; ``scope`` lists enclosing views in
        nesting order and ``names`` maps each to the relation variable standing for it."""
        ar = len(n.schema)
        xs = self.vars(ar)
        head = _atom(rq, xs)

        def defined(body):
            return _forall(xs, S.Iff(head, body))

        if isinstance(n, A.ConstRel):
            rows = [S.conj(*[S.Equals(S.Var(x), Const(v)) for x, v in zip(xs, row)]) for row in n.rows]
            return defined(S.disj(*rows))
        if isinstance(n, A.RelRef):
            return defined(_atom(names.get(n.name, n.name), xs))
        if isinstance(n, (A.Select, A.Project, A.Rename, A.RepairKey, A.Subset, A.PossibleGrp)):
            r1 = self.rel()
            child = n.expr
            sub = self.tr(child, scope, names, r1)
            car = len(child.schema)
            if isinstance(n, A.Select):
                env = dict(zip(child.schema, xs))
                return S.ExistsRel(r1, car, S.conj(sub, defined(S.conj(_atom(r1, xs), self.pred(n.pred, env)))))
            if isinstance(n, A.Project):
                pos = {a: i for i, a in enumerate(n.attrs)}
                ys = self.vars(car)
                args = [xs[pos[a]] if a in pos else ys[i] for i, a in enumerate(child.schema)]
                hidden = [ys[i] for i, a in enumerate(child.schema) if a not in pos]
                return S.ExistsRel(r1, car, S.conj(sub, defined(_exists(hidden, _atom(r1, args)))))
            if isinstance(n, A.Rename):
                return S.ExistsRel(r1, car, S.conj(sub, defined(_atom(r1, xs))))
            if isinstance(n, A.Subset):
                return S.ExistsRel(r1, car, S.conj(sub, self.subset_of(rq, r1, ar)))
            positions = [child.schema.index(a) for a in n.attrs]
            if isinstance(n, A.RepairKey):
                r2 = self.rel()
                ws = self.vars(ar)
                strictly_larger = S.conj(self.subset_of(rq, r2, ar),
                                         _exists(ws, S.conj(_atom(r2, ws), S.Not(_atom(rq, ws)))))
                maximal = S.Not(S.ExistsRel(r2, ar, S.conj(strictly_larger, self.subset_of(r2, r1, ar),
                                                           self.key(r2, positions, ar))))
                return S.ExistsRel(r1, car, S.conj(sub, self.subset_of(rq, r1, ar),
                                                   self.key(rq, positions, ar), maximal))
            # grouping: re-enumerate every world through the view definitions
            renamed = {v: self.rel(v) for v in scope}
            chain = [S.DefRef(f"psi_{v}", tuple(renamed[u] for u in scope[:i + 1]))
                     for i, v in enumerate(scope)]
            r1b = self.rel()
            sub_b = self.tr(child, scope, renamed, r1b)
            other = S.ExistsRel(r1b, car, S.conj(sub_b, self.same_projection(r1, r1b, positions, car),
                                                 _atom(r1b, xs)))
            inner = S.conj(*chain, other)
            for v in reversed(scope):
                inner = S.ExistsRel(renamed[v], self.view_arity[v], inner)
            return S.ExistsRel(r1, car, S.conj(sub, defined(inner)))
        if isinstance(n, (A.Product, A.Union, A.Difference)):
            r1, r2 = self.rel(), self.rel()
            s1 = self.tr(n.left, scope, names, r1)
            s2 = self.tr(n.right, scope, names, r2)
            a1, a2 = len(n.left.schema), len(n.right.schema)
            if isinstance(n, A.Product):
                body = S.conj(_atom(r1, xs[:a1]), _atom(r2, xs[a1:]))
            elif isinstance(n, A.Union):
                body = S.disj(_atom(r1, xs), _atom(r2, xs))
            else:
                body = S.conj(_atom(r1, xs), S.Not(_atom(r2, xs)))
            return S.ExistsRel(r1, a1, S.ExistsRel(r2, a2, S.conj(s1, s2, defined(body))))
        if isinstance(n, A.Let):
            v = n.name
            self.view_arity[v] = len(n.bound.schema)
            dname = f"psi_{v}"
            if dname not in self.defs:
                self.defs[dname] = None  # reserve against recursion
                body = self.tr(n.bound, scope, {u: u for u in scope}, v)
                self.defs[dname] = (tuple(scope) + (v,), body)
            vv = self.rel(v)
            call = S.DefRef(dname, tuple(names.get(u, u) for u in scope) + (vv,))
            inner_names = dict(names)
            inner_names[v] = vv
            rest = self.tr(n.body, scope + (v,), inner_names, rq)
            return S.ExistsRel(vv, self.view_arity[v], S.conj(call, rest))
        raise TypeError(f"cannot translate {type(n).__name__}")


def _prepare(q: A.Expr, catalog: dict) -> A.Expr:
    if q.schema is None or any(n.schema is None for n in A.walk(q)):
        q = typecheck(q, catalog)
    if not A.is_core(q):
        q = desugar(q)
    return rename_lets_apart(q, set(catalog))


def translate(q: A.Expr, catalog: dict, result: str = "R_Q") -> Translation:
    """Translate ``q`` (over relations with the given schemas) into a formula
    whose free relation variable ``result`` ranges over the query answers."""
    q = _prepare(q, catalog)
    taken = set(catalog) | {result}
    for n in A.walk(q):
        if isinstance(n, A.Let):
            taken.add(n.name)
    t = Translator(taken)
    t.view_arity = {}
    f = t.tr(q, (), {}, result)
    return Translation(f, t.defs, result, len(q.schema))


# inlining definitions -----------------------------------------------------------

class _Inliner:
    def __init__(self, defs: dict, max_size: int, warn_size: int):
        self.defs = defs
        self.max_size = max_size
        self.warn_size = warn_size
        self._n = count(1)
        self.size = 0
        self.warned = False

    def fresh(self, stem: str) -> str:
        return f"{stem}__{next(self._n)}"

    def go(self, f: S.Formula, rels: dict, fos: dict) -> S.Formula:
        self.size += 1
        if self.size > self.max_size:
            raise SizeExplosion(f"expanded formula exceeds {self.max_size} nodes")
        if self.size > self.warn_size and not self.warned:
            self.warned = True
            log.warning("definition expansion passed %d nodes", self.warn_size)
        if isinstance(f, S.Atom):
            return S.Atom(rels.get(f.rel, f.rel), tuple(self.term(t, fos) for t in f.args))
        if isinstance(f, S.Equals):
            return S.Equals(self.term(f.left, fos), self.term(f.right, fos))
        if isinstance(f, S.Truth):
            return f
        if isinstance(f, S.Not):
            return S.Not(self.go(f.body, rels, fos))
        if isinstance(f, S.And):
            return S.And(tuple(self.go(g, rels, fos) for g in f.items))
        if isinstance(f, S.Or):
            return S.Or(tuple(self.go(g, rels, fos) for g in f.items))
        if isinstance(f, S.Implies):
            return S.Implies(self.go(f.left, rels, fos), self.go(f.right, rels, fos))
        if isinstance(f, S.Iff):
            return S.Iff(self.go(f.left, rels, fos), self.go(f.right, rels, fos))
        if isinstance(f, (S.Exists, S.Forall)):
            v = self.fresh(f.var)
            inner = dict(fos)
            inner[f.var] = v
            dom = rels.get(f.domain, f.domain) if f.domain else None
            return type(f)(v, self.go(f.body, rels, inner), dom)
        if isinstance(f, (S.ExistsRel, S.ForallRel)):
            r = self.fresh(f.name)
            inner = dict(rels)
            inner[f.name] = r
            return type(f)(r, f.arity, self.go(f.body, inner, fos))
        if isinstance(f, S.DefRef):
            if f.name not in self.defs:
                raise UnboundVariable(f"unknown definition {f.name!r}")
            params, body = self.defs[f.name]
            args = [rels.get(a, a) for a in f.args]
            return self.go(body, dict(zip(params, args)), {})
        raise TypeError(f"unknown formula {type(f).__name__}")

    @staticmethod
    def term(t, fos):
        if isinstance(t, S.Var):
            return S.Var(fos.get(t.name, t.name))
        return t


def expand_defs(f: S.Formula, defs: dict, max_size: int = 2_000_000, warn_size: int = 10_000) -> S.Formula:
    """Inline every definition call, renaming bound variables apart."""
    return _Inliner(defs, max_size, warn_size).go(f, {}, {})


__all__ = ["Translation", "translate", "expand_defs"]
