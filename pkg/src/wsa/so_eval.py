"""Brute-force model checking of second-order formulas over finite structures.

First-order quantifiers range over the structure's domain (or over a unary
relation named by the quantifier); relation quantifiers range over every
subset of ``domain^arity`` or of a declared universe.  Subformula results are
memoised on the values of their free variables.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from itertools import combinations

from .errors import ArityMismatch, DomainExplosion, UnboundVariable
from .lang import so_ast as S
from .ra import Const
from .relmodel import Relation, World, domain_power, row_key


@dataclass(frozen=True)
class Structure:
    domain: tuple
    relations: World
    universes: dict = field(default_factory=dict)  # relation variable -> frozenset of rows

    def __post_init__(self):
        if not self.domain:
            raise ValueError("structures need a nonempty domain")
        dom = set(self.domain)
        for name, r in self.relations.items():
            for t in r.tuples:
                for v in t:
                    if v not in dom:
                        raise ValueError(f"value {v!r} of {name} is outside the domain")


@dataclass
class Assignment:
    fo: dict = field(default_factory=dict)
    so: dict = field(default_factory=dict)  # name -> frozenset of rows


@dataclass(frozen=True)
class SoLimits:
    max_candidates: int = 1 << 16


def _rows(x):
    return x.tuples if isinstance(x, Relation) else frozenset(x)


class SoEvaluator:
    """Model checker.

    With ``solve`` on, an existential relation quantifier is discharged by
    computing the relations its body admits: a conjunct ``forall xs (R(xs) <->
    phi)`` with ``R`` absent from ``phi`` fixes ``R``; a conjunct ``forall xs
    (R(xs) -> S(xs))`` bounds it by ``S``; conjunctions, nested quantifiers and
    definition calls are solved variable by variable.  Anything else falls back
    to enumerating candidates, which is also the whole strategy when ``solve``
    is off.
    """

    def __init__(self, s: Structure, defs: dict | None = None, limits: SoLimits | None = None,
                 solve: bool = True):
        self.s = s
        self.solve = solve
        self._solved: dict = {}
        self.defs = defs or {}
        self.limits = limits or SoLimits()
        self.db = {n: r.tuples for n, r in s.relations.items()}
        self.db_arity = {n: r.arity for n, r in s.relations.items()}
        self._free: dict = {}
        self._memo: dict = {}
        self._cands: dict = {}
        self._keep: list = []

    def free(self, f: S.Formula) -> tuple:
        got = self._free.get(id(f))
        if got is None:
            got = (tuple(sorted(S.free_fo(f))), tuple(sorted(S.free_so(f))))
            self._free[id(f)] = got
            self._keep.append(f)
        return got

    def candidates(self, name: str, arity: int) -> list:
        key = (name, arity)
        got = self._cands.get(key)
        if got is not None:
            return got
        if name in self.s.universes:
            base = sorted(self.s.universes[name], key=row_key)
            if any(len(t) != arity for t in base):
                raise ArityMismatch(f"universe of {name} does not have arity {arity}")
        else:
            base = sorted(domain_power(self.s.domain, arity), key=row_key)
        if len(base) >= 62 or (1 << len(base)) > self.limits.max_candidates:
            raise DomainExplosion(f"{name} ranges over 2^{len(base)} relations")
        got = [frozenset(c) for k in range(len(base) + 1) for c in combinations(base, k)]
        self._cands[key] = got
        return got

    def holds(self, f: S.Formula, fo: dict, so: dict) -> bool:
        fv, sv = self.free(f)
        try:
            key = (id(f), tuple(fo[v] for v in fv), tuple(so.get(n) for n in sv))
        except KeyError as exc:
            raise UnboundVariable(f"free variable {exc.args[0]!r} has no value") from None
        got = self._memo.get(key)
        if got is None:
            got = self._eval(f, fo, so)
            self._memo[key] = got
        return got

    def _term(self, t, fo):
        if isinstance(t, Const):
            return t.value
        try:
            return fo[t.name]
        except KeyError:
            raise UnboundVariable(f"variable {t.name!r} is unbound") from None

    def _rel(self, name: str, so: dict, arity: int | None = None):
        if name in so:
            rows = so[name]
        elif name in self.db:
            rows = self.db[name]
            if arity is not None and self.db_arity[name] != arity:
                raise ArityMismatch(f"{name} has arity {self.db_arity[name]}, used with {arity}")
        else:
            raise UnboundVariable(f"relation {name!r} is neither quantified nor in the database")
        return rows

    def _domain_values(self, f, so) -> list:
        if f.domain is None:
            return list(self.s.domain)
        rows = self._rel(f.domain, so)
        return sorted({t[0] for t in rows}, key=lambda v: row_key((v,)))

    def _eval(self, f: S.Formula, fo: dict, so: dict) -> bool:
        if isinstance(f, S.Atom):
            rows = self._rel(f.rel, so, len(f.args))
            return tuple(self._term(t, fo) for t in f.args) in rows
        if isinstance(f, S.Equals):
            return self._term(f.left, fo) == self._term(f.right, fo)
        if isinstance(f, S.Truth):
            return f.value
        if isinstance(f, S.Not):
            return not self.holds(f.body, fo, so)
        if isinstance(f, S.And):
            return all(self.holds(g, fo, so) for g in f.items)
        if isinstance(f, S.Or):
            return any(self.holds(g, fo, so) for g in f.items)
        if isinstance(f, S.Implies):
            return (not self.holds(f.left, fo, so)) or self.holds(f.right, fo, so)
        if isinstance(f, S.Iff):
            return self.holds(f.left, fo, so) == self.holds(f.right, fo, so)
        if isinstance(f, (S.Exists, S.Forall)):
            want = isinstance(f, S.Exists)
            for v in self._domain_values(f, so):
                inner = dict(fo)
                inner[f.var] = v
                if self.holds(f.body, inner, so) == want:
                    return want
            return not want
        if isinstance(f, S.ExistsRel) and self.solve:
            return bool(self.solutions(f.body, f.name, f.arity, fo, so))
        if isinstance(f, (S.ExistsRel, S.ForallRel)):
            want = isinstance(f, S.ExistsRel)
            for cand in self.candidates(f.name, f.arity):
                inner = dict(so)
                inner[f.name] = cand
                if self.holds(f.body, fo, inner) == want:
                    return want
            return not want
        if isinstance(f, S.DefRef):
            params, body = self.defs[f.name]
            if len(params) != len(f.args):
                raise ArityMismatch(f"definition {f.name} takes {len(params)} arguments")
            env = {p: self._rel(a, so) for p, a in zip(params, f.args)}
            return self.holds(body, {}, env)
        raise TypeError(f"unknown formula {type(f).__name__}")


    # solving for relation variables ------------------------------------------------

    def solutions(self, f: S.Formula, name: str, arity: int, fo: dict, so: dict) -> list:
        """Distinct values of relation variable ``name`` that make ``f`` true."""
        fv, sv = self.free(f)
        if name not in sv:
            return list(self.candidates(name, arity)) if self.holds(f, fo, so) else []
        try:
            key = (id(f), name, tuple(fo[v] for v in fv), tuple(so.get(n) for n in sv if n != name))
        except KeyError as exc:
            raise UnboundVariable(f"free variable {exc.args[0]!r} has no value") from None
        got = self._solved.get(key)
        if got is None:
            got = self._solve(f, name, arity, fo, so)
            self._solved[key] = got
        return got

    def _definition(self, f, name):
        """``phi`` and the head variables if ``f`` is ``forall xs (name(xs) <-> phi)``."""
        bound = []
        while isinstance(f, S.Forall) and f.domain is None:
            bound.append(f.var)
            f = f.body
        if not isinstance(f, S.Iff) or not isinstance(f.left, S.Atom) or f.left.rel != name:
            return None
        head = [t.name if isinstance(t, S.Var) else None for t in f.left.args]
        if None in head or len(set(head)) != len(head) or sorted(head) != sorted(bound):
            return None
        if name in self.free(f.right)[1]:
            return None
        return head, f.right

    def _bound_by(self, f, name):
        """Name of ``S`` if ``f`` is ``forall xs (name(xs) -> S(xs))``."""
        bound = []
        while isinstance(f, S.Forall) and f.domain is None:
            bound.append(f.var)
            f = f.body
        if not (isinstance(f, S.Implies) and isinstance(f.left, S.Atom) and isinstance(f.right, S.Atom)):
            return None
        if f.left.rel != name or f.right.rel == name or f.left.args != f.right.args:
            return None
        head = [t.name if isinstance(t, S.Var) else None for t in f.left.args]
        if None in head or len(set(head)) != len(head) or sorted(head) != sorted(bound):
            return None
        return f.right.rel

    def _solve(self, f, name, arity, fo, so) -> list:
        d = self._definition(f, name)
        if d is not None:
            head, phi = d
            rows = set()
            for t in domain_power(self.s.domain, len(head)):
                inner = dict(fo)
                inner.update(zip(head, t))
                if self.holds(phi, inner, so):
                    rows.add(t)
            return [frozenset(rows)]
        sup = self._bound_by(f, name)
        if sup is not None:
            base = sorted(self._rel(sup, so, arity), key=row_key)
            if len(base) >= 62 or (1 << len(base)) > self.limits.max_candidates:
                raise DomainExplosion(f"{name} ranges over 2^{len(base)} relations")
            return [frozenset(c) for k in range(len(base) + 1) for c in combinations(base, k)]
        if isinstance(f, S.And):
            return [a[name] for a in self._solve_all(list(f.items), [(name, arity)], fo, so)]
        if isinstance(f, S.ExistsRel) and f.name != name:
            items = list(f.body.items) if isinstance(f.body, S.And) else [f.body]
            out = {a[name] for a in self._solve_all(items, [(f.name, f.arity), (name, arity)], fo, so)}
            return sorted(out, key=lambda r: sorted(map(row_key, r)))
        if isinstance(f, S.Exists) and f.var not in fo:
            out = set()
            for v in self._domain_values(f, so):
                inner = dict(fo)
                inner[f.var] = v
                out.update(self.solutions(f.body, name, arity, inner, so))
            return sorted(out, key=lambda r: sorted(map(row_key, r)))
        if isinstance(f, S.DefRef):
            params, body = self.defs[f.name]
            pos = [i for i, a in enumerate(f.args) if a == name]
            if len(pos) == 1:
                env = {p: self._rel(a, so) for p, a in zip(params, f.args) if a != name}
                return self.solutions(body, params[pos[0]], arity, {}, env)
        return [c for c in self.candidates(name, arity) if self.holds(f, fo, {**so, name: c})]

    def _solve_all(self, items: list, unknowns: list, fo: dict, so: dict) -> list:
        """Assignments to ``unknowns`` (pairs of name and arity) satisfying every item."""
        names = {n for n, _ in unknowns}
        if not unknowns:
            return [{}] if all(self.holds(g, fo, so) for g in items) else []
        # settle items that mention no unknown first
        ready = [g for g in items if not (set(self.free(g)[1]) & names)]
        if ready:
            if not all(self.holds(g, fo, so) for g in ready):
                return []
            items = [g for g in items if g not in ready]
        best = None
        for g in items:
            hit = set(self.free(g)[1]) & names
            if len(hit) != 1:
                continue
            (u,) = hit
            rank = 0 if self._definition(g, u) is not None else 1 if self._bound_by(g, u) is not None else 2
            if isinstance(g, S.Not):
                rank = 3
            if best is None or rank < best[0]:
                best = (rank, g, u)
        if best is None:
            u, ar = unknowns[0]
            choices = self.candidates(u, ar)
            chosen_item = None
        else:
            _, chosen_item, u = best
            ar = dict(unknowns)[u]
            choices = self.solutions(chosen_item, u, ar, fo, so)
        rest_items = [g for g in items if g is not chosen_item]
        rest_unknowns = [(n, a) for n, a in unknowns if n != u]
        out = []
        for c in choices:
            inner = dict(so)
            inner[u] = c
            for a in self._solve_all(rest_items, rest_unknowns, fo, inner):
                a = dict(a)
                a[u] = c
                out.append(a)
        return out


def _setup(f):
    sys.setrecursionlimit(max(sys.getrecursionlimit(), 20000))


def eval_so(f: S.Formula, s: Structure, asg: Assignment | None = None,
            limits: SoLimits | None = None, defs: dict | None = None, solve: bool = True) -> bool:
    _setup(f)
    asg = asg or Assignment()
    ev = SoEvaluator(s, defs, limits, solve)
    so = {k: _rows(v) for k, v in asg.so.items()}
    return ev.holds(f, dict(asg.fo), so)


def answer_relation(f: S.Formula, s: Structure, variables: tuple, asg: Assignment | None = None,
                    limits: SoLimits | None = None, defs: dict | None = None,
                    solve: bool = True) -> Relation:
    """All assignments to ``variables`` (over the domain) that satisfy ``f``."""
    _setup(f)
    asg = asg or Assignment()
    ev = SoEvaluator(s, defs, limits, solve)
    so = {k: _rows(v) for k, v in asg.so.items()}
    rows = set()
    for t in domain_power(s.domain, len(variables)):
        fo = dict(asg.fo)
        fo.update(zip(variables, t))
        if ev.holds(f, fo, so):
            rows.add(t)
    return Relation.trusted(tuple(variables), frozenset(rows))


def satisfying_relations(f: S.Formula, name: str, arity: int, s: Structure,
                         asg: Assignment | None = None, limits: SoLimits | None = None,
                         defs: dict | None = None, schema: tuple | None = None,
                         solve: bool = True) -> frozenset:
    """Every relation ``R`` (over the domain, or the universe declared for ``name``)
    such that ``f`` holds when ``name`` denotes ``R``."""
    _setup(f)
    asg = asg or Assignment()
    ev = SoEvaluator(s, defs, limits, solve)
    so = {k: _rows(v) for k, v in asg.so.items()}
    schema = schema or tuple(f"_{i + 1}" for i in range(arity))
    if solve:
        found = ev.solutions(f, name, arity, dict(asg.fo), so)
    else:
        found = [c for c in ev.candidates(name, arity) if ev.holds(f, dict(asg.fo), {**so, name: c})]
    return frozenset(Relation.trusted(schema, c) for c in found)


def structure_from_world(w: World, domain=None, universes: dict | None = None) -> Structure:
    """Structure whose domain is ``domain`` (default: the active domain of ``w``)."""
    from .relmodel import active_domain, value_key
    dom = set(active_domain(w)) if domain is None else set(domain)
    extra = active_domain(w) - dom
    if extra:
        raise ValueError(f"values {sorted(map(str, extra))} are outside the declared domain")
    return Structure(tuple(sorted(dom, key=value_key)), w, dict(universes or {}))


__all__ = ["Structure", "Assignment", "SoLimits", "SoEvaluator", "eval_so", "answer_relation",
           "satisfying_relations", "structure_from_world"]
