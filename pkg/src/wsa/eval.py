"""Evaluation of world-set algebra queries.

``results(Q, W)`` maps every world ``A`` of ``W`` to the set of relations
that ``Q`` may return in ``A``.  Operators act world by world; ``let``
extends each world with every possible value of the bound view, and the
grouping operators look across all worlds of the current world-set.

Subtrees free of grouping operators only depend on the relations they
mention, so their per-world results are cached on those relations.  Chains
of selection and projection over products are handed to :func:`wsa.ra.spj`.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from itertools import combinations, product as cartesian

from . import ra
from .errors import SchemaMismatch, TimeBudgetExceeded, UnknownRelation, WorldSetExplosion
from .lang import ast as A
from .lang.typecheck import typecheck
from .relmodel import Relation, World, make_worldset

log = logging.getLogger(__name__)

_GROUPING = (A.PossibleGrp, A.CertainGrp, A.Possible, A.Certain)


@dataclass(frozen=True)
class EvalLimits:
    max_worlds: int = 100_000
    max_tuples: int = 1_000_000
    deadline: float | None = None   # time.monotonic() value after which evaluation stops


@dataclass
class EvalResult:
    per_world: dict
    worlds: frozenset = field(default_factory=frozenset)

    @property
    def answers(self) -> frozenset:
        """Every relation returned in some world."""
        out = set()
        for rs in self.per_world.values():
            out |= set(rs)
        return frozenset(out)

    @property
    def uniform(self) -> bool:
        vals = list(self.per_world.values())
        return all(v == vals[0] for v in vals)

    def single(self) -> Relation:
        """The unique answer of a closed query."""
        ans = self.answers
        if len(ans) != 1:
            raise ValueError(f"query has {len(ans)} distinct answers")
        return next(iter(ans))


# repair-key and powerset ---------------------------------------------------------

def repairs(r: Relation, attrs: tuple, cap: int) -> list:
    """All maximal subsets of ``r`` on which ``attrs`` is a key."""
    pos = [r.schema.index(a) for a in attrs]
    groups: dict = {}
    for t in r.rows():
        groups.setdefault(tuple(t[i] for i in pos), []).append(t)
    n = 1
    for g in groups.values():
        n *= len(g)
        if n > cap:
            raise WorldSetExplosion(f"repair-key yields more than {cap} repairs")
    return [Relation.trusted(r.schema, frozenset(choice)) for choice in cartesian(*groups.values())]


def subsets(r: Relation, cap: int) -> list:
    rows = r.rows()
    if len(rows) >= 62 or (1 << len(rows)) > cap:
        raise WorldSetExplosion(f"subset of {len(rows)} tuples exceeds {cap} results")
    return [Relation.trusted(r.schema, frozenset(c)) for k in range(len(rows) + 1)
            for c in combinations(rows, k)]


def _key(r: Relation, attrs: tuple):
    if not attrs:
        return ()
    return ra.project(attrs, r).tuples


# the evaluator ---------------------------------------------------------------------

class _Info:
    __slots__ = ("local", "free", "block")

    def __init__(self, local, free, block):
        self.local = local
        self.free = free
        self.block = block


class Evaluator:
    """Evaluates one type-checked, schema-annotated query tree."""

    def __init__(self, limits: EvalLimits | None = None):
        self.limits = limits or EvalLimits()
        self._info: dict = {}
        self._local_cache: dict = {}
        self._op_cache: dict = {}
        self._const: dict = {}

    # -- static analysis

    def info(self, n: A.Expr) -> _Info:
        got = self._info.get(id(n))
        if got is not None:
            return got
        kids = n.children()
        kid_info = [self.info(c) for c in kids]
        local = not isinstance(n, _GROUPING) and all(k.local for k in kid_info)
        if isinstance(n, A.RelRef):
            free = frozenset({n.name})
        elif isinstance(n, A.Let):
            free = frozenset(kid_info[0].free) | (frozenset(kid_info[1].free) - {n.name})
        else:
            free = frozenset().union(*[k.free for k in kid_info])
        info = _Info(local, tuple(sorted(free)), _block_of(n))
        self._info[id(n)] = info
        self._keep = getattr(self, "_keep", [])
        self._keep.append(n)
        return info

    # -- world-set level

    def results(self, n: A.Expr, W: frozenset) -> dict:
        self._tick()
        info = self.info(n)
        if info.local:
            return {w: self.local(n, w) for w in W}
        if isinstance(n, A.Let):
            return self._let(n, W)
        if isinstance(n, (A.PossibleGrp, A.CertainGrp, A.Possible, A.Certain)):
            return self._grouping(n, W)
        if info.block is not None:
            factors, pred, out = info.block
            per = [self.results(f, W) for f, _ in factors]
            return {w: self._block(n, info.block, [p[w] for p in per]) for w in W}
        kids = n.children()
        per = [self.results(c, W) for c in kids]
        return {w: self._apply(n, [p[w] for p in per]) for w in W}

    def _let(self, n: A.Let, W: frozenset) -> dict:
        bound = self.results(n.bound, W)
        ext: dict = {}
        for w in W:
            ext[w] = [w.extend(n.name, r) for r in bound[w]]
        W2 = frozenset(x for xs in ext.values() for x in xs)
        if len(W2) > self.limits.max_worlds:
            raise WorldSetExplosion(f"let {n.name} creates {len(W2)} worlds")
        body = self.results(n.body, W2)
        out = {}
        for w in W:
            acc = set()
            for x in ext[w]:
                acc.update(body[x])
            out[w] = tuple(acc)
        return out

    def _grouping(self, n, W: frozenset) -> dict:
        child = self.results(n.expr, W)
        pool = set()
        for rs in child.values():
            pool.update(rs)
        sch = n.schema
        is_union = isinstance(n, (A.PossibleGrp, A.Possible))
        if isinstance(n, (A.Possible, A.Certain)):
            if not pool:
                return {w: () for w in W}
            rows = None
            for r in pool:
                rr = ra.align(r, sch).tuples
                rows = rr if rows is None else (rows | rr if is_union else rows & rr)
            res = (Relation.trusted(sch, rows),)
            return {w: res for w in W}
        attrs = n.attrs
        groups: dict = {}
        for r in pool:
            k = _key(r, attrs)
            if k in groups:
                groups[k] = groups[k] | r.tuples if is_union else groups[k] & r.tuples
            else:
                groups[k] = r.tuples
        merged = {k: Relation.trusted(sch, v) for k, v in groups.items()}
        return {w: tuple({merged[_key(r, attrs)] for r in child[w]}) for w in W}

    # -- single world, grouping-free subtrees

    def _tick(self):
        if self.limits.deadline is not None and time.monotonic() > self.limits.deadline:
            raise TimeBudgetExceeded("evaluation ran past its time budget")

    def local(self, n: A.Expr, w: World) -> tuple:
        self._tick()
        info = self.info(n)
        try:
            key = (id(n), tuple(w[x] for x in info.free))
        except KeyError as exc:
            raise UnknownRelation(f"unknown relation {exc.args[0]!r}") from None
        got = self._local_cache.get(key)
        if got is not None:
            return got
        if isinstance(n, A.Let):
            acc = set()
            for r in self.local(n.bound, w):
                acc.update(self.local(n.body, w.extend(n.name, r)))
            out = tuple(acc)
        elif isinstance(n, A.RelRef):
            out = (w[n.name],)
        elif info.block is not None:
            factors = info.block[0]
            out = self._block(n, info.block, [self.local(f, w) for f, _ in factors])
        else:
            out = self._apply(n, [self.local(c, w) for c in n.children()])
        self._local_cache[key] = out
        return out

    # -- operators on result sets

    def _apply(self, n: A.Expr, kid_results: list) -> tuple:
        if not kid_results:
            return (self._constant(n),)
        cap = self.limits.max_worlds
        if len(kid_results) == 1:
            acc = []
            for r in kid_results[0]:
                key = (id(n), r)
                got = self._op_cache.get(key)
                if got is None:
                    got = self._unary(n, r, cap)
                    self._op_cache[key] = got
                acc.extend(got)
            return tuple(set(acc)) if len(acc) > 1 else tuple(acc)
        left, right = kid_results
        acc = set()
        for a in left:
            for b in right:
                acc.add(self._binary(n, a, b))
        return tuple(acc)

    def _constant(self, n: A.ConstRel) -> Relation:
        got = self._const.get(id(n))
        if got is None:
            got = Relation(n.schema, n.rows)
            self._const[id(n)] = got
        return got

    def _unary(self, n: A.Expr, r: Relation, cap: int) -> tuple:
        sch = n.schema
        if isinstance(n, A.Select):
            return (ra.select(n.pred, r),)
        if isinstance(n, A.Project):
            p = ra.project(n.attrs, r)
            return (Relation.trusted(sch, p.tuples),)
        if isinstance(n, A.Rename):
            return (ra.rename(dict(n.mapping), r),)
        if isinstance(n, A.RepairKey):
            return tuple(repairs(r, n.attrs, cap))
        if isinstance(n, A.Subset):
            return tuple(subsets(r, cap))
        if isinstance(n, A.ChoiceOf):
            pos = [r.schema.index(a) for a in n.attrs]
            groups: dict = {}
            for t in r.tuples:
                groups.setdefault(tuple(t[i] for i in pos), set()).add(t)
            return tuple(Relation.trusted(r.schema, frozenset(g)) for g in groups.values())
        raise TypeError(f"unexpected unary node {type(n).__name__}")

    def _binary(self, n: A.Expr, a: Relation, b: Relation) -> Relation:
        if isinstance(n, A.Product):
            return ra.product(a, b, self.limits.max_tuples)
        if isinstance(n, A.Union):
            return ra.union(a, b)
        if isinstance(n, A.Difference):
            return ra.difference(a, b)
        if isinstance(n, A.NaturalJoin):
            return ra.natural_join(a, b)
        if isinstance(n, A.JoinTheta):
            return ra.join_theta(n.pred, a, b, self.limits.max_tuples)
        raise TypeError(f"unexpected binary node {type(n).__name__}")

    def _block(self, n: A.Expr, block, factor_results: list) -> tuple:
        factors, pred, out = block
        acc = set()
        for combo in cartesian(*factor_results):
            self._tick()
            key = (id(n), combo)
            got = self._op_cache.get(key)
            if got is None:
                rels = [ra.rename(m, r) if m else r for r, (_, m) in zip(combo, factors)]
                rows = ra.spj(rels, pred, out, self.limits.max_tuples)
                got = Relation.trusted(n.schema, rows)
                self._op_cache[key] = got
            acc.add(got)
        return tuple(acc)


def _flatten(n: A.Expr):
    """Factors of a product tree, looking through renames: [(node, mapping)]."""
    if isinstance(n, A.Product):
        return _flatten(n.left) + _flatten(n.right)
    if isinstance(n, A.Rename) and isinstance(n.expr, (A.Product, A.Rename)):
        inner = _flatten(n.expr)
        if len(inner) > 1:
            m = dict(n.mapping)
            out = []
            for node, fm in inner:
                cols = [fm.get(a, a) for a in node.schema]
                new = {}
                for orig, cur in zip(node.schema, cols):
                    tgt = m.get(cur, cur)
                    if tgt != orig:
                        new[orig] = tgt
                out.append((node, new))
            return out
    return [(n, {})]


def _block_of(n: A.Expr):
    """Recognise project/select chains over a product of two or more factors."""
    cur = n
    out = None
    preds = []
    if isinstance(cur, A.Project):
        out = cur.attrs
        cur = cur.expr
        while isinstance(cur, A.Project):
            mapping = dict(zip(cur.schema, cur.attrs))
            out = tuple(mapping[a] for a in out)
            cur = cur.expr
    while isinstance(cur, A.Select):
        preds.append(cur.pred)
        cur = cur.expr
    if isinstance(cur, A.JoinTheta):
        preds.append(cur.pred)
        factors = _flatten(cur.left) + _flatten(cur.right)
    elif isinstance(cur, (A.Product, A.Rename)):
        factors = _flatten(cur)
    else:
        return None
    if len(factors) < 2:
        return None
    if out is None and not preds and isinstance(n, A.Product) and len(factors) == 2:
        return None
    pred = ra.conj(*preds) if preds else ra.P_TRUE
    return (factors, pred, out)


# public entry points -------------------------------------------------------------

def _prepare(q: A.Expr, W: frozenset) -> A.Expr:
    if q.schema is not None and all(n.schema is not None for n in A.walk(q)):
        return q
    if not W:
        raise SchemaMismatch("cannot type-check against an empty world-set")
    cat = next(iter(W)).catalog()
    return typecheck(q, cat)


def evaluate(q: A.Expr, W: frozenset, limits: EvalLimits | None = None) -> dict:
    """Per-world result sets ``{world: frozenset(relations)}``."""
    W = make_worldset(W)
    q = _prepare(q, W)
    ev = Evaluator(limits)
    raw = ev.results(q, W)
    return {w: frozenset(rs) for w, rs in raw.items()}


def eval_wsa(q: A.Expr, a: World, W: frozenset, limits: EvalLimits | None = None) -> frozenset:
    if a not in W:
        raise ValueError("world is not a member of the world-set")
    return evaluate(q, W, limits)[a]


def eval_closed(q: A.Expr, W: frozenset, limits: EvalLimits | None = None) -> EvalResult:
    per = evaluate(q, W, limits)
    return EvalResult(per, frozenset(W))


def result_worldset(q: A.Expr, W: frozenset, limits: EvalLimits | None = None) -> frozenset:
    """All relations ``q`` can produce, over all worlds."""
    return eval_closed(q, W, limits).answers


def eval_independent(q: A.Expr, inputs: dict, limits: EvalLimits | None = None) -> frozenset:
    """Compositional semantics over relation-independent world-sets.

    ``inputs`` maps each relation name to the set of relations it may take,
    independently of the others.  Only let-free core queries (plus ``subset``
    and ``possible``) are accepted.
    """
    lim = limits or EvalLimits()
    cat = {}
    for name, rels in inputs.items():
        rels = list(rels)
        if not rels:
            raise ValueError(f"no candidate relations for {name!r}")
        cat[name] = rels[0].schema
    if q.schema is None:
        q = typecheck(q, cat)
    return frozenset(_indep(q, {k: frozenset(v) for k, v in inputs.items()}, lim))


def _indep(n: A.Expr, env: dict, lim: EvalLimits) -> set:
    from .errors import UnsupportedFeature
    if isinstance(n, A.ConstRel):
        return {Relation(n.schema, n.rows)}
    if isinstance(n, A.RelRef):
        return set(env[n.name])
    if isinstance(n, A.Let):
        raise UnsupportedFeature("independent semantics is defined for let-free queries")
    if isinstance(n, (A.Product, A.Union, A.Difference)):
        ls, rs = _indep(n.left, env, lim), _indep(n.right, env, lim)
        op = {A.Product: ra.product, A.Union: ra.union, A.Difference: ra.difference}[type(n)]
        return {op(a, b) for a in ls for b in rs}
    if isinstance(n, (A.PossibleGrp, A.Possible)):
        S = _indep(n.expr, env, lim)
        attrs = n.attrs if isinstance(n, A.PossibleGrp) else ()
        groups: dict = {}
        for r in S:
            k = _key(r, attrs)
            groups[k] = groups.get(k, frozenset()) | r.tuples
        return {Relation.trusted(n.schema, groups[_key(r, attrs)]) for r in S}
    if not isinstance(n, (A.Select, A.Project, A.Rename, A.RepairKey, A.Subset)):
        raise UnsupportedFeature(f"{type(n).__name__} has no independent semantics here")
    S = _indep(n.expr, env, lim)
    out: set = set()
    for r in S:
        if isinstance(n, A.Select):
            out.add(ra.select(n.pred, r))
        elif isinstance(n, A.Project):
            out.add(Relation.trusted(n.schema, ra.project(n.attrs, r).tuples))
        elif isinstance(n, A.Rename):
            out.add(ra.rename(dict(n.mapping), r))
        elif isinstance(n, A.RepairKey):
            out.update(repairs(r, n.attrs, lim.max_worlds))
        else:
            out.update(subsets(r, lim.max_worlds))
    return out


def sup_inf(ws) -> tuple:
    """(union, intersection) of a set of relations, each only if it is a member."""
    ws = list(ws)
    if not ws:
        return (None, None)
    sch = ws[0].schema
    u = frozenset().union(*[r.tuples for r in ws])
    i = ws[0].tuples
    for r in ws[1:]:
        i = i & r.tuples
    sup = Relation.trusted(sch, u)
    inf = Relation.trusted(sch, i)
    members = set(ws)
    return (sup if sup in members else None, inf if inf in members else None)


__all__ = ["EvalLimits", "EvalResult", "Evaluator", "evaluate", "eval_wsa", "eval_closed",
           "eval_independent", "sup_inf", "repairs", "subsets", "result_worldset"]
