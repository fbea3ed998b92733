"""Compilers from second-order logic to world-set algebra.

Two routes are provided.

``compile_with_defs`` follows the inductive construction with definitions:
first-order parts become relational algebra (Codd's translation) and every
relation quantifier ``exists R`` becomes ``let R := subset(U_R) in ...``
followed by a ``possible`` that groups the worlds by the indicator relations
of the enclosing relation variables.

``compile_no_defs`` produces an expression without ``let``.  The formula is
brought into prenex form and its quantifier-free matrix is compiled over
indicator relations (each occurring once, via k-products).  The result is a
truth-table relation ``1_R1 x ... x 1_Rk x Theta`` where ``Theta`` maps each
assignment of the free first-order variables to a protected bit: ``{_bot}``
for false, ``{_bot, 1}`` for true.  Quantifiers are then applied from the
inside out: projection for ``exists x``, ``possible`` plus projection for
``exists R`` and the truth-table complement for negation.

Both compilers evaluate over a database that contains a unary domain relation
(``D`` by default) listing the values first-order variables range over.
Relation variables range over subsets of a declared universe, or of ``D^k``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import count

from .errors import ArityMismatch, UnknownRelation, UnsupportedFeature
from .lang import ast as A
from .lang import so_ast as S
from .lang.typecheck import typecheck
from .ra import Attr, Cmp, Const, P_FALSE, P_TRUE, conj, disj, map_pred_attrs
from .relmodel import BOT


@dataclass
class CompileContext:
    """What the compilers need to know about the target database.

    ``catalog`` maps database relation names (including the domain relation)
    to their schemas; ``universes`` maps relation names to queries computing
    their universe; ``defs`` holds named formula definitions to inline.
    """
    catalog: dict
    universes: dict = field(default_factory=dict)
    domain: str = "D"
    defs: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.domain not in self.catalog:
            raise UnknownRelation(f"domain relation {self.domain!r} is not in the catalog")
        if len(self.catalog[self.domain]) != 1:
            raise ArityMismatch(f"domain relation {self.domain!r} must be unary")


class _Names:
    """Deterministic fresh names avoiding everything already in use."""

    def __init__(self, taken):
        self.taken = set(taken)
        self._n: dict = {}

    def fresh(self, stem: str) -> str:
        if stem not in self.taken:
            self.taken.add(stem)
            return stem
        c = self._n.setdefault(stem, count(2))
        while True:
            cand = f"{stem}_{next(c)}"
            if cand not in self.taken:
                self.taken.add(cand)
                return cand


def _taken_names(f: S.Formula, ctx: CompileContext) -> set:
    """Names a compiled query must not reuse: the catalog, universes and the
    free names of ``f`` (bound names are renamed apart separately)."""
    out = set(S.free_fo(f)) | set(S.free_so(f)) | set(ctx.catalog)
    for sch in ctx.catalog.values():
        out.update(sch)
    for u in ctx.universes.values():
        for n in A.walk(u):
            if isinstance(n, A.RelRef):
                out.add(n.name)
    return out


# building blocks -----------------------------------------------------------------

def _bits(values, name: str) -> A.Expr:
    return A.const_column(values, name)


def _product(items) -> A.Expr:
    return A.product_of(items)


class _Builder:
    def __init__(self, ctx: CompileContext, names: _Names, origin: dict | None = None):
        self.ctx = ctx
        self.names = names
        self.origin = origin or {}   # renamed relation variable -> name used for its universe

    def domain_col(self, name: str) -> A.Expr:
        return A.RenameTo((name,), A.RelRef(self.ctx.domain))

    def domain_power(self, names) -> A.Expr:
        return _product([self.domain_col(n) for n in names])

    def universe(self, rel: str, names: tuple, padded: bool = True) -> A.Expr:
        """Universe of ``rel`` with columns ``names``.

        A declared universe that turns out empty is padded with the reserved
        tuple of ``_bot`` values, which no atom of a formula can match, so that
        indicator relations never vanish.
        """
        key = self.origin.get(rel, rel)
        decl = self.ctx.universes.get(key)
        if decl is None:
            return self.domain_power(names)
        u = A.RenameTo(tuple(names), decl)
        if not names or not padded:
            return u
        pad = A.Product(A.RenameTo(tuple(names), A.ConstRel(((BOT,) * len(names),), len(names))),
                        A.Difference(A.TRUE_EXPR, A.Project((), A.RenameTo(tuple(names), decl))))
        return A.Union(u, pad)

    def ind(self, rel: str, names: tuple, bit: str) -> A.Expr:
        """Indicator relation of a stored (or let-bound) relation: ind(R, U)."""
        r = A.RenameTo(tuple(names), A.RelRef(rel))
        inside = A.Product(r, _bits([1], bit))
        outside = A.Product(A.Difference(self.universe(rel, names),
                                         A.RenameTo(tuple(names), A.RelRef(rel))), _bits([0], bit))
        return A.Union(inside, outside)

    def guessed_ind(self, rel: str, names: tuple, bit: str) -> A.Expr:
        """Indicator of a relation variable over ``D^k``: one world per subset
        of its universe; tuples outside a declared universe always get bit 0."""
        key = self.origin.get(rel, rel)
        decl = self.ctx.universes.get(key)
        cover = self.domain_power(names)
        if decl is None:
            return A.RepairKey(tuple(names), A.Product(cover, _bits([0, 1], bit)))
        u = A.RenameTo(tuple(names), decl)
        choices = A.Union(A.Product(u, _bits([0, 1], bit)),
                          A.Product(A.Difference(cover, u), _bits([0], bit)))
        return A.RepairKey(tuple(names), choices)

    def universe_bits(self, rel: str, names: tuple, bit: str) -> A.Expr:
        """``D^k x {0, 1}``: the rows any indicator used in the no-definition route draws from."""
        return A.Product(self.domain_power(names), _bits([0, 1], bit))


def indicator(rel: str, ctx: CompileContext, arity: int, relation_variable: bool = False,
              names: tuple | None = None, bit: str = "B") -> A.Expr:
    """``1_rel`` over its universe: ``ind(rel, U)`` for stored relations and
    ``repairkey[sch U](U x {0, 1})`` for relation variables."""
    names = tuple(names or (f"A{i + 1}" for i in range(arity)))
    b = _Builder(ctx, _Names(set()))
    return b.guessed_ind(rel, names, bit) if relation_variable else b.ind(rel, names, bit)


def k_product(ind_of, universe_bits_of, slots: list, names: _Names) -> A.Expr:
    """k-fold product of one indicator relation in which the indicator occurs once.

    ``slots`` lists, per copy, the attribute names and the bit name it gets.
    ``ind_of(names, bit)`` builds the indicator and ``universe_bits_of(names,
    bit)`` builds ``U x {0, 1}`` with the given column names.
    """
    k = len(slots)
    if k == 0:
        return A.TRUE_EXPR
    if k == 1:
        return ind_of(*slots[0])
    full = lambda: _product([universe_bits_of(a, b) for a, b in slots])  # noqa: E731
    ar = len(slots[0][0])
    primed = tuple(names.fresh("k") for _ in range(ar))
    primed_bit = names.fresh("kb")
    mismatch = disj(*[conj(*[Cmp("=", Attr(a), Attr(p)) for a, p in zip(attrs, primed)],
                           Cmp("!=", Attr(bit), Attr(primed_bit)))
                      for attrs, bit in slots])
    cols = tuple(c for attrs, bit in slots for c in attrs + (bit,))
    wrong = A.Project(cols, A.Select(mismatch, A.Product(full(), ind_of(primed, primed_bit))))
    return A.Difference(full(), wrong)


def compl_indicators(operand: A.Expr, blocks: list, names: _Names) -> A.Expr:
    """Complement of a product of indicator relations within ``prod(U_i x {0, 1})``.

    ``blocks`` lists ``(universe_bits_of, attrs, bit)`` for the operand's
    columns in order; the operand occurs once.
    """
    if not blocks:
        return A.Difference(A.TRUE_EXPR, operand)
    full = _product([ub(a, b) for ub, a, b in blocks])
    ren, tests = [], []
    for _, attrs, bit in blocks:
        pa = tuple(names.fresh(a) for a in attrs)
        pb = names.fresh(bit)
        ren.extend(pa + (pb,))
        tests.append(conj(*[Cmp("=", Attr(a), Attr(p)) for a, p in zip(attrs, pa)],
                          Cmp("!=", Attr(bit), Attr(pb))))
    cols = tuple(c for _, attrs, bit in blocks for c in attrs + (bit,))
    return A.Project(cols, A.Select(disj(*tests), A.Product(A.RenameTo(tuple(ren), operand), full)))


def compl_tt(operand: A.Expr, blocks: list, fo_cols: tuple, t: str, builder: _Builder) -> A.Expr:
    """``1_R1 x ... x 1_Rk x compl(Theta)`` for a truth-table operand.

    The operand has schema ``keys + fo_cols + (t,)``; it occurs once.
    """
    names = builder.names
    ren, tests = [], []
    for _, attrs, bit in blocks:
        pa = tuple(names.fresh(a) for a in attrs)
        pb = names.fresh(bit)
        ren.extend(pa + (pb,))
        tests.append(conj(*[Cmp("=", Attr(a), Attr(p)) for a, p in zip(attrs, pa)],
                          Cmp("!=", Attr(bit), Attr(pb))))
    tp = names.fresh(t)
    ren.extend(fo_cols + (tp,))
    tests.append(conj(Cmp("=", Attr(tp), Const(1)), Cmp("=", Attr(t), Const(1))))
    key_cols = tuple(c for _, attrs, bit in blocks for c in attrs + (bit,))
    universe_plus = lambda: _product([ub(a, b) for ub, a, b in blocks])  # noqa: E731
    pbit = lambda: _bits([BOT, 1], t)  # noqa: E731
    everything = _product([universe_plus(), builder.domain_power(fo_cols), pbit()])
    removed = A.Project(key_cols + fo_cols + (t,),
                        A.Select(disj(*tests),
                                 _product([universe_plus(), A.RenameTo(tuple(ren), operand), pbit()])))
    return A.Difference(everything, removed)


# formula preparation -------------------------------------------------------------

def _inline(f: S.Formula, ctx: CompileContext) -> S.Formula:
    if ctx.defs and any(isinstance(g, S.DefRef) for g in S.walk(f)):
        from .wsa2so import expand_defs
        return expand_defs(f, ctx.defs)
    return f


def _no_bot(f: S.Formula):
    for g in S.walk(f):
        terms = g.args if isinstance(g, S.Atom) else (g.left, g.right) if isinstance(g, S.Equals) else ()
        for t in terms:
            if isinstance(t, Const) and t.value is BOT:
                raise UnsupportedFeature("_bot is reserved and cannot appear in formulas")
        if isinstance(g, S.DefRef):
            raise UnsupportedFeature(f"definition {g.name!r} is not available")


def rename_apart(f: S.Formula, taken: set) -> tuple:
    """Give every bound variable (first- and second-order) a distinct name that
    clashes with nothing in ``taken``.  Returns the formula and a map from new
    relation-variable names to the original ones."""
    names = _Names(taken)
    origin: dict = {}

    def go(g, fo: dict, so: dict):
        if isinstance(g, S.Atom):
            return S.Atom(so.get(g.rel, g.rel), tuple(S.Var(fo.get(t.name, t.name)) if isinstance(t, S.Var)
                                                      else t for t in g.args))
        if isinstance(g, S.Equals):
            return S.Equals(*[S.Var(fo.get(t.name, t.name)) if isinstance(t, S.Var) else t
                              for t in (g.left, g.right)])
        if isinstance(g, (S.Truth, S.DefRef)):
            return g
        if isinstance(g, S.Not):
            return S.Not(go(g.body, fo, so))
        if isinstance(g, (S.And, S.Or)):
            return type(g)(tuple(go(h, fo, so) for h in g.items))
        if isinstance(g, (S.Implies, S.Iff)):
            return type(g)(go(g.left, fo, so), go(g.right, fo, so))
        if isinstance(g, (S.Exists, S.Forall)):
            v = names.fresh(g.var)
            inner = dict(fo)
            inner[g.var] = v
            dom = so.get(g.domain, g.domain) if g.domain else None
            return type(g)(v, go(g.body, inner, so), dom)
        if isinstance(g, (S.ExistsRel, S.ForallRel)):
            r = names.fresh(g.name)
            origin[r] = origin.get(g.name, g.name)
            inner = dict(so)
            inner[g.name] = r
            return type(g)(r, g.arity, go(g.body, fo, inner))
        raise TypeError(f"unknown formula {type(g).__name__}")

    return go(f, {}, {}), origin, names


def _arrows_out(f: S.Formula) -> S.Formula:
    if isinstance(f, S.Implies):
        return S.Or((S.Not(_arrows_out(f.left)), _arrows_out(f.right)))
    if isinstance(f, S.Iff):
        l, r = _arrows_out(f.left), _arrows_out(f.right)
        return S.Or((S.And((l, r)), S.And((S.Not(l), S.Not(r)))))
    if isinstance(f, S.Not):
        return S.Not(_arrows_out(f.body))
    if isinstance(f, (S.And, S.Or)):
        return type(f)(tuple(_arrows_out(g) for g in f.items))
    if isinstance(f, (S.Exists, S.Forall)):
        return type(f)(f.var, _arrows_out(f.body), f.domain)
    if isinstance(f, (S.ExistsRel, S.ForallRel)):
        return type(f)(f.name, f.arity, _arrows_out(f.body))
    return f


def nnf(f: S.Formula, negate: bool = False) -> S.Formula:
    """Negation normal form (implications and equivalences expanded)."""
    f = _arrows_out(f)
    return _nnf(f, negate)


def _nnf(f, neg):
    if isinstance(f, S.Not):
        return _nnf(f.body, not neg)
    if isinstance(f, (S.Atom, S.Equals)):
        return S.Not(f) if neg else f
    if isinstance(f, S.Truth):
        return S.Truth(f.value != neg)
    if isinstance(f, (S.And, S.Or)):
        flip = neg
        cls = (S.Or if isinstance(f, S.And) else S.And) if flip else type(f)
        items = [_nnf(g, neg) for g in f.items]
        return S.conj(*items) if cls is S.And else S.disj(*items)
    if isinstance(f, (S.Exists, S.Forall)):
        cls = type(f) if not neg else (S.Forall if isinstance(f, S.Exists) else S.Exists)
        return cls(f.var, _nnf(f.body, neg), f.domain)
    if isinstance(f, (S.ExistsRel, S.ForallRel)):
        cls = type(f) if not neg else (S.ForallRel if isinstance(f, S.ExistsRel) else S.ExistsRel)
        return cls(f.name, f.arity, _nnf(f.body, neg))
    raise TypeError(f"unexpected formula {type(f).__name__}")


def _guard_domains(f: S.Formula) -> S.Formula:
    """Turn ``exists x in C`` into ``exists x (C(x) and ...)`` and dually for forall."""
    if isinstance(f, S.Exists):
        body = _guard_domains(f.body)
        if f.domain:
            body = S.conj(S.Atom(f.domain, (S.Var(f.var),)), body)
        return S.Exists(f.var, body)
    if isinstance(f, S.Forall):
        body = _guard_domains(f.body)
        if f.domain:
            body = S.disj(S.Not(S.Atom(f.domain, (S.Var(f.var),))), body)
        return S.Forall(f.var, body)
    if isinstance(f, (S.And, S.Or)):
        return type(f)(tuple(_guard_domains(g) for g in f.items))
    if isinstance(f, (S.ExistsRel, S.ForallRel)):
        return type(f)(f.name, f.arity, _guard_domains(f.body))
    if isinstance(f, S.Not):
        return S.Not(_guard_domains(f.body))
    return f


@dataclass(frozen=True)
class Quantifier:
    universal: bool
    second_order: bool
    name: str
    arity: int = 0


def prenex(f: S.Formula) -> tuple:
    """Prefix and quantifier-free matrix of an NNF formula whose bound variables
    are distinct and whose first-order quantifiers are unrestricted."""
    if isinstance(f, (S.Exists, S.Forall)):
        pre, m = prenex(f.body)
        return [Quantifier(isinstance(f, S.Forall), False, f.var)] + pre, m
    if isinstance(f, (S.ExistsRel, S.ForallRel)):
        pre, m = prenex(f.body)
        return [Quantifier(isinstance(f, S.ForallRel), True, f.name, f.arity)] + pre, m
    if isinstance(f, (S.And, S.Or)):
        pre, ms = [], []
        for g in f.items:
            p, m = prenex(g)
            pre.extend(p)
            ms.append(m)
        return pre, (S.conj(*ms) if isinstance(f, S.And) else S.disj(*ms))
    return [], f


# normal form of quantifier-free formulas -------------------------------------------

@dataclass
class NormalForm:
    """``exists slots . alpha and (conjunction of indicator atoms)``.

    ``slots[R]`` is the number of copies of ``1_R`` needed; ``positive[R]`` and
    ``negative[R]`` are the literal counts of the two polarities combined by
    sum (under "and") and max (under "or").  With ``merged`` the two polarities
    share slots, so ``slots[R]`` is itself combined by sum and max; otherwise
    ``slots[R] = positive[R] + negative[R]``.  ``alpha`` refers to slot columns
    through :meth:`slot_attr` and :meth:`slot_bit` placeholders.
    """
    alpha: object
    slots: dict
    positive: dict
    negative: dict
    merged: bool
    order: list           # relation names in first-occurrence order

    @staticmethod
    def slot_attr(rel: str, k: int, pos: int) -> str:
        return f"\x00{rel}\x00{k}\x00{pos}"

    @staticmethod
    def slot_bit(rel: str, k: int) -> str:
        return f"\x00{rel}\x00{k}\x00t"

    def rename(self, namer) -> object:
        """``alpha`` with placeholders replaced by ``namer(rel, k, pos_or_None)``."""
        def f(name):
            if not name.startswith("\x00"):
                return name
            _, rel, k, pos = name.split("\x00")
            return namer(rel, int(k), None if pos == "t" else int(pos))
        return map_pred_attrs(self.alpha, f)


def _term(t):
    return Attr(t.name) if isinstance(t, S.Var) else Const(t.value)


def normalize_qf(f: S.Formula, merged: bool = True) -> NormalForm:
    """Normal form of a quantifier-free formula (negations are pushed down first)."""
    for g in S.walk(f):
        if isinstance(g, (S.Exists, S.Forall, S.ExistsRel, S.ForallRel)):
            raise UnsupportedFeature("normal form needs a quantifier-free formula")
        if isinstance(g, S.DefRef):
            raise UnsupportedFeature("definitions must be inlined first")
    g = nnf(f)
    order: list = []
    raw_alpha, counts = _nf(g, {}, merged, order)
    pos = {r: counts.get((r, "+"), 0) for r in order}
    neg = {r: counts.get((r, "-"), 0) for r in order}
    if merged:
        slots = {r: counts.get((r, "*"), 0) for r in order}
        alpha = raw_alpha
    else:
        slots = {r: pos[r] + neg[r] for r in order}

        def shift(name):
            if not name.startswith("\x00"):
                return name
            _, rel, k, p = name.split("\x00")
            pol, k = k[0], int(k[1:])
            k = k if pol == "+" else pos[rel] + k
            return f"\x00{rel}\x00{k}\x00{p}"
        alpha = map_pred_attrs(raw_alpha, shift)
    return NormalForm(alpha, slots, pos, neg, merged, order)


def _nf(f, off: dict, merged: bool, order: list):
    """Returns (alpha, counts) where counts maps (rel, polarity) to literal counts;
    in merged mode an extra (rel, "*") entry counts shared slots."""
    if isinstance(f, S.Truth):
        return (P_TRUE if f.value else P_FALSE), {}
    if isinstance(f, S.Equals):
        return Cmp("=", _term(f.left), _term(f.right)), {}
    if isinstance(f, S.Not) and isinstance(f.body, S.Equals):
        return Cmp("!=", _term(f.body.left), _term(f.body.right)), {}
    if isinstance(f, S.Atom) or (isinstance(f, S.Not) and isinstance(f.body, S.Atom)):
        positive = isinstance(f, S.Atom)
        atom = f if positive else f.body
        rel = atom.rel
        if rel not in order:
            order.append(rel)
        pol = "+" if positive else "-"
        key = (rel, "*") if merged else (rel, pol)
        k = off.get(key, 0) + 1
        tag = str(k) if merged else f"{pol}{k}"
        eqs = [Cmp("=", Attr(f"\x00{rel}\x00{tag}\x00{i}"), _term(t)) for i, t in enumerate(atom.args)]
        bit = Cmp("=", Attr(f"\x00{rel}\x00{tag}\x00t"), Const(1 if positive else 0))
        counts = {(rel, pol): 1}
        if merged:
            counts[(rel, "*")] = 1
        return conj(*eqs, bit), counts
    if isinstance(f, S.And):
        alphas, total = [], {}
        cur = dict(off)
        for g in f.items:
            a, c = _nf(g, cur, merged, order)
            alphas.append(a)
            for key, n in c.items():
                total[key] = total.get(key, 0) + n
                cur[key] = cur.get(key, 0) + n
        return conj(*alphas), total
    if isinstance(f, S.Or):
        alphas, total = [], {}
        for g in f.items:
            a, c = _nf(g, off, merged, order)
            alphas.append(a)
            for key, n in c.items():
                total[key] = max(total.get(key, 0), n)
        return disj(*alphas), total
    raise UnsupportedFeature(f"unexpected {type(f).__name__} in a quantifier-free formula")


# quantifier-free compilation ----------------------------------------------------------

class _Slots:
    """Column names for the copies of each indicator relation."""

    def __init__(self, names: _Names, arities: dict):
        self.names = names
        self.arities = arities
        self.cols: dict = {}

    def attrs(self, rel: str, k: int) -> tuple:
        got = self.cols.get((rel, k))
        if got is None:
            ar = self.arities[rel]
            stem = rel.lower()
            got = (tuple(self.names.fresh(f"{stem}{k}_{i + 1}") for i in range(ar)),
                   self.names.fresh(f"t{stem}{k}"))
            self.cols[(rel, k)] = got
        return got

    def namer(self, rel, k, pos):
        attrs, bit = self.attrs(rel, k)
        return bit if pos is None else attrs[pos]


def _arity_table(f: S.Formula, ctx: CompileContext, so_vars: dict) -> dict:
    ar = {}
    for g in S.walk(f):
        if isinstance(g, S.Atom):
            want = so_vars.get(g.rel)
            if want is None:
                if g.rel not in ctx.catalog:
                    raise UnknownRelation(f"relation {g.rel!r} is neither quantified nor stored")
                want = len(ctx.catalog[g.rel])
            if len(g.args) != want:
                raise ArityMismatch(f"{g.rel} has arity {want}, used with {len(g.args)}")
            ar[g.rel] = want
    for r, k in so_vars.items():
        ar.setdefault(r, k)
    return ar


def _blocks(nf: NormalForm, rels: list, extra: dict, slots: _Slots, b: _Builder, so_vars: dict) -> list:
    """One k-product per relation; ``extra[R]`` adds copies (key columns) at the end."""
    out = []
    for rel in rels:
        n = nf.slots.get(rel, 0) + extra.get(rel, 0)
        if n == 0:
            continue
        copies = [slots.attrs(rel, k) for k in range(1, n + 1)]
        if rel in so_vars:
            ind_of = lambda a, t, r=rel: b.guessed_ind(r, a, t)  # noqa: E731
        else:
            ind_of = lambda a, t, r=rel: b.ind(r, a, t)  # noqa: E731
        ub = lambda a, t, r=rel: b.universe_bits(r, a, t)  # noqa: E731
        out.append(k_product(ind_of, ub, copies, b.names))
    return out


def compile_qf(f: S.Formula, ctx: CompileContext, relation_variables: dict | None = None,
               merged: bool = True) -> A.Expr:
    """Answer relation of a quantifier-free formula over its free variables
    (sorted), built from indicator relations that each occur once.
    ``relation_variables`` maps names that are guessed (not stored) to arities."""
    so_vars = dict(relation_variables or {})
    f = _inline(f, ctx)
    _no_bot(f)
    names = _Names(_taken_names(f, ctx))
    b = _Builder(ctx, names)
    nf = normalize_qf(f, merged)
    slots = _Slots(names, _arity_table(f, ctx, so_vars))
    alpha = nf.rename(slots.namer)
    xs = tuple(sorted(S.free_fo(f)))
    factors = _blocks(nf, nf.order, {}, slots, b, so_vars) + [b.domain_col(x) for x in xs]
    return typecheck(A.Project(xs, A.Select(alpha, _product(factors))), ctx.catalog)


# first-order to relational algebra, and the construction with definitions ------------

class _Codd:
    def __init__(self, ctx: CompileContext, names: _Names, origin: dict, allow_so: bool):
        self.ctx = ctx
        self.names = names
        self.b = _Builder(ctx, names, origin)
        self.allow_so = allow_so
        self.so_arity: dict = {}
        self.scope: list = []

    def dom(self, vs) -> A.Expr:
        return self.b.domain_power(tuple(vs))

    def arity(self, rel):
        if rel in self.so_arity:
            return self.so_arity[rel]
        if rel not in self.ctx.catalog:
            raise UnknownRelation(f"relation {rel!r} is neither quantified nor stored")
        return len(self.ctx.catalog[rel])

    def pad(self, e: A.Expr, have: tuple, want: tuple) -> A.Expr:
        missing = [v for v in want if v not in have]
        if missing:
            e = A.Product(e, self.dom(missing))
        return A.Project(tuple(want), e) if (tuple(have) + tuple(missing)) != tuple(want) else e

    def tr(self, f: S.Formula) -> tuple:
        if isinstance(f, S.Truth):
            return (A.TRUE_EXPR if f.value else A.FALSE_EXPR), ()
        if isinstance(f, S.Atom):
            ar = self.arity(f.rel)
            if ar != len(f.args):
                raise ArityMismatch(f"{f.rel} has arity {ar}, used with {len(f.args)}")
            cols, conds, seen = [], [], {}
            for t in f.args:
                if isinstance(t, S.Var) and t.name not in seen:
                    seen[t.name] = t.name
                    cols.append(t.name)
                    continue
                c = self.names.fresh("c")
                cols.append(c)
                conds.append(Cmp("=", Attr(c), Attr(t.name) if isinstance(t, S.Var) else Const(t.value)))
            e = A.RenameTo(tuple(cols), A.RelRef(f.rel)) if cols else A.RelRef(f.rel)
            if conds:
                e = A.Select(conj(*conds), e)
            vs = tuple(sorted(seen))
            if tuple(cols) != vs:
                e = A.Project(vs, e)
            return e, vs
        if isinstance(f, S.Equals):
            l, r = f.left, f.right
            if isinstance(l, Const) and isinstance(r, Const):
                return (A.TRUE_EXPR if l.value == r.value else A.FALSE_EXPR), ()
            if isinstance(l, Const):
                l, r = r, l
            if isinstance(r, Const):
                return A.Select(Cmp("=", Attr(l.name), Const(r.value)), self.dom([l.name])), (l.name,)
            if l.name == r.name:
                return self.dom([l.name]), (l.name,)
            vs = tuple(sorted((l.name, r.name)))
            return A.Select(Cmp("=", Attr(l.name), Attr(r.name)), self.dom(vs)), vs
        if isinstance(f, S.Not):
            e, vs = self.tr(f.body)
            return A.Difference(self.dom(vs), e), vs
        if isinstance(f, S.And):
            e, vs = self.tr(f.items[0])
            for g in f.items[1:]:
                e2, vs2 = self.tr(g)
                both = tuple(sorted(set(vs) | set(vs2)))
                joined = A.NaturalJoin(e, e2)
                order = tuple(vs) + tuple(v for v in vs2 if v not in vs)
                e = joined if order == both else A.Project(both, joined)
                vs = both
            return e, vs
        if isinstance(f, S.Or):
            parts = [self.tr(g) for g in f.items]
            allv = tuple(sorted(set().union(*[set(vs) for _, vs in parts])))
            return A.union_of([self.pad(e, vs, allv) for e, vs in parts]), allv
        if isinstance(f, S.Implies):
            return self.tr(S.Or((S.Not(f.left), f.right)))
        if isinstance(f, S.Iff):
            return self.tr(S.Or((S.And((f.left, f.right)), S.And((S.Not(f.left), S.Not(f.right))))))
        if isinstance(f, S.Exists):
            e, vs = self.tr(f.body)
            if f.domain:
                if self.arity(f.domain) != 1:
                    raise ArityMismatch(f"quantifier domain {f.domain!r} must be unary")
                rng = A.RenameTo((f.var,), A.RelRef(f.domain))
                if f.var in vs:
                    e = A.NaturalJoin(e, rng)
                else:
                    return A.Product(e, A.Project((), rng)), vs
            elif f.var not in vs:
                return e, vs
            rest = tuple(v for v in vs if v != f.var)
            return A.Project(rest, e), rest
        if isinstance(f, S.Forall):
            return self.tr(S.Not(S.Exists(f.var, S.Not(f.body), f.domain)))
        if isinstance(f, (S.ExistsRel, S.ForallRel)):
            if not self.allow_so:
                raise UnsupportedFeature("relation quantifiers are not first-order")
            if isinstance(f, S.ForallRel):
                return self.tr(S.Not(S.ExistsRel(f.name, f.arity, S.Not(f.body))))
            return self.exists_rel(f)
        raise UnsupportedFeature(f"cannot translate {type(f).__name__}")

    def exists_rel(self, f: S.ExistsRel) -> tuple:
        rel, ar = f.name, f.arity
        self.so_arity[rel] = ar
        self.scope.append(rel)
        try:
            e, vs = self.tr(f.body)
        finally:
            self.scope.pop()
        used = S.free_so(f.body)
        keys = [r for r in self.scope if r in used]
        t = self.names.fresh("T")
        factors, key_cols = [], []
        for r in keys:
            attrs = tuple(self.names.fresh(f"{r.lower()}{i + 1}") for i in range(self.so_arity[r]))
            bit = self.names.fresh(f"t{r.lower()}")
            factors.append(self.b.ind(r, attrs, bit))
            key_cols.extend(attrs + (bit,))
        guarded = A.Union(A.Product(e, _bits([1], t)), A.Product(self.dom(vs), _bits([BOT], t)))
        grouped = A.PossibleGrp(tuple(key_cols), _product(factors + [guarded]))
        body = A.Project(tuple(vs), A.Select(Cmp("=", Attr(t), Const(1)), grouped))
        cols = tuple(self.names.fresh(f"{rel.lower()}{i + 1}") for i in range(ar))
        return A.Let(rel, A.Subset(self.b.universe(rel, cols, padded=False)), body), vs


def _prepared(f: S.Formula, ctx: CompileContext) -> tuple:
    f = _inline(f, ctx)
    _no_bot(f)
    return rename_apart(f, _taken_names(f, ctx))


def fo_to_ra(f: S.Formula, ctx: CompileContext) -> A.Expr:
    """Relational algebra for a first-order formula; columns are its free
    variables in sorted order."""
    f, origin, names = _prepared(f, ctx)
    e, _ = _Codd(ctx, names, origin, allow_so=False).tr(f)
    return typecheck(e, ctx.catalog)


def compile_with_defs(f: S.Formula, ctx: CompileContext) -> A.Expr:
    """WSA query (using ``let``) whose single possible answer is the relation of
    assignments to the free first-order variables (sorted) satisfying ``f``."""
    f, origin, names = _prepared(f, ctx)
    e, _ = _Codd(ctx, names, origin, allow_so=True).tr(f)
    return typecheck(e, ctx.catalog)


# the construction without definitions -------------------------------------------------

@dataclass
class TruthTableQuery:
    """A compiled truth-table query and the layout of its columns."""
    expr: A.Expr
    keys: list        # (relation variable, attrs, bit) for each remaining indicator
    fo_cols: tuple
    t: str


def plan(f: S.Formula) -> tuple:
    """Prefix, matrix and operator sequence (innermost first) for ``f``.

    Universal quantifiers become ``not exists not``; double negations cancel and
    a negation directly above the matrix is pushed into it.
    """
    g = _guard_domains(nnf(f))
    prefix, matrix = prenex(g)
    ops: list = []
    for q in reversed(prefix):
        if q.universal:
            ops.extend(["not", q, "not"])
        else:
            ops.append(q)
    cleaned: list = []
    for op in ops:
        if op == "not" and cleaned and cleaned[-1] == "not":
            cleaned.pop()
        else:
            cleaned.append(op)
    if cleaned and cleaned[0] == "not":
        cleaned = cleaned[1:]
        matrix = nnf(matrix, negate=True)
    return prefix, matrix, cleaned


def compile_truth_table(f: S.Formula, ctx: CompileContext, merged: bool = True,
                        prune_keys: bool = False) -> TruthTableQuery:
    """Definition-free query computing ``TT(f)``; free relation names of ``f``
    must be stored relations."""
    f, origin, names = _prepared(f, ctx)
    b = _Builder(ctx, names, origin)
    prefix, matrix, ops = plan(f)
    so_vars = {q.name: q.arity for q in prefix if q.second_order}
    for r in S.free_so(f):
        if r not in ctx.catalog:
            raise UnknownRelation(f"relation {r!r} is neither quantified nor stored")
    free_x = tuple(sorted(S.free_fo(f)))
    fo_cols = free_x + tuple(q.name for q in prefix if not q.second_order)
    so_order = [q.name for q in prefix if q.second_order]
    keyed = so_order[:-1] if (prune_keys and so_order) else so_order

    nf = normalize_qf(matrix, merged)
    slots = _Slots(names, _arity_table(matrix, ctx, so_vars))
    alpha = nf.rename(slots.namer)
    extra = {r: 1 for r in keyed}
    rels = list(nf.order) + [r for r in so_order if r not in nf.order]
    key_cols = []
    for r in keyed:
        attrs, bit = slots.attrs(r, nf.slots.get(r, 0) + 1)
        key_cols.append((r, attrs, bit))
    t = names.fresh("T")
    factors = _blocks(nf, rels, extra, slots, b, so_vars)
    factors += [b.domain_col(x) for x in fo_cols] + [_bits([BOT, 1], t)]
    full_alpha = disj(Cmp("=", Attr(t), Const(BOT)), alpha)
    cols = tuple(c for _, a, bit in key_cols for c in a + (bit,)) + fo_cols + (t,)
    p = A.Project(cols, A.Select(full_alpha, _product(factors)))

    keys = list(key_cols)
    xs = list(fo_cols)
    for op in ops:
        if op == "not":
            blocks = [(lambda a, bt, r=r: b.universe_bits(r, a, bt), attrs, bit) for r, attrs, bit in keys]
            p = compl_tt(p, blocks, tuple(xs), t, b)
        elif not op.second_order:
            xs.remove(op.name)
            p = A.Project(_cols(keys, xs, t), p)
        else:
            mine = [k for k in keys if k[0] == op.name]
            others = [k for k in keys if k[0] != op.name]
            group = tuple(c for _, a, bit in others for c in a + (bit,))
            p = A.PossibleGrp(group, p)
            if mine:
                keys = others
                p = A.Project(_cols(keys, xs, t), p)
    return TruthTableQuery(typecheck(p, ctx.catalog), keys, tuple(xs), t)


def _cols(keys, xs, t):
    return tuple(c for _, a, bit in keys for c in a + (bit,)) + tuple(xs) + (t,)


def compile_no_defs(f: S.Formula, ctx: CompileContext, output: str = "answers",
                    merged: bool = True, prune_keys: bool = False) -> A.Expr:
    """Definition-free WSA for ``f``.

    ``output="answers"`` yields the satisfying assignments of the free
    first-order variables (sorted); for a sentence that is ``{()}`` or ``{}``,
    obtained as ``pi[](sigma[T=1](TT))``.  ``output="tt"`` returns the raw
    truth table.
    """
    tt = compile_truth_table(f, ctx, merged, prune_keys)
    if output == "tt":
        return tt.expr
    if output != "answers":
        raise ValueError(f"unknown output form {output!r}")
    e = A.Project(tt.fo_cols, A.Select(Cmp("=", Attr(tt.t), Const(1)), tt.expr))
    return typecheck(e, ctx.catalog)


__all__ = ["CompileContext", "NormalForm", "Quantifier", "TruthTableQuery", "indicator", "k_product",
           "compl_indicators", "compl_tt", "normalize_qf", "compile_qf", "fo_to_ra", "compile_with_defs",
           "compile_truth_table", "compile_no_defs", "nnf", "prenex", "plan", "rename_apart"]
