"""Databases, queries and seeded random generators shared by tests, the CLI
and the acceptance runner."""

from __future__ import annotations

import random
from dataclasses import dataclass
from itertools import combinations, permutations

from .lang import ast as A
from .lang import so_ast as S
from .lang.parser import parse_so, parse_wsa
from .ra import Attr, Cmp, Const
from .relmodel import Relation, World

# the company/employee example -------------------------------------------------------

COMPANY_EMP = [("c1", "e11"), ("c1", "e12"), ("c2", "e21"), ("c2", "e22"), ("c2", "e23")]
EMP_SKILLS = [("e11", "s1"), ("e12", "s1"), ("e21", "s2"), ("e21", "s1"), ("e22", "s3"), ("e23", "s2")]

ACQUISITION_STEPS = {
    "U": "choiceof[C, E](Company_Emp)",
    "V": "pi[1.C, 2.E](join[1.C = 2.C and 1.E != 2.E](U, Company_Emp))",
    "W": "certain[C](pi[C, S](join(V, Emp_Skills)))",
    "Result": "possible(pi[C](sigma[S = 's1'](W)))",
}


def acquisition_db() -> World:
    return World({"Company_Emp": Relation(("C", "E"), COMPANY_EMP),
                  "Emp_Skills": Relation(("E", "S"), EMP_SKILLS)})


def acquisition_query(upto: str = "Result") -> A.Expr:
    """The four-step script; ``upto`` names the step whose result is returned."""
    names = list(ACQUISITION_STEPS)
    stop = names.index(upto)
    text = ACQUISITION_STEPS[upto]
    for name in reversed(names[:stop]):
        text = f"let {name} := {ACQUISITION_STEPS[name]} in\n{text}"
    return parse_wsa(text)


# graphs and 3-colorability ----------------------------------------------------------

COLORS = ("r", "g", "b")

THREE_COLOR_QUERY = (
    "let R := repairkey[V](V x rho[C]({r} U {g} U {b})) in "
    "possible[]({()} - pi[](sigma[1.V = 2.From and 2.To = 3.V and 1.C = 3.C](R x E x R)))"
)

# 'v' is restricted to vertices: otherwise a color value would satisfy the
# third disjunct (a "node" without any color) and the sentence would be false.
THREE_COLOR_SENTENCE = """
universe C := V x {r, g, b};
existsR C:2 . not exists v in V . exists w c c2 .
    (E(v, w) and C(v, c) and C(w, c))
 or (C(v, c) and C(v, c2) and c != c2)
 or (not C(v, 'r') and not C(v, 'g') and not C(v, 'b'))
"""


@dataclass(frozen=True)
class Graph:
    vertices: tuple
    edges: tuple   # symmetric pairs

    def db(self) -> World:
        return World({"V": Relation(("V",), [(v,) for v in self.vertices]),
                      "E": Relation(("From", "To"), self.edges),
                      "D": Relation(("D",), [(v,) for v in self.vertices + COLORS])})


def undirected(vertices, pairs) -> Graph:
    edges = set()
    for u, v in pairs:
        edges.add((u, v))
        edges.add((v, u))
    return Graph(tuple(vertices), tuple(sorted(edges)))


def triangle() -> Graph:
    return undirected(("n1", "n2", "n3"), [("n1", "n2"), ("n2", "n3"), ("n1", "n3")])


def k4() -> Graph:
    vs = ("n1", "n2", "n3", "n4")
    return undirected(vs, combinations(vs, 2))


def random_graph(rng: random.Random, max_vertices: int = 5) -> Graph:
    n = rng.randint(1, max_vertices)
    vs = tuple(f"n{i + 1}" for i in range(n))
    p = rng.choice((0.3, 0.5, 0.7, 0.9))
    return undirected(vs, [e for e in combinations(vs, 2) if rng.random() < p])


def graph_sample(seed: int = 7, count: int = 50, max_vertices: int = 5) -> list:
    rng = random.Random(seed)
    return [random_graph(rng, max_vertices) for _ in range(count)]


# Sigma_2 QBF ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QbfInstance:
    """exists ``outer`` forall ``inner``: disjunction of ``clauses``; a clause is a
    frozenset of (variable, positive) literals."""
    outer: tuple
    inner: tuple
    clauses: tuple

    def db(self) -> World:
        rows = [(f"c{i + 1}", v, 1 if pos else 0) for i, c in enumerate(self.clauses) for v, pos in c]
        clause_ids = [(f"c{i + 1}",) for i in range(len(self.clauses))]
        values = {r[0] for r in clause_ids} | set(self.outer) | set(self.inner) | {0, 1}
        return World({"V1": Relation(("P",), [(v,) for v in self.outer]),
                      "V2": Relation(("P",), [(v,) for v in self.inner]),
                      "C": Relation(("C",), clause_ids),
                      "L": Relation(("C", "P", "S"), rows),
                      "D": Relation(("D",), [(v,) for v in values])})


# The clause-satisfaction formula: clause c has no literal that is false.
QBF_SENTENCE = """
universe P1 := V1;
universe P2 := V2;
existsR P1:1 . forallR P2:1 . exists c in C . not exists p .
    (L(c, p, 0) and (P1(p) or P2(p))) or (L(c, p, 1) and not (P1(p) or P2(p)))
"""


def all_qbf_instances(max_vars: int = 4, max_clauses: int = 3, max_literals: int = 2,
                      min_literals: int = 1):
    """Every instance up to the given bounds; clause sets are sets of distinct clauses."""
    for n in range(max_vars + 1):
        names = [f"p{i + 1}" for i in range(n)]
        lits = [(v, pos) for v in names for pos in (True, False)]
        clauses = [frozenset(c) for k in range(min_literals, max_literals + 1) for c in combinations(lits, k)]
        for n1 in range(n + 1):
            outer, inner = tuple(names[:n1]), tuple(names[n1:])
            for m in range(max_clauses + 1):
                for cs in combinations(clauses, m):
                    yield QbfInstance(outer, inner, cs)


def _canon_clauses(clauses, mapping) -> tuple:
    return tuple(sorted(tuple(sorted((mapping[v], pos) for v, pos in c)) for c in clauses))


def canonical_qbf(inst: QbfInstance) -> tuple:
    """Smallest relabelling under permutations of the outer and of the inner
    variables (clause order is already irrelevant)."""
    best = None
    for po in permutations(inst.outer):
        for pi in permutations(inst.inner):
            mapping = dict(zip(po, inst.outer)) | dict(zip(pi, inst.inner))
            key = _canon_clauses(inst.clauses, mapping)
            if best is None or key < best:
                best = key
    return (len(inst.outer), len(inst.inner), best)


def qbf_family_sentence(n: int) -> S.Formula:
    """Propositional Sigma_2 QBF with ``n`` clauses over nullary relation
    variables X1..Xn (outer) and Y1..Yn (inner)."""
    clauses = []
    for i in range(1, n + 1):
        j = i % n + 1
        clauses.append(f"(X{i}() and not Y{i}() and Y{j}())")
    matrix = " or ".join(clauses)
    xs = ", ".join(f"X{i}:0" for i in range(1, n + 1))
    ys = ", ".join(f"Y{i}:0" for i in range(1, n + 1))
    return parse_so(f"existsR {xs} . forallR {ys} . {matrix}")


# random second-order sentences --------------------------------------------------------

@dataclass
class SoCase:
    formula: S.Formula
    world: World        # includes the domain relation D


def random_so_case(rng: random.Random, max_domain: int = 3, max_so: int = 2, max_so_arity: int = 2,
                   max_fo_depth: int = 3, world_budget: int = 12) -> SoCase:
    """A sentence over stored relations P (unary) and E (binary).

    Relation variables are drawn so that the sum of their universe sizes
    ``|D|^arity`` stays within ``world_budget`` (each compiled query guesses a
    subset of every universe, so this bounds the number of worlds).
    """
    d = rng.randint(1, max_domain)
    dom = [f"a{i}" for i in range(d)]
    pairs = [(x, y) for x in dom for y in dom]
    world = World({"D": Relation(("D",), [(v,) for v in dom]),
                   "P": Relation(("A",), [(v,) for v in dom if rng.random() < 0.5]),
                   "E": Relation(("A", "B"), [p for p in pairs if rng.random() < 0.4])})
    stored = {"P": 1, "E": 2}
    budget = [world_budget]
    so_left = [max_so]
    counter = [0]

    def fresh(stem):
        counter[0] += 1
        return f"{stem}{counter[0]}"

    def term(fo):
        if fo and rng.random() < 0.85:
            # favour the innermost variables so that quantifiers matter
            return S.Var(fo[-1] if rng.random() < 0.5 else rng.choice(fo))
        return Const(rng.choice(dom))

    def leaf(fo, rels):
        if rng.random() < 0.15:
            return S.Equals(term(fo), term(fo))
        bound = sorted(set(rels) - set(stored))
        name = rng.choice(bound) if bound and rng.random() < 0.65 else rng.choice(sorted(rels))
        return S.Atom(name, tuple(term(fo) for _ in range(rels[name])))

    def gen(fo, rels, fo_depth, size):
        r = rng.random()
        if size <= 1:
            return leaf(fo, rels)
        if so_left[0] and r < 0.3:
            options = [k for k in range(max_so_arity + 1) if d ** k <= budget[0]]
            if options:
                k = rng.choice(options)
                budget[0] -= d ** k
                so_left[0] -= 1
                name = fresh("R")
                cls = S.ExistsRel if rng.random() < 0.5 else S.ForallRel
                inner = dict(rels)
                inner[name] = k
                return cls(name, k, gen(fo, inner, fo_depth, size - 1))
        if fo_depth and r < 0.6:
            v = fresh("x")
            cls = S.Exists if rng.random() < 0.5 else S.Forall
            return cls(v, gen(fo + [v], rels, fo_depth - 1, size - 1))
        if r < 0.68:
            return S.Not(gen(fo, rels, fo_depth, size - 1))
        split = rng.randint(1, max(1, size - 2))
        a = gen(fo, rels, fo_depth, split)
        b = gen(fo, rels, fo_depth, size - 1 - split)
        if r < 0.82:
            return S.And((a, b))
        if r < 0.96:
            return S.Or((a, b))
        return S.Implies(a, b)

    f = gen([], dict(stored), max_fo_depth, rng.randint(4, 12))
    return SoCase(f, world)


# random world-set algebra queries ------------------------------------------------------

class QueryGen:
    """Well-typed random queries over a catalog of named schemas.

    ``ops`` selects the operators that may appear (a mapping gives them
    weights); attribute names are kept distinct where products need it by
    renaming the right operand.  Leaves prefer let-bound views when any are
    in scope.
    """

    ALL_OPS = ("select", "project", "rename", "product", "union", "difference",
               "repairkey", "possible", "subset")

    def __init__(self, rng: random.Random, catalog: dict, values, ops=ALL_OPS, max_arity: int = 3):
        self.rng = rng
        self.catalog = dict(catalog)
        self.values = list(values)
        weights = ops if isinstance(ops, dict) else {op: 1 for op in ops}
        self.ops = tuple(weights)
        self.weights = tuple(weights[o] for o in self.ops)
        self.max_arity = max_arity
        self._n = 0

    def fresh_attr(self) -> str:
        self._n += 1
        return f"Z{self._n}"

    def const(self, schema) -> A.Expr:
        k = len(schema)
        rows = tuple({tuple(self.rng.choice(self.values) for _ in range(k))
                      for _ in range(self.rng.randint(0, 2))})
        return A.RenameTo(tuple(schema), A.ConstRel(tuple(sorted(rows, key=repr)), k))

    def leaf(self, views: dict) -> tuple:
        if views and self.rng.random() < 0.7:
            name = self.rng.choice(sorted(views))
            return A.RelRef(name), tuple(views[name])
        pool = dict(self.catalog)
        pool.update(views)
        name = self.rng.choice(sorted(pool))
        return A.RelRef(name), tuple(pool[name])

    def gen(self, size: int, views: dict | None = None) -> tuple:
        views = views or {}
        rng = self.rng
        if size <= 1:
            return self.leaf(views)
        op = rng.choices(self.ops, self.weights)[0]
        if op in ("product", "union", "difference"):
            k = rng.randint(1, max(1, size - 2))
            left, ls = self.gen(k, views)
            right, rs = self.gen(max(1, size - 1 - k), views)
            if op == "product":
                if len(ls) + len(rs) > self.max_arity:
                    right, rs = A.Project((), right), ()
                new = tuple(self.fresh_attr() for _ in rs)
                return A.Product(left, A.RenameTo(new, right) if rs else right), ls + new
            if len(rs) != len(ls):
                right, rs = self.coerce(right, rs, ls, views)
            else:
                right = A.RenameTo(ls, right) if ls else right
            cls = A.Union if op == "union" else A.Difference
            return cls(left, right), ls
        e, s = self.gen(size - 1, views)
        if op == "select" and s:
            a = rng.choice(s)
            if rng.random() < 0.5 or len(s) == 1:
                p = Cmp(rng.choice(("=", "!=")), Attr(a), Const(rng.choice(self.values)))
            else:
                p = Cmp(rng.choice(("=", "!=")), Attr(a), Attr(rng.choice(s)))
            return A.Select(p, e), s
        if op == "project":
            keep = tuple(a for a in s if rng.random() < 0.6)
            return A.Project(keep, e), keep
        if op == "rename" and s:
            a = rng.choice(s)
            b = self.fresh_attr()
            return A.Rename(((a, b),), e), tuple(b if x == a else x for x in s)
        if op == "repairkey":
            # a key covering every attribute would make the repair trivial
            key = tuple(sorted(rng.sample(s, rng.randint(0, max(0, len(s) - 1))), key=s.index))
            return A.RepairKey(key, e), s
        if op == "possible":
            key = tuple(a for a in s if rng.random() < 0.4)
            return A.PossibleGrp(key, e), s
        if op == "subset":
            return A.Subset(e), s
        return e, s

    def coerce(self, e, have, want, views):
        """Reshape ``e`` to schema ``want`` by projecting or padding with a constant."""
        if len(have) > len(want):
            e = A.Project(have[:len(want)], e)
        elif len(have) < len(want):
            pad = tuple(self.fresh_attr() for _ in range(len(want) - len(have)))
            e = A.Product(e, A.RenameTo(pad, A.ConstRel((tuple(self.values[0] for _ in pad),), len(pad))))
        return (A.RenameTo(tuple(want), e) if want else e), tuple(want)

    def with_lets(self, size: int, lets: int) -> A.Expr:
        """A query with up to ``lets`` nested or sibling let bindings."""
        views: dict = {}
        bindings = []
        for i in range(lets):
            name = f"W{i + 1}"
            body, sch = self.gen(max(1, size // (lets + 1)), dict(views))
            bindings.append((name, body))
            views[name] = sch
        e, _ = self.gen(size, views)
        for name, body in reversed(bindings):
            e = A.Let(name, body, e)
        return e


def small_world(rng: random.Random, values=(0, 1), schemas=None, max_rows: int = 3) -> World:
    schemas = schemas or {"R": ("A", "B"), "S": ("C",)}
    out = {}
    for name, sch in schemas.items():
        rows = [tuple(rng.choice(values) for _ in sch) for _ in range(rng.randint(0, max_rows))]
        out[name] = Relation(sch, rows)
    return World(out)


def random_worldset(rng: random.Random, max_worlds: int = 8, values=("a", "b", "c")) -> frozenset:
    """Worlds over R(A, B) and S(C) with random contents."""
    n = rng.randint(1, max_worlds)
    worlds = set()
    for _ in range(n):
        worlds.add(small_world(rng, values))
    return frozenset(worlds)


def domain_world(world: World, values, name: str = "D") -> World:
    return world.extend(name, Relation((name,), [(v,) for v in values]))


__all__ = [n for n in dir() if not n.startswith("_") and n not in ("annotations", "random", "dataclass")]
