"""Uncertain databases in the standard representation.

Each tuple of a representation relation ``R'`` carries a clause id in its last
column ``_cond``.  A clause is a conjunction of literals listed in ``L(C, P,
S)`` (``S = 1`` for a positive literal of variable ``P``); a clause id without
literals is the empty, always-true conjunction.  A truth assignment, given by
the set of true variables ``P ⊆ V``, selects one world.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

from .errors import FormatError, SchemaMismatch, WorldSetExplosion
from .eval import EvalLimits
from .relmodel import Relation, World, make_worldset, row_key, value_key

COND = "_cond"
VARS_NAME = "_V"
LITS_NAME = "_L"
REP_PREFIX = "_rep_"


@dataclass(frozen=True)
class Representation:
    variables: Relation    # schema (P,)
    literals: Relation     # schema (C, P, S)
    relations: dict        # name -> relation whose last column is _cond

    def __post_init__(self):
        if self.variables.arity != 1:
            raise FormatError("the variable relation must be unary")
        if self.literals.arity != 3:
            raise FormatError("the literal relation must have columns (C, P, S)")
        known = {r[0] for r in self.variables}
        for c, p, s in self.literals:
            if s not in (0, 1):
                raise FormatError(f"literal sign {s!r} of clause {c!r} is not 0 or 1")
            if p not in known:
                raise FormatError(f"clause {c!r} uses unknown variable {p!r}")
        for name, r in self.relations.items():
            if not r.schema or r.schema[-1] != COND:
                raise FormatError(f"representation relation {name!r} lacks a trailing {COND} column")

    def clauses(self) -> dict:
        """clause id -> tuple of (variable, positive) literals."""
        out: dict = {}
        for c, p, s in self.literals.rows():
            out.setdefault(c, []).append((p, s == 1))
        return {c: tuple(v) for c, v in out.items()}

    def to_world(self) -> World:
        rels = {VARS_NAME: self.variables, LITS_NAME: self.literals}
        for name, r in self.relations.items():
            rels[REP_PREFIX + name] = r
        return World(rels)


def from_world(w: World) -> Representation:
    """Read a representation stored under the reserved relation names."""
    if VARS_NAME not in w or LITS_NAME not in w:
        raise FormatError(f"a representation needs relations {VARS_NAME} and {LITS_NAME}")
    rels = {}
    for name, r in w.items():
        if name.startswith(REP_PREFIX):
            rels[name[len(REP_PREFIX):]] = r
        elif name not in (VARS_NAME, LITS_NAME):
            raise FormatError(f"unexpected relation {name!r} in a representation")
    return Representation(w[VARS_NAME], w[LITS_NAME], rels)


def expand_worlds(rep: Representation, limits: EvalLimits | None = None) -> frozenset:
    """One world per subset of the variables, deduplicated."""
    limits = limits or EvalLimits()
    variables = sorted((r[0] for r in rep.variables), key=value_key)
    if len(variables) >= 62 or (1 << len(variables)) > limits.max_worlds:
        raise WorldSetExplosion(f"{len(variables)} variables give more than {limits.max_worlds} assignments")
    clauses = rep.clauses()
    worlds = []
    for k in range(len(variables) + 1):
        for chosen in combinations(variables, k):
            true = set(chosen)
            ok = {c: all((p in true) == pos for p, pos in lits) for c, lits in clauses.items()}
            rels = {}
            for name, r in rep.relations.items():
                rows = [t[:-1] for t in r if ok.get(t[-1], True)]
                rels[name] = Relation(r.schema[:-1], rows)
            worlds.append(World(rels))
    return make_worldset(worlds)


def _world_key(w: World):
    return tuple((n, tuple(sorted(map(row_key, w[n].tuples)))) for n in sorted(w))


def build_representation(ws) -> Representation:
    """A representation whose expansion is exactly ``ws``.

    The worlds are numbered in canonical order and identified by the binary
    code of their number over ``ceil(log2 n)`` selector variables; the last
    world also takes every code beyond ``n - 1``.  Each (tuple, code) incidence
    gets the clause of that code.
    """
    worlds = sorted(make_worldset(ws), key=_world_key)
    if not worlds:
        raise SchemaMismatch("cannot represent an empty world-set")
    n = len(worlds)
    m = math.ceil(math.log2(n)) if n > 1 else 0
    selectors = [f"x{i + 1}" for i in range(m)]
    lits = []
    for code in range(1 << m):
        for i, x in enumerate(selectors):
            lits.append((f"k{code}", x, (code >> i) & 1))
    owner = {code: min(code, n - 1) for code in range(1 << m)}
    names = sorted(worlds[0])
    rels = {}
    for name in names:
        schema = worlds[0][name].schema
        if COND in schema:
            raise FormatError(f"relation {name!r} already has a {COND} column")
        rows = [t + (f"k{code}",) for code, i in owner.items() for t in worlds[i][name]]
        rels[name] = Relation(schema + (COND,), rows)
    return Representation(Relation(("P",), [(x,) for x in selectors]),
                          Relation(("C", "P", "S"), lits), rels)


__all__ = ["COND", "Representation", "from_world", "expand_worlds", "build_representation"]
