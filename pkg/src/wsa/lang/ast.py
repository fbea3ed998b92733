"""Syntax trees for world-set algebra queries.

Nodes are frozen dataclasses compared structurally.  The ``schema`` slot is
filled in by the type checker and ignored by equality.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from typing import Iterator, Optional

from ..ra import Predicate


def _schema_field():
    return field(default=None, compare=False, repr=False)


class Expr:
    schema: Optional[tuple]

    def children(self) -> tuple:
        return tuple(getattr(self, f.name) for f in fields(self) if isinstance(getattr(self, f.name), Expr))

    def with_children(self, kids: tuple) -> "Expr":
        it = iter(kids)
        changes = {f.name: next(it) for f in fields(self) if isinstance(getattr(self, f.name), Expr)}
        return replace(self, schema=None, **changes)


@dataclass(frozen=True)
class ConstRel(Expr):
    """Literal relation; columns are anonymous until named by the checker."""
    rows: tuple
    arity: int = -1
    schema: Optional[tuple] = _schema_field()

    def __post_init__(self):
        if self.arity < 0:
            object.__setattr__(self, "arity", len(self.rows[0]) if self.rows else 0)


@dataclass(frozen=True)
class RelRef(Expr):
    name: str
    schema: Optional[tuple] = _schema_field()


@dataclass(frozen=True)
class Select(Expr):
    pred: Predicate
    expr: Expr
    schema: Optional[tuple] = _schema_field()


@dataclass(frozen=True)
class Project(Expr):
    attrs: tuple
    expr: Expr
    schema: Optional[tuple] = _schema_field()


@dataclass(frozen=True)
class Rename(Expr):
    """Rename by attribute name; ``mapping`` is a tuple of (old, new) pairs."""
    mapping: tuple
    expr: Expr
    schema: Optional[tuple] = _schema_field()


@dataclass(frozen=True)
class RenameTo(Expr):
    """Positional rename of every column to ``names``."""
    names: tuple
    expr: Expr
    schema: Optional[tuple] = _schema_field()


@dataclass(frozen=True)
class Product(Expr):
    left: Expr
    right: Expr
    schema: Optional[tuple] = _schema_field()


@dataclass(frozen=True)
class Union(Expr):
    left: Expr
    right: Expr
    schema: Optional[tuple] = _schema_field()


@dataclass(frozen=True)
class Difference(Expr):
    left: Expr
    right: Expr
    schema: Optional[tuple] = _schema_field()


@dataclass(frozen=True)
class RepairKey(Expr):
    attrs: tuple
    expr: Expr
    schema: Optional[tuple] = _schema_field()


@dataclass(frozen=True)
class PossibleGrp(Expr):
    attrs: tuple
    expr: Expr
    schema: Optional[tuple] = _schema_field()


@dataclass(frozen=True)
class Let(Expr):
    name: str
    bound: Expr
    body: Expr
    schema: Optional[tuple] = _schema_field()


# derived operators


@dataclass(frozen=True)
class Subset(Expr):
    expr: Expr
    schema: Optional[tuple] = _schema_field()


@dataclass(frozen=True)
class ChoiceOf(Expr):
    attrs: tuple
    expr: Expr
    schema: Optional[tuple] = _schema_field()


@dataclass(frozen=True)
class CertainGrp(Expr):
    attrs: tuple
    expr: Expr
    schema: Optional[tuple] = _schema_field()


@dataclass(frozen=True)
class Possible(Expr):
    expr: Expr
    schema: Optional[tuple] = _schema_field()


@dataclass(frozen=True)
class Certain(Expr):
    expr: Expr
    schema: Optional[tuple] = _schema_field()


@dataclass(frozen=True)
class JoinTheta(Expr):
    pred: Predicate
    left: Expr
    right: Expr
    schema: Optional[tuple] = _schema_field()


@dataclass(frozen=True)
class NaturalJoin(Expr):
    left: Expr
    right: Expr
    schema: Optional[tuple] = _schema_field()


CORE_TYPES = (ConstRel, RelRef, Select, Project, Rename, Product, Union, Difference,
              RepairKey, PossibleGrp, Let)
SUGAR_TYPES = (Subset, ChoiceOf, CertainGrp, Possible, Certain, JoinTheta, NaturalJoin, RenameTo)
RA_TYPES = (ConstRel, RelRef, Select, Project, Rename, RenameTo, Product, Union, Difference,
            JoinTheta, NaturalJoin)


def walk(e: Expr) -> Iterator[Expr]:
    stack = [e]
    while stack:
        n = stack.pop()
        yield n
        stack.extend(reversed(n.children()))


def size(e: Expr) -> int:
    """Node count."""
    return sum(1 for _ in walk(e))


def is_core(e: Expr) -> bool:
    return all(isinstance(n, CORE_TYPES) for n in walk(e))


def let_free(e: Expr) -> bool:
    return not any(isinstance(n, Let) for n in walk(e))


def relation_names(e: Expr) -> set:
    """Relation names referenced but not bound by an enclosing let."""
    if isinstance(e, RelRef):
        return {e.name}
    if isinstance(e, Let):
        return relation_names(e.bound) | (relation_names(e.body) - {e.name})
    out: set = set()
    for c in e.children():
        out |= relation_names(c)
    return out


def rel_occurrences(e: Expr) -> dict:
    out: dict = {}
    for n in walk(e):
        if isinstance(n, RelRef):
            out[n.name] = out.get(n.name, 0) + 1
    return out


# construction helpers used by compilers and tests

def product_of(items) -> Expr:
    items = list(items)
    if not items:
        return ConstRel(((),), 0)
    acc = items[0]
    for it in items[1:]:
        acc = Product(acc, it)
    return acc


def union_of(items) -> Expr:
    items = list(items)
    acc = items[0]
    for it in items[1:]:
        acc = Union(acc, it)
    return acc


def const_column(values, name: str) -> Expr:
    return RenameTo((name,), ConstRel(tuple((v,) for v in values), 1))


TRUE_EXPR = ConstRel(((),), 0)
FALSE_EXPR = ConstRel((), 0)


def constants(e: Expr) -> set:
    """Values mentioned in literals and selection predicates."""
    from ..ra import Cmp, Conj, Const, Disj, Neg
    out: set = set()

    def pred(p):
        if isinstance(p, Cmp):
            for t in (p.left, p.right):
                if isinstance(t, Const):
                    out.add(t.value)
        elif isinstance(p, (Conj, Disj)):
            for q in p.items:
                pred(q)
        elif isinstance(p, Neg):
            pred(p.item)

    for n in walk(e):
        if isinstance(n, ConstRel):
            for r in n.rows:
                out.update(r)
        elif isinstance(n, (Select, JoinTheta)):
            pred(n.pred)
    return out
