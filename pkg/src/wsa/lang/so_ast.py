"""Second-order logic formulas.

First-order quantifiers may carry an optional ``domain``: the name of a unary
relation that the variable ranges over instead of the whole domain.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional, Union as _U

from ..ra import Const


@dataclass(frozen=True)
class Var:
    name: str


STerm = _U[Var, Const]


class Formula:
    def children(self) -> tuple:
        return ()


@dataclass(frozen=True)
class Atom(Formula):
    rel: str
    args: tuple


@dataclass(frozen=True)
class Equals(Formula):
    left: STerm
    right: STerm


@dataclass(frozen=True)
class Truth(Formula):
    value: bool


@dataclass(frozen=True)
class Not(Formula):
    body: Formula

    def children(self):
        return (self.body,)


@dataclass(frozen=True)
class And(Formula):
    items: tuple

    def children(self):
        return self.items


@dataclass(frozen=True)
class Or(Formula):
    items: tuple

    def children(self):
        return self.items


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula

    def children(self):
        return (self.left, self.right)


@dataclass(frozen=True)
class Iff(Formula):
    left: Formula
    right: Formula

    def children(self):
        return (self.left, self.right)


@dataclass(frozen=True)
class Exists(Formula):
    var: str
    body: Formula
    domain: Optional[str] = None

    def children(self):
        return (self.body,)


@dataclass(frozen=True)
class Forall(Formula):
    var: str
    body: Formula
    domain: Optional[str] = None

    def children(self):
        return (self.body,)


@dataclass(frozen=True)
class ExistsRel(Formula):
    name: str
    arity: int
    body: Formula

    def children(self):
        return (self.body,)


@dataclass(frozen=True)
class ForallRel(Formula):
    name: str
    arity: int
    body: Formula

    def children(self):
        return (self.body,)


@dataclass(frozen=True)
class DefRef(Formula):
    """Call of a named definition with relation-name arguments."""
    name: str
    args: tuple


TOP = Truth(True)
BOTTOM = Truth(False)


def conj(*items) -> Formula:
    flat = []
    for it in items:
        if isinstance(it, And):
            flat.extend(it.items)
        elif it == TOP:
            continue
        else:
            flat.append(it)
    if not flat:
        return TOP
    return flat[0] if len(flat) == 1 else And(tuple(flat))


def disj(*items) -> Formula:
    flat = []
    for it in items:
        if isinstance(it, Or):
            flat.extend(it.items)
        elif it == BOTTOM:
            continue
        else:
            flat.append(it)
    if not flat:
        return BOTTOM
    return flat[0] if len(flat) == 1 else Or(tuple(flat))


def walk(f: Formula) -> Iterator[Formula]:
    stack = [f]
    while stack:
        g = stack.pop()
        yield g
        stack.extend(reversed(g.children()))


def size(f: Formula) -> int:
    """Node count, counting each term of an atom or equality as a node."""
    n = 0
    for g in walk(f):
        n += 1
        if isinstance(g, Atom):
            n += len(g.args)
        elif isinstance(g, Equals):
            n += 2
        elif isinstance(g, DefRef):
            n += len(g.args)
    return n


def term_vars(terms) -> set:
    return {t.name for t in terms if isinstance(t, Var)}


def free_fo(f: Formula) -> set:
    if isinstance(f, Atom):
        return term_vars(f.args)
    if isinstance(f, Equals):
        return term_vars((f.left, f.right))
    if isinstance(f, (Exists, Forall)):
        return free_fo(f.body) - {f.var}
    out: set = set()
    for c in f.children():
        out |= free_fo(c)
    return out


def free_so(f: Formula) -> set:
    """Relation names used (atoms, domains, definition arguments) and not bound."""
    if isinstance(f, Atom):
        return {f.rel}
    if isinstance(f, DefRef):
        return set(f.args)
    if isinstance(f, (ExistsRel, ForallRel)):
        return free_so(f.body) - {f.name}
    out: set = set()
    if isinstance(f, (Exists, Forall)) and f.domain is not None:
        out.add(f.domain)
    for c in f.children():
        out |= free_so(c)
    return out


def so_quantifier_count(f: Formula) -> int:
    return sum(isinstance(g, (ExistsRel, ForallRel)) for g in walk(f))


def all_names(f: Formula) -> set:
    out: set = set()
    for g in walk(f):
        if isinstance(g, Atom):
            out.add(g.rel)
            out |= term_vars(g.args)
        elif isinstance(g, Equals):
            out |= term_vars((g.left, g.right))
        elif isinstance(g, (Exists, Forall)):
            out.add(g.var)
            if g.domain:
                out.add(g.domain)
        elif isinstance(g, (ExistsRel, ForallRel)):
            out.add(g.name)
        elif isinstance(g, DefRef):
            out.add(g.name)
            out |= set(g.args)
    return out


def is_sentence(f: Formula) -> bool:
    return not free_fo(f)
