"""Values, relations, worlds and world-sets.

Values are plain Python ``str`` (uninterpreted symbols) and ``int``; the
reserved null marker is the singleton :data:`BOT`.  A relation is a schema
(tuple of distinct attribute names) plus a frozenset of row tuples.  A world
maps relation names to relations; a world-set is a frozenset of worlds.
"""

from __future__ import annotations

from collections.abc import Iterable, Iterator, Mapping
from itertools import combinations

from .errors import EnumerationCap, SchemaMismatch


class _Bot:
    __slots__ = ()
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "_bot"

    def __reduce__(self):
        return (_Bot, ())


BOT = _Bot()
ZERO = 0
ONE = 1


def check_value(v) -> None:
    if isinstance(v, bool) or not isinstance(v, (int, str, _Bot)):
        raise TypeError(f"not a domain value: {v!r}")


def value_key(v):
    """Total order on values: the null marker, then integers, then symbols."""
    if isinstance(v, str):
        return (2, 0, v)
    if isinstance(v, int):
        return (1, v, "")
    return (0, 0, "")


def row_key(row: tuple) -> tuple:
    return tuple(value_key(v) for v in row)


def render_value(v) -> str:
    return "_bot" if v is BOT else str(v)


class Relation:
    """Immutable finite relation. Two relations are equal when schemas and rows agree."""

    __slots__ = ("schema", "tuples", "_hash", "_sorted")

    def __init__(self, schema: Iterable[str], tuples: Iterable[tuple] = ()):
        schema = tuple(schema)
        if len(set(schema)) != len(schema):
            raise SchemaMismatch(f"duplicate attribute in schema {schema}")
        rows = frozenset(tuple(t) for t in tuples)
        for t in rows:
            if len(t) != len(schema):
                raise SchemaMismatch(f"row {t} does not fit schema {schema}")
            for v in t:
                check_value(v)
        self.schema = schema
        self.tuples = rows
        self._hash = None
        self._sorted = None

    @classmethod
    def trusted(cls, schema: tuple, tuples: frozenset) -> "Relation":
        """Construct without validation (internal fast path)."""
        r = object.__new__(cls)
        r.schema = schema
        r.tuples = tuples
        r._hash = None
        r._sorted = None
        return r

    @property
    def arity(self) -> int:
        return len(self.schema)

    def __len__(self) -> int:
        return len(self.tuples)

    def __bool__(self) -> bool:
        return bool(self.tuples)

    def __iter__(self) -> Iterator[tuple]:
        return iter(self.rows())

    def __contains__(self, row) -> bool:
        return tuple(row) in self.tuples

    def rows(self) -> tuple:
        if self._sorted is None:
            self._sorted = tuple(sorted(self.tuples, key=row_key))
        return self._sorted

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        if not isinstance(other, Relation):
            return NotImplemented
        return self.schema == other.schema and self.tuples == other.tuples

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.schema, self.tuples))
        return self._hash

    def __repr__(self) -> str:
        body = ", ".join("(" + ", ".join(render_value(v) for v in t) + ")" for t in self.rows())
        return f"Relation({', '.join(self.schema)} | {body})"

    def same_content(self, other: "Relation") -> bool:
        """Equality up to attribute names (positional comparison)."""
        return self.arity == other.arity and self.tuples == other.tuples


def canonicalize(r: Relation) -> Relation:
    """Return an equal relation whose iteration order is the canonical row order."""
    out = Relation.trusted(r.schema, r.tuples)
    out._sorted = r.rows()
    return out


TRUE_REL = Relation.trusted((), frozenset({()}))
FALSE_REL = Relation.trusted((), frozenset())


class World(Mapping):
    """Hashable, immutable assignment of relations to names."""

    __slots__ = ("_rels", "_hash")

    def __init__(self, relations: Mapping[str, Relation] | Iterable = ()):
        self._rels = dict(relations)
        self._hash = None

    def __getitem__(self, name: str) -> Relation:
        return self._rels[name]

    def __iter__(self):
        return iter(self._rels)

    def __len__(self) -> int:
        return len(self._rels)

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._rels.items()))
        return self._hash

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        if not isinstance(other, World):
            return NotImplemented
        return self._rels == other._rels

    def extend(self, name: str, rel: Relation) -> "World":
        w = World.__new__(World)
        w._rels = dict(self._rels)
        w._rels[name] = rel
        w._hash = None
        return w

    def restrict(self, names: Iterable[str]) -> "World":
        return World({n: self._rels[n] for n in names})

    def catalog(self) -> dict[str, tuple]:
        return {n: r.schema for n, r in self._rels.items()}

    def __repr__(self) -> str:
        return "World(" + ", ".join(f"{n}={r!r}" for n, r in sorted(self._rels.items())) + ")"


WorldSet = frozenset


def make_worldset(worlds: Iterable[World]) -> frozenset:
    ws = frozenset(worlds)
    names = None
    for w in ws:
        if names is None:
            names = set(w)
        elif set(w) != names:
            raise SchemaMismatch("worlds of a world-set must share relation names")
    return ws


def world_equals(a: World, b: World) -> bool:
    if set(a) != set(b):
        raise SchemaMismatch("worlds over different relation names")
    return all(a[n] == b[n] for n in a)


def worldset_equals(a: frozenset, b: frozenset) -> bool:
    return a == b


def _count_subsets_ok(n: int, cap: int) -> None:
    if n >= 63 or (1 << n) > cap:
        raise EnumerationCap(f"2^{n} subsets exceed the enumeration cap {cap}")


def powerset_relations(r: Relation, cap: int = 1 << 20) -> Iterator[Relation]:
    """All subsets of ``r``, in order of increasing size."""
    rows = r.rows()
    _count_subsets_ok(len(rows), cap)
    for k in range(len(rows) + 1):
        for combo in combinations(rows, k):
            yield Relation.trusted(r.schema, frozenset(combo))


def domain_power(domain: Iterable, arity: int) -> frozenset:
    rows = [()]
    dom = list(domain)
    for _ in range(arity):
        rows = [t + (v,) for t in rows for v in dom]
    return frozenset(rows)


def active_domain(world: World) -> set:
    out = set()
    for r in world.values():
        for t in r.tuples:
            out.update(t)
    return out
