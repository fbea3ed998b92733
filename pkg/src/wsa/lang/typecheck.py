"""Schema inference and name resolution.

The checker returns a new tree in which every node carries its schema and
a few conveniences are made explicit:

* product chains whose operands share attribute names get every attribute
  prefixed with the operand's 1-based position (``1.C``, ``2.C``);
* an attribute reference ``C`` that is not in scope resolves to the unique
  ``k.C`` that is;
* projecting onto prefixed names strips the prefixes again when that is
  unambiguous, so ``pi[1.C, 2.E]`` yields schema ``(C, E)`` (the projection
  node's schema may therefore differ from its attribute list);
* positional renames become named renames, and union/difference operands
  whose columns are permutations of each other are realigned.
"""

from __future__ import annotations

import re

from ..errors import SchemaCollision, SchemaMismatch, UnknownAttribute, UnknownRelation
from ..ra import map_pred_attrs, pred_attrs
from . import ast as A

_PREFIX = re.compile(r"^(?:\d+\.)+")


def strip_prefix(name: str) -> str:
    return _PREFIX.sub("", name)


def resolve_attr(name: str, schema: tuple) -> str:
    if name in schema:
        return name
    hits = [a for a in schema if a.endswith("." + name) and _PREFIX.match(a)]
    if len(hits) == 1:
        return hits[0]
    if not hits:
        raise UnknownAttribute(f"attribute {name!r} not in schema {schema}")
    raise UnknownAttribute(f"attribute {name!r} is ambiguous in schema {schema}")


def _resolve_list(attrs, schema) -> tuple:
    out = tuple(resolve_attr(a, schema) for a in attrs)
    if len(set(out)) != len(out):
        raise SchemaMismatch(f"repeated attribute in {attrs}")
    return out


def _resolve_pred(p, schema):
    for a in pred_attrs(p):
        resolve_attr(a, schema)
    return map_pred_attrs(p, lambda a: resolve_attr(a, schema))


def default_names(arity: int) -> tuple:
    return tuple(f"_{i + 1}" for i in range(arity))


def _with(node, schema, **changes):
    from dataclasses import replace
    return replace(node, schema=tuple(schema), **changes)


def _product_chain(e) -> list:
    if isinstance(e, A.Product):
        return _product_chain(e.left) + _product_chain(e.right)
    return [e]


def _prefixed(e: A.Expr, pos: int) -> A.Expr:
    mapping = tuple((a, f"{pos}.{a}") for a in e.schema)
    if not mapping:
        return e
    return A.Rename(mapping, e, schema=tuple(b for _, b in mapping))


def typecheck(e: A.Expr, catalog: dict) -> A.Expr:
    """Annotate ``e`` with schemas against ``catalog`` (relation name -> schema)."""
    return _tc(e, dict(catalog))


def _tc(e: A.Expr, cat: dict) -> A.Expr:
    if isinstance(e, A.ConstRel):
        return _with(e, default_names(e.arity))
    if isinstance(e, A.RelRef):
        if e.name not in cat:
            raise UnknownRelation(f"unknown relation {e.name!r}")
        return _with(e, cat[e.name])
    if isinstance(e, A.Select):
        c = _tc(e.expr, cat)
        return _with(e, c.schema, pred=_resolve_pred(e.pred, c.schema), expr=c)
    if isinstance(e, A.Project):
        c = _tc(e.expr, cat)
        attrs = _resolve_list(e.attrs, c.schema)
        stripped = tuple(strip_prefix(a) for a in attrs)
        out = stripped if len(set(stripped)) == len(stripped) else attrs
        return _with(e, out, attrs=attrs, expr=c)
    if isinstance(e, A.Rename):
        c = _tc(e.expr, cat)
        mapping = tuple((resolve_attr(a, c.schema), b) for a, b in e.mapping)
        olds = [a for a, _ in mapping]
        if len(set(olds)) != len(olds):
            raise SchemaMismatch(f"attribute renamed twice in {e.mapping}")
        m = dict(mapping)
        out = tuple(m.get(a, a) for a in c.schema)
        if len(set(out)) != len(out):
            raise SchemaCollision(f"renaming yields duplicate attributes {out}")
        return _with(e, out, mapping=mapping, expr=c)
    if isinstance(e, A.RenameTo):
        c = _tc(e.expr, cat)
        if len(e.names) != len(c.schema):
            raise SchemaMismatch(f"positional rename to {e.names} of schema {c.schema}")
        if len(set(e.names)) != len(e.names):
            raise SchemaCollision(f"duplicate attributes {e.names}")
        mapping = tuple((a, b) for a, b in zip(c.schema, e.names) if a != b)
        if not mapping:
            return c
        return A.Rename(mapping, c, schema=tuple(e.names))
    if isinstance(e, A.Product):
        ops = [_tc(x, cat) for x in _product_chain(e)]
        names = [a for o in ops for a in o.schema]
        if len(set(names)) != len(names):
            ops = [_prefixed(o, i + 1) for i, o in enumerate(ops)]
        acc = ops[0]
        for o in ops[1:]:
            acc = A.Product(acc, o, schema=acc.schema + o.schema)
        return acc
    if isinstance(e, (A.Union, A.Difference)):
        l, r = _tc(e.left, cat), _tc(e.right, cat)
        r = _align(r, l.schema)
        return _with(e, l.schema, left=l, right=r)
    if isinstance(e, (A.RepairKey, A.PossibleGrp, A.CertainGrp, A.ChoiceOf)):
        c = _tc(e.expr, cat)
        attrs = _resolve_list(e.attrs, c.schema)
        return _with(e, c.schema, attrs=attrs, expr=c)
    if isinstance(e, (A.Subset, A.Possible, A.Certain)):
        c = _tc(e.expr, cat)
        return _with(e, c.schema, expr=c)
    if isinstance(e, A.Let):
        if e.name in cat:
            raise SchemaCollision(f"view name {e.name!r} is already in use")
        b = _tc(e.bound, cat)
        inner = dict(cat)
        inner[e.name] = b.schema
        body = _tc(e.body, inner)
        return _with(e, body.schema, bound=b, body=body)
    if isinstance(e, A.JoinTheta):
        l, r = _tc(e.left, cat), _tc(e.right, cat)
        if set(l.schema) & set(r.schema):
            l, r = _prefixed(l, 1), _prefixed(r, 2)
        schema = l.schema + r.schema
        return _with(e, schema, pred=_resolve_pred(e.pred, schema), left=l, right=r)
    if isinstance(e, A.NaturalJoin):
        l, r = _tc(e.left, cat), _tc(e.right, cat)
        schema = l.schema + tuple(a for a in r.schema if a not in l.schema)
        return _with(e, schema, left=l, right=r)
    raise TypeError(f"unknown node {type(e).__name__}")


def _align(r: A.Expr, schema: tuple) -> A.Expr:
    if r.schema == schema:
        return r
    if len(r.schema) != len(schema) or set(r.schema) != set(schema):
        raise SchemaMismatch(f"operand schemas {schema} and {r.schema} differ")
    return A.Project(schema, r, schema=schema)


def schema_of(e: A.Expr, catalog: dict) -> tuple:
    return typecheck(e, catalog).schema


__all__ = ["typecheck", "resolve_attr", "strip_prefix", "default_names", "schema_of"]
