"""JSON container for databases, representations and world-sets.

A database file looks like::

    {"domain": ["a", "b", 1],
     "relations": {"R": {"schema": ["A", "B"], "tuples": [["a", 1]]}}}

``domain`` is optional.  Integers are written as ``"#"``-prefixed decimal
strings (``"#12"``); plain JSON integers are accepted on input as well.  Any
other string is a symbol.  Relation names starting with ``_`` are reserved
for representation files, and the string ``_bot`` is never a data value.
"""

from __future__ import annotations

import json
import re
from pathlib import Path

from .errors import FormatError
from .relmodel import BOT, Relation, World, row_key, value_key


_INT_RE = re.compile(r"#-?\d+")


def _value(v, where: str):
    if isinstance(v, bool) or not isinstance(v, (int, str)):
        raise FormatError(f"{where}: unsupported value {v!r}")
    if v == "_bot":
        raise FormatError(f"{where}: _bot is reserved")
    if isinstance(v, str) and _INT_RE.fullmatch(v):
        return int(v[1:])
    return v


def relation_from_json(name: str, obj) -> Relation:
    if not isinstance(obj, dict) or "schema" not in obj:
        raise FormatError(f"relation {name!r} needs a schema")
    schema = obj["schema"]
    if not isinstance(schema, list) or not all(isinstance(a, str) for a in schema):
        raise FormatError(f"relation {name!r}: schema must be a list of names")
    if len(set(schema)) != len(schema):
        raise FormatError(f"relation {name!r}: duplicate attribute names")
    rows = []
    for t in obj.get("tuples", []):
        if not isinstance(t, list) or len(t) != len(schema):
            raise FormatError(f"relation {name!r}: tuple {t!r} does not match the schema")
        rows.append(tuple(_value(v, f"relation {name!r}") for v in t))
    return Relation(tuple(schema), rows)


def world_from_json(obj, reserved_ok: bool = False) -> tuple:
    """(world, domain or None) from a parsed JSON object."""
    if not isinstance(obj, dict) or not isinstance(obj.get("relations"), dict):
        raise FormatError("expected an object with a 'relations' member")
    rels = {}
    for name, body in obj["relations"].items():
        if name.startswith("_") and not reserved_ok:
            raise FormatError(f"relation name {name!r} is reserved")
        rels[name] = relation_from_json(name, body)
    domain = obj.get("domain")
    if domain is not None:
        if not isinstance(domain, list):
            raise FormatError("domain must be a list of values")
        domain = [_value(v, "domain") for v in domain]
    return World(rels), domain


def _load(path) -> object:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: {exc}") from None


def load_db(path, reserved_ok: bool = False) -> tuple:
    return world_from_json(_load(path), reserved_ok)


def _json_value(v):
    if v is BOT:
        raise FormatError("_bot cannot be written to a database file")
    if isinstance(v, int):
        return f"#{v}"
    if _INT_RE.fullmatch(v):
        raise FormatError(f"symbol {v!r} would read back as an integer")
    return v


def relation_to_json(r: Relation) -> dict:
    return {"schema": list(r.schema),
            "tuples": [[_json_value(v) for v in t] for t in sorted(r.tuples, key=row_key)]}


def world_to_json(w: World, domain=None) -> dict:
    out: dict = {}
    if domain is not None:
        out["domain"] = [_json_value(v) for v in sorted(domain, key=value_key)]
    out["relations"] = {n: relation_to_json(w[n]) for n in sorted(w)}
    return out


def dumps_db(w: World, domain=None) -> str:
    """JSON text with one tuple per line."""
    obj = world_to_json(w, domain)
    lines = ["{"]
    if "domain" in obj:
        lines.append(f'  "domain": {json.dumps(obj["domain"])},')
    lines.append('  "relations": {')
    names = list(obj["relations"])
    for i, name in enumerate(names):
        rel = obj["relations"][name]
        lines.append(f'    {json.dumps(name)}: {{"schema": {json.dumps(rel["schema"])}, "tuples": [')
        rows = [f"      {json.dumps(t)}" for t in rel["tuples"]]
        if rows:
            lines.append(",\n".join(rows))
        lines.append("    ]}" + ("," if i + 1 < len(names) else ""))
    lines.append("  }")
    lines.append("}")
    return "\n".join(lines) + "\n"


def save_db(w: World, path, domain=None) -> None:
    Path(path).write_text(dumps_db(w, domain))


def worldset_to_json(ws) -> list:
    """Canonically ordered list of worlds."""
    items = [world_to_json(w) for w in ws]
    return sorted(items, key=lambda x: json.dumps(x, sort_keys=True))


__all__ = ["relation_from_json", "world_from_json", "load_db", "relation_to_json", "world_to_json",
           "dumps_db", "save_db", "worldset_to_json"]
