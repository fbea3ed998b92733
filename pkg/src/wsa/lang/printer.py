"""Text rendering of queries and formulas; the output re-parses to an equal tree."""

from __future__ import annotations

import re

from ..ra import Attr, Cmp, Conj, Disj, Neg, Truth
from ..relmodel import BOT
from . import ast as A
from . import so_ast as S

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
_RESERVED = {"let", "in", "x", "U", "_bot", "true", "false", "and", "or", "not", "def",
             "universe", "exists", "forall", "existsR", "forallR", "implies", "iff"}


def render_const(v, bare_ok: bool = False) -> str:
    if v is BOT:
        return "_bot"
    if isinstance(v, int):
        return str(v)
    if bare_ok and _IDENT.match(v) and v not in _RESERVED:
        return v
    return "'" + v.replace("'", "''") + "'"


def _term(t) -> str:
    if isinstance(t, Attr):
        return t.name
    if isinstance(t, S.Var):
        return t.name
    return render_const(t.value)


def pred_to_text(p) -> str:
    if isinstance(p, Cmp):
        return f"{_term(p.left)} {p.op} {_term(p.right)}"
    if isinstance(p, Truth):
        return "true" if p.value else "false"
    if isinstance(p, Neg):
        inner = p.item
        body = pred_to_text(inner)
        return f"not {body}" if isinstance(inner, (Truth, Neg)) else f"not ({body})"
    if isinstance(p, Conj):
        return " and ".join(_wrap_pred(q, (Disj, Conj)) for q in p.items)
    return " or ".join(_wrap_pred(q, (Disj,)) for q in p.items)


def _wrap_pred(q, needs) -> str:
    s = pred_to_text(q)
    return f"({s})" if isinstance(q, needs) else s


def _rows(rows, arity) -> str:
    if arity == 1:
        return "{" + ", ".join(render_const(r[0], True) for r in rows) + "}"
    return "{" + ", ".join("(" + ", ".join(render_const(v, True) for v in r) + ")" for r in rows) + "}"


_BIN = {A.Product: "x", A.Union: "U", A.Difference: "-"}


def to_text(e: A.Expr) -> str:
    if isinstance(e, A.ConstRel):
        if not e.rows and e.arity > 0:
            raise ValueError("empty constant relations of positive arity have no literal syntax")
        return _rows(e.rows, e.arity)
    if isinstance(e, A.RelRef):
        return e.name
    if type(e) in _BIN:
        left = to_text(e.left)
        if isinstance(e.left, A.Let):
            left = f"({left})"
        right = to_text(e.right)
        if type(e.right) in _BIN or isinstance(e.right, A.Let):
            right = f"({right})"
        return f"{left} {_BIN[type(e)]} {right}"
    if isinstance(e, A.Select):
        return f"sigma[{pred_to_text(e.pred)}]({to_text(e.expr)})"
    if isinstance(e, A.Project):
        return f"pi[{', '.join(e.attrs)}]({to_text(e.expr)})"
    if isinstance(e, A.Rename):
        return f"rho[{', '.join(f'{a}->{b}' for a, b in e.mapping)}]({to_text(e.expr)})"
    if isinstance(e, A.RenameTo):
        return f"rho[{', '.join(e.names)}]({to_text(e.expr)})"
    if isinstance(e, A.RepairKey):
        return f"repairkey[{', '.join(e.attrs)}]({to_text(e.expr)})"
    if isinstance(e, A.PossibleGrp):
        return f"possible[{', '.join(e.attrs)}]({to_text(e.expr)})"
    if isinstance(e, A.CertainGrp):
        return f"certain[{', '.join(e.attrs)}]({to_text(e.expr)})"
    if isinstance(e, A.ChoiceOf):
        return f"choiceof[{', '.join(e.attrs)}]({to_text(e.expr)})"
    if isinstance(e, A.Possible):
        return f"possible({to_text(e.expr)})"
    if isinstance(e, A.Certain):
        return f"certain({to_text(e.expr)})"
    if isinstance(e, A.Subset):
        return f"subset({to_text(e.expr)})"
    if isinstance(e, A.JoinTheta):
        return f"join[{pred_to_text(e.pred)}]({to_text(e.left)}, {to_text(e.right)})"
    if isinstance(e, A.NaturalJoin):
        return f"join({to_text(e.left)}, {to_text(e.right)})"
    if isinstance(e, A.Let):
        return f"let {e.name} := {to_text(e.bound)} in {to_text(e.body)}"
    raise TypeError(f"unknown node {type(e).__name__}")


def to_pretty(e: A.Expr, indent: int = 0) -> str:
    """Multi-line rendering with one let binding per line."""
    pad = "  " * indent
    if isinstance(e, A.Let):
        return (f"{pad}let {e.name} :=\n{to_pretty(e.bound, indent + 2)}\n"
                f"{pad}in\n{to_pretty(e.body, indent + 1)}")
    return pad + to_text(e)


# formulas

_PREC = {S.Iff: 1, S.Implies: 2, S.Or: 3, S.And: 4}


def _prec(f) -> int:
    if isinstance(f, (S.Exists, S.Forall, S.ExistsRel, S.ForallRel)):
        return 0
    if isinstance(f, S.Not):
        return 5
    return _PREC.get(type(f), 6)


def _open_right(f) -> bool:
    if _prec(f) == 0:
        return True
    if isinstance(f, S.Not):
        return _open_right(f.body)
    return False


def _child(f, parent_prec: int, last: bool = False) -> str:
    s = so_to_text(f)
    p = _prec(f)
    if p <= parent_prec or (_open_right(f) and not last) or (p == 0):
        return f"({s})"
    return s


def so_to_text(f: S.Formula) -> str:
    if isinstance(f, S.Atom):
        return f"{f.rel}({', '.join(_term(t) for t in f.args)})"
    if isinstance(f, S.Equals):
        return f"{_term(f.left)} = {_term(f.right)}"
    if isinstance(f, S.Truth):
        return "true" if f.value else "false"
    if isinstance(f, S.DefRef):
        return f"@{f.name}({', '.join(f.args)})"
    if isinstance(f, S.Not):
        if isinstance(f.body, S.Equals):
            return f"{_term(f.body.left)} != {_term(f.body.right)}"
        body = so_to_text(f.body)
        if _prec(f.body) in (0, 5, 6) and not (isinstance(f.body, S.Not) and isinstance(f.body.body, S.Equals)):
            return f"not {body}"
        return f"not ({body})"
    if isinstance(f, S.And):
        return " and ".join(_child(g, 4) for g in f.items)
    if isinstance(f, S.Or):
        return " or ".join(_child(g, 3) for g in f.items)
    if isinstance(f, S.Implies):
        return f"{_child(f.left, 2)} implies {_child(f.right, 1)}"
    if isinstance(f, S.Iff):
        return f"{_child(f.left, 1)} iff {_child(f.right, 0)}"
    if isinstance(f, (S.Exists, S.Forall)):
        word = "exists" if isinstance(f, S.Exists) else "forall"
        dom = f" in {f.domain}" if f.domain else ""
        return f"{word} {f.var}{dom} . {so_to_text(f.body)}"
    if isinstance(f, (S.ExistsRel, S.ForallRel)):
        word = "existsR" if isinstance(f, S.ExistsRel) else "forallR"
        return f"{word} {f.name}:{f.arity} . {so_to_text(f.body)}"
    raise TypeError(f"unknown formula {type(f).__name__}")


def program_to_text(formula: S.Formula, defs: dict | None = None, universes: dict | None = None) -> str:
    lines = []
    for name, (params, body) in (defs or {}).items():
        lines.append(f"def {name}({', '.join(params)}) := {so_to_text(body)};")
    for name, q in (universes or {}).items():
        lines.append(f"universe {name} := {to_text(q)};")
    lines.append(so_to_text(formula))
    return "\n".join(lines)
