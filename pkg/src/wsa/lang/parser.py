"""Recursive-descent parsers for query text and second-order formulas.

Query syntax (ASCII; the usual mathematical symbols are accepted as aliases)::

    let V := Q in Q'          sigma[p](Q)        pi[A, B](Q)
    rho[A->B](Q)              rho[X, Y](Q)       (positional rename)
    repairkey[A](Q)           possible[A](Q)     possible(Q)
    certain[A](Q)             certain(Q)         choiceof[A](Q)
    subset(Q)                 join[p](Q, Q')     join(Q, Q')
    Q x Q'    Q U Q'    Q - Q'
    {a, 'b c', 3, _bot}       {(1, 2), (3, 4)}    {()}    {}

Formula syntax::

    exists x . f     exists x in C . f     forall x . f
    existsR R:2 . f  forallR R:2 . f
    not f   f and g   f or g   f implies g   f iff g
    R(x, 'a', 3)   x = y   x != y   true   false   @psi(R, S)

A formula file may start with ``def NAME(R, S) := f ;`` and
``universe NAME := Q ;`` statements before the final formula.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from ..errors import WsaSyntaxError
from ..ra import Attr, Cmp, Conj, Const, Disj, Neg, Truth
from ..relmodel import BOT
from . import ast as A
from . import so_ast as S

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r\n]+|\#[^\n]*)
  | (?P<string>'(?:[^']|'')*')
  | (?P<name>\d+(?:\.\d+)*\.[A-Za-z_][A-Za-z0-9_]*|[A-Za-z_][A-Za-z0-9_]*)
  | (?P<int>\d+)
  | (?P<op>:=|->|<->|!=|<>|[=()\[\]{},.:;@&|~\-]|[×∪−⋈∧∨¬≠∃∀⊥])
""", re.VERBOSE)

_ALIASES = {"×": "x", "∪": "U", "−": "-", "∧": "and", "∨": "or", "¬": "not", "≠": "!=",
            "<>": "!=", "&": "and", "|": "or", "~": "not", "∃": "exists", "∀": "forall",
            "⊥": "_bot"}


@dataclass
class Token:
    kind: str  # name, int, string, op, eof
    value: object
    line: int
    col: int


def tokenize(text: str) -> list:
    toks = []
    pos = 0
    line, line_start = 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise WsaSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        raw = m.group()
        col = pos - line_start + 1
        if kind == "string":
            toks.append(Token("string", raw[1:-1].replace("''", "'"), line, col))
        elif kind == "int":
            toks.append(Token("int", int(raw), line, col))
        elif kind == "name":
            toks.append(Token("name", raw, line, col))
        elif kind == "op":
            v = _ALIASES.get(raw, raw)
            toks.append(Token("name" if v.isalpha() or v == "_bot" else "op", v, line, col))
        nl = raw.count("\n")
        if nl:
            line += nl
            line_start = pos + raw.rfind("\n") + 1
        pos = m.end()
    toks.append(Token("eof", None, line, pos - line_start + 1))
    return toks


class _Stream:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0

    def peek(self, k: int = 0) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def next(self) -> Token:
        t = self.toks[self.i]
        if t.kind != "eof":
            self.i += 1
        return t

    def error(self, msg: str, tok: Token | None = None):
        tok = tok or self.peek()
        shown = "end of input" if tok.kind == "eof" else repr(tok.value)
        raise WsaSyntaxError(f"{msg}, found {shown}", tok.line, tok.col)

    def is_op(self, v: str, k: int = 0) -> bool:
        t = self.peek(k)
        return t.kind == "op" and t.value == v

    def is_name(self, v: str, k: int = 0) -> bool:
        t = self.peek(k)
        return t.kind == "name" and t.value == v

    def expect_op(self, v: str) -> Token:
        if not self.is_op(v):
            self.error(f"expected {v!r}")
        return self.next()

    def expect_name(self, what: str = "a name") -> str:
        t = self.peek()
        if t.kind != "name":
            self.error(f"expected {what}")
        self.next()
        return t.value

    def accept_op(self, v: str) -> bool:
        if self.is_op(v):
            self.next()
            return True
        return False

    def accept_name(self, v: str) -> bool:
        if self.is_name(v):
            self.next()
            return True
        return False


# shared pieces ------------------------------------------------------------------

_PRED_WORDS = {"and", "or", "not", "true", "false"}


def _value(s: _Stream):
    t = s.peek()
    if t.kind == "int":
        s.next()
        return t.value
    if t.kind == "string":
        s.next()
        return t.value
    if t.kind == "op" and t.value == "-" and s.peek(1).kind == "int":
        s.next()
        return -s.next().value
    if t.kind == "name" and t.value == "_bot":
        s.next()
        return BOT
    s.error("expected a constant")


def _pred_term(s: _Stream):
    t = s.peek()
    if t.kind == "name" and t.value != "_bot" and t.value not in _PRED_WORDS:
        s.next()
        return Attr(t.value)
    return Const(_value(s))


def parse_predicate_stream(s: _Stream):
    items = [_pred_conj(s)]
    while s.accept_name("or"):
        items.append(_pred_conj(s))
    return items[0] if len(items) == 1 else Disj(tuple(items))


def _pred_conj(s: _Stream):
    items = [_pred_unary(s)]
    while s.accept_name("and"):
        items.append(_pred_unary(s))
    return items[0] if len(items) == 1 else Conj(tuple(items))


def _pred_unary(s: _Stream):
    if s.accept_name("not"):
        return Neg(_pred_unary(s))
    if s.accept_op("("):
        p = parse_predicate_stream(s)
        s.expect_op(")")
        return p
    if s.accept_name("true"):
        return Truth(True)
    if s.accept_name("false"):
        return Truth(False)
    left = _pred_term(s)
    if s.accept_op("="):
        op = "="
    elif s.accept_op("!="):
        op = "!="
    else:
        s.error("expected '=' or '!='")
    return Cmp(op, left, _pred_term(s))


# queries -----------------------------------------------------------------------

_BINOPS = {"x": A.Product, "U": A.Union, "-": A.Difference}


def parse_wsa(text: str) -> A.Expr:
    s = _Stream(text)
    e = _expr(s)
    if s.peek().kind != "eof":
        s.error("unexpected trailing input")
    return e


def parse_predicate(text: str):
    s = _Stream(text)
    p = parse_predicate_stream(s)
    if s.peek().kind != "eof":
        s.error("unexpected trailing input")
    return p


def _binop(s: _Stream):
    t = s.peek()
    if t.kind == "op" and t.value == "-":
        return A.Difference
    if t.kind == "name" and t.value in ("x", "U"):
        return _BINOPS[t.value]
    return None


def _expr(s: _Stream) -> A.Expr:
    left = _unary(s)
    while True:
        op = _binop(s)
        if op is None:
            return left
        s.next()
        left = op(left, _unary(s))


def _attr_list(s: _Stream) -> tuple:
    s.expect_op("[")
    out = []
    if not s.is_op("]"):
        out.append(s.expect_name("an attribute"))
        while s.accept_op(","):
            out.append(s.expect_name("an attribute"))
    s.expect_op("]")
    return tuple(out)


def _paren_expr(s: _Stream) -> A.Expr:
    s.expect_op("(")
    e = _expr(s)
    s.expect_op(")")
    return e


def _unary(s: _Stream) -> A.Expr:
    t = s.peek()
    if t.kind == "op" and t.value == "(":
        return _paren_expr(s)
    if t.kind == "op" and t.value == "{":
        return _const_rel(s)
    if t.kind != "name":
        s.error("expected a query")
    word = t.value
    nxt = s.peek(1)
    bracket = nxt.kind == "op" and nxt.value == "["
    paren = nxt.kind == "op" and nxt.value == "("
    if word == "let":
        s.next()
        name = s.expect_name("a view name")
        s.expect_op(":=")
        bound = _expr(s)
        if not s.accept_name("in"):
            s.error("expected 'in'")
        return A.Let(name, bound, _expr(s))
    if word in ("sigma", "select") and bracket:
        s.next()
        s.expect_op("[")
        p = parse_predicate_stream(s)
        s.expect_op("]")
        return A.Select(p, _paren_expr(s))
    if word in ("pi", "project") and bracket:
        s.next()
        attrs = _attr_list(s)
        return A.Project(attrs, _paren_expr(s))
    if word in ("rho", "rename") and bracket:
        s.next()
        return _rename(s)
    if word in ("repairkey", "repair_key") and bracket:
        s.next()
        attrs = _attr_list(s)
        return A.RepairKey(attrs, _paren_expr(s))
    if word in ("choiceof", "choice_of") and bracket:
        s.next()
        attrs = _attr_list(s)
        return A.ChoiceOf(attrs, _paren_expr(s))
    if word in ("possible", "certain") and (bracket or paren):
        s.next()
        if bracket:
            attrs = _attr_list(s)
            e = _paren_expr(s)
            return A.PossibleGrp(attrs, e) if word == "possible" else A.CertainGrp(attrs, e)
        e = _paren_expr(s)
        return A.Possible(e) if word == "possible" else A.Certain(e)
    if word == "subset" and paren:
        s.next()
        return A.Subset(_paren_expr(s))
    if word == "join" and (bracket or paren):
        s.next()
        pred = None
        if bracket:
            s.expect_op("[")
            pred = parse_predicate_stream(s)
            s.expect_op("]")
        s.expect_op("(")
        left = _expr(s)
        s.expect_op(",")
        right = _expr(s)
        s.expect_op(")")
        return A.NaturalJoin(left, right) if pred is None else A.JoinTheta(pred, left, right)
    if word in ("in", "_bot"):
        s.error("expected a query")
    s.next()
    return A.RelRef(word)


def _rename(s: _Stream) -> A.Expr:
    s.expect_op("[")
    pairs, names = [], []
    while not s.is_op("]"):
        a = s.expect_name("an attribute")
        if s.accept_op("->"):
            pairs.append((a, s.expect_name("an attribute")))
        else:
            names.append(a)
        if not s.accept_op(","):
            break
    s.expect_op("]")
    if pairs and names:
        s.error("cannot mix positional and named renaming")
    e = _paren_expr(s)
    if names:
        return A.RenameTo(tuple(names), e)
    return A.Rename(tuple(pairs), e)


def _const_rel(s: _Stream) -> A.Expr:
    start = s.expect_op("{")
    rows = []
    while not s.is_op("}"):
        if s.accept_op("("):
            row = []
            if not s.is_op(")"):
                row.append(_const_value(s))
                while s.accept_op(","):
                    row.append(_const_value(s))
            s.expect_op(")")
            rows.append(tuple(row))
        else:
            rows.append((_const_value(s),))
        if not s.accept_op(","):
            break
    s.expect_op("}")
    arities = {len(r) for r in rows}
    if len(arities) > 1:
        raise WsaSyntaxError("rows of a constant relation differ in arity", start.line, start.col)
    return A.ConstRel(tuple(rows), arities.pop() if arities else 0)


def _const_value(s: _Stream):
    t = s.peek()
    if t.kind == "name" and t.value != "_bot":
        s.next()
        return t.value
    return _value(s)


# formulas -------------------------------------------------------------------------

@dataclass
class SoProgram:
    formula: S.Formula
    defs: dict = field(default_factory=dict)       # name -> (params, body)
    universes: dict = field(default_factory=dict)  # relation name -> query


_QUANT_WORDS = {"exists", "forall", "existsR", "forallR"}
_FORMULA_WORDS = _QUANT_WORDS | {"not", "and", "or", "implies", "iff", "true", "false", "in"}


def parse_so(text: str) -> S.Formula:
    s = _Stream(text)
    f = _formula(s)
    if s.peek().kind != "eof":
        s.error("unexpected trailing input")
    return f


def parse_so_program(text: str) -> SoProgram:
    s = _Stream(text)
    defs: dict = {}
    universes: dict = {}
    while True:
        if s.is_name("def") and s.peek(1).kind == "name" and s.is_op("(", 2):
            s.next()
            name = s.expect_name("a definition name")
            s.expect_op("(")
            params = []
            if not s.is_op(")"):
                params.append(s.expect_name("a parameter"))
                while s.accept_op(","):
                    params.append(s.expect_name("a parameter"))
            s.expect_op(")")
            s.expect_op(":=")
            defs[name] = (tuple(params), _formula(s))
            _expect_semicolon(s)
        elif s.is_name("universe") and s.peek(1).kind == "name" and s.is_op(":=", 2):
            s.next()
            name = s.expect_name()
            s.expect_op(":=")
            universes[name] = _expr(s)
            _expect_semicolon(s)
        else:
            break
    f = _formula(s)
    s.accept_op(";")
    if s.peek().kind != "eof":
        s.error("unexpected trailing input")
    return SoProgram(f, defs, universes)


def _expect_semicolon(s: _Stream):
    s.expect_op(";")


def _formula(s: _Stream) -> S.Formula:
    t = s.peek()
    if t.kind == "name" and t.value in _QUANT_WORDS:
        return _quant(s)
    left = _implication(s)
    if s.accept_name("iff") or s.accept_op("<->"):
        return S.Iff(left, _formula(s))
    return left


def _quant(s: _Stream) -> S.Formula:
    word = s.next().value
    if word in ("existsR", "forallR"):
        binds = []
        while True:
            name = s.expect_name("a relation variable")
            s.expect_op(":")
            ar = s.peek()
            if ar.kind != "int":
                s.error("expected an arity")
            s.next()
            binds.append((name, ar.value))
            if not s.accept_op(","):
                break
        s.expect_op(".")
        body = _formula(s)
        cls = S.ExistsRel if word == "existsR" else S.ForallRel
        for name, ar in reversed(binds):
            body = cls(name, ar, body)
        return body
    names = [s.expect_name("a variable")]
    while s.peek().kind == "name" and s.peek().value != "in":
        names.append(s.next().value)
    domain = None
    if s.accept_name("in"):
        domain = s.expect_name("a unary relation")
    s.expect_op(".")
    body = _formula(s)
    cls = S.Exists if word == "exists" else S.Forall
    for n in reversed(names):
        body = cls(n, body, domain)
    return body


def _implication(s: _Stream) -> S.Formula:
    left = _disjunction(s)
    if s.accept_name("implies") or s.accept_op("->"):
        t = s.peek()
        right = _quant(s) if t.kind == "name" and t.value in _QUANT_WORDS else _implication(s)
        return S.Implies(left, right)
    return left


def _disjunction(s: _Stream) -> S.Formula:
    items = [_conjunction(s)]
    while s.accept_name("or"):
        items.append(_conjunction(s))
    return items[0] if len(items) == 1 else S.Or(tuple(items))


def _conjunction(s: _Stream) -> S.Formula:
    items = [_funary(s)]
    while s.accept_name("and"):
        items.append(_funary(s))
    return items[0] if len(items) == 1 else S.And(tuple(items))


def _funary(s: _Stream) -> S.Formula:
    t = s.peek()
    if t.kind == "name" and t.value in _QUANT_WORDS:
        return _quant(s)
    if s.accept_name("not"):
        return S.Not(_funary(s))
    if s.accept_op("("):
        f = _formula(s)
        s.expect_op(")")
        return f
    if s.accept_name("true"):
        return S.TOP
    if s.accept_name("false"):
        return S.BOTTOM
    if s.accept_op("@"):
        name = s.expect_name("a definition name")
        s.expect_op("(")
        args = []
        if not s.is_op(")"):
            args.append(s.expect_name("a relation name"))
            while s.accept_op(","):
                args.append(s.expect_name("a relation name"))
        s.expect_op(")")
        return S.DefRef(name, tuple(args))
    if t.kind == "name" and t.value != "_bot" and s.is_op("(", 1):
        s.next()
        s.next()
        args = []
        if not s.is_op(")"):
            args.append(_so_term(s))
            while s.accept_op(","):
                args.append(_so_term(s))
        s.expect_op(")")
        return S.Atom(t.value, tuple(args))
    left = _so_term(s)
    if s.accept_op("="):
        return S.Equals(left, _so_term(s))
    if s.accept_op("!="):
        return S.Not(S.Equals(left, _so_term(s)))
    s.error("expected '=' or '!='")


def _so_term(s: _Stream):
    t = s.peek()
    if t.kind == "name" and t.value != "_bot" and t.value not in _FORMULA_WORDS:
        s.next()
        return S.Var(t.value)
    return Const(_value(s))
