"""Command line front end.

Exit codes: 0 success, 1 failed acceptance checks, 2 syntax or file format
errors, 3 type errors, 4 resource limits, 5 semantic disagreement.
"""

from __future__ import annotations

import argparse
import inspect
import json
import logging
import shlex
import sys
from pathlib import Path

from . import acceptance
from .checks import compile_context, single_answer, so_structure
from .errors import Disagreement, FormatError, LimitExceeded, WsaError
from .eval import EvalLimits, evaluate
from .io import load_db, relation_to_json, worldset_to_json
from .lang import ast as A
from .lang import so_ast as S
from .lang.parser import parse_so_program, parse_wsa
from .lang.printer import program_to_text, to_pretty, to_text
from .lang.typecheck import typecheck
from .relmodel import Relation, World, render_value, row_key
from .repstore import expand_worlds, from_world
from .so2wsa import compile_no_defs, compile_with_defs
from .so_eval import Assignment, answer_relation, eval_so, structure_from_world
from .wsa2so import translate

log = logging.getLogger("wsa")


# rendering -----------------------------------------------------------------------------

def format_relation(name: str, r: Relation) -> str:
    """A table with the relation name in the corner, as in the company example."""
    rows = [[render_value(v) for v in t] for t in sorted(r.tuples, key=row_key)]
    widths = [max([len(a)] + [len(row[i]) for row in rows]) for i, a in enumerate(r.schema)]
    left = len(name)
    head = name + " | " + "  ".join(a.ljust(w) for a, w in zip(r.schema, widths))
    rule = "-" * left + "-+-" + "--".join("-" * w for w in widths)
    body = [" " * left + " | " + "  ".join(v.ljust(w) for v, w in zip(row, widths)) for row in rows]
    return "\n".join(line.rstrip() for line in [head, rule] + body)


def format_world(w: World, title: str | None = None, order=None) -> str:
    parts = [title] if title else []
    parts += [format_relation(n, w[n]) for n in (order or sorted(w))]
    return "\n\n".join(parts)


def _world_order(w: World):
    return tuple((n, tuple(sorted(map(row_key, w[n].tuples)))) for n in sorted(w))


# loading ---------------------------------------------------------------------------------

def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc.strerror}") from None


def _query(args) -> A.Expr:
    if args.expr is not None:
        return parse_wsa(args.expr)
    if args.query is None:
        raise FormatError("give a query with --query PATH or --expr TEXT")
    return parse_wsa(_read(args.query))


def _db(args, required: bool = True) -> tuple:
    if args.db is None:
        if required:
            raise FormatError("--db PATH is required")
        return World({}), None
    try:
        return load_db(args.db)
    except OSError as exc:
        raise FormatError(f"cannot read {args.db}: {exc.strerror}") from None


def _limits(args) -> EvalLimits:
    if args.max_worlds <= 0 or args.max_tuples <= 0:
        raise FormatError("limits must be positive")
    return EvalLimits(max_worlds=args.max_worlds, max_tuples=args.max_tuples)


def _so_world(world: World, domain, name: str = "D") -> World:
    """The database with a domain relation: the declared domain, or the
    active domain when none is declared."""
    if name in world:
        return world
    from .relmodel import active_domain
    values = set(domain) if domain is not None else active_domain(world)
    if not values:
        raise FormatError("the database has no values; declare a domain")
    return world.extend(name, Relation((name,), [(v,) for v in values]))


def _infer_catalog(f: S.Formula, universes: dict) -> dict:
    arities: dict = {}
    for g in S.walk(f):
        if isinstance(g, S.Atom) and g.rel in S.free_so(f):
            arities[g.rel] = len(g.args)
    if universes:
        raise FormatError("formulas with universe declarations need --db for the schemas")
    cat = {r: tuple(f"A{i + 1}" for i in range(k)) for r, k in arities.items()}
    cat.setdefault("D", ("D",))
    return cat


# subcommands -----------------------------------------------------------------------------

def cmd_eval(args, out) -> int:
    world, _ = _db(args, required=False)
    q = _query(args)
    if args.mode == "possible":
        q = A.Possible(q)
    elif args.mode == "certain":
        q = A.Certain(q)
    q = typecheck(q, world.catalog())
    answers = evaluate(q, frozenset([world]), _limits(args))[world]
    answers = sorted(answers, key=lambda r: sorted(map(row_key, r.tuples)))
    if args.format == "structured":
        out.write(json.dumps({"answers": [relation_to_json(r) for r in answers]}, indent=2) + "\n")
        return 0
    if args.mode == "worlds":
        blocks = [format_relation(f"Result_{i + 1}", r) for i, r in enumerate(answers)]
        out.write(f"{len(answers)} possible answer(s)\n\n" + "\n\n".join(blocks) + "\n")
    else:
        for r in answers:
            out.write(format_relation("Result", r) + "\n")
    return 0


def _let_chain(q: A.Expr) -> tuple:
    steps = []
    while isinstance(q, A.Let):
        steps.append((q.name, q.bound))
        q = q.body
    return steps, q


def cmd_worlds(args, out) -> int:
    """The world-set after every let of the script, plus the final result."""
    world, _ = _db(args, required=False)
    lim = _limits(args)
    q = typecheck(_query(args), world.catalog())
    steps, body = _let_chain(q)
    worlds = frozenset([world])
    for name, bound in steps + [("Result", body)]:
        if name in world:
            raise FormatError(f"view name {name!r} clashes with a stored relation")
        per = evaluate(bound, worlds, lim)
        worlds = frozenset(w.extend(name, r) for w, rs in per.items() for r in rs)
        if len(worlds) > lim.max_worlds:
            from .errors import WorldSetExplosion
            raise WorldSetExplosion(f"{len(worlds)} worlds exceed the limit")
    views = [n for n, _ in steps] + ["Result"]
    shown = sorted((w.restrict(views) for w in worlds), key=_world_order)
    shown = list(dict.fromkeys(shown))
    if args.format == "structured":
        out.write(json.dumps({"worlds": worldset_to_json(shown)}, indent=2) + "\n")
        return 0
    out.write(f"{len(shown)} world(s)\n")
    for i, w in enumerate(shown):
        out.write("\n" + format_world(w, f"== world {i + 1} ==", views) + "\n")
    return 0


def _so_program(args):
    if args.so is None:
        raise FormatError("--so PATH is required")
    return parse_so_program(_read(args.so))


def cmd_compile(args, out) -> int:
    prog = _so_program(args)
    if args.db is not None:
        world, domain = _db(args)
        cat = _so_world(world, domain).catalog()
    else:
        cat = _infer_catalog(prog.formula, prog.universes)
    from .so2wsa import CompileContext
    ctx = CompileContext(cat, dict(prog.universes), "D", dict(prog.defs))
    if args.mode == "with-defs":
        q = compile_with_defs(prog.formula, ctx)
    elif args.mode == "no-defs":
        q = compile_no_defs(prog.formula, ctx, output=args.output)
    else:
        raise FormatError(f"unknown compile mode {args.mode!r}")
    text = to_pretty(q) if args.format == "human" else to_text(q)
    out.write(text + "\n")
    return 0


def cmd_translate(args, out) -> int:
    world, _ = _db(args, required=False)
    q = _query(args)
    tr = translate(q, world.catalog(), args.result)
    if args.format == "structured":
        out.write(json.dumps({"result": tr.result, "arity": tr.arity,
                              "program": program_to_text(tr.formula, tr.defs)}, indent=2) + "\n")
    else:
        out.write(f"-- free relation variable {tr.result} of arity {tr.arity}\n")
        out.write(program_to_text(tr.formula, tr.defs) + "\n")
    return 0


LIMIT_HIT = "limit exceeded"


def _attempt(fn):
    try:
        return fn()
    except LimitExceeded:
        return LIMIT_HIT


def check_equivalence(prog, world: World, against: A.Expr | None = None,
                      lim: EvalLimits | None = None) -> dict:
    """Answers of every method on one structure; ``against`` adds a
    user-supplied query claimed to be equivalent.  A method that runs out of
    budget is reported as ``LIMIT_HIT``."""
    f = prog.formula
    xs = tuple(sorted(S.free_fo(f)))
    s = so_structure(world, universes=prog.universes)
    if xs:
        direct = answer_relation(f, s, xs, defs=prog.defs).tuples
    else:
        direct = frozenset([()]) if eval_so(f, s, defs=prog.defs) else frozenset()
    ctx = compile_context(world, prog.universes, prog.defs)
    with_defs = compile_with_defs(f, ctx)
    results = {
        "model checking": direct,
        "compiled with definitions": _attempt(lambda: single_answer(with_defs, world, lim).tuples),
        "compiled without definitions": _attempt(
            lambda: single_answer(compile_no_defs(f, ctx), world, lim).tuples),
    }
    # translate the compiled query back and check that the model-checking
    # answer is one of its results
    tr = translate(with_defs, world.catalog())
    back = structure_from_world(world, {r[0] for r in world["D"]} | A.constants(with_defs))
    ok = _attempt(lambda: eval_so(tr.formula, back, Assignment(so={tr.result: direct}), defs=tr.defs))
    results["translated back"] = ok if ok is LIMIT_HIT else (direct if ok else None)
    if against is not None:
        q = typecheck(against, world.catalog())
        results["supplied query"] = _attempt(lambda: single_answer(q, world, lim).tuples)
    return results


def cmd_check_equiv(args, out) -> int:
    prog = _so_program(args)
    world, domain = _db(args)
    world = _so_world(world, domain)
    against = None
    if args.query is not None or args.expr is not None:
        against = _query(args)
    results = check_equivalence(prog, world, against, _limits(args))
    reference = results["model checking"]
    report = {}
    for name, rows in results.items():
        if rows is LIMIT_HIT:
            report[name] = LIMIT_HIT
        else:
            report[name] = "agree" if rows == reference else "disagree"
    if args.format == "structured":
        out.write(json.dumps({"answer": sorted(map(list, reference), key=repr), "methods": report},
                             indent=2, default=render_value) + "\n")
    else:
        if S.free_fo(prog.formula):
            shown = ", ".join("(" + ", ".join(map(render_value, t)) + ")" for t in sorted(reference, key=row_key))
            out.write(f"model checking answer: {{{shown}}}\n")
        else:
            out.write(f"model checking answer: {'true' if reference else 'false'}\n")
        for name, status in report.items():
            out.write(f"  {name}: {status}\n")
    if "disagree" in report.values():
        raise Disagreement("methods disagree")
    if LIMIT_HIT in report.values():
        raise LimitExceeded("some methods ran out of budget; raise --max-worlds/--max-tuples")
    return 0


def cmd_expand_rep(args, out) -> int:
    if args.db is None:
        raise FormatError("--db PATH (a representation file) is required")
    world, _ = load_db(args.db, reserved_ok=True)
    worlds = expand_worlds(from_world(world), _limits(args))
    shown = sorted(worlds, key=_world_order)
    if args.format == "structured":
        out.write(json.dumps({"worlds": worldset_to_json(shown)}, indent=2) + "\n")
        return 0
    out.write(f"{len(shown)} world(s)\n")
    for i, w in enumerate(shown):
        out.write("\n" + format_world(w, f"== world {i + 1} ==") + "\n")
    return 0


def cmd_acceptance(args, out) -> int:
    numbers = [int(n) for n in args.numbers] if args.numbers else None
    failed = False
    for n, _, fn in acceptance.CHECKS:
        if numbers and n not in numbers:
            continue
        kwargs = {}
        if args.seed is not None and "seed" in inspect.signature(fn).parameters:
            kwargs["seed"] = args.seed
        res = acceptance.run_check(n, **kwargs)
        out.write(res.line() + "\n")
        out.flush()
        failed |= not res.passed
    return 1 if failed else 0


REPL_HELP = """commands:
  :load PATH      load a database file
  :mode MODE      worlds | possible | certain
  :schema         list the loaded relations
  :quit           leave
anything else is evaluated as a query"""


def cmd_repl(args, out, stdin=None) -> int:
    stdin = stdin or sys.stdin
    world, _ = _db(args, required=False)
    mode = args.mode if args.mode in ("worlds", "possible", "certain") else "worlds"
    interactive = stdin.isatty()
    while True:
        if interactive:
            out.write("wsa> ")
            out.flush()
        line = stdin.readline()
        if not line:
            break
        line = line.strip()
        if not line:
            continue
        try:
            if line in (":quit", ":q"):
                break
            if line == ":help":
                out.write(REPL_HELP + "\n")
            elif line.startswith(":load"):
                world, _ = load_db(shlex.split(line)[1])
                out.write(f"loaded {len(world)} relation(s)\n")
            elif line.startswith(":mode"):
                mode = line.split()[1]
                if mode not in ("worlds", "possible", "certain"):
                    raise FormatError(f"unknown mode {mode!r}")
            elif line == ":schema":
                for n in sorted(world):
                    out.write(f"{n}({', '.join(world[n].schema)})\n")
            else:
                ns = argparse.Namespace(db=None, expr=line, query=None, mode=mode, format=args.format,
                                        max_worlds=args.max_worlds, max_tuples=args.max_tuples)
                q = typecheck(_wrap(parse_wsa(line), mode), world.catalog())
                answers = evaluate(q, frozenset([world]), _limits(ns))[world]
                for i, r in enumerate(sorted(answers, key=lambda r: sorted(map(row_key, r.tuples)))):
                    out.write(format_relation(f"Result_{i + 1}" if mode == "worlds" else "Result", r) + "\n")
        except WsaError as exc:
            out.write(f"error: {exc}\n")
        except (OSError, IndexError) as exc:
            out.write(f"error: {exc}\n")
    return 0


def _wrap(q: A.Expr, mode: str) -> A.Expr:
    if mode == "possible":
        return A.Possible(q)
    if mode == "certain":
        return A.Certain(q)
    return q


# argument parsing ------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--db", help="database (or representation) JSON file")
    common.add_argument("--query", help="file holding a world-set algebra query")
    common.add_argument("--expr", help="query text")
    common.add_argument("--so", help="file holding a second-order program")
    common.add_argument("--max-worlds", type=int, default=EvalLimits.max_worlds)
    common.add_argument("--max-tuples", type=int, default=EvalLimits.max_tuples)
    common.add_argument("--format", choices=("human", "structured"), default="human")
    common.add_argument("--seed", type=int, help="seed for the randomized acceptance suites")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="wsa", description="World-set algebra and second-order logic toolkit.")
    sub = p.add_subparsers(dest="command", required=True)
    e = sub.add_parser("eval", parents=[common], help="evaluate a query on a database")
    e.add_argument("--mode", choices=("worlds", "possible", "certain"), default="worlds")
    w = sub.add_parser("worlds", parents=[common], help="show the world-set after each let of a script")
    w.add_argument("--mode", default="worlds", help=argparse.SUPPRESS)
    c = sub.add_parser("compile", parents=[common], help="compile a second-order program to a query")
    c.add_argument("--mode", choices=("with-defs", "no-defs"), default="with-defs")
    c.add_argument("--output", choices=("answers", "tt"), default="answers",
                   help="no-defs only: satisfying assignments or the raw truth table")
    t = sub.add_parser("translate", parents=[common], help="translate a query to second-order logic")
    t.add_argument("--result", default="R_Q", help="name of the result relation variable")
    t.add_argument("--mode", default=None, help=argparse.SUPPRESS)
    k = sub.add_parser("check-equiv", parents=[common],
                       help="compare model checking, both compilers and the translation back")
    k.add_argument("--mode", default=None, help=argparse.SUPPRESS)
    x = sub.add_parser("expand-rep", parents=[common], help="expand a standard representation")
    x.add_argument("--mode", default=None, help=argparse.SUPPRESS)
    r = sub.add_parser("repl", parents=[common], help="interactive evaluation")
    r.add_argument("--mode", choices=("worlds", "possible", "certain"), default="worlds")
    a = sub.add_parser("acceptance", parents=[common], help="run the acceptance checks")
    a.add_argument("numbers", nargs="*", help="check numbers (default: all)")
    a.add_argument("--mode", default=None, help=argparse.SUPPRESS)
    return p


COMMANDS = {
    "eval": cmd_eval,
    "worlds": cmd_worlds,
    "compile": cmd_compile,
    "translate": cmd_translate,
    "check-equiv": cmd_check_equiv,
    "expand-rep": cmd_expand_rep,
    "repl": cmd_repl,
    "acceptance": cmd_acceptance,
}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args, out)
    except WsaError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
