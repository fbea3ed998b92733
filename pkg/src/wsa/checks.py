"""Cross-checking harness: one formula, several evaluation routes."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from .errors import Disagreement
from .eval import EvalLimits, eval_closed
from .lang import so_ast as S
from .relmodel import Relation, World
from .so2wsa import CompileContext, compile_no_defs, compile_with_defs
from .so_eval import Structure, answer_relation, eval_so, structure_from_world


def single_answer(q, world: World, limits: EvalLimits | None = None) -> Relation:
    """The unique answer of a query whose result is world-independent."""
    answers = eval_closed(q, frozenset([world]), limits).answers
    if len(answers) != 1:
        raise Disagreement(f"expected one possible answer, got {len(answers)}")
    return next(iter(answers))


def universe_rows(universes: dict, world: World) -> dict:
    """Evaluate universe queries on a complete database."""
    return {name: single_answer(q, world).tuples for name, q in universes.items()}


def so_structure(world: World, domain: str = "D", universes: dict | None = None) -> Structure:
    dom = [r[0] for r in world[domain]]
    return structure_from_world(world, dom, universe_rows(universes or {}, world))


def compile_context(world: World, universes: dict | None = None, defs: dict | None = None,
                    domain: str = "D") -> CompileContext:
    return CompileContext(world.catalog(), dict(universes or {}), domain, dict(defs or {}))


@dataclass
class RouteReport:
    """Answer of each route (a relation over the free variables, sorted) and
    the time each took in seconds."""
    answers: dict = field(default_factory=dict)
    seconds: dict = field(default_factory=dict)

    @property
    def agree(self) -> bool:
        vals = [a.tuples for a in self.answers.values()]
        return all(v == vals[0] for v in vals)

    def truth(self, route: str) -> bool:
        return bool(self.answers[route].tuples)


ROUTES = ("direct", "with_defs", "no_defs")


def run_routes(f: S.Formula, world: World, universes: dict | None = None, defs: dict | None = None,
               routes=ROUTES, limits: EvalLimits | None = None, solve: bool = True,
               merged: bool = True) -> RouteReport:
    """Evaluate ``f`` on ``world`` directly and through both compilers."""
    universes = universes or {}
    rep = RouteReport()
    xs = tuple(sorted(S.free_fo(f)))
    for route in routes:
        t0 = time.perf_counter()
        if route == "direct":
            s = so_structure(world, universes=universes)
            if xs:
                ans = answer_relation(f, s, xs, defs=defs, solve=solve)
            else:
                ans = Relation((), [()] if eval_so(f, s, defs=defs, solve=solve) else [])
        else:
            ctx = compile_context(world, universes, defs)
            q = compile_with_defs(f, ctx) if route == "with_defs" else compile_no_defs(f, ctx, merged=merged)
            ans = single_answer(q, world, limits)
        rep.answers[route] = ans
        rep.seconds[route] = time.perf_counter() - t0
    return rep


__all__ = ["single_answer", "universe_rows", "so_structure", "compile_context", "RouteReport",
           "ROUTES", "run_routes"]
