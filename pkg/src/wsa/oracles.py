"""Independent brute-force oracles used to check the compilers end to end."""

from __future__ import annotations

from itertools import product


def is_three_colorable(vertices, edges) -> bool:
    """Exhaustive search over all colorings; an edge (u, u) is never satisfiable."""
    vertices = list(vertices)
    for colors in product(range(3), repeat=len(vertices)):
        col = dict(zip(vertices, colors))
        if all(col[u] != col[v] for u, v in edges):
            return True
    return False


def dnf_holds(clauses, true_vars) -> bool:
    """A clause is a collection of (variable, positive) literals."""
    return any(all((v in true_vars) == pos for v, pos in c) for c in clauses)


def sigma2_qbf(outer, inner, clauses) -> bool:
    """exists assignment to ``outer`` such that every assignment to ``inner``
    satisfies the DNF ``clauses``; evaluated by truth tables."""
    outer, inner = list(outer), list(inner)
    for bits1 in product((False, True), repeat=len(outer)):
        chosen = {v for v, b in zip(outer, bits1) if b}
        if all(dnf_holds(clauses, chosen | {v for v, b in zip(inner, bits2) if b})
               for bits2 in product((False, True), repeat=len(inner))):
            return True
    return False


def all_subsets(rows) -> list:
    """Every subset of ``rows`` as a frozenset, by binary counting."""
    rows = sorted(rows, key=repr)
    return [frozenset(r for i, r in enumerate(rows) if mask >> i & 1) for mask in range(1 << len(rows))]
