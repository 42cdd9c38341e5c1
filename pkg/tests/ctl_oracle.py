"""Naive path-semantics oracle for branching-time formulas.

Deliberately independent of the fixpoint checker: existential operators
enumerate paths state by state (simple paths suffice, so enumeration is
bounded by the state count), the G operators look for a lasso (a cycle
whose states all satisfy the invariant), and universal operators are the
duals of those searches.  Results of the per-operator searches are cached
by their input sets, which changes nothing semantically.
"""

from __future__ import annotations

from infratree import ctl
from infratree.statespace import KripkeStructure, TransitionSystem


def _exists_until(
    ts: TransitionSystem, s: int, hold: frozenset, goal: frozenset,
    visited: frozenset,
) -> bool:
    """Is there a path from s through `hold` states into `goal`?"""
    if s in goal:
        return True
    if s not in hold:
        return False
    visited = visited | {s}
    for t in sorted(ts.step[s]):
        if t not in visited and _exists_until(ts, t, hold, goal, visited):
            return True
    return False


def _exists_lasso(
    ts: TransitionSystem, s: int, hold: frozenset, on_path: frozenset
) -> bool:
    """Is there an infinite path from s staying inside `hold`?

    In a finite system such a path must revisit a state, so the search
    looks for a cycle reachable through `hold`.
    """
    if s not in hold:
        return False
    if s in on_path:
        return True
    on_path = on_path | {s}
    for t in sorted(ts.step[s]):
        if _exists_lasso(ts, t, hold, on_path):
            return True
    return False


class PathOracle:
    """Evaluate formulas over a Kripke structure by path enumeration."""

    def __init__(self, k: KripkeStructure):
        self.k = k
        self._formula_cache: dict = {}
        self._op_cache: dict = {}

    def _eu_set(self, hold: frozenset, goal: frozenset) -> frozenset:
        key = ("eu", hold, goal)
        if key not in self._op_cache:
            ts = self.k.ts
            self._op_cache[key] = frozenset(
                s for s in self.k.reach
                if _exists_until(ts, s, hold, goal, frozenset())
            )
        return self._op_cache[key]

    def _eg_set(self, hold: frozenset) -> frozenset:
        key = ("eg", hold)
        if key not in self._op_cache:
            ts = self.k.ts
            self._op_cache[key] = frozenset(
                s for s in self.k.reach
                if _exists_lasso(ts, s, hold, frozenset())
            )
        return self._op_cache[key]

    def sat(self, f: ctl.CtlFormula) -> frozenset:
        if f in self._formula_cache:
            return self._formula_cache[f]
        out = self._compute(f)
        self._formula_cache[f] = out
        return out

    def _compute(self, f: ctl.CtlFormula) -> frozenset:
        k = self.k
        reach = k.reach
        ts = k.ts
        match f:
            case ctl.Atom(ref):
                if isinstance(ref, frozenset):
                    return ref & reach
                return frozenset(
                    s for s in reach
                    if ref in ts.labels.get(s, frozenset())
                )
            case ctl.Not(c):
                return reach - self.sat(c)
            case ctl.And(a, b):
                return self.sat(a) & self.sat(b)
            case ctl.Or(a, b):
                return self.sat(a) | self.sat(b)
            case ctl.Implies(a, b):
                return (reach - self.sat(a)) | self.sat(b)
            case ctl.EX(c):
                target = self.sat(c)
                return frozenset(
                    s for s in reach if any(t in target for t in ts.step[s])
                )
            case ctl.AX(c):
                target = self.sat(c)
                return frozenset(
                    s for s in reach if all(t in target for t in ts.step[s])
                )
            case ctl.EF(c):
                return self._eu_set(reach, self.sat(c))
            case ctl.AG(c):
                # no path may leave the invariant
                bad = self._eu_set(reach, reach - self.sat(c))
                return reach - bad
            case ctl.EG(c):
                return self._eg_set(self.sat(c))
            case ctl.AF(c):
                # no infinite path may avoid c forever
                return reach - self._eg_set(reach - self.sat(c))
            case ctl.EU(a, b):
                return self._eu_set(self.sat(a), self.sat(b))
            case ctl.AU(a, b):
                sa, sb = self.sat(a), self.sat(b)
                not_b = reach - sb
                escapes = self._eu_set(not_b, not_b - sa)
                avoids = self._eg_set(not_b)
                return reach - (escapes | avoids)
        raise TypeError(f"not a CTL formula: {f!r}")


def all_formulas(
    depth: int, atoms: tuple[ctl.CtlFormula, ...]
) -> list[ctl.CtlFormula]:
    """Every formula of the given nesting depth or less over the atoms."""
    unary = (ctl.Not, ctl.EX, ctl.AX, ctl.EF, ctl.AF, ctl.EG, ctl.AG)
    binary = (ctl.And, ctl.Or, ctl.Implies, ctl.EU, ctl.AU)
    if depth <= 1:
        return list(atoms)
    below = all_formulas(depth - 1, atoms)
    out = list(atoms)
    out.extend(op(f) for op in unary for f in below)
    out.extend(op(f, g) for op in binary for f in below for g in below)
    return out
