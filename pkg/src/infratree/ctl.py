"""Branching-time formulas and an explicit-state fixpoint model checker.

Satisfaction sets are computed over the reachable closure of a Kripke
structure.  Existential reachability operators use a linear worklist; the
remaining operators are derived by duality or by naive fixpoint iteration
(`lfp`/`gfp`), which converges in at most |reach| strict steps.

The judgment checked by :func:`models` is universal over initial states:
it holds iff every initial state is in the satisfaction set.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Callable, Union

from .statespace import KripkeStructure, Path, TransitionSystem, shortest_path


@dataclass(frozen=True)
class Atom:
    """A predicate name (resolved against the label map) or a literal
    state set."""

    ref: object  # str | frozenset


@dataclass(frozen=True)
class Not:
    child: "CtlFormula"


@dataclass(frozen=True)
class And:
    left: "CtlFormula"
    right: "CtlFormula"


@dataclass(frozen=True)
class Or:
    left: "CtlFormula"
    right: "CtlFormula"


@dataclass(frozen=True)
class Implies:
    left: "CtlFormula"
    right: "CtlFormula"


@dataclass(frozen=True)
class EX:
    child: "CtlFormula"


@dataclass(frozen=True)
class AX:
    child: "CtlFormula"


@dataclass(frozen=True)
class EF:
    child: "CtlFormula"


@dataclass(frozen=True)
class AF:
    child: "CtlFormula"


@dataclass(frozen=True)
class EG:
    child: "CtlFormula"


@dataclass(frozen=True)
class AG:
    child: "CtlFormula"


@dataclass(frozen=True)
class EU:
    left: "CtlFormula"
    right: "CtlFormula"


@dataclass(frozen=True)
class AU:
    left: "CtlFormula"
    right: "CtlFormula"


CtlFormula = Union[
    Atom, Not, And, Or, Implies, EX, AX, EF, AF, EG, AG, EU, AU
]


@dataclass(frozen=True)
class CheckResult:
    """Verdict of a model-checking query plus its explanation payload.

    ``holds`` iff every initial state lies in ``sat_set``.  For queries of
    the shape ``EF t`` the ``witnesses`` map carries, per initial state, a
    shortest path into the target region (None where unreachable).
    """

    holds: bool
    sat_set: frozenset[int]
    witnesses: dict[int, Path | None]


def lfp(
    step: Callable[[frozenset[int]], frozenset[int]], bottom: frozenset[int]
) -> tuple[frozenset[int], int]:
    """Least fixpoint by naive iteration; returns (fixpoint, strict steps)."""
    x = bottom
    n = 0
    while True:
        nxt = step(x)
        if nxt == x:
            return x, n
        x = nxt
        n += 1


def gfp(
    step: Callable[[frozenset[int]], frozenset[int]], top: frozenset[int]
) -> tuple[frozenset[int], int]:
    """Greatest fixpoint by naive iteration; returns (fixpoint, strict steps)."""
    x = top
    n = 0
    while True:
        nxt = step(x)
        if nxt == x:
            return x, n
        x = nxt
        n += 1


def pre_exists(
    ts: TransitionSystem, xs: frozenset[int], domain: frozenset[int]
) -> frozenset[int]:
    """States in `domain` with at least one successor in `xs`."""
    out: set[int] = set()
    for x in xs:
        out |= ts.rstep[x]
    return frozenset(out) & domain


def _reach_into(
    ts: TransitionSystem, goal: frozenset[int], domain: frozenset[int]
) -> frozenset[int]:
    """lfp X = goal | pre_exists(X), computed with a worklist."""
    found = set(goal)
    queue = deque(goal)
    while queue:
        x = queue.popleft()
        for p in ts.rstep[x]:
            if p in domain and p not in found:
                found.add(p)
                queue.append(p)
    return frozenset(found)


def _until(
    ts: TransitionSystem,
    hold: frozenset[int],
    goal: frozenset[int],
    domain: frozenset[int],
) -> frozenset[int]:
    """lfp X = goal | (hold & pre_exists(X))."""
    found = set(goal)
    queue = deque(goal)
    while queue:
        x = queue.popleft()
        for p in ts.rstep[x]:
            if p in domain and p in hold and p not in found:
                found.add(p)
                queue.append(p)
    return frozenset(found)


def _eg(ts: TransitionSystem, hold: frozenset[int]) -> frozenset[int]:
    """gfp X = hold & pre_exists(X): states with an infinite path inside
    `hold`.  Deadlock states drop out (they admit no infinite path)."""
    fix, _ = gfp(lambda x: hold & pre_exists(ts, x, hold), hold)
    return fix


def _atom_set(k: KripkeStructure, ref: object) -> frozenset[int]:
    if isinstance(ref, frozenset):
        bad = ref - k.ts.states
        if bad:
            raise ValueError(
                f"literal atom contains unknown states {sorted(bad)}"
            )
        return ref & k.reach
    if isinstance(ref, str):
        if ref not in k.ts.label_vocabulary():
            raise ValueError(f"unresolvable atom {ref!r}")
        labels = k.ts.labels
        return frozenset(
            s for s in k.reach if ref in labels.get(s, frozenset())
        )
    raise ValueError(f"unresolvable atom {ref!r}")


def sat(k: KripkeStructure, f: CtlFormula) -> frozenset[int]:
    """Satisfaction set of `f` over the reachable states of `k`."""
    reach = k.reach
    ts = k.ts
    match f:
        case Atom(ref):
            return _atom_set(k, ref)
        case Not(c):
            return reach - sat(k, c)
        case And(a, b):
            return sat(k, a) & sat(k, b)
        case Or(a, b):
            return sat(k, a) | sat(k, b)
        case Implies(a, b):
            return (reach - sat(k, a)) | sat(k, b)
        case EX(c):
            return pre_exists(ts, sat(k, c), reach)
        case AX(c):
            return reach - pre_exists(ts, reach - sat(k, c), reach)
        case EF(c):
            return _reach_into(ts, sat(k, c), reach)
        case AG(c):
            return reach - _reach_into(ts, reach - sat(k, c), reach)
        case EG(c):
            return _eg(ts, sat(k, c))
        case AF(c):
            return reach - _eg(ts, reach - sat(k, c))
        case EU(a, b):
            return _until(ts, sat(k, a), sat(k, b), reach)
        case AU(a, b):
            sa, sb = sat(k, a), sat(k, b)
            not_b = reach - sb
            bad = _until(ts, not_b, not_b - sa, reach) | _eg(ts, not_b)
            return reach - bad
    raise TypeError(f"not a CTL formula: {f!r}")


def ef_witness(
    k: KripkeStructure, target: frozenset[int]
) -> dict[int, Path | None]:
    """Per initial state, a shortest path into `target` (None if absent)."""
    bad = target - k.ts.states
    if bad:
        raise ValueError(f"target contains unknown states {sorted(bad)}")
    return {i: shortest_path(k.ts, i, target) for i in sorted(k.init)}


def models(k: KripkeStructure, f: CtlFormula) -> CheckResult:
    """Check whether every initial state of `k` satisfies `f`.

    An empty initial set satisfies everything.  For `EF t` queries the
    result carries shortest witness paths into sat(t).
    """
    sat_set = sat(k, f)
    witnesses: dict[int, Path | None] = {}
    if isinstance(f, EF):
        witnesses = ef_witness(k, sat(k, f.child))
    return CheckResult(
        holds=k.init <= sat_set, sat_set=sat_set, witnesses=witnesses
    )
