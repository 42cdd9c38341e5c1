"""Cost and probability annotation of attack trees and transitions.

Evaluation is a bottom-up fold with configurable combination laws and uses
exact rational arithmetic throughout.  The or-cost identity is +infinity
(no alternative available), represented by ``math.inf``, which is
absorbing under the sum law and orders correctly against Fractions.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from typing import Callable, Iterable, Mapping

from .attacktree import AndTree, AttackPath, AttackSignature, AttackTree, Base, OrTree
from .statespace import KripkeStructure, Path, TransitionSystem

INFINITE_COST = math.inf


@dataclass(frozen=True)
class Law:
    """An associative binary combination with its identity element."""

    name: str
    identity: object
    combine: Callable


SUM = Law("sum", Fraction(0), lambda a, b: a + b)
MIN = Law("min", INFINITE_COST, min)
PRODUCT = Law("product", Fraction(1), lambda a, b: a * b)
MAX = Law("max", Fraction(0), max)
NOISY_OR = Law("noisy-or", Fraction(0), lambda a, b: a + b - a * b)

OR_PROB_LAWS = {"max": MAX, "noisy-or": NOISY_OR}


@dataclass(frozen=True)
class AttrLaws:
    """Combination laws for and/or nodes, for cost and probability."""

    and_cost: Law = SUM
    or_cost: Law = MIN
    and_prob: Law = PRODUCT
    or_prob: Law = MAX


DEFAULT_LAWS = AttrLaws()


def _sig_text(sig: AttackSignature) -> str:
    def side(xs) -> str:
        return "{" + ",".join(str(x) for x in sorted(xs, key=repr)) + "}"

    return f"N({side(sig.pre)},{side(sig.post)})"


@dataclass(frozen=True)
class Attribution:
    """Per-base-step cost and probability entries with optional defaults."""

    cost: Mapping[AttackSignature, Fraction]
    prob: Mapping[AttackSignature, Fraction]
    default_cost: Fraction | None = None
    default_prob: Fraction | None = None

    def __post_init__(self) -> None:
        for sig, c in self.cost.items():
            if c < 0:
                raise ValueError(f"negative cost for {_sig_text(sig)}")
        for sig, p in self.prob.items():
            if not 0 <= p <= 1:
                raise ValueError(
                    f"probability for {_sig_text(sig)} outside [0,1]"
                )
        if self.default_cost is not None and self.default_cost < 0:
            raise ValueError("negative default cost")
        if self.default_prob is not None and not 0 <= self.default_prob <= 1:
            raise ValueError("default probability outside [0,1]")

    def cost_of(self, sig: AttackSignature) -> Fraction:
        if sig in self.cost:
            return self.cost[sig]
        if self.default_cost is not None:
            return self.default_cost
        raise ValueError(f"no cost attribution for leaf {_sig_text(sig)}")

    def prob_of(self, sig: AttackSignature) -> Fraction:
        if sig in self.prob:
            return self.prob[sig]
        if self.default_prob is not None:
            return self.default_prob
        raise ValueError(f"no prob attribution for leaf {_sig_text(sig)}")


def evaluate(
    tree: AttackTree, attr: Attribution, laws: AttrLaws = DEFAULT_LAWS
) -> tuple:
    """Fold (cost, prob) bottom-up over the tree.

    Base leaves read their entries (or the declared defaults); and/or nodes
    combine children under the respective laws, empty nodes yielding the
    law identities.
    """
    match tree:
        case Base(sig):
            return attr.cost_of(sig), attr.prob_of(sig)
        case AndTree(children=cs):
            pairs = [evaluate(c, attr, laws) for c in cs]
            cost = reduce(
                laws.and_cost.combine, (p[0] for p in pairs), laws.and_cost.identity
            )
            prob = reduce(
                laws.and_prob.combine, (p[1] for p in pairs), laws.and_prob.identity
            )
            return cost, prob
        case OrTree(children=cs):
            pairs = [evaluate(c, attr, laws) for c in cs]
            cost = reduce(
                laws.or_cost.combine, (p[0] for p in pairs), laws.or_cost.identity
            )
            prob = reduce(
                laws.or_prob.combine, (p[1] for p in pairs), laws.or_prob.identity
            )
            return cost, prob
    raise TypeError(f"not an attack tree: {tree!r}")


def cheapest_attack_path(
    tree: AttackTree, attr: Attribution
) -> tuple[AttackPath, object]:
    """The linear scenario of minimum summed cost, with its total.

    Ties go to the scenario appearing first in the deterministic
    left-to-right order of :func:`attack_paths`.
    """
    cost, steps = _cheapest(tree, attr)
    if steps is None:
        raise ValueError("tree has no attack scenarios")
    return AttackPath(steps), cost


def _cheapest(tree: AttackTree, attr: Attribution):
    match tree:
        case Base(sig):
            return attr.cost_of(sig), (sig,)
        case AndTree(children=cs):
            total = Fraction(0)
            combined: tuple | None = ()
            for c in cs:
                cost, steps = _cheapest(c, attr)
                total = total + cost
                if steps is None or combined is None:
                    combined = None
                else:
                    combined = combined + steps
            return total, combined
        case OrTree(children=cs):
            best_cost, best = INFINITE_COST, None
            for c in cs:
                cost, steps = _cheapest(c, attr)
                if steps is not None and (best is None or cost < best_cost):
                    best_cost, best = cost, steps
            return best_cost, best
    raise TypeError(f"not an attack tree: {tree!r}")


@dataclass(frozen=True)
class WeightedTransition:
    """An edge annotated with a success weight in [0,1]."""

    src: int
    dst: int
    weight: Fraction

    def __post_init__(self) -> None:
        if not 0 <= self.weight <= 1:
            raise ValueError(
                f"weight for edge ({self.src}, {self.dst}) outside [0,1]"
            )


def make_weights(
    ts: TransitionSystem, entries: Iterable[tuple[int, int, Fraction]]
) -> frozenset[WeightedTransition]:
    """Build weighted transitions, checking each edge exists in `ts`."""
    out = set()
    for src, dst, w in entries:
        if src not in ts.states or dst not in ts.step[src]:
            raise ValueError(f"no edge ({src}, {dst}) in the system")
        out.add(WeightedTransition(src, dst, Fraction(w)))
    return frozenset(out)


def path_probability(
    weights: Iterable[WeightedTransition], path: Path
) -> Fraction:
    """Product of edge weights along `path`; a singleton path has
    probability 1."""
    table: dict[tuple[int, int], Fraction] = {}
    for wt in weights:
        edge = (wt.src, wt.dst)
        if edge in table and table[edge] != wt.weight:
            raise ValueError(f"conflicting weights for edge {edge}")
        table[edge] = wt.weight
    prob = Fraction(1)
    for a, b in zip(path.steps, path.steps[1:]):
        if (a, b) not in table:
            raise ValueError(f"no weight for edge ({a}, {b})")
        prob *= table[(a, b)]
    return prob


def goal_distance(
    k: KripkeStructure, target: frozenset[int]
) -> dict[int, int | None]:
    """Per reachable state, the length of a shortest path into `target`.

    Members of the target map to 0; states that cannot reach it map to
    None.
    """
    bad = target - k.ts.states
    if bad:
        raise ValueError(f"target contains unknown states {sorted(bad)}")
    dist: dict[int, int] = {t: 0 for t in target & k.reach}
    queue = deque(sorted(target & k.reach))
    while queue:
        x = queue.popleft()
        for p in k.ts.rstep[x]:
            if p in k.reach and p not in dist:
                dist[p] = dist[x] + 1
                queue.append(p)
    return {s: dist.get(s) for s in sorted(k.reach)}
