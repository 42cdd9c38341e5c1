"""Finite transition systems: key interning, reachability, shortest paths.

States are opaque keys interned to dense integer ids in first-appearance
order.  Everything here is a pure function of immutable values, so systems
can be shared freely between concurrent checks.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Mapping, Sequence

StateSet = frozenset  # frozenset[int]; a type alias, not a wrapper


@dataclass(frozen=True)
class TransitionSystem:
    """Finite state graph over interned keys.

    ``step[x]`` is the successor set of state ``x`` and ``rstep[x]`` its
    predecessor set; both are total on ``0..len(keys)-1``.  ``labels`` maps
    a state id to the predicate names holding there (missing id = none).
    """

    keys: tuple[Hashable, ...]
    step: tuple[frozenset[int], ...]
    rstep: tuple[frozenset[int], ...]
    labels: Mapping[int, frozenset[str]] = field(default_factory=dict)

    @property
    def states(self) -> frozenset[int]:
        return frozenset(range(len(self.keys)))

    def key_index(self) -> dict[Hashable, int]:
        """Key -> id mapping (built fresh; callers may cache it)."""
        return {k: i for i, k in enumerate(self.keys)}

    def label_vocabulary(self) -> frozenset[str]:
        names: set[str] = set()
        for ls in self.labels.values():
            names |= ls
        return frozenset(names)


@dataclass(frozen=True)
class KripkeStructure:
    """A transition system with initial states and their reachable closure."""

    ts: TransitionSystem
    init: frozenset[int]
    reach: frozenset[int]


@dataclass(frozen=True)
class Path:
    """A sequence of states related step-by-step; a single state is a
    zero-step path."""

    steps: tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.steps:
            raise ValueError("a path must contain at least one state")

    def __len__(self) -> int:
        return len(self.steps)


def build_ts(
    states: Sequence[Hashable],
    edges: Iterable[tuple[Hashable, Hashable]],
    labels: Mapping[Hashable, Iterable[str]] | None = None,
) -> TransitionSystem:
    """Intern `states` to dense ids and populate the adjacency maps.

    Rejects duplicate keys and edges whose endpoints were not declared.
    """
    keys: list[Hashable] = []
    index: dict[Hashable, int] = {}
    for k in states:
        if k in index:
            raise ValueError(f"duplicate state key {k!r}")
        index[k] = len(keys)
        keys.append(k)
    succ: list[set[int]] = [set() for _ in keys]
    for a, b in edges:
        for end in (a, b):
            if end not in index:
                raise ValueError(f"dangling edge endpoint {end!r}")
        succ[index[a]].add(index[b])
    pred: list[set[int]] = [set() for _ in keys]
    for x, ys in enumerate(succ):
        for y in ys:
            pred[y].add(x)
    lab: dict[int, frozenset[str]] = {}
    if labels:
        for k, names in labels.items():
            if k not in index:
                raise ValueError(f"label for unknown state key {k!r}")
            names = frozenset(names)
            if names:
                lab[index[k]] = names
    return TransitionSystem(
        keys=tuple(keys),
        step=tuple(frozenset(s) for s in succ),
        rstep=tuple(frozenset(p) for p in pred),
        labels=lab,
    )


def _check_states(ts: TransitionSystem, xs: Iterable[int], what: str) -> None:
    n = len(ts.keys)
    for x in xs:
        if not (isinstance(x, int) and 0 <= x < n):
            raise ValueError(f"unknown {what} state {x!r}")


def reachable(ts: TransitionSystem, init: frozenset[int]) -> frozenset[int]:
    """Least set containing `init` and closed under the step relation.

    Includes `init` itself (the closure is reflexive-transitive).
    """
    _check_states(ts, init, "initial")
    seen: set[int] = set(init)
    queue: deque[int] = deque(sorted(init))
    while queue:
        x = queue.popleft()
        for y in ts.step[x]:
            if y not in seen:
                seen.add(y)
                queue.append(y)
    return frozenset(seen)


def make_kripke(ts: TransitionSystem, init: frozenset[int]) -> KripkeStructure:
    """Pair `ts` with `init` and the reachable closure of `init`."""
    return KripkeStructure(ts=ts, init=frozenset(init), reach=reachable(ts, init))


def successors(ts: TransitionSystem, x: int) -> frozenset[int]:
    _check_states(ts, (x,), "source")
    return ts.step[x]


def predecessors(ts: TransitionSystem, xs: frozenset[int]) -> frozenset[int]:
    """All states with at least one edge into `xs`."""
    _check_states(ts, xs, "target")
    out: set[int] = set()
    for x in xs:
        out |= ts.rstep[x]
    return frozenset(out)


def shortest_path(
    ts: TransitionSystem, start: int, target: frozenset[int]
) -> Path | None:
    """Minimum-length path from `start` into `target`, or None.

    Breadth-first; ties are broken by expanding the smallest state id
    first, so the result is reproducible.
    """
    _check_states(ts, (start,), "source")
    _check_states(ts, target, "target")
    if start in target:
        return Path((start,))
    parent: dict[int, int] = {start: start}
    queue: deque[int] = deque([start])
    while queue:
        x = queue.popleft()
        for y in sorted(ts.step[x]):
            if y in parent:
                continue
            parent[y] = x
            if y in target:
                rev = [y]
                while rev[-1] != start:
                    rev.append(parent[rev[-1]])
                return Path(tuple(reversed(rev)))
            queue.append(y)
    return None


def is_path(ts: TransitionSystem, p: Path) -> bool:
    """True iff consecutive states of `p` are related by the step relation."""
    if any(x not in ts.states for x in p.steps):
        return False
    return all(b in ts.step[a] for a, b in zip(p.steps, p.steps[1:]))
