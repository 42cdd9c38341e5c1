import random
from pathlib import Path

import pytest

from infratree import attacktree as at
from infratree import statespace as ss

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def chain3() -> ss.TransitionSystem:
    """a -> b -> c, interned as 0 -> 1 -> 2."""
    return ss.build_ts(["a", "b", "c"], [("a", "b"), ("b", "c")])


@pytest.fixture
def diamond() -> ss.TransitionSystem:
    """a -> {b,c} -> d, interned as 0..3."""
    return ss.build_ts(
        ["a", "b", "c", "d"],
        [("a", "b"), ("a", "c"), ("b", "d"), ("c", "d")],
    )


@pytest.fixture
def loop() -> ss.TransitionSystem:
    return ss.build_ts(["a"], [("a", "a")])


def random_system(
    rng: random.Random,
    max_states: int = 10,
    density: tuple[float, float] = (0.1, 0.5),
    label_names: tuple[str, ...] = (),
) -> ss.TransitionSystem:
    """A random directed graph over n <= max_states states."""
    n = rng.randint(1, max_states)
    p = rng.uniform(*density)
    edges = [
        (x, y)
        for x in range(n)
        for y in range(n)
        if rng.random() < p
    ]
    labels = {}
    if label_names:
        for x in range(n):
            names = {name for name in label_names if rng.random() < 0.5}
            if names:
                labels[x] = names
    return ss.build_ts(list(range(n)), edges, labels=labels or None)


def random_subset(rng: random.Random, n: int, allow_empty: bool = True):
    out = frozenset(x for x in range(n) if rng.random() < 0.4)
    if not out and not allow_empty and n > 0:
        out = frozenset({rng.randrange(n)})
    return out


def random_tree(
    rng: random.Random, n: int, depth: int = 3
) -> at.AttackTree:
    """A structurally well-formed tree with signatures inside 0..n-1.

    Half the and-nodes chain their children's signatures so that a useful
    share of generated trees is actually valid.
    """
    def sig() -> at.AttackSignature:
        return at.AttackSignature(
            random_subset(rng, n), random_subset(rng, n)
        )

    def build(d: int) -> at.AttackTree:
        if d == 0 or rng.random() < 0.4:
            return at.Base(sig())
        arity = rng.randint(0, 3)
        children = tuple(build(d - 1) for _ in range(arity))
        if rng.random() < 0.5:
            if children and rng.random() < 0.5:
                # chained signature: pre of first child to post of last
                s = at.AttackSignature(
                    children[0].sig.pre, children[-1].sig.post
                )
                return at.AndTree(children, s)
            return at.AndTree(children, sig())
        return at.OrTree(children, sig())

    return build(depth)
