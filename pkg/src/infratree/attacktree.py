"""Attack trees: recursive and/or decomposition of attacks between state sets.

A tree node carries an attack signature (pre-set, post-set).  Validity is a
constructive judgment against a transition system; a valid tree for (I, s)
guarantees that `EF s` holds from every state of I, and conversely a
reachable target can always be turned back into a valid tree
(:func:`synthesize`).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence, Union

from . import ctl
from .statespace import KripkeStructure, TransitionSystem, shortest_path


@dataclass(frozen=True)
class AttackSignature:
    """The (pre, post) pair of state sets an attack leads between."""

    pre: frozenset
    post: frozenset


@dataclass(frozen=True)
class Base:
    """A base attack step between two state sets."""

    sig: AttackSignature


@dataclass(frozen=True)
class AndTree:
    """Sequential composition: the children are carried out in order."""

    children: tuple["AttackTree", ...]
    sig: AttackSignature


@dataclass(frozen=True)
class OrTree:
    """Alternative composition: any one child suffices."""

    children: tuple["AttackTree", ...]
    sig: AttackSignature


AttackTree = Union[Base, AndTree, OrTree]


@dataclass(frozen=True)
class AttackPath:
    """A linear attack scenario: a sequence of base-step signatures.

    The empty sequence is the degenerate zero-step scenario produced by an
    empty and-tree (the pre-set already lies inside the post-set).
    """

    steps: tuple[AttackSignature, ...]

    def __len__(self) -> int:
        return len(self.steps)


def attack_sig(tree: AttackTree) -> AttackSignature:
    """The root signature of a tree."""
    return tree.sig


def base_step(pre, post) -> Base:
    return Base(AttackSignature(frozenset(pre), frozenset(post)))


def _signatures(tree: AttackTree):
    yield tree.sig
    if isinstance(tree, (AndTree, OrTree)):
        for c in tree.children:
            yield from _signatures(c)


def _check_within(ts: TransitionSystem, tree: AttackTree) -> None:
    states = ts.states
    for sig in _signatures(tree):
        bad = (sig.pre | sig.post) - states
        if bad:
            raise ValueError(
                f"attack signature mentions states outside the system: "
                f"{sorted(bad)}"
            )


def is_valid(ts: TransitionSystem, tree: AttackTree) -> bool:
    """The constructive validity judgment.

    * Base (I, s): every state of I has some direct successor in s.  An
      empty I is vacuously valid.
    * AndTree: an empty chain requires I <= s.  Otherwise every child must
      be valid, I must lie inside the first child's pre-set, each child's
      post-set inside the next child's pre-set, and the last child's
      post-set inside s.
    * OrTree: an empty list requires I <= s.  Otherwise every child must be
      valid, the children's pre-sets must jointly cover I, and every
      child's post-set must lie inside s.
    """
    _check_within(ts, tree)
    return _valid(ts, tree)


def _valid(ts: TransitionSystem, tree: AttackTree) -> bool:
    sig = tree.sig
    match tree:
        case Base():
            return all(
                any(y in sig.post for y in ts.step[i]) for i in sig.pre
            )
        case AndTree(children=cs):
            if not cs:
                return sig.pre <= sig.post
            if not all(_valid(ts, c) for c in cs):
                return False
            if not sig.pre <= cs[0].sig.pre:
                return False
            for a, b in zip(cs, cs[1:]):
                if not a.sig.post <= b.sig.pre:
                    return False
            return cs[-1].sig.post <= sig.post
        case OrTree(children=cs):
            if not cs:
                return sig.pre <= sig.post
            if not all(_valid(ts, c) for c in cs):
                return False
            cover = frozenset().union(*(c.sig.pre for c in cs))
            if not sig.pre <= cover:
                return False
            return all(c.sig.post <= sig.post for c in cs)
    raise TypeError(f"not an attack tree: {tree!r}")


def attack_paths(tree: AttackTree) -> list[AttackPath]:
    """Flatten a tree into its linear scenarios, left to right.

    An and-tree concatenates its children's scenarios pointwise, an or-tree
    unions them, a base step yields one singleton scenario.  An empty
    and-tree yields the single zero-step scenario; an empty or-tree yields
    no scenario at all.
    """
    return [AttackPath(p) for p in _paths(tree)]


def _paths(tree: AttackTree) -> list[tuple[AttackSignature, ...]]:
    match tree:
        case Base(sig):
            return [(sig,)]
        case AndTree(children=cs):
            combos = [()]
            for c in cs:
                child = _paths(c)
                combos = [
                    before + after
                    for before, after in itertools.product(combos, child)
                ]
            return combos
        case OrTree(children=cs):
            out: list[tuple[AttackSignature, ...]] = []
            for c in cs:
                out.extend(_paths(c))
            return out
    raise TypeError(f"not an attack tree: {tree!r}")


def to_ctl(tree: AttackTree) -> ctl.CtlFormula:
    """The reachability formula a tree claims: EF of its root post-set."""
    return ctl.EF(ctl.Atom(tree.sig.post))


def synthesize(k: KripkeStructure, target: frozenset) -> AttackTree | None:
    """Build a valid attack tree witnessing `EF target`, or None.

    Present exactly when every initial state can reach `target` and the
    initial set is nonempty.  One or-branch per initial state, each an
    and-chain of singleton base steps along a shortest witness path; a
    zero-step witness becomes an empty and-chain.
    """
    bad = target - k.ts.states
    if bad:
        raise ValueError(f"target contains unknown states {sorted(bad)}")
    if not k.init:
        return None
    if not ctl.models(k, ctl.EF(ctl.Atom(target))).holds:
        return None
    branches: list[AttackTree] = []
    for i in sorted(k.init):
        path = shortest_path(k.ts, i, target)
        assert path is not None  # guaranteed by the EF check
        steps = path.steps
        if len(steps) == 1:
            branches.append(
                AndTree((), AttackSignature(frozenset({i}), target & {i}))
            )
            continue
        bases = tuple(
            Base(AttackSignature(frozenset({a}), frozenset({b})))
            for a, b in zip(steps, steps[1:])
        )
        branches.append(
            AndTree(
                bases,
                AttackSignature(frozenset({i}), frozenset({steps[-1]})),
            )
        )
    reached = frozenset().union(*(b.sig.post for b in branches))
    return OrTree(tuple(branches), AttackSignature(frozenset(k.init), reached))


def node_at(tree: AttackTree, position: Sequence[int]) -> AttackTree:
    """The subtree addressed by a path of child indices (empty = root)."""
    node = tree
    for depth, idx in enumerate(position):
        if isinstance(node, Base):
            raise ValueError(
                f"bad position {list(position)}: base step at depth {depth} "
                f"has no children"
            )
        if not 0 <= idx < len(node.children):
            raise ValueError(
                f"bad position {list(position)}: index {idx} out of range "
                f"at depth {depth}"
            )
        node = node.children[idx]
    return node


def refine(
    tree: AttackTree, position: Sequence[int], replacement: AttackTree
) -> AttackTree:
    """Replace the node at `position` by `replacement`.

    The replacement must carry the same attack signature as the node it
    replaces, so the root signature never changes.
    """
    old = node_at(tree, position)
    if old.sig != replacement.sig:
        raise ValueError(
            f"refinement signature mismatch: node has "
            f"(pre={sorted(old.sig.pre)}, post={sorted(old.sig.post)}), "
            f"replacement has (pre={sorted(replacement.sig.pre)}, "
            f"post={sorted(replacement.sig.post)})"
        )
    return _replace(tree, tuple(position), replacement)


def _replace(
    tree: AttackTree, position: tuple[int, ...], replacement: AttackTree
) -> AttackTree:
    if not position:
        return replacement
    assert isinstance(tree, (AndTree, OrTree))
    idx = position[0]
    children = list(tree.children)
    children[idx] = _replace(children[idx], position[1:], replacement)
    return type(tree)(tuple(children), tree.sig)


def check_refinement(abstract: AttackTree, concrete: AttackTree) -> bool:
    """Decide the structural refinement relation.

    `concrete` refines `abstract` iff both carry the same signature at the
    root and `concrete` extends `abstract` node by node: internal nodes
    must match in constructor and arity, while a base leaf of `abstract`
    may be elaborated into an arbitrary same-signature subtree.
    """
    if abstract.sig != concrete.sig:
        return False
    if isinstance(abstract, Base):
        return True
    if type(abstract) is not type(concrete):
        return False
    if len(abstract.children) != len(concrete.children):
        return False
    return all(
        check_refinement(a, c)
        for a, c in zip(abstract.children, concrete.children)
    )
