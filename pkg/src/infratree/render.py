"""DOT and JSON emitters for explanation artifacts.

DOT output declares every node before any edge that uses it, so the graphs
pass simple structural checks.  JSON reports use sorted keys and render
rationals as exact decimal strings when the expansion terminates, else as
``p/q``.
"""

from __future__ import annotations

import json
import math
from fractions import Fraction
from typing import Mapping

from .attacktree import AndTree, AttackTree, Base, OrTree
from .dsl import _sig_text
from .infra import ActionInstance
from .statespace import KripkeStructure, Path


def fraction_str(q) -> str:
    """Exact decimal rendering when the denominator is 2^a·5^b, else p/q."""
    if q == math.inf:
        return "inf"
    q = Fraction(q)
    d = q.denominator
    two = five = 0
    while d % 2 == 0:
        d //= 2
        two += 1
    while d % 5 == 0:
        d //= 5
        five += 1
    if d != 1:
        return f"{q.numerator}/{q.denominator}"
    shift = max(two, five)
    if shift == 0:
        return str(q.numerator)
    scaled = abs(q.numerator) * 10**shift // q.denominator
    digits = str(scaled).rjust(shift + 1, "0")
    sign = "-" if q.numerator < 0 else ""
    return f"{sign}{digits[:-shift]}.{digits[-shift:]}"


def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def emit_dot(
    obj,
    edge_labels: Mapping[tuple[int, int], ActionInstance] | None = None,
) -> str:
    """Render a Kripke structure (with optional action edge labels) or an
    attack tree over state keys as a DOT digraph."""
    if isinstance(obj, KripkeStructure):
        return _dot_kripke(obj, edge_labels or {})
    if isinstance(obj, (Base, AndTree, OrTree)):
        return _dot_tree(obj)
    raise TypeError(f"cannot render {type(obj).__name__} as DOT")


def _dot_kripke(k: KripkeStructure, edge_labels) -> str:
    lines = ["digraph system {"]
    keys = k.ts.keys
    for i in range(len(keys)):
        shape = "doublecircle" if i in k.init else "circle"
        lines.append(f"  {_quote(str(keys[i]))} [shape={shape}];")
    for x in range(len(keys)):
        for y in sorted(k.ts.step[x]):
            act = edge_labels.get((x, y))
            label = f" [label={_quote(act.label())}]" if act else ""
            lines.append(
                f"  {_quote(str(keys[x]))} -> {_quote(str(keys[y]))}{label};"
            )
    lines.append("}")
    return "\n".join(lines) + "\n"


def _dot_tree(tree: AttackTree) -> str:
    lines = ["digraph attack_tree {"]
    nodes: list[tuple[str, AttackTree]] = []
    edges: list[tuple[str, str]] = []

    def walk(t: AttackTree) -> str:
        name = f"n{len(nodes)}"
        nodes.append((name, t))
        if isinstance(t, (AndTree, OrTree)):
            for c in t.children:
                edges.append((name, walk(c)))
        return name

    walk(tree)
    for name, t in nodes:
        if isinstance(t, Base):
            label = f"N {_sig_text(t.sig)}"
            shape = "box"
        elif isinstance(t, AndTree):
            label = f"AND {_sig_text(t.sig)}"
            shape = "ellipse"
        else:
            label = f"OR {_sig_text(t.sig)}"
            shape = "diamond"
        lines.append(f"  {name} [shape={shape}, label={_quote(label)}];")
    for a, b in edges:
        lines.append(f"  {a} -> {b};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def witness_entry(
    init: int,
    path: Path,
    keys,
    edge_actions: Mapping[tuple[int, int], ActionInstance] | None,
) -> dict:
    actions = []
    if edge_actions:
        for a, b in zip(path.steps, path.steps[1:]):
            act = edge_actions.get((a, b))
            actions.append(act.label() if act else "step")
    return {
        "init": str(keys[init]),
        "path": [str(keys[s]) for s in path.steps],
        "actions": actions,
    }


def emit_report(payload: dict) -> str:
    """Serialize a report dict as stable, diff-friendly JSON."""
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"
