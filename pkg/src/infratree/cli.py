"""Command-line front end: parse, explore, check, synthesize, explain.

Subcommands: ``check``, ``attack``, ``validate``, ``quantify``, ``rr``.
Exit codes: 0 the system is secure / the command succeeded, 1 an attack
exists (or validation failed), 2 usage or parse error, 3 verdict withheld
because exploration was truncated at the state bound.

``check`` reads its query as a security statement: an ``EF``-shaped query
describes a threat, so exit 1 means the threat is realizable (witnesses
attached); any other query is a goal that must hold, so exit 1 means it
fails (for ``AG`` goals a counterexample path is attached).  ``rr`` drives
the refinement loop: find an attack, explain it, apply the next model
patch, re-check, until secure or out of patches.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from pathlib import Path as FilePath

from . import attacktree, ctl, dsl, infra, quant, render
from .statespace import KripkeStructure, Path, build_ts, make_kripke

EXIT_SECURE = 0
EXIT_ATTACK = 1
EXIT_USAGE = 2
EXIT_TRUNCATED = 3

DEFAULT_BOUND = 10000


class CliError(Exception):
    """Fatal usage/parse error; message goes to stderr, exit code 2."""


@dataclass
class LoadedSystem:
    """A model lifted to a Kripke structure with a stable key table."""

    kripke: KripkeStructure
    model: dsl.ParsedModel
    exploration: infra.Exploration | None
    truncated: bool

    @property
    def keys(self):
        return self.kripke.ts.keys

    def key_index(self):
        return self.kripke.ts.key_index()

    def edge_actions(self):
        return self.exploration.edge_actions if self.exploration else {}

    def describe_state(self, i: int) -> str:
        if self.exploration:
            return self.exploration.states[i].describe()
        return str(self.keys[i])


def load_model(path: str) -> dsl.ParsedModel:
    try:
        text = FilePath(path).read_text(encoding="utf-8")
    except OSError as e:
        raise CliError(f"cannot read model {path}: {e}") from e
    try:
        return dsl.parse_model(text)
    except dsl.ParseError as e:
        raise CliError(f"{path}: {e}") from e


def load_system(model: dsl.ParsedModel, bound: int) -> LoadedSystem:
    if isinstance(model, dsl.RawSystem):
        try:
            ts = build_ts(
                model.states, model.edges, labels=dict(model.labels)
            )
        except ValueError as e:
            raise CliError(str(e)) from e
        index = ts.key_index()
        k = make_kripke(ts, frozenset(index[s] for s in model.init))
        return LoadedSystem(
            kripke=k, model=model, exploration=None,
            truncated=len(k.reach) > bound,
        )
    exploration = infra.explore(model, bound)
    return LoadedSystem(
        kripke=exploration.kripke, model=model, exploration=exploration,
        truncated=exploration.truncated,
    )


def read_query(arg: str) -> ctl.CtlFormula:
    text = arg
    if arg.endswith(".q"):
        try:
            text = FilePath(arg).read_text(encoding="utf-8").strip()
        except OSError as e:
            raise CliError(f"cannot read query {arg}: {e}") from e
    try:
        return dsl.parse_query(text)
    except dsl.ParseError as e:
        raise CliError(f"query: {e}") from e


def resolve_atom(ref, loaded: LoadedSystem) -> frozenset[int]:
    if isinstance(ref, frozenset):
        index = loaded.key_index()
        out = set()
        for key in ref:
            if key not in index:
                raise CliError(f"unknown state key {key!r}")
            out.add(index[key])
        return frozenset(out)
    assert isinstance(ref, infra.PredicateRef)
    if isinstance(loaded.model, dsl.RawSystem):
        if ref.name == "true" and not ref.args:
            return loaded.kripke.ts.states
        if ref.args:
            raise CliError(
                f"predicate {ref.text()} is not available on raw systems"
            )
        if ref.name not in loaded.kripke.ts.label_vocabulary():
            raise CliError(f"unresolvable atom {ref.name!r}")
        labels = loaded.kripke.ts.labels
        return frozenset(
            s for s in loaded.kripke.ts.states
            if ref.name in labels.get(s, frozenset())
        )
    try:
        return infra.predicate_states(loaded.model, loaded.exploration, ref)
    except ValueError as e:
        raise CliError(str(e)) from e


def resolve_formula(f: ctl.CtlFormula, loaded: LoadedSystem) -> ctl.CtlFormula:
    match f:
        case ctl.Atom(ref):
            return ctl.Atom(resolve_atom(ref, loaded))
        case ctl.Not(c):
            return ctl.Not(resolve_formula(c, loaded))
        case ctl.EX(c) | ctl.AX(c) | ctl.EF(c) | ctl.AF(c) | ctl.EG(c) | ctl.AG(c):
            return type(f)(resolve_formula(c, loaded))
        case ctl.And(a, b) | ctl.Or(a, b) | ctl.Implies(a, b) | ctl.EU(a, b) | ctl.AU(a, b):
            return type(f)(resolve_formula(a, loaded),
                           resolve_formula(b, loaded))
    raise TypeError(f"not a CTL formula: {f!r}")


@dataclass
class Verdict:
    """Outcome of one check: the formula's truth value, the security
    reading, and the explanation payload."""

    holds: bool
    attack_found: bool
    witnesses: list[dict]
    witness_paths: dict[int, Path]
    attack_target: frozenset[int] | None


def check_query(
    loaded: LoadedSystem, query: ctl.CtlFormula
) -> Verdict:
    resolved = resolve_formula(query, loaded)
    k = loaded.kripke
    result = ctl.models(k, resolved)
    threat = isinstance(resolved, ctl.EF)
    witnesses: dict[int, Path | None] = {}
    attack_target: frozenset[int] | None = None
    if threat:
        attack_found = result.holds
        if attack_found:
            attack_target = ctl.sat(k, resolved.child)
            witnesses = result.witnesses
    else:
        attack_found = not result.holds
        if attack_found and isinstance(resolved, ctl.AG):
            attack_target = k.reach - ctl.sat(k, resolved.child)
            witnesses = ctl.ef_witness(k, attack_target)
    entries = []
    paths: dict[int, Path] = {}
    for i, p in sorted(witnesses.items()):
        if p is not None:
            entries.append(
                render.witness_entry(i, p, loaded.keys,
                                     loaded.edge_actions())
            )
            paths[i] = p
    return Verdict(
        holds=result.holds,
        attack_found=attack_found,
        witnesses=entries,
        witness_paths=paths,
        attack_target=attack_target,
    )


def _write_output(text: str, out: str | None) -> None:
    if out:
        FilePath(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _check_text(verdict: Verdict | None, loaded: LoadedSystem,
                query_text: str) -> str:
    lines = [f"query: {query_text}"]
    lines.append(f"states explored: {len(loaded.kripke.reach)}")
    if loaded.truncated:
        lines.append("exploration truncated: verdict withheld")
        return "\n".join(lines) + "\n"
    assert verdict is not None
    lines.append(f"holds: {'yes' if verdict.holds else 'no'}")
    lines.append(
        "verdict: attack found" if verdict.attack_found else "verdict: secure"
    )
    for w in verdict.witnesses:
        lines.append(f"witness from {w['init']}: " + " -> ".join(w["path"]))
        for a in w["actions"]:
            lines.append(f"  {a}")
    mentioned = sorted(
        {s for w in verdict.witness_paths.values() for s in w.steps}
    )
    legend = [
        f"  {loaded.keys[i]}: {loaded.describe_state(i)}"
        for i in mentioned
        if str(loaded.keys[i]) != loaded.describe_state(i)
    ]
    if legend:
        lines.append("states:")
        lines.extend(legend)
    return "\n".join(lines) + "\n"


def cmd_check(args) -> int:
    model = load_model(args.model)
    loaded = load_system(model, args.bound)
    query = read_query(args.query)
    if loaded.truncated:
        report = {"holds": None, "witnesses": [], "truncated": True}
        if args.format == "json":
            _write_output(render.emit_report(report), args.out)
        elif args.format == "dot":
            _write_output(
                render.emit_dot(loaded.kripke, loaded.edge_actions()),
                args.out,
            )
        else:
            _write_output(_check_text(None, loaded, args.query), args.out)
        return EXIT_TRUNCATED
    verdict = check_query(loaded, query)
    report = {
        "holds": verdict.holds,
        "witnesses": verdict.witnesses,
        "truncated": False,
    }
    if args.format == "json":
        _write_output(render.emit_report(report), args.out)
    elif args.format == "dot":
        _write_output(
            render.emit_dot(loaded.kripke, loaded.edge_actions()), args.out
        )
    else:
        _write_output(_check_text(verdict, loaded, args.query), args.out)
    return EXIT_ATTACK if verdict.attack_found else EXIT_SECURE


def cmd_attack(args) -> int:
    model = load_model(args.model)
    loaded = load_system(model, args.bound)
    if loaded.truncated:
        if args.format == "json":
            report = {"holds": None, "witnesses": [], "truncated": True}
            _write_output(render.emit_report(report),
                          args.out and args.out + ".json")
        else:
            sys.stdout.write("exploration truncated: verdict withheld\n")
        return EXIT_TRUNCATED
    try:
        target_atom = dsl.parse_target(args.target)
    except dsl.ParseError as e:
        raise CliError(f"target: {e}") from e
    target = resolve_atom(target_atom.ref, loaded)
    tree = attacktree.synthesize(loaded.kripke, target)
    result = ctl.models(loaded.kripke, ctl.EF(ctl.Atom(target)))
    witnesses = [
        render.witness_entry(i, p, loaded.keys, loaded.edge_actions())
        for i, p in sorted(result.witnesses.items())
        if p is not None
    ]
    report = {
        "holds": result.holds,
        "witnesses": witnesses,
        "truncated": False,
    }
    if tree is None:
        if args.format == "json":
            _write_output(render.emit_report(report), args.out and args.out + ".json")
        else:
            _write_output("no attack: target unreachable\n", None)
        return EXIT_ATTACK
    key_tree = dsl.unbind_tree(tree, loaded.keys)
    tree_text = dsl.emit_tree(key_tree)
    report["tree"] = tree_text
    if args.out:
        FilePath(args.out + ".atk").write_text(tree_text + "\n",
                                               encoding="utf-8")
        FilePath(args.out + ".json").write_text(render.emit_report(report),
                                                encoding="utf-8")
        if args.format == "dot":
            FilePath(args.out + ".dot").write_text(
                render.emit_dot(key_tree), encoding="utf-8"
            )
    else:
        if args.format == "json":
            sys.stdout.write(render.emit_report(report))
        elif args.format == "dot":
            sys.stdout.write(render.emit_dot(key_tree))
        else:
            sys.stdout.write(f"attack tree: {tree_text}\n")
            for w in witnesses:
                sys.stdout.write(
                    f"witness from {w['init']}: " + " -> ".join(w["path"])
                    + "\n"
                )
    return EXIT_SECURE


def _load_tree(path: str, loaded: LoadedSystem):
    try:
        text = FilePath(path).read_text(encoding="utf-8").strip()
    except OSError as e:
        raise CliError(f"cannot read tree {path}: {e}") from e
    try:
        key_tree = dsl.parse_tree(text)
    except dsl.ParseError as e:
        raise CliError(f"{path}: {e}") from e
    try:
        return dsl.bind_tree(key_tree, loaded.key_index())
    except ValueError as e:
        raise CliError(f"{path}: {e} (outside the explored states)") from e


def cmd_validate(args) -> int:
    model = load_model(args.model)
    loaded = load_system(model, args.bound)
    tree = _load_tree(args.tree, loaded)
    ok = attacktree.is_valid(loaded.kripke.ts, tree)
    sys.stdout.write("valid\n" if ok else "invalid\n")
    return EXIT_SECURE if ok else EXIT_ATTACK


def cmd_quantify(args) -> int:
    model = load_model(args.model)
    loaded = load_system(model, args.bound)
    tree = _load_tree(args.tree, loaded)
    try:
        text = FilePath(args.attr).read_text(encoding="utf-8")
    except OSError as e:
        raise CliError(f"cannot read attribution {args.attr}: {e}") from e
    try:
        attr_keys, laws = dsl.parse_attribution(text)
    except dsl.ParseError as e:
        raise CliError(f"{args.attr}: {e}") from e
    try:
        attr = dsl.bind_attribution(attr_keys, loaded.key_index())
        cost, prob = quant.evaluate(tree, attr, laws)
        cheapest, cheapest_cost = quant.cheapest_attack_path(tree, attr)
    except ValueError as e:
        raise CliError(str(e)) from e
    keys = loaded.keys
    steps = [
        "N"
        + dsl._sig_text(
            attacktree.AttackSignature(
                frozenset(str(keys[i]) for i in s.pre),
                frozenset(str(keys[i]) for i in s.post),
            )
        )
        for s in cheapest.steps
    ]
    report = {
        "cost": render.fraction_str(cost),
        "prob": render.fraction_str(prob),
        "cheapest": {
            "steps": steps,
            "cost": render.fraction_str(cheapest_cost),
        },
    }
    if args.format == "json":
        _write_output(render.emit_report(report), args.out)
    else:
        lines = [
            f"cost: {report['cost']}",
            f"prob: {report['prob']}",
            f"cheapest path ({report['cheapest']['cost']}): "
            + " ; ".join(steps or ["<zero-step>"]),
        ]
        _write_output("\n".join(lines) + "\n", args.out)
    return EXIT_SECURE


def cmd_rr(args) -> int:
    model = load_model(args.model)
    if isinstance(model, dsl.RawSystem):
        raise CliError("rr requires an infrastructure model")
    query = read_query(args.query)
    patches = []
    if args.patches:
        for p in args.patches.split(","):
            p = p.strip()
            try:
                text = FilePath(p).read_text(encoding="utf-8")
            except OSError as e:
                raise CliError(f"cannot read patch {p}: {e}") from e
            try:
                patches.append((p, dsl.parse_patch(text)))
            except dsl.ParseError as e:
                raise CliError(f"{p}: {e}") from e
    records = []
    final = None
    exit_code = EXIT_ATTACK
    iteration = 0
    next_patch = 0
    while True:
        iteration += 1
        if iteration > args.max_iter:
            final = "max iterations"
            exit_code = EXIT_ATTACK
            break
        loaded = load_system(model, args.bound)
        if loaded.truncated:
            records.append({"iteration": iteration, "status": "truncated",
                            "holds": None, "witnesses": []})
            final = "bound exceeded"
            exit_code = EXIT_TRUNCATED
            break
        verdict = check_query(loaded, query)
        record = {
            "iteration": iteration,
            "status": "attack" if verdict.attack_found else "secure",
            "holds": verdict.holds,
            "witnesses": verdict.witnesses,
        }
        if verdict.attack_found:
            if verdict.attack_target is not None:
                tree = attacktree.synthesize(loaded.kripke,
                                             verdict.attack_target)
                if tree is not None:
                    record["tree"] = dsl.emit_tree(
                        dsl.unbind_tree(tree, loaded.keys)
                    )
            if next_patch < len(patches):
                name, patch = patches[next_patch]
                next_patch += 1
                try:
                    model = dsl.apply_patch(model, patch)
                except ValueError as e:
                    raise CliError(str(e)) from e
                record["patch"] = name
                record["patch_summary"] = patch.summary
                records.append(record)
                continue
            records.append(record)
            final = "attack remains"
            exit_code = EXIT_ATTACK
            break
        records.append(record)
        final = "secure"
        exit_code = EXIT_SECURE
        break
    report = {"iterations": records, "final": final}
    if args.format == "json":
        _write_output(render.emit_report(report), args.out)
    else:
        lines = []
        for r in records:
            lines.append(f"iteration {r['iteration']}: {r['status']}")
            for w in r.get("witnesses", []):
                lines.append(
                    f"  witness from {w['init']}: " + " -> ".join(w["path"])
                )
            if "tree" in r:
                lines.append(f"  attack tree: {r['tree']}")
            if "patch" in r:
                lines.append(
                    f"  applied patch {r['patch']} ({r['patch_summary']})"
                )
        lines.append(f"final: {final}")
        _write_output("\n".join(lines) + "\n", args.out)
    return exit_code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="infratree",
        description="explicit-state security verification of "
                    "infrastructure models",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, formats=("text", "json", "dot")):
        p.add_argument("--bound", type=int, default=DEFAULT_BOUND,
                       help="state-count bound for exploration")
        p.add_argument("--format", choices=formats, default="text")
        p.add_argument("--out", default=None, help="output path")

    p = sub.add_parser("check", help="check a query against a model")
    p.add_argument("model")
    p.add_argument("query", help="query text or a .q file")
    common(p)
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("attack", help="synthesize an attack tree for a target")
    p.add_argument("model")
    p.add_argument("target", help="target predicate or literal state set")
    common(p)
    p.set_defaults(fn=cmd_attack)

    p = sub.add_parser("validate", help="validate an attack tree")
    p.add_argument("model")
    p.add_argument("tree", help=".atk file")
    common(p, formats=("text",))
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("quantify", help="evaluate cost/probability of a tree")
    p.add_argument("model")
    p.add_argument("tree", help=".atk file")
    p.add_argument("--attr", required=True, help=".attr file")
    common(p, formats=("text", "json"))
    p.set_defaults(fn=cmd_quantify)

    p = sub.add_parser("rr", help="refinement loop: check, patch, re-check")
    p.add_argument("model")
    p.add_argument("query", help="query text or a .q file")
    p.add_argument("--patches", default="",
                   help="comma-separated model patch files")
    p.add_argument("--max-iter", type=int, default=10)
    common(p, formats=("text", "json"))
    p.set_defaults(fn=cmd_rr)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE
    if args.bound < 1:
        sys.stderr.write("error: --bound must be at least 1\n")
        return EXIT_USAGE
    try:
        return args.fn(args)
    except CliError as e:
        sys.stderr.write(f"error: {e}\n")
        return EXIT_USAGE
    except (dsl.ParseError, ValueError) as e:
        sys.stderr.write(f"error: {e}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
