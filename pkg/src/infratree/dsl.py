"""Textual formats for models, queries, attack trees, and attributions.

Model files (`.infra`) are line-oriented with `#` comments and an optional
`format 1` header, followed by a kind line:

* ``infrastructure`` — sections in any order::

      location lobby physical
      location vault physical data{gold}
      edge lobby vault
      credential key
      actor alice creds{key} role{staff}
      tipped charlie impersonates{staff}
      policy vault: has(key) and not at(lobby) -> {move,get}
      hook on-move alice refresh eph pool{e1,e2}
      hook on-move alice record eph
      init alice@lobby kv{eph=e1}
      predicate breach = actor-at(charlie, vault)

* ``system`` — a raw transition system (directed edges)::

      state a init
      state b labels{goal}
      edge a b

Queries: ``EF p``, ``AG p``, ``not``, ``and``, ``or``, parentheses,
predicate instances like ``linkable(alice)``, literal state sets ``{a,b}``.
Trees: ``[N({a},{b}), N({b},{c})] AND ({a},{c})``, same with ``OR``, and
``N(...)`` for base steps.  Attribution files: lines ``cost N({a},{b}) = 2``,
``prob N({a},{b}) = 1/2``, ``default cost = 1``, ``law or-prob noisy-or``.

Identifiers are letters, digits, ``-`` and ``_``, starting with a letter.
Parsers report a :class:`ParseError` whose span points at the offending
token (1-based line/column).  Parsing the emitted form of any value yields
the value back.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Mapping, Union

from . import ctl
from .attacktree import AndTree, AttackSignature, AttackTree, Base, OrTree
from .infra import (
    KIND_ORDER, ActionKind, Actor, AtLocation, CondAnd, CondNot, CondOr,
    CondTrue, Condition, HasCredential, HasRole, Hook, InfraModel,
    IsIdentity, Location, PredicateDef, PredicateRef, _check_pred,
)
from .quant import OR_PROB_LAWS, AttrLaws, Attribution


@dataclass(frozen=True)
class SourceSpan:
    """Location of a token in the input (1-based line and column)."""

    line: int
    column: int
    start: int
    end: int

    def __post_init__(self) -> None:
        if self.end < self.start:
            raise ValueError("span end precedes its start")


class ParseError(Exception):
    def __init__(self, span: SourceSpan, expected: str, found: str):
        self.span = span
        self.expected = expected
        self.found = found
        super().__init__(
            f"line {span.line}, column {span.column}: expected {expected}, "
            f"found {found!r}"
        )


_TOKEN_RE = re.compile(
    r"""(?P<ws>[ \t\r]+)
      | (?P<comment>\#[^\n]*)
      | (?P<nl>\n)
      | (?P<arrow>->)
      | (?P<name>[A-Za-z][A-Za-z0-9_]*(?:-[A-Za-z0-9_]+)*)
      | (?P<number>[0-9]+(?:\.[0-9]+)?(?:/[0-9]+)?)
      | (?P<punct>[{}()\[\],=@:])
    """,
    re.VERBOSE,
)

_EOF = "end of input"


@dataclass(frozen=True)
class Token:
    kind: str  # name | number | punct | arrow | nl | eof
    text: str
    span: SourceSpan


class Scanner:
    """Tokenizer shared by all the text formats.

    With ``keep_newlines`` the newline token terminates line-oriented
    records; expression parsers treat newlines as whitespace.
    """

    def __init__(self, text: str, keep_newlines: bool = False):
        self.text = text
        self.keep_newlines = keep_newlines
        self.tokens = list(self._scan())
        self.pos = 0

    def _scan(self):
        line, col, i = 1, 1, 0
        text = self.text
        while i < len(text):
            m = _TOKEN_RE.match(text, i)
            if m is None:
                span = SourceSpan(line, col, i, i + 1)
                raise ParseError(span, "a token", text[i])
            kind = m.lastgroup
            lexeme = m.group()
            span = SourceSpan(line, col, i, m.end())
            if kind == "nl":
                if self.keep_newlines:
                    yield Token("nl", "\n", span)
                line += 1
                col = 1
            else:
                if kind not in ("ws", "comment"):
                    yield Token(kind, lexeme, span)
                col += len(lexeme)
            i = m.end()
        end = SourceSpan(line, col, len(text), len(text))
        yield Token("eof", _EOF, end)

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def next(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def fail(self, expected: str) -> "ParseError":
        tok = self.peek()
        return ParseError(tok.span, expected, tok.text)

    def expect(self, text: str | None = None, kind: str | None = None) -> Token:
        tok = self.peek()
        if kind is not None and tok.kind != kind:
            raise self.fail(text or kind)
        if text is not None and tok.text != text:
            raise self.fail(f"'{text}'")
        return self.next()

    def at_name(self, text: str) -> bool:
        tok = self.peek()
        return tok.kind == "name" and tok.text == text

    def skip_newlines(self) -> None:
        while self.peek().kind == "nl":
            self.next()

    def end_record(self) -> None:
        tok = self.peek()
        if tok.kind == "nl":
            self.next()
        elif tok.kind != "eof":
            raise self.fail("end of line")


# ---------------------------------------------------------------------------
# raw transition-system models


@dataclass(frozen=True)
class RawSystem:
    """A directly declared transition system (`system` model kind)."""

    states: tuple[str, ...]
    init: tuple[str, ...]
    labels: tuple[tuple[str, frozenset[str]], ...]
    edges: tuple[tuple[str, str], ...]


ParsedModel = Union[InfraModel, RawSystem]


def _name_list(sc: Scanner) -> list[tuple[str, SourceSpan]]:
    """Parse `{a,b,...}` (possibly empty), returning names with spans."""
    sc.expect("{")
    out: list[tuple[str, SourceSpan]] = []
    if sc.peek().text == "}":
        sc.next()
        return out
    while True:
        tok = sc.peek()
        if tok.kind != "name":
            raise sc.fail("a name")
        sc.next()
        out.append((tok.text, tok.span))
        if sc.peek().text == ",":
            sc.next()
            continue
        sc.expect("}")
        return out


def _kv_list(sc: Scanner) -> list[tuple[str, str, SourceSpan]]:
    """Parse `{k=v,...}` (possibly empty)."""
    sc.expect("{")
    out: list[tuple[str, str, SourceSpan]] = []
    if sc.peek().text == "}":
        sc.next()
        return out
    while True:
        key = sc.peek()
        if key.kind != "name":
            raise sc.fail("a key name")
        sc.next()
        sc.expect("=")
        val = sc.peek()
        if val.kind not in ("name", "number"):
            raise sc.fail("a value")
        sc.next()
        out.append((key.text, val.text, key.span))
        if sc.peek().text == ",":
            sc.next()
            continue
        sc.expect("}")
        return out


def _condition(sc: Scanner):
    """Parse a policy condition; returns (Condition, primitive refs)."""
    refs: list[tuple[str, str, SourceSpan]] = []

    def primary() -> Condition:
        tok = sc.peek()
        if tok.text == "(":
            sc.next()
            c = disjunct()
            sc.expect(")")
            return c
        if tok.kind != "name":
            raise sc.fail("a condition")
        if tok.text == "true":
            sc.next()
            return CondTrue()
        if tok.text == "not":
            sc.next()
            return CondNot(primary())
        if tok.text in ("has", "role", "is", "at"):
            sc.next()
            sc.expect("(")
            arg = sc.peek()
            if arg.kind != "name":
                raise sc.fail("a name")
            sc.next()
            sc.expect(")")
            refs.append((tok.text, arg.text, arg.span))
            return {
                "has": HasCredential,
                "role": HasRole,
                "is": IsIdentity,
                "at": AtLocation,
            }[tok.text](arg.text)
        raise sc.fail("a condition")

    def conjunct() -> Condition:
        c = primary()
        while sc.at_name("and"):
            sc.next()
            c = CondAnd(c, primary())
        return c

    def disjunct() -> Condition:
        c = conjunct()
        while sc.at_name("or"):
            sc.next()
            c = CondOr(c, conjunct())
        return c

    return disjunct(), refs


@dataclass
class _ModelDraft:
    kind: str | None = None
    locations: list = field(default_factory=list)
    edges: list = field(default_factory=list)
    credentials: list = field(default_factory=list)
    actors: list = field(default_factory=list)
    tipped: list = field(default_factory=list)
    policies: list = field(default_factory=list)
    hooks: list = field(default_factory=list)
    init: list = field(default_factory=list)
    predicates: list = field(default_factory=list)
    states: list = field(default_factory=list)  # system kind


def _parse_records(text: str) -> _ModelDraft:
    sc = Scanner(text, keep_newlines=True)
    draft = _ModelDraft()
    sc.skip_newlines()
    if sc.at_name("format"):
        sc.next()
        tok = sc.peek()
        if tok.kind != "number" or tok.text != "1":
            raise sc.fail("format 1")
        sc.next()
        sc.end_record()
        sc.skip_newlines()
    if sc.at_name("system") or sc.at_name("infrastructure"):
        draft.kind = sc.next().text
        sc.end_record()
    else:
        draft.kind = "infrastructure"
    while True:
        sc.skip_newlines()
        tok = sc.peek()
        if tok.kind == "eof":
            return draft
        if tok.kind != "name":
            raise sc.fail("a record keyword")
        parser = _RECORD_PARSERS.get(tok.text)
        if parser is None:
            raise sc.fail("a record keyword")
        if draft.kind == "system" and tok.text not in ("state", "edge"):
            raise sc.fail("a system record ('state' or 'edge')")
        if draft.kind == "infrastructure" and tok.text == "state":
            raise sc.fail("an infrastructure record")
        sc.next()
        parser(sc, draft, tok)
        sc.end_record()


def _rec_location(sc: Scanner, d: _ModelDraft, kw: Token) -> None:
    name = sc.peek()
    if name.kind != "name":
        raise sc.fail("a location name")
    sc.next()
    kind = sc.peek()
    if kind.kind != "name" or kind.text not in ("physical", "virtual"):
        raise sc.fail("'physical' or 'virtual'")
    sc.next()
    data: list[tuple[str, SourceSpan]] = []
    if sc.at_name("data"):
        sc.next()
        data = _name_list(sc)
    d.locations.append((name.text, name.span, kind.text, data))


def _rec_edge(sc: Scanner, d: _ModelDraft, kw: Token) -> None:
    a = sc.peek()
    if a.kind != "name":
        raise sc.fail("a state or location name")
    sc.next()
    b = sc.peek()
    if b.kind != "name":
        raise sc.fail("a state or location name")
    sc.next()
    d.edges.append((a.text, a.span, b.text, b.span))


def _rec_credential(sc: Scanner, d: _ModelDraft, kw: Token) -> None:
    name = sc.peek()
    if name.kind != "name":
        raise sc.fail("a credential name")
    sc.next()
    d.credentials.append((name.text, name.span))


def _rec_actor(sc: Scanner, d: _ModelDraft, kw: Token) -> None:
    name = sc.peek()
    if name.kind != "name":
        raise sc.fail("an actor name")
    sc.next()
    creds: list[tuple[str, SourceSpan]] = []
    role: tuple[str, SourceSpan] | None = None
    while sc.peek().kind == "name" and sc.peek().text in ("creds", "role"):
        which = sc.next().text
        if which == "creds":
            creds = _name_list(sc)
        else:
            entries = _name_list(sc)
            if len(entries) != 1:
                raise sc.fail("exactly one role")
            role = entries[0]
    d.actors.append((name.text, name.span, creds, role))


def _rec_tipped(sc: Scanner, d: _ModelDraft, kw: Token) -> None:
    name = sc.peek()
    if name.kind != "name":
        raise sc.fail("an actor name")
    sc.next()
    sc.expect("impersonates")
    targets = _name_list(sc)
    d.tipped.append((name.text, name.span, targets))


def _rec_policy(sc: Scanner, d: _ModelDraft, kw: Token) -> None:
    loc = sc.peek()
    if loc.kind != "name":
        raise sc.fail("a location name")
    sc.next()
    sc.expect(":")
    cond, refs = _condition(sc)
    sc.expect("->")
    kinds = _name_list(sc)
    for k, span in kinds:
        if k not in ("move", "get", "put"):
            raise ParseError(span, "an action kind (move, get, put)", k)
    d.policies.append((loc.text, loc.span, cond, refs, kinds))


def _rec_hook(sc: Scanner, d: _ModelDraft, kw: Token) -> None:
    sc.expect("on-move")
    actor = sc.peek()
    if actor.kind != "name":
        raise sc.fail("an actor name")
    sc.next()
    which = sc.peek()
    if which.kind != "name" or which.text not in ("refresh", "record"):
        raise sc.fail("'refresh' or 'record'")
    sc.next()
    key = sc.peek()
    if key.kind != "name":
        raise sc.fail("a kv key")
    sc.next()
    pool: list[tuple[str, SourceSpan]] = []
    if which.text == "refresh":
        sc.expect("pool")
        pool = _name_list(sc)
        if not pool:
            raise ParseError(key.span, "a nonempty pool", "{}")
    d.hooks.append((which.text, actor.text, actor.span, key.text, key.span,
                    pool))


def _rec_init(sc: Scanner, d: _ModelDraft, kw: Token) -> None:
    actor = sc.peek()
    if actor.kind != "name":
        raise sc.fail("an actor name")
    sc.next()
    sc.expect("@")
    loc = sc.peek()
    if loc.kind != "name":
        raise sc.fail("a location name")
    sc.next()
    kv: list[tuple[str, str, SourceSpan]] = []
    if sc.at_name("kv"):
        sc.next()
        kv = _kv_list(sc)
    d.init.append((actor.text, actor.span, loc.text, loc.span, kv))


def _pred_ref(sc: Scanner) -> tuple[PredicateRef, SourceSpan]:
    name = sc.peek()
    if name.kind != "name":
        raise sc.fail("a predicate name")
    sc.next()
    args: list[str] = []
    if sc.peek().text == "(":
        sc.next()
        if sc.peek().text != ")":
            while True:
                arg = sc.peek()
                if arg.kind != "name":
                    raise sc.fail("a predicate argument")
                sc.next()
                args.append(arg.text)
                if sc.peek().text == ",":
                    sc.next()
                    continue
                break
        sc.expect(")")
    return PredicateRef(name.text, tuple(args)), name.span


def _rec_predicate(sc: Scanner, d: _ModelDraft, kw: Token) -> None:
    name = sc.peek()
    if name.kind != "name":
        raise sc.fail("a predicate alias name")
    sc.next()
    sc.expect("=")
    ref, span = _pred_ref(sc)
    d.predicates.append((name.text, name.span, ref, span))


def _rec_state(sc: Scanner, d: _ModelDraft, kw: Token) -> None:
    name = sc.peek()
    if name.kind != "name":
        raise sc.fail("a state name")
    sc.next()
    init = False
    labels: list[tuple[str, SourceSpan]] = []
    while sc.peek().kind == "name" and sc.peek().text in ("init", "labels"):
        which = sc.next().text
        if which == "init":
            init = True
        else:
            labels = _name_list(sc)
    d.states.append((name.text, name.span, init, labels))


_RECORD_PARSERS = {
    "location": _rec_location,
    "edge": _rec_edge,
    "credential": _rec_credential,
    "actor": _rec_actor,
    "tipped": _rec_tipped,
    "policy": _rec_policy,
    "hook": _rec_hook,
    "init": _rec_init,
    "predicate": _rec_predicate,
    "state": _rec_state,
}


def _semantic(span: SourceSpan, expected: str, found: str) -> ParseError:
    return ParseError(span, expected, found)


def _build_system(d: _ModelDraft) -> RawSystem:
    states: list[str] = []
    init: list[str] = []
    labels: list[tuple[str, frozenset[str]]] = []
    seen: dict[str, SourceSpan] = {}
    for name, span, is_init, labs in d.states:
        if name in seen:
            raise _semantic(span, "a fresh state name", name)
        seen[name] = span
        states.append(name)
        if is_init:
            init.append(name)
        if labs:
            labels.append((name, frozenset(n for n, _ in labs)))
    edges: list[tuple[str, str]] = []
    for a, sa, b, sb in d.edges:
        if a not in seen:
            raise _semantic(sa, "a declared state", a)
        if b not in seen:
            raise _semantic(sb, "a declared state", b)
        edges.append((a, b))
    return RawSystem(tuple(states), tuple(init), tuple(labels), tuple(edges))


def _build_infra(d: _ModelDraft, partial: bool = False) -> InfraModel:
    loc_ids: dict[str, SourceSpan] = {}
    locations: list[Location] = []
    for name, span, kind, data in d.locations:
        if name in loc_ids:
            raise _semantic(span, "a fresh location id", name)
        loc_ids[name] = span
        locations.append(
            Location(name, kind, frozenset(n for n, _ in data))
        )
    credentials: list[str] = []
    for name, span in d.credentials:
        if name in credentials:
            raise _semantic(span, "a fresh credential name", name)
        credentials.append(name)
    actor_ids: dict[str, SourceSpan] = {}
    actors: list[Actor] = []
    items = frozenset().union(*(l.data for l in locations)) if locations else frozenset()
    holdables = set(credentials) | set(items)
    for name, span, creds, role in d.actors:
        if name in actor_ids:
            raise _semantic(span, "a fresh actor id", name)
        actor_ids[name] = span
        if not partial:
            for c, cspan in creds:
                if c not in holdables:
                    raise _semantic(cspan, "a declared credential", c)
        actors.append(
            Actor(
                name,
                creds=frozenset(c for c, _ in creds),
                role=role[0] if role else None,
            )
        )
    roles = frozenset(a.role for a in actors if a.role)
    if not partial:
        clash = roles & set(actor_ids)
        if clash:
            span = next(s for n, s, _, r in d.actors if r and r[0] in clash)
            raise _semantic(span, "a role distinct from every actor id",
                            sorted(clash)[0])
    for name, span, targets in d.tipped:
        if name not in actor_ids:
            raise _semantic(span, "a declared actor", name)
        if not partial:
            for t, tspan in targets:
                if t not in roles and t not in actor_ids:
                    raise _semantic(tspan, "a declared role or actor", t)
        for i, a in enumerate(actors):
            if a.id == name:
                actors[i] = replace(
                    a, tipped=True,
                    impersonates=frozenset(t for t, _ in targets),
                )
    edges: list[tuple[str, str]] = []
    for a, sa, b, sb in d.edges:
        if not partial:
            if a not in loc_ids:
                raise _semantic(sa, "a declared location", a)
            if b not in loc_ids:
                raise _semantic(sb, "a declared location", b)
        edges.append((a, b))
    policies: dict[str, list] = {}
    policy_order: list[str] = []
    for loc, span, cond, refs, kinds in d.policies:
        if not partial and loc not in loc_ids:
            raise _semantic(span, "a declared location", loc)
        if not partial:
            for kind, ref_name, rspan in refs:
                if kind == "has" and ref_name not in holdables:
                    raise _semantic(rspan, "a declared credential", ref_name)
                if kind == "role" and ref_name not in roles:
                    raise _semantic(rspan, "a declared role", ref_name)
                if kind == "is" and ref_name not in actor_ids:
                    raise _semantic(rspan, "a declared actor", ref_name)
                if kind == "at" and ref_name not in loc_ids:
                    raise _semantic(rspan, "a declared location", ref_name)
        clause = (cond, frozenset(ActionKind(k) for k, _ in kinds))
        if loc not in policies:
            policies[loc] = []
            policy_order.append(loc)
        policies[loc].append(clause)
    init_pos: dict[str, str] = {}
    init_kv: dict[str, dict[str, str]] = {}
    for actor, aspan, loc, lspan, kv in d.init:
        if not partial and actor not in actor_ids:
            raise _semantic(aspan, "a declared actor", actor)
        if not partial and loc not in loc_ids:
            raise _semantic(lspan, "a declared location", loc)
        if actor in init_pos and not partial:
            raise _semantic(aspan, "a single init line per actor", actor)
        init_pos[actor] = loc
        if kv:
            init_kv.setdefault(actor, {})
            for k, v, _ in kv:
                init_kv[actor][k] = v
    hooks: list[Hook] = []
    for kind, actor, aspan, key, kspan, pool in d.hooks:
        if not partial:
            if actor not in actor_ids:
                raise _semantic(aspan, "a declared actor", actor)
            if key not in init_kv.get(actor, {}):
                raise _semantic(
                    kspan, f"a kv key initialized for {actor}", key
                )
        hooks.append(
            Hook(kind, actor, key, tuple(n for n, _ in pool))
        )
    predicates: list[PredicateDef] = []
    pred_names: set[str] = set()
    for name, span, ref, rspan in d.predicates:
        if name in pred_names:
            raise _semantic(span, "a fresh predicate alias", name)
        pred_names.add(name)
        predicates.append(PredicateDef(name, ref))
    if not partial:
        for a in actors:
            if a.id not in init_pos:
                span = actor_ids[a.id]
                raise _semantic(span, f"an init line for actor {a.id}", a.id)
    model = InfraModel(
        locations=tuple(locations),
        edges=tuple(edges),
        credentials=tuple(credentials),
        actors=tuple(actors),
        policies=tuple(
            (loc, tuple(policies[loc])) for loc in policy_order
        ),
        hooks=tuple(hooks),
        init_position=tuple((a.id, init_pos[a.id]) for a in actors
                            if a.id in init_pos),
        init_kv=tuple(
            (a.id, tuple(sorted(init_kv[a.id].items())))
            for a in actors if a.id in init_kv
        ),
        predicates=tuple(predicates),
    )
    if not partial:
        for p in model.predicates:
            try:
                _check_pred(model, p.ref)
            except ValueError as e:
                span = next(s for n, s, r, rs in d.predicates if n == p.name)
                raise _semantic(span, "a well-formed predicate", str(e))
    return model


def parse_model(text: str) -> ParsedModel:
    """Parse a model file into an infrastructure model or a raw system."""
    draft = _parse_records(text)
    if draft.kind == "system":
        return _build_system(draft)
    return _build_infra(draft)


@dataclass(frozen=True)
class ModelPatch:
    """A parsed model-edit file; items replace or extend the base model."""

    draft: _ModelDraft
    summary: str


def parse_patch(text: str) -> ModelPatch:
    """Parse a patch file (model grammar, completeness checks deferred)."""
    draft = _parse_records(text)
    if draft.kind == "system":
        raise ValueError("patches apply to infrastructure models only")
    parts = []
    for name, count in (
        ("location", len(draft.locations)), ("edge", len(draft.edges)),
        ("credential", len(draft.credentials)), ("actor", len(draft.actors)),
        ("tipped", len(draft.tipped)), ("policy", len(draft.policies)),
        ("hook", len(draft.hooks)), ("init", len(draft.init)),
        ("predicate", len(draft.predicates)),
    ):
        if count:
            parts.append(f"{count} {name}{'s' if count > 1 else ''}")
    return ModelPatch(draft, ", ".join(parts) or "empty patch")


def apply_patch(model: InfraModel, patch: ModelPatch) -> InfraModel:
    """Merge a patch into a model: same-named items are replaced, new ones
    appended; policy lines for a location replace that location's policy."""
    base = _model_to_draft(model)
    p = patch.draft
    for rec in p.locations:
        base.locations = [r for r in base.locations if r[0] != rec[0]]
        base.locations.append(rec)
    for rec in p.edges:
        if not any(r[0] == rec[0] and r[2] == rec[2] for r in base.edges):
            base.edges.append(rec)
    for rec in p.credentials:
        if not any(r[0] == rec[0] for r in base.credentials):
            base.credentials.append(rec)
    for rec in p.actors:
        base.actors = [r for r in base.actors if r[0] != rec[0]]
        base.actors.append(rec)
    for rec in p.tipped:
        base.tipped = [r for r in base.tipped if r[0] != rec[0]]
        base.tipped.append(rec)
    patched_locs = {rec[0] for rec in p.policies}
    if patched_locs:
        base.policies = [r for r in base.policies
                         if r[0] not in patched_locs]
        base.policies.extend(p.policies)
    for rec in p.hooks:
        base.hooks = [
            r for r in base.hooks
            if not (r[0] == rec[0] and r[1] == rec[1] and r[3] == rec[3])
        ]
        base.hooks.append(rec)
    for rec in p.init:
        base.init = [r for r in base.init if r[0] != rec[0]]
        base.init.append(rec)
    for rec in p.predicates:
        base.predicates = [r for r in base.predicates if r[0] != rec[0]]
        base.predicates.append(rec)
    try:
        return _build_infra(base)
    except ParseError as e:
        raise ValueError(f"patch produces an invalid model: {e}") from e


_NO_SPAN = SourceSpan(0, 1, 0, 0)


def _model_to_draft(m: InfraModel) -> _ModelDraft:
    d = _ModelDraft()
    d.kind = "infrastructure"
    for l in m.locations:
        d.locations.append(
            (l.id, _NO_SPAN, l.kind, [(x, _NO_SPAN) for x in sorted(l.data)])
        )
    for a, b in m.edges:
        d.edges.append((a, _NO_SPAN, b, _NO_SPAN))
    for c in m.credentials:
        d.credentials.append((c, _NO_SPAN))
    for a in m.actors:
        d.actors.append(
            (a.id, _NO_SPAN, [(c, _NO_SPAN) for c in sorted(a.creds)],
             (a.role, _NO_SPAN) if a.role else None)
        )
        if a.tipped:
            d.tipped.append(
                (a.id, _NO_SPAN,
                 [(t, _NO_SPAN) for t in sorted(a.impersonates)])
            )
    for loc, clauses in m.policies:
        for cond, kinds in clauses:
            d.policies.append((loc, _NO_SPAN, cond, [],
                               [(k.value, _NO_SPAN) for k in KIND_ORDER
                                if k in kinds]))
    for h in m.hooks:
        d.hooks.append((h.kind, h.actor, _NO_SPAN, h.key, _NO_SPAN,
                        [(v, _NO_SPAN) for v in h.pool]))
    kv_map = dict(m.init_kv)
    for a, loc in m.init_position:
        kv = [(k, v, _NO_SPAN) for k, v in kv_map.get(a, ())]
        d.init.append((a, _NO_SPAN, loc, _NO_SPAN, kv))
    for p in m.predicates:
        d.predicates.append((p.name, _NO_SPAN, p.ref, _NO_SPAN))
    return d



# ---------------------------------------------------------------------------
# queries


def _query_atom(sc: Scanner) -> ctl.CtlFormula:
    tok = sc.peek()
    if tok.text == "{":
        keys = _name_list(sc)
        return ctl.Atom(frozenset(k for k, _ in keys))
    ref, _ = _pred_ref(sc)
    return ctl.Atom(ref)


def _query_unary(sc: Scanner) -> ctl.CtlFormula:
    tok = sc.peek()
    if tok.text == "(":
        sc.next()
        f = _query_or(sc)
        sc.expect(")")
        return f
    if tok.kind == "name":
        if tok.text == "not":
            sc.next()
            return ctl.Not(_query_unary(sc))
        if tok.text == "EF":
            sc.next()
            return ctl.EF(_query_unary(sc))
        if tok.text == "AG":
            sc.next()
            return ctl.AG(_query_unary(sc))
    if tok.text == "{" or tok.kind == "name":
        return _query_atom(sc)
    raise sc.fail("a formula")


def _query_and(sc: Scanner) -> ctl.CtlFormula:
    f = _query_unary(sc)
    while sc.at_name("and"):
        sc.next()
        f = ctl.And(f, _query_unary(sc))
    return f


def _query_or(sc: Scanner) -> ctl.CtlFormula:
    f = _query_and(sc)
    while sc.at_name("or"):
        sc.next()
        f = ctl.Or(f, _query_and(sc))
    return f


def parse_query(text: str) -> ctl.CtlFormula:
    """Parse a query: EF/AG, not/and/or, predicates, literal state sets."""
    sc = Scanner(text)
    f = _query_or(sc)
    if sc.peek().kind != "eof":
        raise sc.fail("end of input")
    return f


def parse_target(text: str) -> ctl.Atom:
    """Parse a bare target: a predicate instance or a literal state set."""
    sc = Scanner(text)
    atom = _query_atom(sc)
    if sc.peek().kind != "eof":
        raise sc.fail("end of input")
    return atom


def _key_sorted(keys: Iterable[str]) -> list[str]:
    return sorted(keys, key=lambda k: (len(k), k))


def emit_query(f: ctl.CtlFormula) -> str:
    """Render a query formula; parsing the result yields `f` back."""
    match f:
        case ctl.Atom(ref):
            if isinstance(ref, PredicateRef):
                return ref.text()
            if isinstance(ref, frozenset):
                return "{" + ",".join(_key_sorted(ref)) + "}"
            return str(ref)
        case ctl.Not(c):
            return f"not {_emit_query_operand(c)}"
        case ctl.EF(c):
            return f"EF {_emit_query_operand(c)}"
        case ctl.AG(c):
            return f"AG {_emit_query_operand(c)}"
        case ctl.And(a, b):
            return (
                f"{_emit_query_nested(a, ctl.Or)} and "
                f"{_emit_query_nested(b, (ctl.Or, ctl.And))}"
            )
        case ctl.Or(a, b):
            return (
                f"{emit_query(a)} or {_emit_query_nested(b, ctl.Or)}"
            )
    raise ValueError(f"formula not expressible in the query grammar: {f!r}")


def _emit_query_operand(f: ctl.CtlFormula) -> str:
    if isinstance(f, (ctl.And, ctl.Or)):
        return f"({emit_query(f)})"
    return emit_query(f)


def _emit_query_nested(f: ctl.CtlFormula, wrap) -> str:
    if isinstance(f, wrap):
        return f"({emit_query(f)})"
    return emit_query(f)


# ---------------------------------------------------------------------------
# attack trees


def _state_set(sc: Scanner) -> frozenset[str]:
    return frozenset(k for k, _ in _name_list(sc))


def _signature(sc: Scanner) -> AttackSignature:
    sc.expect("(")
    pre = _state_set(sc)
    sc.expect(",")
    post = _state_set(sc)
    sc.expect(")")
    return AttackSignature(pre, post)


def _tree(sc: Scanner) -> AttackTree:
    tok = sc.peek()
    if tok.kind == "name" and tok.text == "N":
        sc.next()
        return Base(_signature(sc))
    if tok.text == "[":
        sc.next()
        children: list[AttackTree] = []
        if sc.peek().text != "]":
            while True:
                children.append(_tree(sc))
                if sc.peek().text == ",":
                    sc.next()
                    continue
                break
        sc.expect("]")
        op = sc.peek()
        if op.kind != "name" or op.text not in ("AND", "OR"):
            raise sc.fail("'AND' or 'OR'")
        sc.next()
        sig = _signature(sc)
        cls = AndTree if op.text == "AND" else OrTree
        return cls(tuple(children), sig)
    raise sc.fail("an attack tree")


def parse_tree(text: str) -> AttackTree:
    """Parse a tree over state keys: `[N({a},{b}), ...] AND ({a},{c})`."""
    sc = Scanner(text)
    t = _tree(sc)
    if sc.peek().kind != "eof":
        raise sc.fail("end of input")
    return t


def _set_text(xs: frozenset) -> str:
    return "{" + ",".join(_key_sorted(str(x) for x in xs)) + "}"


def _sig_text(sig: AttackSignature) -> str:
    return f"({_set_text(sig.pre)},{_set_text(sig.post)})"


def emit_tree(tree: AttackTree) -> str:
    """Render a tree over state keys; parse_tree(emit_tree(t)) == t."""
    match tree:
        case Base(sig):
            return f"N{_sig_text(sig)}"
        case AndTree(children=cs, sig=sig):
            inner = ", ".join(emit_tree(c) for c in cs)
            return f"[{inner}] AND {_sig_text(sig)}"
        case OrTree(children=cs, sig=sig):
            inner = ", ".join(emit_tree(c) for c in cs)
            return f"[{inner}] OR {_sig_text(sig)}"
    raise TypeError(f"not an attack tree: {tree!r}")


def bind_tree(tree: AttackTree, index: Mapping[str, int]) -> AttackTree:
    """Map a key-level tree onto interned state ids."""

    def bind_set(xs: frozenset) -> frozenset[int]:
        out = set()
        for k in xs:
            if k not in index:
                raise ValueError(f"unknown state key {k!r}")
            out.add(index[k])
        return frozenset(out)

    def bind_sig(sig: AttackSignature) -> AttackSignature:
        return AttackSignature(bind_set(sig.pre), bind_set(sig.post))

    match tree:
        case Base(sig):
            return Base(bind_sig(sig))
        case AndTree(children=cs, sig=sig):
            return AndTree(tuple(bind_tree(c, index) for c in cs),
                           bind_sig(sig))
        case OrTree(children=cs, sig=sig):
            return OrTree(tuple(bind_tree(c, index) for c in cs),
                          bind_sig(sig))
    raise TypeError(f"not an attack tree: {tree!r}")


def unbind_tree(tree: AttackTree, keys) -> AttackTree:
    """Map an id-level tree back onto its state keys."""

    def unbind_sig(sig: AttackSignature) -> AttackSignature:
        return AttackSignature(
            frozenset(str(keys[i]) for i in sig.pre),
            frozenset(str(keys[i]) for i in sig.post),
        )

    match tree:
        case Base(sig):
            return Base(unbind_sig(sig))
        case AndTree(children=cs, sig=sig):
            return AndTree(tuple(unbind_tree(c, keys) for c in cs),
                           unbind_sig(sig))
        case OrTree(children=cs, sig=sig):
            return OrTree(tuple(unbind_tree(c, keys) for c in cs),
                          unbind_sig(sig))
    raise TypeError(f"not an attack tree: {tree!r}")


# ---------------------------------------------------------------------------
# attributions


def _fraction(tok: Token) -> Fraction:
    try:
        return Fraction(tok.text)
    except (ValueError, ZeroDivisionError):
        raise ParseError(tok.span, "a rational number", tok.text) from None


def parse_attribution(text: str) -> tuple[Attribution, AttrLaws]:
    """Parse an attribution file into (entries, combination laws).

    Lines: ``cost N({a},{b}) = 2``, ``prob N({a},{b}) = 0.5``,
    ``default cost = 1``, ``default prob = 1``, ``law or-prob noisy-or``.
    Signatures are key-level; bind with :func:`bind_attribution`.
    """
    sc = Scanner(text, keep_newlines=True)
    cost: dict[AttackSignature, Fraction] = {}
    prob: dict[AttackSignature, Fraction] = {}
    default_cost: Fraction | None = None
    default_prob: Fraction | None = None
    laws = AttrLaws()
    sc.skip_newlines()
    if sc.at_name("format"):
        sc.next()
        tok = sc.peek()
        if tok.kind != "number" or tok.text != "1":
            raise sc.fail("format 1")
        sc.next()
        sc.end_record()
    while True:
        sc.skip_newlines()
        tok = sc.peek()
        if tok.kind == "eof":
            break
        if tok.kind != "name" or tok.text not in ("cost", "prob", "default",
                                                  "law"):
            raise sc.fail("'cost', 'prob', 'default' or 'law'")
        sc.next()
        if tok.text == "law":
            which = sc.peek()
            if which.kind != "name" or which.text != "or-prob":
                raise sc.fail("'or-prob'")
            sc.next()
            choice = sc.peek()
            if choice.kind != "name" or choice.text not in OR_PROB_LAWS:
                raise sc.fail("'max' or 'noisy-or'")
            sc.next()
            laws = AttrLaws(or_prob=OR_PROB_LAWS[choice.text])
            sc.end_record()
            continue
        if tok.text == "default":
            which = sc.peek()
            if which.kind != "name" or which.text not in ("cost", "prob"):
                raise sc.fail("'cost' or 'prob'")
            sc.next()
            sc.expect("=")
            val = sc.peek()
            if val.kind != "number":
                raise sc.fail("a rational number")
            sc.next()
            q = _fraction(val)
            if which.text == "cost":
                default_cost = q
            else:
                if not 0 <= q <= 1:
                    raise ParseError(val.span, "a probability in [0,1]",
                                     val.text)
                default_prob = q
            sc.end_record()
            continue
        sc.expect("N")
        sig = _signature(sc)
        sc.expect("=")
        val = sc.peek()
        if val.kind != "number":
            raise sc.fail("a rational number")
        sc.next()
        q = _fraction(val)
        if tok.text == "cost":
            if q < 0:
                raise ParseError(val.span, "a non-negative cost", val.text)
            cost[sig] = q
        else:
            if not 0 <= q <= 1:
                raise ParseError(val.span, "a probability in [0,1]",
                                 val.text)
            prob[sig] = q
        sc.end_record()
    return (
        Attribution(cost=cost, prob=prob, default_cost=default_cost,
                    default_prob=default_prob),
        laws,
    )


def bind_attribution(
    attr: Attribution, index: Mapping[str, int]
) -> Attribution:
    """Map key-level attribution signatures onto interned state ids."""

    def bind_sig(sig: AttackSignature) -> AttackSignature:
        for k in sig.pre | sig.post:
            if k not in index:
                raise ValueError(f"unknown state key {k!r}")
        return AttackSignature(
            frozenset(index[k] for k in sig.pre),
            frozenset(index[k] for k in sig.post),
        )

    return Attribution(
        cost={bind_sig(s): q for s, q in attr.cost.items()},
        prob={bind_sig(s): q for s, q in attr.prob.items()},
        default_cost=attr.default_cost,
        default_prob=attr.default_prob,
    )


# ---------------------------------------------------------------------------
# model emission


def _braces(names: Iterable[str]) -> str:
    return "{" + ",".join(names) + "}"


def _emit_condition(cond: Condition, parent: str = "or") -> str:
    match cond:
        case CondTrue():
            return "true"
        case HasCredential(name):
            return f"has({name})"
        case HasRole(name):
            return f"role({name})"
        case IsIdentity(name):
            return f"is({name})"
        case AtLocation(name):
            return f"at({name})"
        case CondNot(c):
            inner = _emit_condition(c, "not")
            if isinstance(c, (CondAnd, CondOr)):
                inner = f"({inner})"
            return f"not {inner}"
        case CondAnd(a, b):
            left = _emit_condition(a, "and")
            right = _emit_condition(b, "and")
            if isinstance(a, CondOr):
                left = f"({left})"
            if isinstance(b, (CondOr, CondAnd)):
                right = f"({right})"
            return f"{left} and {right}"
        case CondOr(a, b):
            left = _emit_condition(a, "or")
            right = _emit_condition(b, "or")
            if isinstance(b, CondOr):
                right = f"({right})"
            return f"{left} or {right}"
    raise TypeError(f"not a condition: {cond!r}")


def emit_model(model: ParsedModel) -> str:
    """Render a model; parse_model(emit_model(m)) == m."""
    lines = ["format 1"]
    if isinstance(model, RawSystem):
        lines.append("system")
        lines.append("")
        labels = dict(model.labels)
        init = set(model.init)
        for s in model.states:
            line = f"state {s}"
            if s in init:
                line += " init"
            if labels.get(s):
                line += f" labels{_braces(sorted(labels[s]))}"
            lines.append(line)
        for a, b in model.edges:
            lines.append(f"edge {a} {b}")
        return "\n".join(lines) + "\n"
    lines.append("infrastructure")
    lines.append("")
    for l in model.locations:
        line = f"location {l.id} {l.kind}"
        if l.data:
            line += f" data{_braces(sorted(l.data))}"
        lines.append(line)
    for a, b in model.edges:
        lines.append(f"edge {a} {b}")
    for c in model.credentials:
        lines.append(f"credential {c}")
    for a in model.actors:
        line = f"actor {a.id}"
        if a.creds:
            line += f" creds{_braces(sorted(a.creds))}"
        if a.role:
            line += f" role{{{a.role}}}"
        lines.append(line)
    for a in model.actors:
        if a.tipped:
            lines.append(
                f"tipped {a.id} impersonates"
                f"{_braces(sorted(a.impersonates))}"
            )
    for loc, clauses in model.policies:
        for cond, kinds in clauses:
            names = [k.value for k in KIND_ORDER if k in kinds]
            lines.append(
                f"policy {loc}: {_emit_condition(cond)} -> {_braces(names)}"
            )
    for h in model.hooks:
        if h.kind == "refresh":
            lines.append(
                f"hook on-move {h.actor} refresh {h.key} "
                f"pool{_braces(h.pool)}"
            )
        else:
            lines.append(f"hook on-move {h.actor} record {h.key}")
    kv_map = dict(model.init_kv)
    for a, loc in model.init_position:
        line = f"init {a}@{loc}"
        kv = kv_map.get(a, ())
        if kv:
            line += " kv{" + ",".join(f"{k}={v}" for k, v in kv) + "}"
        lines.append(line)
    for p in model.predicates:
        lines.append(f"predicate {p.name} = {p.ref.text()}")
    return "\n".join(lines) + "\n"
