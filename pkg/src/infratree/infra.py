"""Infrastructure models: actors, locations, policies, credentials, insiders.

A model's action semantics (move/get/put, gated by per-location policies)
generates a finite transition system: :func:`explore` interns canonicalized
states breadth-first and returns a Kripke structure whose edges are
labelled with the action instances that produced them.

Insiderness is operationalized as impersonation: a tipped actor may
additionally satisfy identity/role conditions as if it were any of its
declared impersonation targets.  Ephemeral identifiers live in a per-actor
key/value store; a refresh-on-move hook rotates them through a finite pool
and a record-on-move hook makes the destination location observe the
current value, which is what the linkability predicate inspects.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, Union

from .statespace import KripkeStructure, TransitionSystem, make_kripke


class ActionKind(Enum):
    MOVE = "move"
    GET = "get"
    PUT = "put"


KIND_ORDER = (ActionKind.MOVE, ActionKind.GET, ActionKind.PUT)


@dataclass(frozen=True)
class ActionInstance:
    """A concrete action: who does what, where, to which item."""

    actor: str
    kind: ActionKind
    origin: str | None = None  # move: source location
    target: str | None = None  # move: destination; get/put: the location
    item: str | None = None  # get/put: the data item

    def label(self) -> str:
        if self.kind is ActionKind.MOVE:
            return f"move({self.actor},{self.origin}->{self.target})"
        return f"{self.kind.value}({self.actor},{self.item}@{self.target})"


@dataclass(frozen=True)
class CondTrue:
    pass


@dataclass(frozen=True)
class HasCredential:
    name: str


@dataclass(frozen=True)
class HasRole:
    name: str


@dataclass(frozen=True)
class IsIdentity:
    name: str


@dataclass(frozen=True)
class AtLocation:
    name: str


@dataclass(frozen=True)
class CondNot:
    child: "Condition"


@dataclass(frozen=True)
class CondAnd:
    left: "Condition"
    right: "Condition"


@dataclass(frozen=True)
class CondOr:
    left: "Condition"
    right: "Condition"


Condition = Union[
    CondTrue, HasCredential, HasRole, IsIdentity, AtLocation,
    CondNot, CondAnd, CondOr,
]

PolicyClause = tuple  # (Condition, frozenset[ActionKind])


@dataclass(frozen=True)
class Actor:
    id: str
    creds: frozenset[str] = frozenset()
    role: str | None = None
    tipped: bool = False
    impersonates: frozenset[str] = frozenset()


@dataclass(frozen=True)
class Location:
    id: str
    kind: str = "physical"  # physical | virtual
    data: frozenset[str] = frozenset()


@dataclass(frozen=True)
class Hook:
    """An on-move hook: refresh a kv key from a pool, or record its value
    at the destination."""

    kind: str  # "refresh" | "record"
    actor: str
    key: str
    pool: tuple[str, ...] = ()


@dataclass(frozen=True)
class PredicateRef:
    """A reference to a state predicate, e.g. actor-at(alice, office)."""

    name: str
    args: tuple[str, ...] = ()

    def text(self) -> str:
        if not self.args:
            return self.name
        return f"{self.name}({', '.join(self.args)})"


@dataclass(frozen=True)
class PredicateDef:
    """A named alias for a predicate instance, declared in the model."""

    name: str
    ref: PredicateRef


@dataclass(frozen=True)
class InfraModel:
    locations: tuple[Location, ...]
    edges: tuple[tuple[str, str], ...]  # undirected location connectivity
    credentials: tuple[str, ...]
    actors: tuple[Actor, ...]
    policies: tuple[tuple[str, tuple[PolicyClause, ...]], ...]
    hooks: tuple[Hook, ...]
    init_position: tuple[tuple[str, str], ...]
    init_kv: tuple[tuple[str, tuple[tuple[str, str], ...]], ...]
    predicates: tuple[PredicateDef, ...]

    def location_ids(self) -> tuple[str, ...]:
        return tuple(l.id for l in self.locations)

    def actor_ids(self) -> tuple[str, ...]:
        return tuple(a.id for a in self.actors)

    def actor_by_id(self, name: str) -> Actor:
        for a in self.actors:
            if a.id == name:
                return a
        raise ValueError(f"undeclared actor {name!r}")

    def location_by_id(self, name: str) -> Location:
        for l in self.locations:
            if l.id == name:
                return l
        raise ValueError(f"undeclared location {name!r}")

    def roles(self) -> frozenset[str]:
        return frozenset(a.role for a in self.actors if a.role)

    def data_items(self) -> frozenset[str]:
        items = set()
        for l in self.locations:
            items |= l.data
        return frozenset(items)

    def policy_for(self, loc: str) -> tuple[PolicyClause, ...]:
        for name, clauses in self.policies:
            if name == loc:
                return clauses
        return ()

    def neighbors(self, loc: str) -> tuple[str, ...]:
        pairs = set()
        for a, b in self.edges:
            pairs.add((a, b))
            pairs.add((b, a))
        return tuple(
            m for m in self.location_ids() if (loc, m) in pairs and m != loc
        )

    def predicate_def(self, name: str) -> PredicateDef | None:
        for p in self.predicates:
            if p.name == name:
                return p
        return None


@dataclass(frozen=True)
class InfraState:
    """A canonical assignment of actors and data to locations.

    All maps are total over the declared actors/locations and stored as
    sorted tuples, so equal states intern identically.
    """

    position: tuple[tuple[str, str], ...]
    holdings: tuple[tuple[str, frozenset[str]], ...]
    loc_data: tuple[tuple[str, frozenset[str]], ...]
    kv: tuple[tuple[str, tuple[tuple[str, str], ...]], ...]

    @staticmethod
    def make(
        position: Mapping[str, str],
        holdings: Mapping[str, Iterable[str]],
        loc_data: Mapping[str, Iterable[str]],
        kv: Mapping[str, Mapping[str, str]],
    ) -> "InfraState":
        return InfraState(
            position=tuple(sorted(position.items())),
            holdings=tuple(
                sorted((a, frozenset(v)) for a, v in holdings.items())
            ),
            loc_data=tuple(
                sorted((l, frozenset(v)) for l, v in loc_data.items())
            ),
            kv=tuple(
                sorted(
                    (a, tuple(sorted(store.items())))
                    for a, store in kv.items()
                )
            ),
        )

    def position_of(self, actor: str) -> str:
        return dict(self.position)[actor]

    def holdings_of(self, actor: str) -> frozenset[str]:
        return dict(self.holdings)[actor]

    def data_at(self, loc: str) -> frozenset[str]:
        return dict(self.loc_data)[loc]

    def kv_of(self, actor: str) -> dict[str, str]:
        return dict(dict(self.kv)[actor])

    def to_dicts(self):
        return (
            dict(self.position),
            {a: set(v) for a, v in self.holdings},
            {l: set(v) for l, v in self.loc_data},
            {a: dict(store) for a, store in self.kv},
        )

    def describe(self) -> str:
        """One-line human rendering, deterministic."""
        parts = [f"{a}@{l}" for a, l in self.position]
        for a, store in self.kv:
            parts.extend(f"{a}.{k}={v}" for k, v in store)
        for l, items in self.loc_data:
            if items:
                parts.append(f"{l}:{{{','.join(sorted(items))}}}")
        for a, items in self.holdings:
            if items:
                parts.append(f"{a} holds {{{','.join(sorted(items))}}}")
        return " ".join(parts)


def initial_state(m: InfraModel) -> InfraState:
    position = dict(m.init_position)
    kv_declared = dict(m.init_kv)
    return InfraState.make(
        position={a.id: position[a.id] for a in m.actors},
        holdings={a.id: a.creds for a in m.actors},
        loc_data={l.id: l.data for l in m.locations},
        kv={a.id: dict(kv_declared.get(a.id, ())) for a in m.actors},
    )


def _personas(m: InfraModel, actor: Actor) -> list[tuple[str, str | None]]:
    """(identity, role) pairs the actor may evaluate conditions under.

    The actor's own persona always comes first; a tipped actor adds one
    persona per impersonation target (assumed identity with that actor's
    role, or own identity with the assumed role).
    """
    personas: list[tuple[str, str | None]] = [(actor.id, actor.role)]
    if actor.tipped:
        actor_ids = set(m.actor_ids())
        for t in sorted(actor.impersonates):
            if t in actor_ids:
                personas.append((t, m.actor_by_id(t).role))
            else:
                personas.append((actor.id, t))
    return personas


def _eval_condition(
    cond: Condition,
    state: InfraState,
    actor: Actor,
    persona: tuple[str, str | None],
) -> bool:
    match cond:
        case CondTrue():
            return True
        case HasCredential(name):
            return name in state.holdings_of(actor.id)
        case HasRole(name):
            return persona[1] == name
        case IsIdentity(name):
            return persona[0] == name
        case AtLocation(name):
            return state.position_of(actor.id) == name
        case CondNot(c):
            return not _eval_condition(c, state, actor, persona)
        case CondAnd(a, b):
            return _eval_condition(a, state, actor, persona) and _eval_condition(
                b, state, actor, persona
            )
        case CondOr(a, b):
            return _eval_condition(a, state, actor, persona) or _eval_condition(
                b, state, actor, persona
            )
    raise TypeError(f"not a condition: {cond!r}")


def enables(
    m: InfraModel, state: InfraState, actor_id: str, loc_id: str,
    kind: ActionKind,
) -> bool:
    """Whether the policy at `loc_id` permits `actor_id` to perform `kind`.

    True iff some policy clause at the location allows the action kind and
    its condition evaluates true under the actor's own persona or, when
    tipped, under any impersonated persona.  A location without policy
    clauses permits nothing.
    """
    actor = m.actor_by_id(actor_id)
    m.location_by_id(loc_id)
    clauses = m.policy_for(loc_id)
    if not clauses:
        return False
    personas = _personas(m, actor)
    for cond, allowed in clauses:
        if kind not in allowed:
            continue
        if any(_eval_condition(cond, state, actor, p) for p in personas):
            return True
    return False


def _run_move_hooks(
    m: InfraModel, actor_id: str, dest: str,
    kv: dict[str, dict[str, str]], loc_data: dict[str, set[str]],
) -> None:
    # Refresh first, so the destination observes the new value.
    for h in m.hooks:
        if h.kind == "refresh" and h.actor == actor_id:
            used = {
                store.get(h.key) for store in kv.values() if h.key in store
            }
            for v in h.pool:
                if v not in used:
                    kv[actor_id][h.key] = v
                    break
    for h in m.hooks:
        if h.kind == "record" and h.actor == actor_id:
            value = kv[actor_id].get(h.key)
            if value is not None:
                loc_data[dest].add(value)


def apply_action(
    m: InfraModel, state: InfraState, act: ActionInstance
) -> InfraState:
    """Apply one enabled action instance, returning the canonical result.

    move updates the actor's position and runs its on-move hooks; get
    copies a data item from the location into the actor's holdings; put
    copies an item from the holdings onto the location.
    """
    position, holdings, loc_data, kv = state.to_dicts()
    actor = m.actor_by_id(act.actor)
    here = position[actor.id]
    if act.kind is ActionKind.MOVE:
        if act.origin != here:
            raise ValueError(
                f"move rejected: {actor.id} is at {here}, not {act.origin}"
            )
        dest = act.target
        m.location_by_id(dest)
        if dest not in m.neighbors(here):
            raise ValueError(
                f"move rejected: no edge between {here} and {dest}"
            )
        if not enables(m, state, actor.id, dest, ActionKind.MOVE):
            raise ValueError(
                f"move rejected: policy at {dest} does not enable "
                f"{actor.id} to move there"
            )
        position[actor.id] = dest
        _run_move_hooks(m, actor.id, dest, kv, loc_data)
    elif act.kind is ActionKind.GET:
        loc = act.target
        if loc != here:
            raise ValueError(f"get rejected: {actor.id} is not at {loc}")
        if not enables(m, state, actor.id, loc, ActionKind.GET):
            raise ValueError(
                f"get rejected: policy at {loc} does not enable get for "
                f"{actor.id}"
            )
        if act.item not in loc_data[loc]:
            raise ValueError(
                f"get rejected: item {act.item!r} not present at {loc}"
            )
        holdings[actor.id].add(act.item)
    elif act.kind is ActionKind.PUT:
        loc = act.target
        if loc != here:
            raise ValueError(f"put rejected: {actor.id} is not at {loc}")
        if not enables(m, state, actor.id, loc, ActionKind.PUT):
            raise ValueError(
                f"put rejected: policy at {loc} does not enable put for "
                f"{actor.id}"
            )
        if act.item not in holdings[actor.id]:
            raise ValueError(
                f"put rejected: {actor.id} does not hold {act.item!r}"
            )
        loc_data[loc].add(act.item)
    else:
        raise TypeError(f"unknown action kind {act.kind!r}")
    return InfraState.make(position, holdings, loc_data, kv)


def enumerate_actions(m: InfraModel, state: InfraState) -> list[ActionInstance]:
    """All enabled action instances, in deterministic order.

    Actors in declaration order, then kinds (move, get, put), then targets:
    move destinations in location declaration order, items in sorted order.
    """
    out: list[ActionInstance] = []
    for actor in m.actors:
        here = state.position_of(actor.id)
        for kind in KIND_ORDER:
            if kind is ActionKind.MOVE:
                for dest in m.neighbors(here):
                    if enables(m, state, actor.id, dest, kind):
                        out.append(
                            ActionInstance(actor.id, kind, origin=here,
                                           target=dest)
                        )
            elif kind is ActionKind.GET:
                if enables(m, state, actor.id, here, kind):
                    for item in sorted(state.data_at(here)):
                        out.append(
                            ActionInstance(actor.id, kind, target=here,
                                           item=item)
                        )
            else:
                if enables(m, state, actor.id, here, kind):
                    for item in sorted(state.holdings_of(actor.id)):
                        out.append(
                            ActionInstance(actor.id, kind, target=here,
                                           item=item)
                        )
    return out


@dataclass(frozen=True)
class Exploration:
    """A explored state space: interned states, labelled edges, and the
    truncation flag (set when the state bound was hit before closure)."""

    kripke: KripkeStructure
    states: tuple[InfraState, ...]
    edge_actions: Mapping[tuple[int, int], ActionInstance]
    truncated: bool

    def state_key(self, i: int) -> str:
        return f"s{i}"


def explore(m: InfraModel, bound: int = 10000) -> Exploration:
    """Breadth-first closure of the action semantics from the initial state.

    States are canonicalized and interned in discovery order (the initial
    state is s0).  Exploration stops when closed, or as soon as one more
    state would exceed `bound`; the latter sets the truncation flag and the
    partial structure is returned.
    """
    if bound < 1:
        raise ValueError("exploration bound must be at least 1")
    start = initial_state(m)
    states: list[InfraState] = [start]
    index: dict[InfraState, int] = {start: 0}
    edges: list[tuple[int, int]] = []
    edge_actions: dict[tuple[int, int], ActionInstance] = {}
    queue: deque[int] = deque([0])
    truncated = False
    while queue and not truncated:
        x = queue.popleft()
        for act in enumerate_actions(m, states[x]):
            nxt = apply_action(m, states[x], act)
            if nxt not in index:
                if len(states) >= bound:
                    truncated = True
                    break
                index[nxt] = len(states)
                states.append(nxt)
                queue.append(index[nxt])
            y = index[nxt]
            edges.append((x, y))
            edge_actions.setdefault((x, y), act)
    tup = tuple(states)
    labels = _alias_labels(m, tup)
    n = len(tup)
    succ = [set() for _ in range(n)]
    pred = [set() for _ in range(n)]
    for a, b in edges:
        succ[a].add(b)
        pred[b].add(a)
    ts = TransitionSystem(
        keys=tuple(f"s{i}" for i in range(n)),
        step=tuple(frozenset(s) for s in succ),
        rstep=tuple(frozenset(p) for p in pred),
        labels=labels,
    )
    return Exploration(
        kripke=make_kripke(ts, frozenset({0})),
        states=tup,
        edge_actions=edge_actions,
        truncated=truncated,
    )


def _alias_labels(
    m: InfraModel, states: tuple[InfraState, ...]
) -> dict[int, frozenset[str]]:
    labels: dict[int, frozenset[str]] = {}
    for i, s in enumerate(states):
        names = frozenset(
            p.name for p in m.predicates if _holds(m, s, p.ref)
        )
        if names:
            labels[i] = names
    return labels


BUILTIN_PREDICATES = (
    "true", "actor-at", "actor-has", "location-holds", "kv-equals",
    "linkable",
)


def _check_pred(m: InfraModel, ref: PredicateRef) -> None:
    arity = {"true": 0, "actor-at": 2, "actor-has": 2, "location-holds": 2,
             "kv-equals": 3, "linkable": 1}
    if ref.name not in arity:
        raise ValueError(f"unknown predicate {ref.name!r}")
    if len(ref.args) != arity[ref.name]:
        raise ValueError(
            f"predicate {ref.name} takes {arity[ref.name]} argument(s), "
            f"got {len(ref.args)}"
        )
    if ref.name in ("actor-at", "actor-has", "kv-equals", "linkable"):
        m.actor_by_id(ref.args[0])
    if ref.name == "actor-at":
        m.location_by_id(ref.args[1])
    if ref.name == "location-holds":
        m.location_by_id(ref.args[0])


def _holds(m: InfraModel, state: InfraState, ref: PredicateRef) -> bool:
    match ref.name:
        case "true":
            return True
        case "actor-at":
            return state.position_of(ref.args[0]) == ref.args[1]
        case "actor-has":
            return ref.args[1] in state.holdings_of(ref.args[0])
        case "location-holds":
            return ref.args[1] in state.data_at(ref.args[0])
        case "kv-equals":
            return state.kv_of(ref.args[0]).get(ref.args[1]) == ref.args[2]
        case "linkable":
            # The actor's current ephemeral value has been observed at two
            # distinct locations.
            store = state.kv_of(ref.args[0])
            for value in store.values():
                seen = sum(
                    1 for _, items in state.loc_data if value in items
                )
                if seen >= 2:
                    return True
            return False
    raise ValueError(f"unknown predicate {ref.name!r}")


def predicate_states(
    m: InfraModel, exploration: Exploration, pred: PredicateRef | str
) -> frozenset[int]:
    """Interned states satisfying a predicate instance or declared alias."""
    if isinstance(pred, str):
        pred = PredicateRef(pred, ())
    alias = m.predicate_def(pred.name)
    if alias is not None and not pred.args:
        pred = alias.ref
    _check_pred(m, pred)
    return frozenset(
        i for i, s in enumerate(exploration.states) if _holds(m, s, pred)
    )
