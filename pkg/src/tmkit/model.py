"""Static region models.

A model is a set of thimacs (things-that-are-machines) owning actions and
storages, wired together by flows (solid arrows: things moving between
actions) and triggers (dashed arrows: one action setting off another,
optionally under a condition).

Models are immutable values.  They are assembled through ``ModelBuilder``,
which checks references as elements are added; everything after that --
``validate``, ``simplify`` -- is a pure function returning new values.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Optional

from .errors import TmkitError

ACTION_KINDS = ("create", "process", "release", "transfer", "receive")

#: Action kinds removed by ``simplify``: the machinery that merely moves
#: things around, as opposed to the kinds that originate or change them.
TRANSPORT_KINDS = frozenset({"release", "transfer", "receive"})

_STORAGE = "storage"

#: Legal (from-kind, to-kind) pairs for a flow whose endpoints share an
#: owner.  Kept as data so the table can be amended in one place.
LEGAL_FLOW_PAIRS = frozenset(
    {
        ("create", "process"),
        ("create", "release"),
        ("receive", "process"),
        ("receive", "release"),
        ("process", "release"),
        ("release", "transfer"),
        ("transfer", "receive"),
    }
    # Any non-transfer action may read or write a storage.
    | {(kind, _STORAGE) for kind in ("create", "process", "receive", "release")}
    | {(_STORAGE, kind) for kind in ("create", "process", "receive", "release")}
)


class ModelError(TmkitError):
    """A model could not be assembled as requested."""


class SimplifyError(TmkitError):
    """``simplify`` refused a model that has validation errors."""

    def __init__(self, diagnostics: tuple["Diagnostic", ...]):
        self.diagnostics = diagnostics
        lines = ", ".join(str(d) for d in diagnostics)
        super().__init__(f"model has validation errors: {lines}")


@dataclass(frozen=True)
class Thimac:
    id: str
    name: str
    parent: Optional[str] = None
    note: Optional[str] = None


@dataclass(frozen=True)
class Action:
    id: str
    kind: str
    owner: str
    label: Optional[str] = None
    anchor: Optional[str] = None

    def __post_init__(self) -> None:
        if self.kind not in ACTION_KINDS:
            raise ModelError(f"unknown action kind {self.kind!r} for {self.id!r}")


@dataclass(frozen=True)
class Storage:
    id: str
    owner: str
    name: str


@dataclass(frozen=True)
class Flow:
    id: str
    src: str
    dst: str


@dataclass(frozen=True)
class Trigger:
    id: str
    src: str
    dst: str
    condition: Optional[str] = None


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    rule: str  # "R1" .. "R8"
    subject: str  # id of the offending element
    message: str

    def __str__(self) -> str:
        return f"{self.severity} {self.rule} {self.subject}: {self.message}"


@dataclass(frozen=True)
class StaticModel:
    name: str
    thimacs: tuple[Thimac, ...] = ()
    actions: tuple[Action, ...] = ()
    storages: tuple[Storage, ...] = ()
    flows: tuple[Flow, ...] = ()
    triggers: tuple[Trigger, ...] = ()

    # -- lookups -----------------------------------------------------------

    @cached_property
    def thimacs_by_id(self) -> dict[str, Thimac]:
        return {t.id: t for t in self.thimacs}

    @cached_property
    def actions_by_id(self) -> dict[str, Action]:
        return {a.id: a for a in self.actions}

    @cached_property
    def storages_by_id(self) -> dict[str, Storage]:
        return {s.id: s for s in self.storages}

    def node_kind(self, node_id: str) -> Optional[str]:
        """Kind of a flow endpoint: an action kind, ``"storage"``, or None."""
        action = self.actions_by_id.get(node_id)
        if action is not None:
            return action.kind
        if node_id in self.storages_by_id:
            return _STORAGE
        return None

    def node_owner(self, node_id: str) -> Optional[str]:
        action = self.actions_by_id.get(node_id)
        if action is not None:
            return action.owner
        storage = self.storages_by_id.get(node_id)
        if storage is not None:
            return storage.owner
        return None

    @cached_property
    def flows_from(self) -> dict[str, tuple[Flow, ...]]:
        out: dict[str, list[Flow]] = {}
        for f in self.flows:
            out.setdefault(f.src, []).append(f)
        return {k: tuple(v) for k, v in out.items()}

    @cached_property
    def flows_into(self) -> dict[str, tuple[Flow, ...]]:
        out: dict[str, list[Flow]] = {}
        for f in self.flows:
            out.setdefault(f.dst, []).append(f)
        return {k: tuple(v) for k, v in out.items()}

    def children_of(self, thimac_id: Optional[str]) -> tuple[Thimac, ...]:
        return tuple(t for t in self.thimacs if t.parent == thimac_id)

    def actions_of(self, thimac_id: str) -> tuple[Action, ...]:
        return tuple(a for a in self.actions if a.owner == thimac_id)

    def storages_of(self, thimac_id: str) -> tuple[Storage, ...]:
        return tuple(s for s in self.storages if s.owner == thimac_id)


class ModelBuilder:
    """Accumulates elements, rejecting dangling references and duplicate
    ids at the point of insertion, then freezes into a ``StaticModel``."""

    def __init__(self, name: str):
        self.name = name
        self._thimacs: list[Thimac] = []
        self._actions: list[Action] = []
        self._storages: list[Storage] = []
        self._flows: list[Flow] = []
        self._triggers: list[Trigger] = []
        self._ids: set[str] = set()
        self._counters: dict[str, int] = {}

    # -- id management -----------------------------------------------------

    def _claim(self, explicit: Optional[str], prefix: str) -> str:
        if explicit is not None:
            if explicit in self._ids:
                raise ModelError(f"duplicate id {explicit!r}")
            self._ids.add(explicit)
            return explicit
        n = self._counters.get(prefix, 0)
        while True:
            n += 1
            candidate = f"{prefix}{n}"
            if candidate not in self._ids:
                break
        self._counters[prefix] = n
        self._ids.add(candidate)
        return candidate

    def _require_node(self, node_id: str, what: str) -> None:
        if not any(a.id == node_id for a in self._actions) and not any(
            s.id == node_id for s in self._storages
        ):
            raise ModelError(f"{what} references unknown node {node_id!r}")

    def _require_thimac(self, thimac_id: str, what: str) -> None:
        if not any(t.id == thimac_id for t in self._thimacs):
            raise ModelError(f"{what} references unknown thimac {thimac_id!r}")

    # -- element insertion ---------------------------------------------------

    def add_thimac(
        self,
        name: str,
        parent: Optional[str] = None,
        note: Optional[str] = None,
        id: Optional[str] = None,
    ) -> str:
        if parent is not None:
            self._require_thimac(parent, "thimac")
        tid = self._claim(id, "thimac")
        self._thimacs.append(Thimac(tid, name, parent, note))
        return tid

    def add_action(
        self,
        kind: str,
        owner: str,
        label: Optional[str] = None,
        anchor: Optional[str] = None,
        id: Optional[str] = None,
    ) -> str:
        self._require_thimac(owner, "action")
        aid = self._claim(id, "action")
        self._actions.append(Action(aid, kind, owner, label, anchor))
        return aid

    def add_storage(
        self, owner: str, name: str, id: Optional[str] = None
    ) -> str:
        self._require_thimac(owner, "storage")
        sid = self._claim(id, "storage")
        self._storages.append(Storage(sid, owner, name))
        return sid

    def add_flow(self, src: str, dst: str, id: Optional[str] = None) -> str:
        self._require_node(src, "flow")
        self._require_node(dst, "flow")
        if src == dst:
            raise ModelError(f"flow may not loop on {src!r}")
        fid = self._claim(id, "flow")
        self._flows.append(Flow(fid, src, dst))
        return fid

    def add_trigger(
        self,
        src: str,
        dst: str,
        condition: Optional[str] = None,
        id: Optional[str] = None,
    ) -> str:
        self._require_node(src, "trigger")
        self._require_node(dst, "trigger")
        if src == dst:
            raise ModelError(f"trigger may not loop on {src!r}")
        tid = self._claim(id, "trigger")
        self._triggers.append(Trigger(tid, src, dst, condition))
        return tid

    def build(self) -> StaticModel:
        return StaticModel(
            name=self.name,
            thimacs=tuple(self._thimacs),
            actions=tuple(self._actions),
            storages=tuple(self._storages),
            flows=tuple(self._flows),
            triggers=tuple(self._triggers),
        )


# ---------------------------------------------------------------------------
# validation


def validate(model: StaticModel) -> tuple[Diagnostic, ...]:
    """Check rules R1-R8 and return diagnostics in a fixed order.

    Never raises: structurally broken models (dangling references,
    containment cycles) come back as R5/R6 errors.
    """
    out: list[Diagnostic] = []
    resolved = _resolved_edges(model)

    out.extend(_check_flow_legality(model, resolved))  # R1 + R2
    out.extend(_check_receive_inputs(model, resolved))  # R3
    out.extend(_check_trigger_sources(model))  # R4
    out.extend(_check_containment(model))  # R5
    out.extend(_check_references(model))  # R6
    out.extend(_check_self_loops(model))  # R7
    out.extend(_check_reachability(model, resolved))  # R8
    return tuple(out)


def _resolved_edges(model: StaticModel) -> dict[str, bool]:
    """Edge id -> both endpoints resolve (so kind rules can be applied)."""
    ok = {}
    for edge in (*model.flows, *model.triggers):
        ok[edge.id] = (
            model.node_kind(edge.src) is not None
            and model.node_kind(edge.dst) is not None
        )
    return ok


def _check_flow_legality(model, resolved) -> Iterator[Diagnostic]:
    for flow in model.flows:
        if not resolved[flow.id]:
            continue  # reported under R6
        src_kind = model.node_kind(flow.src)
        dst_kind = model.node_kind(flow.dst)
        src_owner = model.node_owner(flow.src)
        dst_owner = model.node_owner(flow.dst)
        if src_owner == dst_owner:
            if (src_kind, dst_kind) not in LEGAL_FLOW_PAIRS:
                yield Diagnostic(
                    "error",
                    "R1",
                    flow.id,
                    f"flow {flow.src} -> {flow.dst} connects "
                    f"{src_kind} to {dst_kind}, which is not a legal pair "
                    f"inside one thimac",
                )
        elif not (src_kind == "transfer" and dst_kind == "transfer"):
            yield Diagnostic(
                "error",
                "R2",
                flow.id,
                f"flow {flow.src} -> {flow.dst} crosses thimacs but is "
                f"{src_kind} to {dst_kind}; only transfer to transfer may "
                f"cross",
            )


def _check_receive_inputs(model, resolved) -> Iterator[Diagnostic]:
    fed = {
        f.dst
        for f in model.flows
        if resolved[f.id] and model.node_kind(f.src) == "transfer"
    }
    for action in model.actions:
        if action.kind == "receive" and action.id not in fed:
            yield Diagnostic(
                "warning",
                "R3",
                action.id,
                "receive has no incoming flow from a transfer",
            )


def _check_trigger_sources(model) -> Iterator[Diagnostic]:
    for trigger in model.triggers:
        src = model.actions_by_id.get(trigger.src)
        if src is not None and src.kind not in ("process", "create"):
            yield Diagnostic(
                "warning",
                "R4",
                trigger.id,
                f"trigger source {trigger.src} is a {src.kind}; triggers "
                f"normally originate at a process or create",
            )


def _check_containment(model) -> Iterator[Diagnostic]:
    known = model.thimacs_by_id
    flagged: set[str] = set()
    for thimac in model.thimacs:
        if thimac.id in flagged:
            continue
        seen: list[str] = []
        current: Optional[str] = thimac.id
        while current is not None and current in known:
            if current in seen:
                cycle = seen[seen.index(current):]
                for member in cycle:
                    flagged.add(member)
                yield Diagnostic(
                    "error",
                    "R5",
                    thimac.id,
                    "containment cycle: " + " -> ".join(cycle + [current]),
                )
                break
            seen.append(current)
            current = known[current].parent


def _check_references(model) -> Iterator[Diagnostic]:
    def dangling(subject: str, ref: str, what: str) -> Diagnostic:
        return Diagnostic("error", "R6", subject, f"{what} {ref!r} does not exist")

    for thimac in model.thimacs:
        if thimac.parent is not None and thimac.parent not in model.thimacs_by_id:
            yield dangling(thimac.id, thimac.parent, "parent thimac")
    for action in model.actions:
        if action.owner not in model.thimacs_by_id:
            yield dangling(action.id, action.owner, "owner thimac")
    for storage in model.storages:
        if storage.owner not in model.thimacs_by_id:
            yield dangling(storage.id, storage.owner, "owner thimac")
    for edge in (*model.flows, *model.triggers):
        for ref in (edge.src, edge.dst):
            if model.node_kind(ref) is None:
                yield dangling(edge.id, ref, "endpoint")


def _check_self_loops(model) -> Iterator[Diagnostic]:
    # The builder refuses self-loops, but models assembled directly or
    # deserialized from JSON may still carry them.
    for edge in (*model.flows, *model.triggers):
        if edge.src == edge.dst:
            yield Diagnostic(
                "error", "R7", edge.id, f"self-loop on {edge.src}"
            )


def _check_reachability(model, resolved) -> Iterator[Diagnostic]:
    adjacency: dict[str, list[str]] = {}
    for edge in (*model.flows, *model.triggers):
        if resolved[edge.id]:
            adjacency.setdefault(edge.src, []).append(edge.dst)
    seeds = [a.id for a in model.actions if a.kind in ("create", "receive")]
    reached = set(seeds)
    frontier = list(seeds)
    while frontier:
        node = frontier.pop()
        for nxt in adjacency.get(node, ()):
            if nxt not in reached:
                reached.add(nxt)
                frontier.append(nxt)
    for action in model.actions:
        if action.id not in reached:
            yield Diagnostic(
                "warning",
                "R8",
                action.id,
                "action cannot be reached from any create or receive",
            )


# ---------------------------------------------------------------------------
# simplification


def simplify(model: StaticModel) -> StaticModel:
    """Collapse transport machinery (release/transfer/receive).

    Every flow path ``a -> (transport)+ -> b`` between surviving nodes
    becomes the direct flow ``a -> b``; triggers with a removed endpoint
    are re-anchored to the nearest surviving node along the removed chain.
    The input model is left untouched.

    A model with nothing to remove is returned as-is.  That makes the
    pass idempotent: its own output is an abstraction whose direct flows
    no longer obey the transport legality rules, and must not be turned
    away by the error gate below.
    """
    removed = {a.id for a in model.actions if a.kind in TRANSPORT_KINDS}
    if not removed:
        return model

    errors = tuple(d for d in validate(model) if d.severity == "error")
    if errors:
        raise SimplifyError(errors)
    kept_actions = tuple(a for a in model.actions if a.id not in removed)

    flows: list[Flow] = []
    present: set[tuple[str, str]] = set()
    for flow in model.flows:
        if flow.src not in removed and flow.dst not in removed:
            flows.append(flow)
            present.add((flow.src, flow.dst))

    counter = 0
    for flow in model.flows:
        # Chase each surviving node's outgoing flows through removed nodes.
        if flow.src in removed or flow.dst not in removed:
            continue
        start = flow.src
        for end in _through_removed(model, flow.dst, removed, forward=True):
            if end == start or (start, end) in present:
                continue
            counter += 1
            flows.append(Flow(f"flow_s{counter}", start, end))
            present.add((start, end))

    triggers: list[Trigger] = []
    for trigger in model.triggers:
        src, dst = trigger.src, trigger.dst
        if src in removed:
            src = _nearest_surviving(model, src, removed, forward=False)
        if dst in removed:
            dst = _nearest_surviving(model, dst, removed, forward=True)
        if src is None or dst is None or src == dst:
            continue
        triggers.append(Trigger(trigger.id, src, dst, trigger.condition))

    return StaticModel(
        name=model.name,
        thimacs=model.thimacs,
        actions=kept_actions,
        storages=model.storages,
        flows=tuple(flows),
        triggers=tuple(triggers),
    )


def _through_removed(
    model: StaticModel, first: str, removed: set[str], forward: bool
) -> list[str]:
    """Surviving nodes reachable from ``first`` via removed nodes only,
    in breadth-first discovery order.  ``first`` must itself be removed."""
    found: list[str] = []
    seen = {first}
    queue = [first]
    while queue:
        node = queue.pop(0)
        edges = model.flows_from.get(node, ()) if forward else model.flows_into.get(node, ())
        for edge in edges:
            nxt = edge.dst if forward else edge.src
            if nxt in seen:
                continue
            seen.add(nxt)
            if nxt in removed:
                queue.append(nxt)
            elif nxt not in found:
                found.append(nxt)
    return found


def _nearest_surviving(
    model: StaticModel, node: str, removed: set[str], forward: bool
) -> Optional[str]:
    """Closest surviving node along flows from ``node``; lexicographically
    smallest id on a distance tie, None when the chain dead-ends."""
    layer = [node]
    seen = {node}
    while layer:
        survivors: list[str] = []
        next_layer: list[str] = []
        for current in layer:
            edges = (
                model.flows_from.get(current, ())
                if forward
                else model.flows_into.get(current, ())
            )
            for edge in edges:
                nxt = edge.dst if forward else edge.src
                if nxt in seen:
                    continue
                seen.add(nxt)
                if nxt in removed:
                    next_layer.append(nxt)
                else:
                    survivors.append(nxt)
        if survivors:
            return min(survivors)
        layer = next_layer
    return None


# ---------------------------------------------------------------------------
# structural comparison


def structurally_equal(a: StaticModel, b: StaticModel) -> bool:
    """Equality up to edge identifiers and declaration order.

    Nodes (thimacs, actions, storages) must agree id-for-id; flows and
    triggers are compared as multisets of endpoints (and condition),
    since their ids are generated plumbing.
    """
    if a.name != b.name:
        return False
    if {t.id: (t.name, t.parent, t.note) for t in a.thimacs} != {
        t.id: (t.name, t.parent, t.note) for t in b.thimacs
    }:
        return False
    if {x.id: (x.kind, x.owner, x.label, x.anchor) for x in a.actions} != {
        x.id: (x.kind, x.owner, x.label, x.anchor) for x in b.actions
    }:
        return False
    if {s.id: (s.owner, s.name) for s in a.storages} != {
        s.id: (s.owner, s.name) for s in b.storages
    }:
        return False
    if sorted((f.src, f.dst) for f in a.flows) != sorted(
        (f.src, f.dst) for f in b.flows
    ):
        return False
    return sorted((t.src, t.dst, t.condition or "") for t in a.triggers) == sorted(
        (t.src, t.dst, t.condition or "") for t in b.triggers
    )
