"""Interchange: flowchart import, DOT and JSON output, plain-text reports.

The flowchart side accepts a swimlane chart (JSON) and rebuilds it as a
model: lanes become thimacs, boxes become creates and processes, and
every hop that the flow rules forbid -- activity to activity, lane to
lane -- is legalized by inserting the release/transfer/receive machinery
that a chart leaves implicit.  Guarded branches out of a decision become
triggers, so the decision logic survives the trip.

JSON serialization is canonical: fixed key order, every key always
present, ``null`` rather than omission.  Loading is deliberately more
permissive than the builder -- dangling references and self-loops come
back as models that ``validate`` can complain about, not as exceptions.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Optional, Union

import jsonschema

from .dynamics import (
    ChronEdge,
    ChronologyGraph,
    Document,
    Scenario,
    build_chronology,
    define_event,
    simulate,
)
from .errors import TmkitError
from .model import (
    ACTION_KINDS,
    LEGAL_FLOW_PAIRS,
    Action,
    Flow,
    ModelBuilder,
    StaticModel,
    Storage,
    Thimac,
    Trigger,
    validate,
)


class ConvertError(TmkitError):
    pass


# ---------------------------------------------------------------------------
# flowcharts

_IDENT = r"^[A-Za-z_][A-Za-z0-9_]*$"

FLOW_NODE_KINDS = (
    "start",
    "end",
    "activity",
    "decision",
    "message-send",
    "message-receive",
)

FLOWCHART_SCHEMA = {
    "type": "object",
    "required": ["name", "lanes", "nodes", "edges"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string", "pattern": _IDENT},
        "description": {"type": "string"},
        "lanes": {
            "type": "array",
            "minItems": 1,
            "items": {"type": "string", "pattern": _IDENT},
        },
        "nodes": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "lane", "kind"],
                "additionalProperties": False,
                "properties": {
                    "id": {"type": "string", "pattern": _IDENT},
                    "lane": {"type": "string"},
                    "kind": {"enum": list(FLOW_NODE_KINDS)},
                    "label": {"type": "string"},
                },
            },
        },
        "edges": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["from", "to"],
                "additionalProperties": False,
                "properties": {
                    "from": {"type": "string"},
                    "to": {"type": "string"},
                    "guard": {"type": "string"},
                },
            },
        },
    },
}


@dataclass(frozen=True)
class FlowNode:
    id: str
    lane: str
    kind: str
    label: Optional[str] = None


@dataclass(frozen=True)
class FlowEdge:
    src: str
    dst: str
    guard: Optional[str] = None


@dataclass(frozen=True)
class FlowchartDoc:
    name: str
    lanes: tuple[str, ...]
    nodes: tuple[FlowNode, ...]
    edges: tuple[FlowEdge, ...]
    description: Optional[str] = None


def _check_schema(data: object, schema: dict, what: str) -> None:
    try:
        jsonschema.validate(data, schema)
    except jsonschema.ValidationError as exc:
        raise ConvertError(f"{what}: {exc.json_path}: {exc.message}") from exc


def load_flowchart(text: str) -> FlowchartDoc:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConvertError(f"flowchart is not valid JSON: {exc}") from exc
    _check_schema(data, FLOWCHART_SCHEMA, "flowchart")

    lanes = tuple(data["lanes"])
    if len(set(lanes)) != len(lanes):
        raise ConvertError("flowchart declares a lane twice")
    nodes = tuple(
        FlowNode(n["id"], n["lane"], n["kind"], n.get("label"))
        for n in data["nodes"]
    )
    seen: set[str] = set()
    for node in nodes:
        if node.id in seen:
            raise ConvertError(f"duplicate node id {node.id!r}")
        seen.add(node.id)
        if node.lane not in lanes:
            raise ConvertError(f"node {node.id!r} sits in unknown lane {node.lane!r}")
    edges = tuple(
        FlowEdge(e["from"], e["to"], e.get("guard")) for e in data["edges"]
    )
    pairs: set[tuple[str, str]] = set()
    for edge in edges:
        for ref in (edge.src, edge.dst):
            if ref not in seen:
                raise ConvertError(f"edge references unknown node {ref!r}")
        if edge.src == edge.dst:
            raise ConvertError(f"self-edge on {edge.src!r}")
        if (edge.src, edge.dst) in pairs:
            raise ConvertError(f"duplicate edge {edge.src} -> {edge.dst}")
        pairs.add((edge.src, edge.dst))
    return FlowchartDoc(data["name"], lanes, nodes, edges, data.get("description"))


def import_flowchart(chart: FlowchartDoc) -> tuple[StaticModel, tuple[str, ...]]:
    """Rebuild a flowchart as a model.

    Returns the model plus notes about whatever the mapping had to drop
    (end nodes and their edges have no counterpart: a run just stops).
    Raises :class:`ConvertError` for charts the mapping cannot express
    faithfully -- unguarded decision branches, guards anywhere else,
    implicit splits, or message nodes pointed the wrong way.
    """
    nodes_by_id = {n.id: n for n in chart.nodes}
    _reject_unmappable(chart, nodes_by_id)

    notes: list[str] = []
    builder = ModelBuilder(chart.name)
    for lane in chart.lanes:
        builder.add_thimac(lane, id=lane)

    for node in chart.nodes:
        path = f"{node.lane}/{node.id}"
        if node.kind == "start":
            builder.add_action("create", node.lane, node.label, id=path)
        elif node.kind in ("activity", "decision"):
            builder.add_action("process", node.lane, node.label, id=path)
        elif node.kind == "message-send":
            builder.add_action("release", node.lane, node.label, id=path)
            builder.add_action("transfer", node.lane, id=f"{path}_out")
            builder.add_flow(path, f"{path}_out")
        elif node.kind == "message-receive":
            builder.add_action("transfer", node.lane, id=f"{path}_in")
            builder.add_action("receive", node.lane, node.label, id=path)
            builder.add_flow(f"{path}_in", path)
        else:  # end: nothing to run once the flow stops
            notes.append(f"end node {node.id!r} dropped; a run simply stops there")

    for edge in chart.edges:
        src, dst = nodes_by_id[edge.src], nodes_by_id[edge.dst]
        if dst.kind == "end":
            suffix = f" (guard {edge.guard!r} lost)" if edge.guard else ""
            notes.append(f"edge {edge.src} -> {edge.dst} dropped with its end node{suffix}")
            continue
        head = _wire_edge(builder, edge, src, dst)
        if edge.guard is not None:
            builder.add_trigger(f"{src.lane}/{src.id}", head, condition=edge.guard)

    return builder.build(), tuple(notes)


def _reject_unmappable(chart: FlowchartDoc, nodes_by_id: dict[str, FlowNode]) -> None:
    outgoing: dict[str, list[FlowEdge]] = {n.id: [] for n in chart.nodes}
    incoming: dict[str, list[FlowEdge]] = {n.id: [] for n in chart.nodes}
    for edge in chart.edges:
        outgoing[edge.src].append(edge)
        incoming[edge.dst].append(edge)

    for node in chart.nodes:
        if node.kind == "start" and incoming[node.id]:
            raise ConvertError(f"edge into start node {node.id!r}")
        if node.kind == "end" and outgoing[node.id]:
            raise ConvertError(f"edge out of end node {node.id!r}")
        if node.kind == "decision":
            for edge in outgoing[node.id]:
                if edge.guard is None:
                    raise ConvertError(
                        f"decision {node.id!r} has an unguarded branch to "
                        f"{edge.dst!r}"
                    )
        else:
            for edge in outgoing[node.id]:
                if edge.guard is not None:
                    raise ConvertError(
                        f"guard {edge.guard!r} on an edge out of "
                        f"{node.kind} {node.id!r}; only decisions branch"
                    )
            if len(outgoing[node.id]) > 1:
                raise ConvertError(
                    f"{node.kind} {node.id!r} has {len(outgoing[node.id])} "
                    f"outgoing edges; an implicit split cannot be expressed"
                )
        if node.kind == "message-send":
            for edge in outgoing[node.id]:
                if nodes_by_id[edge.dst].lane == node.lane:
                    raise ConvertError(
                        f"message-send {node.id!r} sends within its own lane"
                    )
            for edge in incoming[node.id]:
                if nodes_by_id[edge.src].lane != node.lane:
                    raise ConvertError(
                        f"cross-lane edge into message-send {node.id!r}; "
                        f"the sender is unidentifiable"
                    )
        if node.kind == "message-receive":
            for edge in incoming[node.id]:
                if nodes_by_id[edge.src].lane == node.lane:
                    raise ConvertError(
                        f"message-receive {node.id!r} receives from its own lane"
                    )
            for edge in outgoing[node.id]:
                if nodes_by_id[edge.dst].lane != node.lane:
                    raise ConvertError(
                        f"cross-lane edge out of message-receive {node.id!r}; "
                        f"the receiver is unidentifiable"
                    )


def _endpoints(src: FlowNode, dst: FlowNode) -> tuple[str, str, str]:
    """Model ids for an edge: source's exit node, target's entry node,
    and the source exit kind (for the legality check)."""
    if src.kind == "message-send":
        exit_id, exit_kind = f"{src.lane}/{src.id}_out", "transfer"
    elif src.kind == "message-receive":
        exit_id, exit_kind = f"{src.lane}/{src.id}", "receive"
    elif src.kind == "start":
        exit_id, exit_kind = f"{src.lane}/{src.id}", "create"
    else:
        exit_id, exit_kind = f"{src.lane}/{src.id}", "process"
    if dst.kind == "message-send":
        entry = f"{dst.lane}/{dst.id}"  # its release
    elif dst.kind == "message-receive":
        entry = f"{dst.lane}/{dst.id}_in"  # its transfer
    else:
        entry = f"{dst.lane}/{dst.id}"
    return exit_id, entry, exit_kind


def _entry_kind(dst: FlowNode) -> str:
    if dst.kind == "message-send":
        return "release"
    if dst.kind == "message-receive":
        return "transfer"
    return "process"


def _wire_edge(
    builder: ModelBuilder, edge: FlowEdge, src: FlowNode, dst: FlowNode
) -> str:
    """Add the flow chain for one chart edge; returns the first node the
    token moves to (the target for a guard trigger)."""
    exit_id, entry_id, exit_kind = _endpoints(src, dst)
    stem = f"{edge.src}_to_{edge.dst}"

    if src.lane == dst.lane:
        if (exit_kind, _entry_kind(dst)) in LEGAL_FLOW_PAIRS:
            builder.add_flow(exit_id, entry_id)
            return entry_id
        rel = f"{src.lane}/{stem}_rel"
        out = f"{src.lane}/{stem}_tr"
        rcv = f"{src.lane}/{stem}_rcv"
        builder.add_action("release", src.lane, id=rel)
        builder.add_action("transfer", src.lane, id=out)
        builder.add_action("receive", src.lane, id=rcv)
        builder.add_flow(exit_id, rel)
        builder.add_flow(rel, out)
        builder.add_flow(out, rcv)
        builder.add_flow(rcv, entry_id)
        return rel

    if src.kind == "message-send":
        sender_out, head = exit_id, None
    else:
        rel = f"{src.lane}/{stem}_rel"
        sender_out = f"{src.lane}/{stem}_out"
        builder.add_action("release", src.lane, id=rel)
        builder.add_action("transfer", src.lane, id=sender_out)
        builder.add_flow(exit_id, rel)
        builder.add_flow(rel, sender_out)
        head = rel

    if dst.kind == "message-receive":
        builder.add_flow(sender_out, entry_id)
        receiver_head = entry_id
    else:
        inp = f"{dst.lane}/{stem}_in"
        rcv = f"{dst.lane}/{stem}_rcv"
        builder.add_action("transfer", dst.lane, id=inp)
        builder.add_action("receive", dst.lane, id=rcv)
        builder.add_flow(sender_out, inp)
        builder.add_flow(inp, rcv)
        builder.add_flow(rcv, entry_id)
        receiver_head = inp

    return head if head is not None else receiver_head


# ---------------------------------------------------------------------------
# DOT


def _dot_escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


def to_dot(doc: Union[Document, StaticModel]) -> str:
    """Graphviz text: one cluster per thimac, boxes for actions,
    cylinders for storages, dashed edges for triggers."""
    model = doc.model if isinstance(doc, Document) else doc
    lines = [f'digraph "{_dot_escape(model.name)}" {{', "  rankdir=LR;"]

    def emit_thimac(thimac: Thimac, depth: int) -> None:
        pad = "  " * depth
        lines.append(f'{pad}subgraph "cluster_{_dot_escape(thimac.id)}" {{')
        lines.append(f'{pad}  label="{_dot_escape(thimac.name)}";')
        for action in model.actions_of(thimac.id):
            local = action.id.rsplit("/", 1)[-1]
            lines.append(
                f'{pad}  "{_dot_escape(action.id)}" '
                f'[shape=box, label="{_dot_escape(f"{action.kind}: {local}")}"];'
            )
        for storage in model.storages_of(thimac.id):
            lines.append(
                f'{pad}  "{_dot_escape(storage.id)}" '
                f'[shape=cylinder, label="{_dot_escape(storage.name)}"];'
            )
        for child in model.children_of(thimac.id):
            emit_thimac(child, depth + 1)
        lines.append(pad + "}")

    for thimac in model.children_of(None):
        emit_thimac(thimac, 1)
    for flow in model.flows:
        lines.append(f'  "{_dot_escape(flow.src)}" -> "{_dot_escape(flow.dst)}";')
    for trigger in model.triggers:
        attrs = "style=dashed"
        if trigger.condition is not None:
            attrs += f', label="{_dot_escape(trigger.condition)}"'
        lines.append(
            f'  "{_dot_escape(trigger.src)}" -> "{_dot_escape(trigger.dst)}" '
            f"[{attrs}];"
        )
    lines.append("}")
    return "\n".join(lines) + "\n"


def chronology_to_dot(chronology: ChronologyGraph) -> str:
    lines = ['digraph "chronology" {', "  rankdir=LR;"]
    for event in chronology.events:
        label = f"{event.id}\\n{_dot_escape(event.label)}"
        lines.append(f'  "{event.id}" [shape=box, label="{label}"];')
    for edge in chronology.edges:
        parts = []
        if edge.guard is not None:
            parts.append(_dot_escape(edge.guard))
        bound = chronology.loop_bounds.get((edge.src, edge.dst))
        if bound is not None:
            parts.append(f"max {bound}")
        attrs = f' [label="{"; ".join(parts)}"]' if parts else ""
        lines.append(f'  "{edge.src}" -> "{edge.dst}"{attrs};')
    lines.append("}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# JSON

MODEL_SCHEMA = {
    "type": "object",
    "required": [
        "name",
        "thimacs",
        "actions",
        "storages",
        "flows",
        "triggers",
        "events",
        "chronology",
    ],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "thimacs": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "name", "parent", "note"],
                "additionalProperties": False,
                "properties": {
                    "id": {"type": "string"},
                    "name": {"type": "string"},
                    "parent": {"type": ["string", "null"]},
                    "note": {"type": ["string", "null"]},
                },
            },
        },
        "actions": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "kind", "owner", "label", "anchor"],
                "additionalProperties": False,
                "properties": {
                    "id": {"type": "string"},
                    "kind": {"enum": list(ACTION_KINDS)},
                    "owner": {"type": "string"},
                    "label": {"type": ["string", "null"]},
                    "anchor": {"type": ["string", "null"]},
                },
            },
        },
        "storages": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "owner", "name"],
                "additionalProperties": False,
                "properties": {
                    "id": {"type": "string"},
                    "owner": {"type": "string"},
                    "name": {"type": "string"},
                },
            },
        },
        "flows": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "from", "to"],
                "additionalProperties": False,
                "properties": {
                    "id": {"type": "string"},
                    "from": {"type": "string"},
                    "to": {"type": "string"},
                },
            },
        },
        "triggers": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "from", "to", "condition"],
                "additionalProperties": False,
                "properties": {
                    "id": {"type": "string"},
                    "from": {"type": "string"},
                    "to": {"type": "string"},
                    "condition": {"type": ["string", "null"]},
                },
            },
        },
        "events": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "label", "region"],
                "additionalProperties": False,
                "properties": {
                    "id": {"type": "string"},
                    "label": {"type": "string"},
                    "region": {
                        "type": "array",
                        "minItems": 1,
                        "items": {"type": "string"},
                    },
                },
            },
        },
        "chronology": {
            "type": ["object", "null"],
            "required": ["edges"],
            "additionalProperties": False,
            "properties": {
                "edges": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "required": ["from", "to", "guard", "max"],
                        "additionalProperties": False,
                        "properties": {
                            "from": {"type": "string"},
                            "to": {"type": "string"},
                            "guard": {"type": ["string", "null"]},
                            "max": {"type": ["integer", "null"], "minimum": 1},
                        },
                    },
                }
            },
        },
    },
}


def to_json(doc: Union[Document, StaticModel]) -> str:
    """Canonical JSON: fixed key order, all keys present, sorted regions."""
    if isinstance(doc, StaticModel):
        doc = Document(doc)
    model = doc.model
    chronology = None
    if doc.chronology is not None:
        chronology = {
            "edges": [
                {
                    "from": e.src,
                    "to": e.dst,
                    "guard": e.guard,
                    "max": doc.chronology.loop_bounds.get((e.src, e.dst)),
                }
                for e in doc.chronology.edges
            ]
        }
    payload = {
        "name": model.name,
        "thimacs": [
            {"id": t.id, "name": t.name, "parent": t.parent, "note": t.note}
            for t in model.thimacs
        ],
        "actions": [
            {
                "id": a.id,
                "kind": a.kind,
                "owner": a.owner,
                "label": a.label,
                "anchor": a.anchor,
            }
            for a in model.actions
        ],
        "storages": [
            {"id": s.id, "owner": s.owner, "name": s.name} for s in model.storages
        ],
        "flows": [{"id": f.id, "from": f.src, "to": f.dst} for f in model.flows],
        "triggers": [
            {"id": t.id, "from": t.src, "to": t.dst, "condition": t.condition}
            for t in model.triggers
        ],
        "events": [
            {"id": e.id, "label": e.label, "region": sorted(e.region)}
            for e in doc.events
        ],
        "chronology": chronology,
    }
    return json.dumps(payload, indent=2) + "\n"


def from_json(text: str) -> Document:
    """Load a document from canonical JSON.

    The model part is taken as-is -- dangling references, self-loops and
    the like are for ``validate`` to report -- but duplicate ids are
    refused outright, and events and chronology must make sense.
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConvertError(f"document is not valid JSON: {exc}") from exc
    _check_schema(data, MODEL_SCHEMA, "document")

    ids: set[str] = set()
    for section in ("thimacs", "actions", "storages", "flows", "triggers"):
        for entry in data[section]:
            if entry["id"] in ids:
                raise ConvertError(f"duplicate id {entry['id']!r}")
            ids.add(entry["id"])

    model = StaticModel(
        name=data["name"],
        thimacs=tuple(
            Thimac(t["id"], t["name"], t["parent"], t["note"])
            for t in data["thimacs"]
        ),
        actions=tuple(
            Action(a["id"], a["kind"], a["owner"], a["label"], a["anchor"])
            for a in data["actions"]
        ),
        storages=tuple(
            Storage(s["id"], s["owner"], s["name"]) for s in data["storages"]
        ),
        flows=tuple(Flow(f["id"], f["from"], f["to"]) for f in data["flows"]),
        triggers=tuple(
            Trigger(t["id"], t["from"], t["to"], t["condition"])
            for t in data["triggers"]
        ),
    )

    events = []
    seen_events: set[str] = set()
    for entry in data["events"]:
        if entry["id"] in seen_events:
            raise ConvertError(f"duplicate event id {entry['id']!r}")
        seen_events.add(entry["id"])
        events.append(
            define_event(model, entry["id"], entry["label"], entry["region"])
        )

    chronology = None
    if data["chronology"] is not None:
        edges = []
        bounds = {}
        for entry in data["chronology"]["edges"]:
            edges.append(ChronEdge(entry["from"], entry["to"], entry["guard"]))
            if entry["max"] is not None:
                bounds[(entry["from"], entry["to"])] = entry["max"]
        chronology = build_chronology(events, edges, bounds)

    return Document(model, tuple(events), chronology)


# ---------------------------------------------------------------------------
# reports


def generate_report(doc: Document, scenarios: Iterable[Scenario] = ()) -> str:
    """Plain-text summary: thimac inventory, validation findings, event
    catalog, and a walk per requested scenario."""
    model = doc.model
    title = f"report on {model.name}"
    lines = [title, "=" * len(title), ""]

    lines += ["thimacs", "-------"]
    if not model.thimacs:
        lines.append("(none)")
    for thimac in model.thimacs:
        lines.append(
            f"- {thimac.id}: {len(model.actions_of(thimac.id))} actions, "
            f"{len(model.storages_of(thimac.id))} storages"
        )
    lines.append("")

    diagnostics = validate(model)
    errors = sum(1 for d in diagnostics if d.severity == "error")
    warnings = len(diagnostics) - errors
    lines += ["validation", "----------"]
    lines.append(f"{errors} errors, {warnings} warnings")
    for diagnostic in diagnostics:
        lines.append(f"- {diagnostic}")
    lines.append("")

    if doc.events:
        lines += ["events", "------"]
        for event in doc.events:
            lines.append(
                f"- {event.id}: {event.label} (region: {len(event.region)} actions)"
            )
        lines.append("")

    for scenario in scenarios:
        if doc.chronology is None:
            raise ConvertError("document has no chronology to walk")
        trace = simulate(doc.chronology, scenario)
        heading = f"walk: {scenario.name}"
        lines += [heading, "-" * len(heading)]
        for event_id, index in trace.steps:
            label = doc.events_by_id[event_id].label
            lines.append(f"{index + 1}. {event_id}: {label}")
        lines.append("")

    return "\n".join(lines).rstrip("\n") + "\n"
