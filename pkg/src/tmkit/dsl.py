"""Text format for models: parser and canonical formatter.

The surface syntax:

    model NAME {
      thimac NAME ["note"] {
        create NAME ["label"] [@ANCHOR]     # process / release / transfer /
        storage NAME                        # receive declared the same way
        src -> dst                          # flow
        src ~> dst [if "condition"]         # trigger
        thimac NAME { ... }                 # nesting
      }
    }

    events {
      event ID "label" { action, action }
    }

    chronology {
      A -> B [if "guard"] [max N]
    }

``#`` starts a comment.  A name may refer to a sibling by bare name or to
anything else by ``/``-joined path; resolution tries the innermost
enclosing thimac first and walks outward.  Node ids in the parsed model
are the containment paths, so nesting is the namespace.  References may
point forward: the whole file is declared before anything is resolved.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import NoReturn, Optional, Union

from .dynamics import (
    ChronEdge,
    Document,
    build_chronology,
    define_event,
)
from .errors import TmkitError
from .model import ACTION_KINDS, ModelBuilder, StaticModel

KEYWORDS = frozenset(
    {
        "model",
        "thimac",
        "storage",
        "events",
        "event",
        "chronology",
        "if",
        "max",
        *ACTION_KINDS,
    }
)


@dataclass(frozen=True)
class SourceSpan:
    line: int  # 1-based
    col: int  # 1-based
    length: int


class ParseError(TmkitError):
    def __init__(self, span: SourceSpan, expected: str, found: str):
        self.span = span
        self.expected = expected
        self.found = found
        super().__init__(
            f"line {span.line}, col {span.col}: expected {expected}, "
            f"found {found}"
        )


class FormatError(TmkitError):
    """A model cannot be written back as text without changing meaning."""


# ---------------------------------------------------------------------------
# lexer

_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*(?:/[A-Za-z_][A-Za-z0-9_]*)*")
_INT_RE = re.compile(r"[0-9]+")


@dataclass(frozen=True)
class _Token:
    type: str  # NAME INT STRING ARROW TRIG LBRACE RBRACE AT COMMA EOF
    value: str
    line: int
    col: int
    length: int

    @property
    def span(self) -> SourceSpan:
        return SourceSpan(self.line, self.col, self.length)


def _describe(token: _Token) -> str:
    if token.type == "EOF":
        return "end of file"
    if token.type == "STRING":
        return f'string "{token.value}"'
    return repr(token.value)


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    line, col = 1, 1
    i, n = 0, len(text)

    def emit(type_: str, value: str, length: int) -> None:
        tokens.append(_Token(type_, value, line, col, length))

    while i < n:
        ch = text[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if text.startswith("->", i):
            emit("ARROW", "->", 2)
            i += 2
            col += 2
            continue
        if text.startswith("~>", i):
            emit("TRIG", "~>", 2)
            i += 2
            col += 2
            continue
        if ch in "{}@,":
            kind = {"{": "LBRACE", "}": "RBRACE", "@": "AT", ",": "COMMA"}[ch]
            emit(kind, ch, 1)
            i += 1
            col += 1
            continue
        if ch == '"':
            j = i + 1
            buf: list[str] = []
            while j < n and text[j] not in ('"', "\n"):
                if text[j] == "\\" and j + 1 < n and text[j + 1] in ('\\', '"'):
                    buf.append(text[j + 1])
                    j += 2
                else:
                    buf.append(text[j])
                    j += 1
            if j >= n or text[j] == "\n":
                raise ParseError(
                    SourceSpan(line, col, j - i),
                    "closing '\"'",
                    "end of line" if j < n else "end of file",
                )
            emit("STRING", "".join(buf), j - i + 1)
            col += j - i + 1
            i = j + 1
            continue
        match = _NAME_RE.match(text, i)
        if match:
            emit("NAME", match.group(), len(match.group()))
            col += len(match.group())
            i = match.end()
            continue
        match = _INT_RE.match(text, i)
        if match:
            emit("INT", match.group(), len(match.group()))
            col += len(match.group())
            i = match.end()
            continue
        raise ParseError(SourceSpan(line, col, 1), "a token", repr(ch))
    tokens.append(_Token("EOF", "", line, col, 1))
    return tokens


# ---------------------------------------------------------------------------
# parser


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self._tokens = tokens
        self._pos = 0
        # id -> "action" | "storage" (thimacs live in _thimac_ids)
        self._nodes: dict[str, str] = {}
        self._thimac_ids: set[str] = set()
        self._pending_flows: list[tuple[tuple[str, ...], _Token, _Token]] = []
        self._pending_triggers: list[
            tuple[tuple[str, ...], _Token, _Token, Optional[str]]
        ] = []
        # (id token, label, ref tokens)
        self._pending_events: list[tuple[_Token, str, list[_Token]]] = []
        # (src token, dst token, guard, bound token or None)
        self._pending_chron: list[
            tuple[_Token, _Token, Optional[str], Optional[_Token]]
        ] = []

    # -- token plumbing ------------------------------------------------------

    def _peek(self) -> _Token:
        return self._tokens[self._pos]

    def _advance(self) -> _Token:
        token = self._tokens[self._pos]
        if token.type != "EOF":
            self._pos += 1
        return token

    def _error(self, token: _Token, expected: str) -> NoReturn:
        raise ParseError(token.span, expected, _describe(token))

    def _expect(self, type_: str, expected: str) -> _Token:
        token = self._peek()
        if token.type != type_:
            self._error(token, expected)
        return self._advance()

    def _at_keyword(self, word: str) -> bool:
        token = self._peek()
        return token.type == "NAME" and token.value == word

    def _expect_keyword(self, word: str) -> _Token:
        token = self._peek()
        if not self._at_keyword(word):
            self._error(token, f"'{word}'")
        return self._advance()

    def _declared_name(self, what: str) -> _Token:
        token = self._expect("NAME", what)
        if token.value in KEYWORDS:
            raise ParseError(token.span, what, f"keyword {token.value!r}")
        if "/" in token.value:
            raise ParseError(token.span, f"an unqualified {what}", _describe(token))
        return token

    # -- grammar -------------------------------------------------------------

    def parse_document(self) -> Document:
        self._expect_keyword("model")
        name = self._declared_name("model name")
        self._expect("LBRACE", "'{'")
        self._builder = ModelBuilder(name.value)
        self._parse_items(scope=(), owner=None)
        self._expect("RBRACE", "'}'")

        have_events = False
        if self._at_keyword("events"):
            have_events = True
            self._parse_events_block()
        have_chronology = False
        if self._at_keyword("chronology"):
            have_chronology = True
            self._parse_chronology_block()
        self._expect("EOF", "end of file")

        return self._resolve(have_events, have_chronology)

    def _parse_items(self, scope: tuple[str, ...], owner: Optional[str]) -> None:
        while True:
            token = self._peek()
            if token.type in ("RBRACE", "EOF"):
                return
            if token.type != "NAME":
                self._error(token, "a declaration or '}'")
            if token.value == "thimac":
                self._parse_thimac(scope, owner)
            elif token.value in ACTION_KINDS:
                self._parse_action(scope, owner)
            elif token.value == "storage":
                self._parse_storage(scope, owner)
            elif token.value in KEYWORDS:
                self._error(token, "a declaration or '}'")
            else:
                self._parse_edge(scope)

    def _declare(self, scope: tuple[str, ...], token: _Token) -> str:
        path = "/".join((*scope, token.value))
        if path in self._nodes or path in self._thimac_ids:
            raise ParseError(token.span, "a fresh name", f"{path!r} (already declared)")
        return path

    def _parse_thimac(self, scope: tuple[str, ...], owner: Optional[str]) -> None:
        self._advance()
        name = self._declared_name("thimac name")
        note = self._advance().value if self._peek().type == "STRING" else None
        path = self._declare(scope, name)
        self._thimac_ids.add(path)
        self._builder.add_thimac(name.value, parent=owner, note=note, id=path)
        self._expect("LBRACE", "'{'")
        self._parse_items((*scope, name.value), path)
        self._expect("RBRACE", "'}'")

    def _parse_action(self, scope: tuple[str, ...], owner: Optional[str]) -> None:
        kind = self._advance()
        if owner is None:
            self._error(kind, "a thimac to hold this action")
        name = self._declared_name("action name")
        label = self._advance().value if self._peek().type == "STRING" else None
        anchor = None
        if self._peek().type == "AT":
            self._advance()
            token = self._peek()
            if token.type not in ("NAME", "INT"):
                self._error(token, "an anchor")
            anchor = self._advance().value
        path = self._declare(scope, name)
        self._nodes[path] = "action"
        self._builder.add_action(kind.value, owner, label, anchor, id=path)

    def _parse_storage(self, scope: tuple[str, ...], owner: Optional[str]) -> None:
        keyword = self._advance()
        if owner is None:
            self._error(keyword, "a thimac to hold this storage")
        name = self._declared_name("storage name")
        path = self._declare(scope, name)
        self._nodes[path] = "storage"
        self._builder.add_storage(owner, name.value, id=path)

    def _parse_edge(self, scope: tuple[str, ...]) -> None:
        src = self._advance()
        arrow = self._peek()
        if arrow.type == "ARROW":
            self._advance()
            dst = self._expect("NAME", "a node name")
            self._pending_flows.append((scope, src, dst))
        elif arrow.type == "TRIG":
            self._advance()
            dst = self._expect("NAME", "a node name")
            condition = None
            if self._at_keyword("if"):
                self._advance()
                condition = self._expect("STRING", "a condition string").value
            self._pending_triggers.append((scope, src, dst, condition))
        else:
            self._error(arrow, "'->' or '~>'")

    def _parse_events_block(self) -> None:
        self._advance()
        self._expect("LBRACE", "'{'")
        seen: set[str] = set()
        while self._peek().type not in ("RBRACE", "EOF"):
            self._expect_keyword("event")
            event_id = self._declared_name("event id")
            if event_id.value in seen:
                raise ParseError(
                    event_id.span,
                    "a fresh event id",
                    f"{event_id.value!r} (already declared)",
                )
            seen.add(event_id.value)
            label = self._expect("STRING", "an event label").value
            self._expect("LBRACE", "'{'")
            refs = [self._expect("NAME", "an action name")]
            while self._peek().type == "COMMA":
                self._advance()
                refs.append(self._expect("NAME", "an action name"))
            self._expect("RBRACE", "'}'")
            self._pending_events.append((event_id, label, refs))
        self._expect("RBRACE", "'}'")

    def _parse_chronology_block(self) -> None:
        self._advance()
        self._expect("LBRACE", "'{'")
        while self._peek().type not in ("RBRACE", "EOF"):
            src = self._expect("NAME", "an event id")
            self._expect("ARROW", "'->'")
            dst = self._expect("NAME", "an event id")
            guard = None
            bound = None
            if self._at_keyword("if"):
                self._advance()
                guard = self._expect("STRING", "a guard string").value
            if self._at_keyword("max"):
                self._advance()
                bound = self._expect("INT", "an iteration bound")
                if int(bound.value) < 1:
                    self._error(bound, "a bound of at least 1")
            self._pending_chron.append((src, dst, guard, bound))
        self._expect("RBRACE", "'}'")

    # -- resolution ----------------------------------------------------------

    def _lookup(self, token: _Token, scope: tuple[str, ...]) -> Optional[str]:
        for i in range(len(scope), -1, -1):
            candidate = "/".join((*scope[:i], token.value))
            if candidate in self._nodes:
                return candidate
        return None

    def _resolve(self, have_events: bool, have_chronology: bool) -> Document:
        for scope, src, dst in self._pending_flows:
            src_id, dst_id = self._endpoints(scope, src, dst)
            self._builder.add_flow(src_id, dst_id)
        for scope, src, dst, condition in self._pending_triggers:
            src_id, dst_id = self._endpoints(scope, src, dst)
            self._builder.add_trigger(src_id, dst_id, condition)
        model = self._builder.build()

        events = []
        for event_id, label, ref_tokens in self._pending_events:
            region = []
            for token in ref_tokens:
                ref = self._lookup(token, ())
                if ref is None or self._nodes[ref] != "action":
                    self._error(token, "a declared action")
                region.append(ref)
            events.append(define_event(model, event_id.value, label, region))

        chronology = None
        if have_chronology:
            known = {e.id for e in events}
            edges = []
            bounds = {}
            pairs: set[tuple[str, str]] = set()
            for src, dst, guard, bound in self._pending_chron:
                for token in (src, dst):
                    if token.value not in known:
                        self._error(token, "a declared event")
                pair = (src.value, dst.value)
                if pair in pairs:
                    self._error(dst, f"a single edge {src.value} -> {dst.value}")
                pairs.add(pair)
                edges.append(ChronEdge(src.value, dst.value, guard))
                if bound is not None:
                    bounds[pair] = int(bound.value)
            chronology = build_chronology(events, edges, bounds)

        return Document(model, tuple(events), chronology)

    def _endpoints(
        self, scope: tuple[str, ...], src: _Token, dst: _Token
    ) -> tuple[str, str]:
        src_id = self._lookup(src, scope)
        if src_id is None:
            self._error(src, "a declared action or storage")
        dst_id = self._lookup(dst, scope)
        if dst_id is None:
            self._error(dst, "a declared action or storage")
        if src_id == dst_id:
            self._error(dst, "a node other than the source")
        return src_id, dst_id


def parse(text: str) -> Document:
    """Parse model text into a :class:`Document`.

    Raises :class:`ParseError` for syntax and name errors (with a source
    span), and lets semantic errors from the dynamic layer -- disconnected
    regions, unbounded cycles -- propagate as :class:`DynamicsError`.
    """
    return _Parser(_tokenize(text)).parse_document()


# ---------------------------------------------------------------------------
# formatter


def _escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


class _Formatter:
    def __init__(self, model: StaticModel):
        self.model = model
        self.nodes = set(model.actions_by_id) | set(model.storages_by_id)
        self.lines: list[str] = []

    def _resolves_to(self, ref: str, scope: tuple[str, ...]) -> Optional[str]:
        for i in range(len(scope), -1, -1):
            candidate = "/".join((*scope[:i], ref))
            if candidate in self.nodes:
                return candidate
        return None

    def _print_ref(self, node_id: str, scope: tuple[str, ...], owner: str) -> str:
        local = node_id.rsplit("/", 1)[-1]
        if self.model.node_owner(node_id) == owner:
            if self._resolves_to(local, scope) == node_id:
                return local
        if self._resolves_to(node_id, scope) == node_id:
            return node_id
        raise FormatError(
            f"{node_id!r} cannot be written unambiguously from {owner!r}"
        )

    def emit_model(self) -> None:
        self.lines.append(f"model {self.model.name} {{")
        for thimac in self.model.children_of(None):
            self._emit_thimac(thimac, depth=1)
        self.lines.append("}")

    def _emit_thimac(self, thimac, depth: int) -> None:
        pad = "  " * depth
        inner = "  " * (depth + 1)
        head = f"{pad}thimac {thimac.id.rsplit('/', 1)[-1]}"
        if thimac.note is not None:
            head += f' "{_escape(thimac.note)}"'
        self.lines.append(head + " {")
        for action in self.model.actions_of(thimac.id):
            line = f"{inner}{action.kind} {action.id.rsplit('/', 1)[-1]}"
            if action.label is not None:
                line += f' "{_escape(action.label)}"'
            if action.anchor is not None:
                line += f" @{action.anchor}"
            self.lines.append(line)
        for storage in self.model.storages_of(thimac.id):
            self.lines.append(f"{inner}storage {storage.id.rsplit('/', 1)[-1]}")
        for child in self.model.children_of(thimac.id):
            self._emit_thimac(child, depth + 1)
        self._emit_edges(tuple(thimac.id.split("/")), thimac.id, inner)
        self.lines.append(pad + "}")

    def _emit_edges(self, scope: tuple[str, ...], owner: str, pad: str) -> None:
        for flow in self.model.flows:
            if self._grouping_owner(flow) != owner:
                continue
            src = self._print_ref(flow.src, scope, owner)
            dst = self._print_ref(flow.dst, scope, owner)
            self.lines.append(f"{pad}{src} -> {dst}")
        for trigger in self.model.triggers:
            if self._grouping_owner(trigger) != owner:
                continue
            src = self._print_ref(trigger.src, scope, owner)
            dst = self._print_ref(trigger.dst, scope, owner)
            line = f"{pad}{src} ~> {dst}"
            if trigger.condition is not None:
                line += f' if "{_escape(trigger.condition)}"'
            self.lines.append(line)

    def _grouping_owner(self, edge) -> Optional[str]:
        owner = self.model.node_owner(edge.src)
        if owner is None or self.model.node_owner(edge.dst) is None:
            raise FormatError(
                f"edge {edge.id!r} has an unresolved endpoint and cannot "
                f"be written"
            )
        return owner


def format_document(doc: Union[Document, StaticModel]) -> str:
    """Render a document as canonical text.

    Per thimac: actions, storages, nested thimacs, then the flows and
    triggers whose source lives there; two-space indent; region members
    sorted.  ``parse(format(d))`` is structurally equal to ``d`` for any
    document whose node ids are containment paths (as ``parse`` builds
    them), and ``format`` is idempotent across a parse round trip.
    """
    if isinstance(doc, StaticModel):
        doc = Document(doc)
    formatter = _Formatter(doc.model)
    formatter.emit_model()
    lines = formatter.lines

    if doc.events:
        lines.append("")
        lines.append("events {")
        for event in doc.events:
            members = ", ".join(sorted(event.region))
            lines.append(
                f'  event {event.id} "{_escape(event.label)}" {{ {members} }}'
            )
        lines.append("}")

    if doc.chronology is not None:
        lines.append("")
        lines.append("chronology {")
        for edge in doc.chronology.edges:
            line = f"  {edge.src} -> {edge.dst}"
            if edge.guard is not None:
                line += f' if "{_escape(edge.guard)}"'
            bound = doc.chronology.loop_bounds.get((edge.src, edge.dst))
            if bound is not None:
                line += f" max {bound}"
            lines.append(line)
        lines.append("}")

    return "\n".join(lines) + "\n"
