"""Canonical JSON interchange: import parsing, validation, and export.

The format is versioned (currently 1). Exports are canonical: object keys
sorted, arrays sorted by id, UTF-8, LF line ending, no insignificant
whitespace. Exporting the same store twice yields identical bytes, and
re-importing an export reproduces the store exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any

from .model import (
    DocumentNode,
    EdgeKind,
    EntityClass,
    EntityNode,
    GlobalKey,
    MentionNode,
    NodeKind,
    key_from_string,
)
from .store import GraphStore
from .view import ColorScheme, FocusState, RuleFilter, ViewMode, ViewState

FORMAT_VERSION = 1


@dataclass(frozen=True)
class Violation:
    path: str
    reason: str

    def __str__(self) -> str:
        return f"{self.path}: {self.reason}"


class ImportFormatError(Exception):
    """Raised by parse_import with the first violation in document order."""

    def __init__(self, violation: Violation):
        super().__init__(str(violation))
        self.violation = violation


@dataclass(frozen=True)
class LinkRecord:
    mention: str
    entity: str
    confidence: float


@dataclass(frozen=True)
class CollocationRecord:
    a: str
    b: str
    weight: int


@dataclass(frozen=True)
class ImportFile:
    documents: tuple[DocumentNode, ...]
    mentions: tuple[MentionNode, ...]
    entities: tuple[EntityNode, ...]
    links: tuple[LinkRecord, ...]
    collocations: tuple[CollocationRecord, ...] | None = None
    positions: dict[GlobalKey, tuple[float, float]] | None = None
    view_state: ViewState | None = None


def parse_import(data: bytes | str) -> ImportFile:
    violations, parsed = _scan(data, stop_at_first=True)
    if violations:
        raise ImportFormatError(violations[0])
    assert parsed is not None
    return parsed


def validate(data: bytes | str | dict) -> list[Violation]:
    """Collect every violation; an empty list means the file will import."""
    violations, _ = _scan(data, stop_at_first=False)
    return violations


# --- the walker -------------------------------------------------------------


class _Stop(Exception):
    pass


class _Scanner:
    def __init__(self, stop_at_first: bool):
        self.stop_at_first = stop_at_first
        self.violations: list[Violation] = []

    def fail(self, path: str, reason: str) -> None:
        self.violations.append(Violation(path, reason))
        if self.stop_at_first:
            raise _Stop()

    def require(self, obj: dict, path: str, name: str, types: tuple[type, ...], type_label: str) -> Any:
        if name not in obj:
            self.fail(f"{path}.{name}", "missing required field")
            return None
        value = obj[name]
        if not isinstance(value, types) or isinstance(value, bool) and bool not in types:
            self.fail(f"{path}.{name}", f"expected {type_label}")
            return None
        return value

    def optional(self, obj: dict, path: str, name: str, types: tuple[type, ...], type_label: str) -> Any:
        if name not in obj or obj[name] is None:
            return None
        return self.require(obj, path, name, types, type_label)


def _scan(data: bytes | str | dict, stop_at_first: bool) -> tuple[list[Violation], ImportFile | None]:
    scanner = _Scanner(stop_at_first)
    try:
        parsed = _scan_inner(scanner, data)
    except _Stop:
        parsed = None
    return scanner.violations, parsed


def _scan_inner(s: _Scanner, data: bytes | str | dict) -> ImportFile | None:
    if isinstance(data, (bytes, str)):
        try:
            raw = json.loads(data)
        except json.JSONDecodeError as exc:
            s.fail("$", f"malformed JSON: {exc.msg} at position {exc.pos}")
            return None
    else:
        raw = data
    if not isinstance(raw, dict):
        s.fail("$", "top level must be an object")
        return None
    version = raw.get("version")
    if version != FORMAT_VERSION:
        s.fail("$.version", f"unknown version {version!r}, expected {FORMAT_VERSION}")
        return None

    # Reference checks run against declared ids (valid or not), so one bad
    # record does not cascade into spurious dangling-reference violations.
    documents, doc_ids = _scan_documents(s, raw.get("documents", []))
    doc_index = {d.id: d for d in documents}
    mentions, mention_ids = _scan_mentions(s, raw.get("mentions", []), doc_index, doc_ids)
    entities, entity_ids = _scan_entities(s, raw.get("entities", []))
    links = _scan_links(s, raw.get("links", []), mention_ids, entity_ids)
    collocations = None
    if raw.get("collocations") is not None:
        collocations = _scan_collocations(s, raw["collocations"], {m.id: m for m in mentions}, mention_ids)
    positions = None
    if raw.get("positions") is not None:
        positions = _scan_positions(s, raw["positions"], doc_ids, mention_ids, entity_ids)
    view_state = None
    if raw.get("viewState") is not None:
        view_state = _scan_view_state(s, raw["viewState"], doc_ids, mention_ids, entity_ids)
    if s.violations:
        return None
    return ImportFile(
        documents=tuple(documents),
        mentions=tuple(mentions),
        entities=tuple(entities),
        links=tuple(links),
        collocations=tuple(collocations) if collocations is not None else None,
        positions=positions,
        view_state=view_state,
    )


def _scan_id(s: _Scanner, obj: dict, path: str, seen: set[str], label: str) -> str | None:
    node_id = s.require(obj, path, "id", (str,), "string")
    if node_id is None:
        return None
    if not node_id:
        s.fail(f"{path}.id", "id must be non-empty")
        return None
    if node_id in seen:
        s.fail(f"{path}.id", f"duplicate {label} id {node_id!r}")
        return None
    seen.add(node_id)
    return node_id


def _scan_span(s: _Scanner, value: Any, path: str, text_len: int | None) -> tuple[int, int] | None:
    if (
        not isinstance(value, (list, tuple))
        or len(value) != 2
        or not all(isinstance(v, int) and not isinstance(v, bool) for v in value)
    ):
        s.fail(path, "expected [start, end] integer pair")
        return None
    start, end = value
    if start < 0 or start >= end:
        s.fail(path, f"span start must satisfy 0 <= start < end, got [{start}, {end}]")
        return None
    if text_len is not None and end > text_len:
        s.fail(path, f"span end {end} exceeds text length {text_len}")
        return None
    return (start, end)


def _scan_documents(s: _Scanner, raw: Any) -> tuple[list[DocumentNode], set[str]]:
    if not isinstance(raw, list):
        s.fail("$.documents", "expected array")
        return [], set()
    out = []
    seen: set[str] = set()
    for i, obj in enumerate(raw):
        path = f"$.documents[{i}]"
        if not isinstance(obj, dict):
            s.fail(path, "expected object")
            continue
        doc_id = _scan_id(s, obj, path, seen, "document")
        title = s.require(obj, path, "title", (str,), "string")
        text = s.optional(obj, path, "text", (str,), "string")
        sentences_raw = obj.get("sentences", [])
        sentences: list[tuple[int, int]] = []
        if not isinstance(sentences_raw, list):
            s.fail(f"{path}.sentences", "expected array")
        else:
            text_len = len(text) if text is not None else None
            previous_end = None
            for j, span_raw in enumerate(sentences_raw):
                span = _scan_span(s, span_raw, f"{path}.sentences[{j}]", text_len)
                if span is None:
                    continue
                if previous_end is not None and span[0] < previous_end:
                    s.fail(f"{path}.sentences[{j}]", "sentence spans must be sorted and non-overlapping")
                    continue
                previous_end = span[1]
                sentences.append(span)
        if doc_id is None or title is None:
            continue
        out.append(DocumentNode(id=doc_id, title=title, text=text, sentences=tuple(sentences)))
    return out, seen


def _scan_class(s: _Scanner, obj: dict, path: str) -> EntityClass | None:
    code = s.require(obj, path, "class", (str,), "string")
    if code is None:
        return None
    try:
        return EntityClass.from_code(code)
    except ValueError:
        s.fail(f"{path}.class", f"unknown class {code!r}, expected one of PER/ORG/LOC/MISC")
        return None


def _scan_mentions(
    s: _Scanner, raw: Any, docs: dict[str, DocumentNode], doc_ids: set[str]
) -> tuple[list[MentionNode], set[str]]:
    if not isinstance(raw, list):
        s.fail("$.mentions", "expected array")
        return [], set()
    out = []
    seen: set[str] = set()
    for i, obj in enumerate(raw):
        path = f"$.mentions[{i}]"
        if not isinstance(obj, dict):
            s.fail(path, "expected object")
            continue
        mention_id = _scan_id(s, obj, path, seen, "mention")
        doc_id = s.require(obj, path, "document", (str,), "string")
        if doc_id is not None and doc_id not in doc_ids:
            s.fail(f"{path}.document", f"references missing document {doc_id!r}")
            doc_id = None
        doc = docs.get(doc_id) if doc_id is not None else None
        start = s.require(obj, path, "start", (int,), "integer")
        end = s.require(obj, path, "end", (int,), "integer")
        span = None
        if start is not None and end is not None:
            text_len = len(doc.text) if doc is not None and doc.text is not None else None
            span = _scan_span(s, [start, end], f"{path}.start", text_len)
        surface = s.require(obj, path, "surface", (str,), "string")
        entity_class = _scan_class(s, obj, path)
        if None in (mention_id, doc_id, span, surface, entity_class) or doc is None:
            continue
        out.append(
            MentionNode(id=mention_id, document=doc_id, span=span, surface=surface, entity_class=entity_class)
        )
    return out, seen


def _scan_entities(s: _Scanner, raw: Any) -> tuple[list[EntityNode], set[str]]:
    if not isinstance(raw, list):
        s.fail("$.entities", "expected array")
        return [], set()
    out = []
    seen: set[str] = set()
    for i, obj in enumerate(raw):
        path = f"$.entities[{i}]"
        if not isinstance(obj, dict):
            s.fail(path, "expected object")
            continue
        entity_id = _scan_id(s, obj, path, seen, "entity")
        term = s.require(obj, path, "term", (str,), "string")
        if term is not None and not term:
            s.fail(f"{path}.term", "term must be non-empty")
            term = None
        entity_class = _scan_class(s, obj, path)
        if None in (entity_id, term, entity_class):
            continue
        out.append(EntityNode(id=entity_id, term=term, entity_class=entity_class))
    return out, seen


def _scan_links(s: _Scanner, raw: Any, mention_ids: set[str], entity_ids: set[str]) -> list[LinkRecord]:
    if not isinstance(raw, list):
        s.fail("$.links", "expected array")
        return []
    out = []
    seen: set[tuple[str, str]] = set()
    for i, obj in enumerate(raw):
        path = f"$.links[{i}]"
        if not isinstance(obj, dict):
            s.fail(path, "expected object")
            continue
        mention = s.require(obj, path, "mention", (str,), "string")
        entity = s.require(obj, path, "entity", (str,), "string")
        if mention is not None and mention not in mention_ids:
            s.fail(f"{path}.mention", f"references missing mention {mention!r}")
            mention = None
        if entity is not None and entity not in entity_ids:
            s.fail(f"{path}.entity", f"references missing entity {entity!r}")
            entity = None
        confidence = 1.0
        if "confidence" in obj and obj["confidence"] is not None:
            value = obj["confidence"]
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                s.fail(f"{path}.confidence", "expected number")
                continue
            if not 0.0 <= value <= 1.0:
                s.fail(f"{path}.confidence", f"confidence {value} outside [0, 1]")
                continue
            confidence = float(value)
        if mention is None or entity is None:
            continue
        if (mention, entity) in seen:
            s.fail(path, f"duplicate link {mention!r} -> {entity!r}")
            continue
        seen.add((mention, entity))
        out.append(LinkRecord(mention=mention, entity=entity, confidence=confidence))
    return out


def _scan_collocations(
    s: _Scanner, raw: Any, mentions: dict[str, MentionNode], mention_ids: set[str]
) -> list[CollocationRecord]:
    if not isinstance(raw, list):
        s.fail("$.collocations", "expected array")
        return []
    out = []
    seen: set[tuple[str, str]] = set()
    for i, obj in enumerate(raw):
        path = f"$.collocations[{i}]"
        if not isinstance(obj, dict):
            s.fail(path, "expected object")
            continue
        a = s.require(obj, path, "a", (str,), "string")
        b = s.require(obj, path, "b", (str,), "string")
        weight = obj.get("weight", 1)
        if not isinstance(weight, int) or isinstance(weight, bool) or weight < 1:
            s.fail(f"{path}.weight", "expected positive integer")
            continue
        ok = True
        for name, mention_id in (("a", a), ("b", b)):
            if mention_id is not None and mention_id not in mention_ids:
                s.fail(f"{path}.{name}", f"references missing mention {mention_id!r}")
                ok = False
        if a is None or b is None or not ok:
            continue
        if a == b:
            s.fail(path, "collocation endpoints must differ")
            continue
        if a in mentions and b in mentions and mentions[a].document != mentions[b].document:
            s.fail(path, "collocation endpoints must share a document")
            continue
        pair = tuple(sorted((a, b)))
        if pair in seen:
            s.fail(path, f"duplicate collocation {a!r} - {b!r}")
            continue
        seen.add(pair)
        out.append(CollocationRecord(a=pair[0], b=pair[1], weight=weight))
    return out


def _scan_positions(
    s: _Scanner, raw: Any, doc_ids: set[str], mention_ids: set[str], entity_ids: set[str]
) -> dict[GlobalKey, tuple[float, float]] | None:
    if not isinstance(raw, dict):
        s.fail("$.positions", "expected object")
        return None
    out: dict[GlobalKey, tuple[float, float]] = {}
    for key_text in sorted(raw):
        path = f"$.positions[{key_text!r}]"
        try:
            key = key_from_string(key_text)
        except ValueError as exc:
            s.fail(path, str(exc))
            continue
        exists = (
            key.id in doc_ids
            if key.kind is NodeKind.DOCUMENT
            else key.id in mention_ids
            if key.kind is NodeKind.MENTION
            else key.id in entity_ids
        )
        if not exists:
            s.fail(path, f"references missing node {key}")
            continue
        value = raw[key_text]
        if (
            not isinstance(value, (list, tuple))
            or len(value) != 2
            or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)
        ):
            s.fail(path, "expected [x, y] number pair")
            continue
        out[key] = (float(value[0]), float(value[1]))
    return out


def _scan_view_state(
    s: _Scanner, raw: Any, doc_ids: set[str], mention_ids: set[str], entity_ids: set[str]
) -> ViewState | None:
    if not isinstance(raw, dict):
        s.fail("$.viewState", "expected object")
        return None
    path = "$.viewState"
    mode = ViewMode.DME
    mode_raw = raw.get("mode", "dme")
    try:
        mode = ViewMode(mode_raw)
    except ValueError:
        s.fail(f"{path}.mode", f"unknown mode {mode_raw!r}")
    scheme = ColorScheme.BY_TYPE
    scheme_raw = raw.get("colorScheme", "by-type")
    try:
        scheme = ColorScheme(scheme_raw)
    except ValueError:
        s.fail(f"{path}.colorScheme", f"unknown color scheme {scheme_raw!r}")
    rule = RuleFilter()
    rule_raw = raw.get("ruleFilter")
    if rule_raw is not None:
        if not isinstance(rule_raw, dict):
            s.fail(f"{path}.ruleFilter", "expected object")
        else:
            rule = _scan_rule_filter(s, rule_raw, f"{path}.ruleFilter")
    focus = FocusState()
    focus_raw = raw.get("focusState")
    if focus_raw is not None:
        if not isinstance(focus_raw, dict):
            s.fail(f"{path}.focusState", "expected object")
        else:
            keys = {}
            for name in ("selected", "focused"):
                keys[name] = None
                value = focus_raw.get(name)
                if value is None:
                    continue
                if not isinstance(value, str):
                    s.fail(f"{path}.focusState.{name}", "expected a node key string")
                    continue
                try:
                    key = key_from_string(value)
                except ValueError as exc:
                    s.fail(f"{path}.focusState.{name}", str(exc))
                    continue
                exists = (
                    key.id in doc_ids
                    if key.kind is NodeKind.DOCUMENT
                    else key.id in mention_ids
                    if key.kind is NodeKind.MENTION
                    else key.id in entity_ids
                )
                if not exists:
                    s.fail(f"{path}.focusState.{name}", f"references missing node {key}")
                    continue
                keys[name] = key
            focus = FocusState(selected=keys["selected"], focused=keys["focused"])
    return ViewState(mode=mode, rule=rule, focus=focus, scheme=scheme)


def _scan_rule_filter(s: _Scanner, raw: dict, path: str) -> RuleFilter:
    node_kinds = RuleFilter().node_kinds
    if "nodeKinds" in raw:
        parsed = _scan_enum_list(s, raw["nodeKinds"], f"{path}.nodeKinds", NodeKind)
        if parsed is not None:
            node_kinds = parsed
    entity_classes = RuleFilter().entity_classes
    if "entityClasses" in raw:
        values = raw["entityClasses"]
        if not isinstance(values, list):
            s.fail(f"{path}.entityClasses", "expected array")
        else:
            acc = set()
            ok = True
            for value in values:
                try:
                    acc.add(EntityClass.from_code(value))
                except (ValueError, TypeError):
                    s.fail(f"{path}.entityClasses", f"unknown class {value!r}")
                    ok = False
            if ok:
                entity_classes = frozenset(acc)
    edge_kinds = RuleFilter().edge_kinds
    if "edgeKinds" in raw:
        parsed = _scan_enum_list(s, raw["edgeKinds"], f"{path}.edgeKinds", EdgeKind)
        if parsed is not None:
            edge_kinds = parsed
    return RuleFilter(node_kinds=node_kinds, entity_classes=entity_classes, edge_kinds=edge_kinds)


def _scan_enum_list(s: _Scanner, values: Any, path: str, enum_cls) -> frozenset | None:
    if not isinstance(values, list):
        s.fail(path, "expected array")
        return None
    acc = set()
    for value in values:
        try:
            acc.add(enum_cls(value))
        except ValueError:
            s.fail(path, f"unknown value {value!r}")
            return None
    return frozenset(acc)


# --- export ------------------------------------------------------------------


def export_graph(
    store: GraphStore,
    view_state: ViewState | None = None,
    positions: dict[GlobalKey, tuple[float, float]] | None = None,
) -> bytes:
    """Serialize the store (plus optional view state and positions) canonically.

    Derived collocations are written out explicitly so the file is
    self-contained and re-imports without re-derivation.
    """
    payload: dict[str, Any] = {"version": FORMAT_VERSION}
    documents = []
    for doc in sorted(store.documents.values(), key=lambda d: d.id):
        obj: dict[str, Any] = {
            "id": doc.id,
            "title": doc.title,
            "sentences": [[start, end] for start, end in doc.sentences],
        }
        if doc.text is not None:
            obj["text"] = doc.text
        documents.append(obj)
    payload["documents"] = documents
    payload["mentions"] = [
        {
            "id": m.id,
            "document": m.document,
            "start": m.span[0],
            "end": m.span[1],
            "surface": m.surface,
            "class": m.entity_class.value,
        }
        for m in sorted(store.mentions.values(), key=lambda m: m.id)
    ]
    payload["entities"] = [
        {"id": e.id, "term": e.term, "class": e.entity_class.value}
        for e in sorted(store.entities.values(), key=lambda e: e.id)
    ]
    links = []
    collocations = []
    for edge in store.edges.values():
        if edge.kind is EdgeKind.MENTION_ENTITY:
            links.append({"mention": edge.a.id, "entity": edge.b.id, "confidence": edge.confidence})
        elif edge.kind is EdgeKind.COLLOCATION:
            collocations.append({"a": edge.a.id, "b": edge.b.id, "weight": edge.weight})
    payload["links"] = sorted(links, key=lambda l: (l["mention"], l["entity"]))
    payload["collocations"] = sorted(collocations, key=lambda c: (c["a"], c["b"]))
    if positions is not None:
        payload["positions"] = {str(key): [x, y] for key, (x, y) in positions.items()}
    if view_state is not None:
        payload["viewState"] = {
            "mode": view_state.mode.value,
            "colorScheme": view_state.scheme.value,
            "ruleFilter": {
                "nodeKinds": sorted(k.value for k in view_state.rule.node_kinds),
                "entityClasses": sorted(c.value for c in view_state.rule.entity_classes),
                "edgeKinds": sorted(k.value for k in view_state.rule.edge_kinds),
            },
            "focusState": {
                "selected": str(view_state.focus.selected) if view_state.focus.selected else None,
                "focused": str(view_state.focus.focused) if view_state.focus.focused else None,
            },
        }
    text = json.dumps(payload, sort_keys=True, ensure_ascii=False, separators=(",", ":"))
    return (text + "\n").encode("utf-8")


def canonical_bytes(store: GraphStore) -> bytes:
    """Store-only canonical form, the byte-equality baseline for journal tests."""
    return export_graph(store)
