"""Domain types for the document-mention-entity graph.

Nodes and edges are immutable value objects; the mutable container lives in
``nergraph.store``. Field edits are modelled by replacing a node with an
updated copy, which keeps undo/redo exact.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

Span = tuple[int, int]


class EntityClass(enum.Enum):
    """CoNLL-style entity category. Enum values are the wire codes."""

    PERSON = "PER"
    ORGANIZATION = "ORG"
    LOCATION = "LOC"
    MISC = "MISC"

    @classmethod
    def from_code(cls, code: str) -> "EntityClass":
        for member in cls:
            if member.value == code:
                return member
        raise ValueError(f"unknown entity class {code!r}")


class NodeKind(enum.Enum):
    DOCUMENT = "document"
    MENTION = "mention"
    ENTITY = "entity"


class EdgeKind(enum.Enum):
    MENTION_DOCUMENT = "mention-document"
    MENTION_ENTITY = "mention-entity"
    COLLOCATION = "collocation"
    ENTITY_DOCUMENT = "entity-document"


ALL_NODE_KINDS = frozenset(NodeKind)
ALL_ENTITY_CLASSES = frozenset(EntityClass)
ALL_EDGE_KINDS = frozenset(EdgeKind)


@dataclass(frozen=True)
class GlobalKey:
    """Store-wide node identity: (kind, opaque id)."""

    kind: NodeKind
    id: str

    def sort_key(self) -> tuple[str, str]:
        return (self.kind.value, self.id)

    def __lt__(self, other: "GlobalKey") -> bool:
        return self.sort_key() < other.sort_key()

    def __str__(self) -> str:
        return f"{self.kind.value}:{self.id}"


def document_key(doc_id: str) -> GlobalKey:
    return GlobalKey(NodeKind.DOCUMENT, doc_id)


def mention_key(mention_id: str) -> GlobalKey:
    return GlobalKey(NodeKind.MENTION, mention_id)


def entity_key(entity_id: str) -> GlobalKey:
    return GlobalKey(NodeKind.ENTITY, entity_id)


def key_from_string(text: str) -> GlobalKey:
    """Parse the ``kind:id`` form. The id part is opaque and may contain colons."""
    kind_name, sep, node_id = text.partition(":")
    if not sep or not node_id:
        raise ValueError(f"malformed node key {text!r}")
    try:
        kind = NodeKind(kind_name)
    except ValueError:
        raise ValueError(f"unknown node kind in key {text!r}") from None
    return GlobalKey(kind, node_id)


@dataclass(frozen=True)
class DocumentNode:
    id: str
    title: str
    text: str | None = None
    sentences: tuple[Span, ...] = ()

    @property
    def key(self) -> GlobalKey:
        return GlobalKey(NodeKind.DOCUMENT, self.id)


@dataclass(frozen=True)
class MentionNode:
    id: str
    document: str
    span: Span
    surface: str
    entity_class: EntityClass

    @property
    def key(self) -> GlobalKey:
        return GlobalKey(NodeKind.MENTION, self.id)


@dataclass(frozen=True)
class EntityNode:
    id: str
    term: str
    entity_class: EntityClass

    @property
    def key(self) -> GlobalKey:
        return GlobalKey(NodeKind.ENTITY, self.id)


Node = DocumentNode | MentionNode | EntityNode

EdgeKey = tuple[EdgeKind, GlobalKey, GlobalKey]


@dataclass(frozen=True)
class Edge:
    """Explicit or derived connection between two nodes.

    ``confidence`` is meaningful for mention-entity links (and derived
    entity-document edges, where it carries the strongest supporting link);
    ``weight`` counts shared sentences for collocations and supporting
    mentions for entity-document edges.
    """

    kind: EdgeKind
    a: GlobalKey
    b: GlobalKey
    confidence: float = 1.0
    weight: int = 1

    @property
    def key(self) -> EdgeKey:
        return (self.kind, self.a, self.b)

    @property
    def id(self) -> str:
        return f"{self.kind.value}|{self.a}|{self.b}"

    def endpoints(self) -> tuple[GlobalKey, GlobalKey]:
        return (self.a, self.b)

    def other(self, key: GlobalKey) -> GlobalKey:
        if key == self.a:
            return self.b
        if key == self.b:
            return self.a
        raise ValueError(f"{key} is not an endpoint of {self.id}")


def mention_document_edge(mention_id: str, doc_id: str) -> Edge:
    return Edge(EdgeKind.MENTION_DOCUMENT, mention_key(mention_id), document_key(doc_id))


def mention_entity_edge(mention_id: str, entity_id: str, confidence: float = 1.0) -> Edge:
    return Edge(
        EdgeKind.MENTION_ENTITY,
        mention_key(mention_id),
        entity_key(entity_id),
        confidence=confidence,
    )


def collocation_edge(mention_a: str, mention_b: str, weight: int = 1) -> Edge:
    """Collocation endpoints are unordered; normalize to sorted mention ids."""
    lo, hi = sorted((mention_a, mention_b))
    return Edge(EdgeKind.COLLOCATION, mention_key(lo), mention_key(hi), weight=weight)


def entity_document_edge(entity_id: str, doc_id: str, weight: int, confidence: float) -> Edge:
    return Edge(
        EdgeKind.ENTITY_DOCUMENT,
        entity_key(entity_id),
        document_key(doc_id),
        confidence=confidence,
        weight=weight,
    )


def spans_intersect(a: Span, b: Span) -> bool:
    """Half-open interval intersection."""
    return a[0] < b[1] and b[0] < a[1]


class GraphError(Exception):
    """Base for store-level failures."""


class UnknownKeyError(GraphError):
    pass


class DuplicateIdError(GraphError):
    pass


class DanglingReferenceError(GraphError):
    pass


class SpanError(GraphError):
    pass


class InvalidOpError(GraphError):
    pass


class RevisionConflictError(GraphError):
    def __init__(self, expected: int, current: int):
        super().__init__(f"expected revision {expected}, store is at {current}")
        self.expected = expected
        self.current = current


class EmptyHistoryError(GraphError):
    pass
