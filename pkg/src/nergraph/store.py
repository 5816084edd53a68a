"""Authoritative graph store with invertible mutations and undo/redo.

Every high-level command expands into primitive changes (add/remove node,
add/remove edge, replace node). The journal records the primitives, so
undoing an entry replays exact inverses and restores the previous state
byte-for-byte under canonical serialization.

Concurrency: one writer at a time. Callers that share a store across
threads must serialize mutations themselves (the session service does);
``snapshot()`` hands out an independent copy that stays valid afterwards.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import TYPE_CHECKING, Iterable, Union

from .model import (
    DanglingReferenceError,
    DocumentNode,
    DuplicateIdError,
    Edge,
    EdgeKey,
    EdgeKind,
    EmptyHistoryError,
    EntityClass,
    EntityNode,
    GlobalKey,
    InvalidOpError,
    MentionNode,
    Node,
    NodeKind,
    RevisionConflictError,
    SpanError,
    UnknownKeyError,
    collocation_edge,
    mention_document_edge,
    mention_entity_edge,
    spans_intersect,
)

if TYPE_CHECKING:
    from .io_formats import ImportFile


# --- mutation commands ---------------------------------------------------


@dataclass(frozen=True)
class AddNode:
    node: Node


@dataclass(frozen=True)
class DeleteNode:
    key: GlobalKey


@dataclass(frozen=True)
class AddEdge:
    kind: EdgeKind
    a: GlobalKey
    b: GlobalKey
    confidence: float = 1.0
    weight: int = 1


@dataclass(frozen=True)
class DeleteEdge:
    kind: EdgeKind
    a: GlobalKey
    b: GlobalKey


@dataclass(frozen=True)
class SetEntityTerm:
    entity: str
    term: str


@dataclass(frozen=True)
class SetNodeClass:
    key: GlobalKey
    entity_class: EntityClass


@dataclass(frozen=True)
class MergeEntities:
    keep: str
    absorb: str


MutationOp = Union[AddNode, DeleteNode, AddEdge, DeleteEdge, SetEntityTerm, SetNodeClass, MergeEntities]


# --- journal primitives ---------------------------------------------------


@dataclass(frozen=True)
class _AddNodeP:
    node: Node


@dataclass(frozen=True)
class _RemoveNodeP:
    node: Node


@dataclass(frozen=True)
class _AddEdgeP:
    edge: Edge


@dataclass(frozen=True)
class _RemoveEdgeP:
    edge: Edge


@dataclass(frozen=True)
class _ReplaceNodeP:
    before: Node
    after: Node


_Primitive = Union[_AddNodeP, _RemoveNodeP, _AddEdgeP, _RemoveEdgeP, _ReplaceNodeP]


def _invert(prim: _Primitive) -> _Primitive:
    if isinstance(prim, _AddNodeP):
        return _RemoveNodeP(prim.node)
    if isinstance(prim, _RemoveNodeP):
        return _AddNodeP(prim.node)
    if isinstance(prim, _AddEdgeP):
        return _RemoveEdgeP(prim.edge)
    if isinstance(prim, _RemoveEdgeP):
        return _AddEdgeP(prim.edge)
    return _ReplaceNodeP(prim.after, prim.before)


@dataclass(frozen=True)
class JournalEntry:
    """One applied command batch: the requested ops and their primitive trace."""

    revision: int
    ops: tuple[MutationOp, ...]
    primitives: tuple[_Primitive, ...]

    @property
    def touched_keys(self) -> set[GlobalKey]:
        keys: set[GlobalKey] = set()
        for prim in self.primitives:
            if isinstance(prim, (_AddNodeP, _RemoveNodeP)):
                keys.add(prim.node.key)
            elif isinstance(prim, _ReplaceNodeP):
                keys.add(prim.before.key)
                keys.add(prim.after.key)
            else:
                keys.add(prim.edge.a)
                keys.add(prim.edge.b)
        return keys


# --- collocation derivation ----------------------------------------------


def derive_collocations(doc: DocumentNode, mentions: Iterable[MentionNode]) -> list[Edge]:
    """One edge per unordered mention pair sharing at least one sentence span.

    Weight counts the shared sentences. Mentions must belong to ``doc``.
    """
    ordered = sorted(mentions, key=lambda m: m.id)
    for m in ordered:
        if m.document != doc.id:
            raise ValueError(f"mention {m.id} does not belong to document {doc.id}")
    edges = []
    for i, first in enumerate(ordered):
        for second in ordered[i + 1 :]:
            shared = sum(
                1
                for sentence in doc.sentences
                if spans_intersect(first.span, sentence) and spans_intersect(second.span, sentence)
            )
            if shared:
                edges.append(collocation_edge(first.id, second.id, weight=shared))
    return edges


# --- the store -------------------------------------------------------------


class GraphStore:
    def __init__(self) -> None:
        self.documents: dict[str, DocumentNode] = {}
        self.mentions: dict[str, MentionNode] = {}
        self.entities: dict[str, EntityNode] = {}
        self.edges: dict[EdgeKey, Edge] = {}
        self._adjacency: dict[GlobalKey, set[EdgeKey]] = {}
        self.journal: list[JournalEntry] = []
        self.redo_stack: list[JournalEntry] = []
        self.revision = 0

    # -- read side ---------------------------------------------------------

    def __len__(self) -> int:
        return len(self.documents) + len(self.mentions) + len(self.entities)

    def has_node(self, key: GlobalKey) -> bool:
        return key.id in self._bucket(key.kind)

    def node(self, key: GlobalKey) -> Node:
        try:
            return self._bucket(key.kind)[key.id]
        except KeyError:
            raise UnknownKeyError(f"unknown node {key}") from None

    def node_keys(self) -> list[GlobalKey]:
        keys = [d.key for d in self.documents.values()]
        keys += [m.key for m in self.mentions.values()]
        keys += [e.key for e in self.entities.values()]
        return sorted(keys, key=GlobalKey.sort_key)

    def incident_edges(self, key: GlobalKey, kinds: Iterable[EdgeKind] | None = None) -> list[Edge]:
        if not self.has_node(key):
            raise UnknownKeyError(f"unknown node {key}")
        wanted = set(kinds) if kinds is not None else None
        edges = [self.edges[ek] for ek in self._adjacency.get(key, ())]
        if wanted is not None:
            edges = [e for e in edges if e.kind in wanted]
        return sorted(edges, key=lambda e: (e.kind.value, e.a.sort_key(), e.b.sort_key()))

    def neighbors(self, key: GlobalKey, kinds: Iterable[EdgeKind]) -> set[GlobalKey]:
        return {edge.other(key) for edge in self.incident_edges(key, kinds)}

    def class_mismatches(self) -> list[tuple[str, str]]:
        """Mention-entity links whose endpoint classes disagree, sorted by ids."""
        out = []
        for edge in self.edges.values():
            if edge.kind is not EdgeKind.MENTION_ENTITY:
                continue
            mention = self.mentions[edge.a.id]
            entity = self.entities[edge.b.id]
            if mention.entity_class is not entity.entity_class:
                out.append((mention.id, entity.id))
        return sorted(out)

    def snapshot(self) -> "GraphStore":
        """Independent copy for readers; later mutations do not affect it."""
        copy = GraphStore.__new__(GraphStore)
        copy.documents = dict(self.documents)
        copy.mentions = dict(self.mentions)
        copy.entities = dict(self.entities)
        copy.edges = dict(self.edges)
        copy._adjacency = {k: set(v) for k, v in self._adjacency.items()}
        copy.journal = list(self.journal)
        copy.redo_stack = list(self.redo_stack)
        copy.revision = self.revision
        return copy

    # -- write side ----------------------------------------------------------

    def apply(self, ops: Iterable[MutationOp], expected_revision: int | None = None) -> JournalEntry:
        """Apply a command batch atomically as one journal entry.

        On any failure the partially applied primitives are rolled back and
        the store is left untouched. Clears the redo stack.
        """
        if expected_revision is not None and expected_revision != self.revision:
            raise RevisionConflictError(expected_revision, self.revision)
        ops = tuple(ops)
        applied: list[_Primitive] = []
        try:
            for op in ops:
                for prim in self._expand(op):
                    self._apply_primitive(prim)
                    applied.append(prim)
        except Exception:
            for prim in reversed(applied):
                self._apply_primitive(_invert(prim))
            raise
        self.revision += 1
        entry = JournalEntry(self.revision, ops, tuple(applied))
        self.journal.append(entry)
        self.redo_stack.clear()
        return entry

    def delete_node(self, key: GlobalKey) -> JournalEntry:
        return self.apply([DeleteNode(key)])

    def merge_entities(self, keep: str, absorb: str) -> JournalEntry:
        return self.apply([MergeEntities(keep, absorb)])

    def set_entity_term(self, entity_id: str, term: str) -> JournalEntry:
        return self.apply([SetEntityTerm(entity_id, term)])

    def undo(self) -> int:
        if not self.journal:
            raise EmptyHistoryError("nothing to undo")
        entry = self.journal.pop()
        for prim in reversed(entry.primitives):
            self._apply_primitive(_invert(prim))
        self.redo_stack.append(entry)
        self.revision += 1
        return self.revision

    def redo(self) -> int:
        if not self.redo_stack:
            raise EmptyHistoryError("nothing to redo")
        entry = self.redo_stack.pop()
        for prim in entry.primitives:
            self._apply_primitive(prim)
        self.journal.append(entry)
        self.revision += 1
        return self.revision

    # -- op expansion ---------------------------------------------------------

    def _bucket(self, kind: NodeKind) -> dict[str, Node]:
        if kind is NodeKind.DOCUMENT:
            return self.documents
        if kind is NodeKind.MENTION:
            return self.mentions
        return self.entities

    def _expand(self, op: MutationOp) -> list[_Primitive]:
        if isinstance(op, AddNode):
            return self._expand_add_node(op.node)
        if isinstance(op, DeleteNode):
            return self._expand_delete_node(op.key)
        if isinstance(op, AddEdge):
            return [_AddEdgeP(self._checked_new_edge(op))]
        if isinstance(op, DeleteEdge):
            return self._expand_delete_edge(op)
        if isinstance(op, SetEntityTerm):
            return self._expand_set_term(op)
        if isinstance(op, SetNodeClass):
            return self._expand_set_class(op)
        if isinstance(op, MergeEntities):
            return self._expand_merge(op)
        raise InvalidOpError(f"unsupported op {op!r}")

    def _expand_add_node(self, node: Node) -> list[_Primitive]:
        if node.key.id in self._bucket(node.key.kind):
            raise DuplicateIdError(f"duplicate id {node.key}")
        if isinstance(node, DocumentNode):
            check_sentences(node)
            return [_AddNodeP(node)]
        if isinstance(node, MentionNode):
            doc = self.documents.get(node.document)
            if doc is None:
                raise DanglingReferenceError(f"mention {node.id} references missing document {node.document!r}")
            check_mention_span(node, doc)
            # A mention always owns exactly one mention-document edge.
            return [_AddNodeP(node), _AddEdgeP(mention_document_edge(node.id, node.document))]
        if not node.term:
            raise InvalidOpError(f"entity {node.id} has an empty term")
        return [_AddNodeP(node)]

    def _expand_delete_node(self, key: GlobalKey) -> list[_Primitive]:
        node = self.node(key)
        doomed_nodes: list[Node] = [node]
        if isinstance(node, DocumentNode):
            # Mentions cannot outlive their document.
            doomed_nodes += [m for m in self.mentions.values() if m.document == node.id]
        doomed_edges: dict[EdgeKey, Edge] = {}
        for victim in doomed_nodes:
            for ek in self._adjacency.get(victim.key, ()):
                doomed_edges[ek] = self.edges[ek]
        if isinstance(node, EntityNode):
            # Entity deletion releases its links; mentions stay behind.
            doomed_edges = {ek: e for ek, e in doomed_edges.items() if e.kind is EdgeKind.MENTION_ENTITY}
        prims: list[_Primitive] = [_RemoveEdgeP(e) for _, e in sorted(doomed_edges.items(), key=lambda kv: _edge_sort_key(kv[1]))]
        prims += [_RemoveNodeP(n) for n in sorted(doomed_nodes, key=lambda n: n.key.sort_key(), reverse=True)]
        return prims

    def _checked_new_edge(self, op: AddEdge) -> Edge:
        if op.kind is EdgeKind.ENTITY_DOCUMENT:
            raise InvalidOpError("entity-document edges are derived per view and cannot be stored")
        if op.kind is EdgeKind.MENTION_DOCUMENT:
            raise InvalidOpError("mention-document edges are owned by their mention")
        for key in (op.a, op.b):
            if not self.has_node(key):
                raise DanglingReferenceError(f"edge endpoint {key} does not exist")
        if op.kind is EdgeKind.MENTION_ENTITY:
            if op.a.kind is not NodeKind.MENTION or op.b.kind is not NodeKind.ENTITY:
                raise InvalidOpError("mention-entity edge endpoints must be (mention, entity)")
            if not 0.0 <= op.confidence <= 1.0:
                raise InvalidOpError(f"confidence {op.confidence} outside [0, 1]")
            edge = mention_entity_edge(op.a.id, op.b.id, op.confidence)
        else:
            if op.a.kind is not NodeKind.MENTION or op.b.kind is not NodeKind.MENTION:
                raise InvalidOpError("collocation endpoints must be mentions")
            if op.a == op.b:
                raise InvalidOpError("collocation endpoints must differ")
            if self.mentions[op.a.id].document != self.mentions[op.b.id].document:
                raise InvalidOpError("collocation endpoints must share a document")
            if op.weight < 1:
                raise InvalidOpError(f"collocation weight {op.weight} must be positive")
            edge = collocation_edge(op.a.id, op.b.id, op.weight)
        if edge.key in self.edges:
            raise DuplicateIdError(f"duplicate edge {edge.id}")
        return edge

    def _expand_delete_edge(self, op: DeleteEdge) -> list[_Primitive]:
        if op.kind is EdgeKind.MENTION_DOCUMENT:
            raise InvalidOpError("mention-document edges are owned by their mention; delete the mention instead")
        candidate = Edge(op.kind, op.a, op.b)
        if op.kind is EdgeKind.COLLOCATION:
            candidate = collocation_edge(op.a.id, op.b.id)
        edge = self.edges.get(candidate.key)
        if edge is None:
            raise UnknownKeyError(f"unknown edge {candidate.id}")
        return [_RemoveEdgeP(edge)]

    def _expand_set_term(self, op: SetEntityTerm) -> list[_Primitive]:
        entity = self.entities.get(op.entity)
        if entity is None:
            raise UnknownKeyError(f"unknown entity {op.entity!r}")
        if not op.term:
            raise InvalidOpError("entity term must be non-empty")
        return [_ReplaceNodeP(entity, replace(entity, term=op.term))]

    def _expand_set_class(self, op: SetNodeClass) -> list[_Primitive]:
        node = self.node(op.key)
        if isinstance(node, DocumentNode):
            raise InvalidOpError("documents carry no entity class")
        return [_ReplaceNodeP(node, replace(node, entity_class=op.entity_class))]

    def _expand_merge(self, op: MergeEntities) -> list[_Primitive]:
        if op.keep == op.absorb:
            raise InvalidOpError("cannot merge an entity into itself")
        for entity_id in (op.keep, op.absorb):
            if entity_id not in self.entities:
                raise UnknownKeyError(f"unknown entity {entity_id!r}")
        absorb_node = self.entities[op.absorb]
        prims: list[_Primitive] = []
        absorbed = self.incident_edges(absorb_node.key, [EdgeKind.MENTION_ENTITY])
        for edge in sorted(absorbed, key=lambda e: e.a.id):
            prims.append(_RemoveEdgeP(edge))
            kept_key = (EdgeKind.MENTION_ENTITY, edge.a, GlobalKey(NodeKind.ENTITY, op.keep))
            existing = self.edges.get(kept_key)
            if existing is None:
                prims.append(_AddEdgeP(mention_entity_edge(edge.a.id, op.keep, edge.confidence)))
            elif edge.confidence > existing.confidence:
                # A mention keeps a single link per entity, at the stronger confidence.
                prims.append(_RemoveEdgeP(existing))
                prims.append(_AddEdgeP(mention_entity_edge(edge.a.id, op.keep, edge.confidence)))
        prims.append(_RemoveNodeP(absorb_node))
        return prims

    # -- primitive application -------------------------------------------------

    def _apply_primitive(self, prim: _Primitive) -> None:
        if isinstance(prim, _AddNodeP):
            self._bucket(prim.node.key.kind)[prim.node.key.id] = prim.node
            self._adjacency.setdefault(prim.node.key, set())
        elif isinstance(prim, _RemoveNodeP):
            del self._bucket(prim.node.key.kind)[prim.node.key.id]
            self._adjacency.pop(prim.node.key, None)
        elif isinstance(prim, _AddEdgeP):
            self.edges[prim.edge.key] = prim.edge
            self._adjacency.setdefault(prim.edge.a, set()).add(prim.edge.key)
            self._adjacency.setdefault(prim.edge.b, set()).add(prim.edge.key)
        elif isinstance(prim, _RemoveEdgeP):
            del self.edges[prim.edge.key]
            self._adjacency[prim.edge.a].discard(prim.edge.key)
            self._adjacency[prim.edge.b].discard(prim.edge.key)
        else:
            self._bucket(prim.after.key.kind)[prim.after.key.id] = prim.after


def _edge_sort_key(edge: Edge) -> tuple:
    return (edge.kind.value, edge.a.sort_key(), edge.b.sort_key())


# --- validation helpers shared with import ---------------------------------


def check_sentences(doc: DocumentNode) -> None:
    previous_end = None
    for span in doc.sentences:
        start, end = span
        if start < 0 or start >= end:
            raise SpanError(f"document {doc.id}: bad sentence span {span}")
        if previous_end is not None and start < previous_end:
            raise SpanError(f"document {doc.id}: sentence spans overlap or are unsorted at {span}")
        if doc.text is not None and end > len(doc.text):
            raise SpanError(f"document {doc.id}: sentence span {span} exceeds text length")
        previous_end = end


def check_mention_span(mention: MentionNode, doc: DocumentNode) -> None:
    start, end = mention.span
    if start < 0 or start >= end:
        raise SpanError(f"mention {mention.id}: bad span {mention.span}")
    if doc.text is not None and end > len(doc.text):
        raise SpanError(f"mention {mention.id}: span {mention.span} exceeds document {doc.id} text")


# --- import --------------------------------------------------------------


def build_from_import(file: "ImportFile") -> GraphStore:
    """Materialize a validated import file into a fresh store at revision 0.

    Collocations are derived from sentence spans unless the file supplies
    them explicitly.
    """
    store = GraphStore()
    for doc in file.documents:
        if doc.id in store.documents:
            raise DuplicateIdError(f"duplicate document id {doc.id!r}")
        check_sentences(doc)
        store._apply_primitive(_AddNodeP(doc))
    for mention in file.mentions:
        if mention.id in store.mentions:
            raise DuplicateIdError(f"duplicate mention id {mention.id!r}")
        doc = store.documents.get(mention.document)
        if doc is None:
            raise DanglingReferenceError(f"mention {mention.id} references missing document {mention.document!r}")
        check_mention_span(mention, doc)
        store._apply_primitive(_AddNodeP(mention))
        store._apply_primitive(_AddEdgeP(mention_document_edge(mention.id, mention.document)))
    for entity in file.entities:
        if entity.id in store.entities:
            raise DuplicateIdError(f"duplicate entity id {entity.id!r}")
        store._apply_primitive(_AddNodeP(entity))
    for link in file.links:
        if link.mention not in store.mentions:
            raise DanglingReferenceError(f"link references missing mention {link.mention!r}")
        if link.entity not in store.entities:
            raise DanglingReferenceError(f"link references missing entity {link.entity!r}")
        edge = mention_entity_edge(link.mention, link.entity, link.confidence)
        if edge.key in store.edges:
            raise DuplicateIdError(f"duplicate link {link.mention!r} -> {link.entity!r}")
        store._apply_primitive(_AddEdgeP(edge))
    if file.collocations is not None:
        for record in file.collocations:
            for mention_id in (record.a, record.b):
                if mention_id not in store.mentions:
                    raise DanglingReferenceError(f"collocation references missing mention {mention_id!r}")
            edge = collocation_edge(record.a, record.b, record.weight)
            if edge.key in store.edges:
                raise DuplicateIdError(f"duplicate collocation {record.a!r} - {record.b!r}")
            store._apply_primitive(_AddEdgeP(edge))
    else:
        mentions_by_doc: dict[str, list[MentionNode]] = {}
        for mention in store.mentions.values():
            mentions_by_doc.setdefault(mention.document, []).append(mention)
        for doc_id in sorted(mentions_by_doc):
            for edge in derive_collocations(store.documents[doc_id], mentions_by_doc[doc_id]):
                store._apply_primitive(_AddEdgeP(edge))
    store.revision = 0
    return store
