"""View pipeline: structural projection, focus/rule filtering, visual mapping.

All three stages are pure functions over a store snapshot, so recomputing a
view is always safe and order-independent.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .model import (
    ALL_ENTITY_CLASSES,
    ALL_NODE_KINDS,
    DocumentNode,
    Edge,
    EdgeKey,
    EdgeKind,
    EntityClass,
    EntityNode,
    GlobalKey,
    Node,
    NodeKind,
    UnknownKeyError,
    entity_document_edge,
)
from .store import GraphStore


class ViewMode(enum.Enum):
    DME = "dme"
    DE = "de"


class ColorScheme(enum.Enum):
    BY_TYPE = "by-type"
    BY_CLASS = "by-class"


DEFAULT_EDGE_KINDS = frozenset(EdgeKind) - {EdgeKind.COLLOCATION}


@dataclass(frozen=True)
class RuleFilter:
    """Declarative visibility rules. Collocation edges are hidden by default."""

    node_kinds: frozenset[NodeKind] = ALL_NODE_KINDS
    entity_classes: frozenset[EntityClass] = ALL_ENTITY_CLASSES
    edge_kinds: frozenset[EdgeKind] = DEFAULT_EDGE_KINDS


@dataclass(frozen=True)
class FocusState:
    """Selection and node-focus filters; both may be active at once."""

    selected: GlobalKey | None = None
    focused: GlobalKey | None = None


@dataclass(frozen=True)
class ViewState:
    mode: ViewMode = ViewMode.DME
    rule: RuleFilter = RuleFilter()
    focus: FocusState = FocusState()
    scheme: ColorScheme = ColorScheme.BY_TYPE


@dataclass
class StructuralGraph:
    mode: ViewMode
    nodes: dict[GlobalKey, Node]
    edges: dict[EdgeKey, Edge]

    def adjacent(self, key: GlobalKey) -> set[GlobalKey]:
        out = set()
        for edge in self.edges.values():
            if edge.a == key:
                out.add(edge.b)
            elif edge.b == key:
                out.add(edge.a)
        return out


@dataclass
class FilteredGraph:
    mode: ViewMode
    nodes: dict[GlobalKey, Node]
    edges: dict[EdgeKey, Edge]
    selected: GlobalKey | None
    focused: GlobalKey | None


def project_view(store: GraphStore, mode: ViewMode) -> StructuralGraph:
    """Stage 1: pick the structural abstraction.

    DME exposes the stored graph as-is. DE keeps documents and entities and
    derives one virtual entity-document edge per (entity, document) pair that
    shares at least one mention; weight counts supporting mentions and
    confidence carries the strongest supporting link.
    """
    if mode is ViewMode.DME:
        nodes: dict[GlobalKey, Node] = {}
        for doc in store.documents.values():
            nodes[doc.key] = doc
        for mention in store.mentions.values():
            nodes[mention.key] = mention
        for entity in store.entities.values():
            nodes[entity.key] = entity
        return StructuralGraph(mode, nodes, dict(store.edges))

    nodes = {}
    for doc in store.documents.values():
        nodes[doc.key] = doc
    for entity in store.entities.values():
        nodes[entity.key] = entity
    support: dict[tuple[str, str], tuple[int, float]] = {}
    for edge in store.edges.values():
        if edge.kind is not EdgeKind.MENTION_ENTITY:
            continue
        mention = store.mentions[edge.a.id]
        pair = (edge.b.id, mention.document)
        weight, confidence = support.get(pair, (0, 0.0))
        support[pair] = (weight + 1, max(confidence, edge.confidence))
    edges = {}
    for (entity_id, doc_id), (weight, confidence) in sorted(support.items()):
        edge = entity_document_edge(entity_id, doc_id, weight, confidence)
        edges[edge.key] = edge
    return StructuralGraph(mode, nodes, edges)


def apply_filters(structural: StructuralGraph, rule: RuleFilter, focus: FocusState) -> FilteredGraph:
    """Stage 2: rule filters always apply; focus trims to the neighborhood.

    A node stays visible iff it passes the rule filter and, when a focus node
    is set, it is the focus itself, adjacent to it (adjacency taken on the
    structural graph, before rule filtering), or the current selection. An
    edge stays visible iff its kind is enabled, both endpoints are visible,
    and, when a selection exists, it touches the selection or the focus node.
    """
    for key in (focus.selected, focus.focused):
        if key is not None and key not in structural.nodes:
            raise UnknownKeyError(f"focus key {key} not in the {structural.mode.value} view")

    focus_neighborhood: set[GlobalKey] | None = None
    if focus.focused is not None:
        focus_neighborhood = structural.adjacent(focus.focused)

    def rule_ok(key: GlobalKey, node: Node) -> bool:
        if key.kind not in rule.node_kinds:
            return False
        if isinstance(node, DocumentNode):
            return True
        return node.entity_class in rule.entity_classes

    nodes = {}
    for key, node in structural.nodes.items():
        if not rule_ok(key, node):
            continue
        if focus.focused is not None:
            if key != focus.focused and key not in focus_neighborhood and key != focus.selected:
                continue
        nodes[key] = node

    edges = {}
    for ek, edge in structural.edges.items():
        if edge.kind not in rule.edge_kinds:
            continue
        if edge.a not in nodes or edge.b not in nodes:
            continue
        if focus.selected is not None:
            if focus.selected not in (edge.a, edge.b) and not (
                focus.focused is not None and focus.focused in (edge.a, edge.b)
            ):
                continue
        edges[ek] = edge
    return FilteredGraph(structural.mode, nodes, edges, focus.selected, focus.focused)


# --- stage 3: visual attributes --------------------------------------------

NODE_RADIUS = {NodeKind.DOCUMENT: 8.0, NodeKind.ENTITY: 6.0, NodeKind.MENTION: 4.0}

TYPE_COLORS = {
    NodeKind.DOCUMENT: "#607D8B",
    NodeKind.MENTION: "#FB8C00",
    NodeKind.ENTITY: "#43A047",
}

CLASS_COLORS = {
    EntityClass.PERSON: "#E53935",
    EntityClass.ORGANIZATION: "#1E88E5",
    EntityClass.LOCATION: "#43A047",
    EntityClass.MISC: "#FDD835",
}

CLASS_PICTOGRAMS = {
    EntityClass.PERSON: "person",
    EntityClass.ORGANIZATION: "organization",
    EntityClass.LOCATION: "location",
    EntityClass.MISC: "misc",
}

EDGE_STYLES = {
    EdgeKind.MENTION_DOCUMENT: "solid",
    EdgeKind.MENTION_ENTITY: "solid",
    EdgeKind.COLLOCATION: "dotted",
    EdgeKind.ENTITY_DOCUMENT: "dashed",
}


@dataclass(frozen=True)
class VisualNode:
    key: GlobalKey
    radius: float
    fill: str
    pictogram: str
    emphasis: bool
    label: str
    entity_class: EntityClass | None


@dataclass(frozen=True)
class VisualEdge:
    a: GlobalKey
    b: GlobalKey
    kind: EdgeKind
    weight: int
    confidence: float
    style: str


@dataclass(frozen=True)
class VisibleGraph:
    nodes: tuple[VisualNode, ...]
    edges: tuple[VisualEdge, ...]


def _node_label(node: Node) -> str:
    if isinstance(node, DocumentNode):
        return node.title
    if isinstance(node, EntityNode):
        return node.term
    return node.surface


def map_visuals(filtered: FilteredGraph, scheme: ColorScheme) -> VisibleGraph:
    """Stage 3: fixed size/color/pictogram tables; emphasis marks focus nodes."""
    nodes = []
    for key in sorted(filtered.nodes, key=GlobalKey.sort_key):
        node = filtered.nodes[key]
        if isinstance(node, DocumentNode):
            fill = TYPE_COLORS[NodeKind.DOCUMENT]
            pictogram = "document"
            entity_class = None
        else:
            entity_class = node.entity_class
            pictogram = CLASS_PICTOGRAMS[entity_class]
            if scheme is ColorScheme.BY_CLASS:
                fill = CLASS_COLORS[entity_class]
            else:
                fill = TYPE_COLORS[key.kind]
        nodes.append(
            VisualNode(
                key=key,
                radius=NODE_RADIUS[key.kind],
                fill=fill,
                pictogram=pictogram,
                emphasis=key in (filtered.selected, filtered.focused),
                label=_node_label(node),
                entity_class=entity_class,
            )
        )
    edges = []
    for ek in sorted(filtered.edges, key=lambda k: (k[0].value, k[1].sort_key(), k[2].sort_key())):
        edge = filtered.edges[ek]
        edges.append(
            VisualEdge(
                a=edge.a,
                b=edge.b,
                kind=edge.kind,
                weight=edge.weight,
                confidence=edge.confidence,
                style=EDGE_STYLES[edge.kind],
            )
        )
    return VisibleGraph(tuple(nodes), tuple(edges))
