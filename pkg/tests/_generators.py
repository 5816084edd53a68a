"""Seeded random corpora and op sequences shared by property and acceptance tests."""

from __future__ import annotations

import random
import string

from nergraph.model import (
    DocumentNode,
    EdgeKind,
    EntityClass,
    EntityNode,
    GlobalKey,
    MentionNode,
    NodeKind,
)
from nergraph.store import (
    AddEdge,
    AddNode,
    DeleteEdge,
    DeleteNode,
    GraphStore,
    MergeEntities,
    SetEntityTerm,
    SetNodeClass,
    build_from_import,
)
from nergraph.io_formats import ImportFile, LinkRecord
from nergraph.view import FocusState, RuleFilter, ViewMode

_WORDS = (
    "alpine bridge copper delta ember forest granite harbor indigo juniper "
    "kestrel lantern meadow nickel orchid prairie quarry russet summit timber"
).split()


def _word(rng: random.Random) -> str:
    return rng.choice(_WORDS)


def random_import_file(rng: random.Random, max_nodes: int = 200) -> ImportFile:
    """A structurally valid corpus with fan-out, collocations, odd shapes."""
    n_docs = rng.randint(1, 6)
    documents = []
    for d in range(n_docs):
        sentences = []
        cursor = 0
        for _ in range(rng.randint(0, 5)):
            length = rng.randint(15, 60)
            sentences.append((cursor, cursor + length))
            cursor += length
        text = None
        if cursor and rng.random() < 0.5:
            text = "".join(rng.choice(string.ascii_lowercase + " ") for _ in range(cursor))
        documents.append(
            DocumentNode(
                id=f"d{d}",
                title=f"{_word(rng)} {_word(rng)}",
                text=text,
                sentences=tuple(sentences),
            )
        )

    budget = max_nodes - n_docs
    n_entities = rng.randint(1, min(10, max(1, budget // 3)))
    entities = [
        EntityNode(id=f"e{i}", term=f"{_word(rng)} {_word(rng)}", entity_class=rng.choice(list(EntityClass)))
        for i in range(n_entities)
    ]
    budget -= n_entities

    mentions = []
    mention_count = rng.randint(0, max(0, min(budget, 40)))
    for i in range(mention_count):
        doc = rng.choice(documents)
        limit = doc.sentences[-1][1] if doc.sentences else 80
        start = rng.randint(0, max(0, limit - 4))
        end = min(limit if doc.text is not None else limit + 20, start + rng.randint(1, 12))
        if end <= start:
            end = start + 1
        mentions.append(
            MentionNode(
                id=f"m{i}",
                document=doc.id,
                span=(start, end),
                surface=_word(rng),
                entity_class=rng.choice(list(EntityClass)),
            )
        )

    links = []
    seen = set()
    for mention in mentions:
        for _ in range(rng.choice((0, 1, 1, 1, 2, 3))):
            entity = rng.choice(entities)
            if (mention.id, entity.id) in seen:
                continue
            seen.add((mention.id, entity.id))
            links.append(LinkRecord(mention.id, entity.id, round(rng.random(), 3)))

    return ImportFile(
        documents=tuple(documents),
        mentions=tuple(mentions),
        entities=tuple(entities),
        links=tuple(links),
    )


def random_store(rng: random.Random, max_nodes: int = 200) -> GraphStore:
    return build_from_import(random_import_file(rng, max_nodes))


def random_rule_filter(rng: random.Random) -> RuleFilter:
    node_kinds = frozenset(k for k in NodeKind if rng.random() < 0.8)
    classes = frozenset(c for c in EntityClass if rng.random() < 0.8)
    edge_kinds = frozenset(k for k in EdgeKind if rng.random() < 0.7)
    return RuleFilter(node_kinds=node_kinds, entity_classes=classes, edge_kinds=edge_kinds)


def random_focus(rng: random.Random, structural_keys: list[GlobalKey]) -> FocusState:
    selected = rng.choice(structural_keys) if structural_keys and rng.random() < 0.4 else None
    focused = rng.choice(structural_keys) if structural_keys and rng.random() < 0.4 else None
    return FocusState(selected=selected, focused=focused)


def random_view_config(rng: random.Random, structural_keys: list[GlobalKey]):
    mode = rng.choice((ViewMode.DME, ViewMode.DE))
    return mode, random_rule_filter(rng), random_focus(rng, structural_keys)


class OpSequencer:
    """Draws ops that are valid against the store's current state."""

    def __init__(self, rng: random.Random):
        self.rng = rng
        self.counter = 0

    def _fresh(self, prefix: str) -> str:
        self.counter += 1
        return f"{prefix}x{self.counter}"

    def next_op(self, store: GraphStore):
        rng = self.rng
        moves = []
        node_keys = store.node_keys()
        if node_keys:
            moves.append("delete_node")
        moves.append("add_entity")
        if store.documents:
            moves.append("add_mention")
        moves.append("add_document")
        if store.mentions and store.entities:
            moves.append("add_link")
        deletable = [
            e for e in store.edges.values() if e.kind in (EdgeKind.MENTION_ENTITY, EdgeKind.COLLOCATION)
        ]
        if deletable:
            moves.append("delete_edge")
        if store.entities:
            moves.append("set_term")
        if store.mentions or store.entities:
            moves.append("set_class")
        if len(store.entities) >= 2:
            moves.append("merge")

        move = rng.choice(moves)
        if move == "delete_node":
            return DeleteNode(rng.choice(node_keys))
        if move == "add_entity":
            return AddNode(EntityNode(self._fresh("e"), _word(rng), rng.choice(list(EntityClass))))
        if move == "add_document":
            return AddNode(DocumentNode(self._fresh("d"), _word(rng), sentences=((0, 40),)))
        if move == "add_mention":
            doc = rng.choice(list(store.documents.values()))
            limit = len(doc.text) if doc.text is not None else 60
            if limit < 2:
                return AddNode(EntityNode(self._fresh("e"), _word(rng), rng.choice(list(EntityClass))))
            start = rng.randint(0, limit - 2)
            end = rng.randint(start + 1, min(limit, start + 8))
            return AddNode(
                MentionNode(self._fresh("m"), doc.id, (start, end), _word(rng), rng.choice(list(EntityClass)))
            )
        if move == "add_link":
            for _ in range(8):
                mention = rng.choice(list(store.mentions.values()))
                entity = rng.choice(list(store.entities.values()))
                key = (EdgeKind.MENTION_ENTITY, mention.key, entity.key)
                if key not in store.edges:
                    return AddEdge(
                        EdgeKind.MENTION_ENTITY,
                        mention.key,
                        entity.key,
                        confidence=round(rng.random(), 3),
                    )
            return AddNode(EntityNode(self._fresh("e"), _word(rng), rng.choice(list(EntityClass))))
        if move == "delete_edge":
            edge = rng.choice(deletable)
            return DeleteEdge(edge.kind, edge.a, edge.b)
        if move == "set_term":
            entity = rng.choice(list(store.entities.values()))
            return SetEntityTerm(entity.id, f"{_word(rng)} {_word(rng)}")
        if move == "set_class":
            pool = list(store.mentions.values()) + list(store.entities.values())
            node = rng.choice(pool)
            return SetNodeClass(node.key, rng.choice(list(EntityClass)))
        keep, absorb = rng.sample(sorted(store.entities), 2)
        return MergeEntities(keep, absorb)
