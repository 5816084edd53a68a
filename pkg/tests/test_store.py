import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nergraph import io_formats
from nergraph.io_formats import ImportFile, canonical_bytes
from nergraph.model import (
    DanglingReferenceError,
    DocumentNode,
    DuplicateIdError,
    EdgeKind,
    EmptyHistoryError,
    EntityClass,
    EntityNode,
    InvalidOpError,
    MentionNode,
    UnknownKeyError,
    document_key,
    entity_key,
    mention_key,
)
from nergraph.store import (
    AddEdge,
    AddNode,
    DeleteNode,
    MergeEntities,
    SetEntityTerm,
    SetNodeClass,
    build_from_import,
    derive_collocations,
)

from _generators import OpSequencer, random_store
from _oracles import (
    collocations_brute_force,
    mention_document_edge_counts,
    scan_edge_closure,
)


def edge_kinds_count(store):
    counts = {}
    for edge in store.edges.values():
        counts[edge.kind] = counts.get(edge.kind, 0) + 1
    return counts


# --- build_from_import ------------------------------------------------------


def test_build_g0_counts(g0):
    assert len(g0) == 9
    counts = edge_kinds_count(g0)
    assert counts[EdgeKind.MENTION_DOCUMENT] == 4
    assert counts[EdgeKind.MENTION_ENTITY] == 5
    assert counts[EdgeKind.COLLOCATION] == 1
    assert g0.revision == 0


def test_build_empty_file():
    store = build_from_import(ImportFile((), (), (), ()))
    assert len(store) == 0
    assert not store.edges
    assert store.revision == 0


def test_build_dangling_document_reference():
    file = ImportFile(
        documents=(),
        mentions=(MentionNode("m1", "dX", (0, 3), "abc", EntityClass.PERSON),),
        entities=(),
        links=(),
    )
    with pytest.raises(DanglingReferenceError, match="dX"):
        build_from_import(file)


def test_build_duplicate_id_is_hard_error():
    file = ImportFile(
        documents=(),
        mentions=(),
        entities=(
            EntityNode("e1", "One", EntityClass.MISC),
            EntityNode("e1", "Two", EntityClass.MISC),
        ),
        links=(),
    )
    with pytest.raises(DuplicateIdError, match="e1"):
        build_from_import(file)


def test_explicit_collocations_override_derivation(g0):
    payload_file = ImportFile(
        documents=tuple(g0.documents.values()),
        mentions=tuple(g0.mentions.values()),
        entities=tuple(g0.entities.values()),
        links=(),
        collocations=(),
    )
    store = build_from_import(payload_file)
    assert edge_kinds_count(store).get(EdgeKind.COLLOCATION, 0) == 0


# --- derive_collocations -----------------------------------------------------


def test_collocations_g0_doc1(g0):
    doc = g0.documents["d1"]
    mentions = [g0.mentions[m] for m in ("m1", "m2", "m3")]
    edges = derive_collocations(doc, mentions)
    assert len(edges) == 1
    assert edges[0].a == mention_key("m1") and edges[0].b == mention_key("m2")
    assert edges[0].weight == 1
    assert {(e.a.id, e.b.id): e.weight for e in edges} == {
        pair: w for pair, w in collocations_brute_force(doc, mentions).items()
    }


def test_collocations_single_mention_empty():
    doc = DocumentNode("d", "t", sentences=((0, 10),))
    mention = MentionNode("m", "d", (0, 3), "x", EntityClass.MISC)
    assert derive_collocations(doc, [mention]) == []


def test_collocations_weight_counts_shared_sentences():
    doc = DocumentNode("d", "t", sentences=((0, 10), (10, 20)))
    spanning_a = MentionNode("ma", "d", (5, 15), "x", EntityClass.MISC)
    spanning_b = MentionNode("mb", "d", (8, 12), "y", EntityClass.MISC)
    edges = derive_collocations(doc, [spanning_a, spanning_b])
    assert len(edges) == 1
    assert edges[0].weight == 2
    assert collocations_brute_force(doc, [spanning_a, spanning_b]) == {("ma", "mb"): 2}


def test_collocations_no_sentences_none():
    doc = DocumentNode("d", "t")
    mentions = [
        MentionNode("ma", "d", (0, 3), "x", EntityClass.MISC),
        MentionNode("mb", "d", (1, 4), "y", EntityClass.MISC),
    ]
    assert derive_collocations(doc, mentions) == []


@given(st.data())
@settings(max_examples=60, deadline=None)
def test_collocations_match_oracle_on_random_spans(data):
    sentence_count = data.draw(st.integers(0, 5))
    sentences = []
    cursor = 0
    for _ in range(sentence_count):
        cursor += data.draw(st.integers(1, 30))
        start = sentences[-1][1] if sentences else 0
        sentences.append((start, cursor))
    doc = DocumentNode("d", "t", sentences=tuple(sentences))
    limit = max(cursor, 10)
    mentions = []
    for i in range(data.draw(st.integers(0, 8))):
        start = data.draw(st.integers(0, limit - 1))
        end = data.draw(st.integers(start + 1, limit))
        mentions.append(MentionNode(f"m{i}", "d", (start, end), "s", EntityClass.MISC))
    edges = derive_collocations(doc, mentions)
    assert {(e.a.id, e.b.id): e.weight for e in edges} == collocations_brute_force(doc, mentions)


# --- apply / delete ---------------------------------------------------------


def test_delete_mention_cascade(g0):
    g0.apply([DeleteNode(mention_key("m2"))])
    assert len(g0) == 8
    assert len(g0.edges) == 7
    assert "m2" not in g0.mentions
    assert g0.revision == 1
    assert scan_edge_closure(g0)


def test_set_entity_term_only_touches_field(g0):
    edges_before = dict(g0.edges)
    g0.apply([SetEntityTerm("e1", "N. Tesla")])
    assert g0.entities["e1"].term == "N. Tesla"
    assert g0.edges == edges_before


def test_add_virtual_edge_rejected(g0):
    before = canonical_bytes(g0)
    with pytest.raises(InvalidOpError):
        g0.apply([AddEdge(EdgeKind.ENTITY_DOCUMENT, entity_key("e1"), document_key("d1"))])
    assert canonical_bytes(g0) == before
    assert g0.revision == 0


def test_apply_is_atomic_across_batch(g0):
    before = canonical_bytes(g0)
    with pytest.raises(InvalidOpError):
        g0.apply(
            [
                DeleteNode(mention_key("m2")),
                AddEdge(EdgeKind.ENTITY_DOCUMENT, entity_key("e1"), document_key("d1")),
            ]
        )
    assert canonical_bytes(g0) == before


def test_delete_document_cascades_to_mentions(g0):
    g0.apply([DeleteNode(document_key("d1"))])
    assert sorted(g0.documents) == ["d2"]
    assert sorted(g0.mentions) == ["m4"]
    assert sorted(g0.entities) == ["e1", "e2", "e3"]
    remaining = {(e.kind, e.a.id, e.b.id) for e in g0.edges.values()}
    assert remaining == {
        (EdgeKind.MENTION_DOCUMENT, "m4", "d2"),
        (EdgeKind.MENTION_ENTITY, "m4", "e3"),
    }
    assert scan_edge_closure(g0)


def test_delete_entity_orphans_mentions(g0):
    g0.apply([DeleteNode(entity_key("e2"))])
    assert "m2" in g0.mentions
    assert g0.neighbors(mention_key("m2"), [EdgeKind.MENTION_ENTITY]) == set()


def test_delete_unknown_key(g0):
    before = canonical_bytes(g0)
    with pytest.raises(UnknownKeyError):
        g0.apply([DeleteNode(mention_key("zz"))])
    assert canonical_bytes(g0) == before


def test_revision_conflict(g0):
    from nergraph.model import RevisionConflictError

    g0.apply([SetEntityTerm("e1", "A")], expected_revision=0)
    with pytest.raises(RevisionConflictError):
        g0.apply([SetEntityTerm("e1", "B")], expected_revision=0)
    assert g0.entities["e1"].term == "A"


def test_mention_document_edges_owned_by_mention(g0):
    from nergraph.store import DeleteEdge

    with pytest.raises(InvalidOpError):
        g0.apply([AddEdge(EdgeKind.MENTION_DOCUMENT, mention_key("m1"), document_key("d2"))])
    with pytest.raises(InvalidOpError):
        g0.apply([DeleteEdge(EdgeKind.MENTION_DOCUMENT, mention_key("m1"), document_key("d1"))])


def test_add_mention_creates_its_document_edge(g0):
    g0.apply([AddNode(MentionNode("m9", "d2", (10, 14), "Graz", EntityClass.LOCATION))])
    assert mention_document_edge_counts(g0)["m9"] == 1


# --- merge -------------------------------------------------------------------


def test_merge_repoints_and_keeps_max_confidence(g0):
    g0.apply([MergeEntities("e1", "e3")])
    assert "e3" not in g0.entities
    links = {
        e.a.id: e.confidence
        for e in g0.edges.values()
        if e.kind is EdgeKind.MENTION_ENTITY and e.b.id == "e1"
    }
    assert links == {"m1": 0.9, "m3": 0.7, "m4": 0.8}


def test_merge_unlinked_entity_is_plain_delete(g0):
    g0.apply([AddNode(EntityNode("e9", "Ghost", EntityClass.MISC))])
    entry = g0.apply([MergeEntities("e1", "e9")])
    assert len(entry.primitives) == 1
    assert "e9" not in g0.entities


def test_merge_then_undo_restores_exactly(g0):
    before = canonical_bytes(g0)
    g0.apply([MergeEntities("e1", "e3")])
    g0.undo()
    assert canonical_bytes(g0) == before


def test_single_op_helpers_journal_one_entry_each(g0):
    first = g0.delete_node(mention_key("m2"))
    second = g0.set_entity_term("e1", "N. Tesla")
    third = g0.merge_entities("e1", "e3")
    assert [entry.revision for entry in (first, second, third)] == [1, 2, 3]
    assert g0.journal[-3:] == [first, second, third]
    for _ in range(3):
        g0.undo()
    assert g0.entities["e1"].term == "Nikola Tesla"
    assert "m2" in g0.mentions and "e3" in g0.entities


def test_merge_errors(g0):
    with pytest.raises(InvalidOpError):
        g0.apply([MergeEntities("e1", "e1")])
    with pytest.raises(UnknownKeyError):
        g0.apply([MergeEntities("e1", "nope")])


# --- undo / redo --------------------------------------------------------------


def test_undo_restores_canonical_bytes(g0):
    before = canonical_bytes(g0)
    g0.apply([DeleteNode(mention_key("m2"))])
    revision = g0.undo()
    assert revision == 2
    assert canonical_bytes(g0) == before


def test_undo_empty_history():
    store = build_from_import(ImportFile((), (), (), ()))
    with pytest.raises(EmptyHistoryError):
        store.undo()
    with pytest.raises(EmptyHistoryError):
        store.redo()


def test_redo_stack_cleared_by_new_op(g0):
    g0.apply([SetEntityTerm("e1", "A")])
    g0.undo()
    g0.apply([SetEntityTerm("e1", "B")])
    with pytest.raises(EmptyHistoryError):
        g0.redo()


def test_hundred_random_ops_round_trip():
    rng = random.Random(1234)
    store = random_store(rng, max_nodes=40)
    initial = canonical_bytes(store)
    sequencer = OpSequencer(rng)
    count = 100
    for _ in range(count):
        store.apply([sequencer.next_op(store)])
    final = canonical_bytes(store)
    for _ in range(count):
        store.undo()
    assert canonical_bytes(store) == initial
    for _ in range(count):
        store.redo()
    assert canonical_bytes(store) == final


def test_invariants_hold_under_random_ops():
    rng = random.Random(777)
    store = random_store(rng, max_nodes=30)
    sequencer = OpSequencer(rng)
    for _ in range(200):
        store.apply([sequencer.next_op(store)])
        assert scan_edge_closure(store)
        assert all(v == 1 for v in mention_document_edge_counts(store).values())


# --- neighbors / mismatches -----------------------------------------------------


def test_neighbors_examples(g0):
    assert g0.neighbors(entity_key("e1"), [EdgeKind.MENTION_ENTITY]) == {
        mention_key("m1"),
        mention_key("m3"),
    }
    assert g0.neighbors(document_key("d2"), list(EdgeKind)) == {mention_key("m4")}
    assert g0.neighbors(mention_key("m1"), []) == set()
    with pytest.raises(UnknownKeyError):
        g0.neighbors(mention_key("zz"), list(EdgeKind))


def test_mention_entity_fanout_unbounded(g0):
    links = g0.neighbors(mention_key("m1"), [EdgeKind.MENTION_ENTITY])
    assert links == {entity_key("e1"), entity_key("e3")}
    exported = io_formats.export_graph(g0)
    again = build_from_import(io_formats.parse_import(exported))
    assert again.neighbors(mention_key("m1"), [EdgeKind.MENTION_ENTITY]) == links


def test_class_mismatches(g0):
    assert g0.class_mismatches() == []
    g0.apply([SetNodeClass(mention_key("m2"), EntityClass.PERSON)])
    assert g0.class_mismatches() == [("m2", "e2")]
    empty = build_from_import(ImportFile((), (), (), ()))
    assert empty.class_mismatches() == []


def test_class_mismatch_accepted_not_corrected(g0):
    g0.apply([SetNodeClass(mention_key("m2"), EntityClass.PERSON)])
    assert g0.mentions["m2"].entity_class is EntityClass.PERSON
    assert g0.entities["e2"].entity_class is EntityClass.LOCATION


def test_snapshot_survives_later_mutations(g0):
    snap = g0.snapshot()
    bytes_before = canonical_bytes(snap)
    g0.apply([DeleteNode(document_key("d1"))])
    assert canonical_bytes(snap) == bytes_before
