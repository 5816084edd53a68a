import json

import pytest

from nergraph import io_formats
from nergraph.store import GraphStore, build_from_import


def g0_payload() -> dict:
    """The normative small corpus: 2 docs, 4 mentions, 3 entities, 5 links."""
    return {
        "version": 1,
        "documents": [
            {"id": "d1", "title": "Doc One", "sentences": [[0, 40], [40, 80]]},
            {"id": "d2", "title": "Doc Two", "sentences": [[0, 50]]},
        ],
        "mentions": [
            {"id": "m1", "document": "d1", "start": 0, "end": 5, "surface": "Tesla", "class": "PER"},
            {"id": "m2", "document": "d1", "start": 10, "end": 16, "surface": "Berlin", "class": "LOC"},
            {"id": "m3", "document": "d1", "start": 45, "end": 50, "surface": "Tesla", "class": "PER"},
            {"id": "m4", "document": "d2", "start": 3, "end": 9, "surface": "Edison", "class": "PER"},
        ],
        "entities": [
            {"id": "e1", "term": "Nikola Tesla", "class": "PER"},
            {"id": "e2", "term": "Berlin", "class": "LOC"},
            {"id": "e3", "term": "Thomas Edison", "class": "PER"},
        ],
        "links": [
            {"mention": "m1", "entity": "e1", "confidence": 0.9},
            {"mention": "m3", "entity": "e1", "confidence": 0.7},
            {"mention": "m2", "entity": "e2", "confidence": 0.95},
            {"mention": "m4", "entity": "e3", "confidence": 0.8},
            {"mention": "m1", "entity": "e3", "confidence": 0.2},
        ],
    }


def g0_bytes() -> bytes:
    return json.dumps(g0_payload()).encode()


def g0_store() -> GraphStore:
    return build_from_import(io_formats.parse_import(g0_bytes()))


@pytest.fixture
def g0():
    return g0_store()
