"""Full-text node lookup over entity terms, document titles, mention surfaces.

Scoring is a fixed additive formula: per query token, the best match kind on
a node's indexed field contributes field_boost * kind_multiplier (exact 3x,
prefix 2x, fuzzy 1x). Fuzzy matching allows a Levenshtein distance of
len(token) // 5, capped at 2.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable

from .model import DocumentNode, EntityNode, GlobalKey, Node
from .store import GraphStore

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)

FIELD_BOOSTS = {"term": 2.0, "title": 1.5, "surface": 1.0}
KIND_MULTIPLIERS = {"exact": 3.0, "prefix": 2.0, "fuzzy": 1.0}
_KIND_RANK = {"exact": 0, "prefix": 1, "fuzzy": 2}


def tokenize(text: str) -> list[str]:
    """Lowercase and split on anything that is not alphanumeric."""
    return _TOKEN_RE.findall(text.lower())


def fuzzy_budget(token: str) -> int:
    return min(len(token) // 5, 2)


def levenshtein(a: str, b: str, cutoff: int | None = None) -> int:
    """Plain edit distance (no transpositions); returns cutoff+1 early when over."""
    if a == b:
        return 0
    if cutoff is not None and abs(len(a) - len(b)) > cutoff:
        return cutoff + 1
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i]
        best = i
        for j, cb in enumerate(b, start=1):
            cost = min(previous[j] + 1, current[j - 1] + 1, previous[j - 1] + (ca != cb))
            current.append(cost)
            if cost < best:
                best = cost
        if cutoff is not None and best > cutoff:
            return cutoff + 1
        previous = current
    return previous[-1]


@dataclass(frozen=True)
class SearchHit:
    key: GlobalKey
    score: float
    matched_field: str
    match_kind: str


@dataclass(frozen=True)
class _Entry:
    field: str
    boost: float
    tokens: frozenset[str]


class SearchIndex:
    def __init__(self) -> None:
        self._entries: dict[GlobalKey, _Entry] = {}

    @classmethod
    def build(cls, store: GraphStore) -> "SearchIndex":
        index = cls()
        for doc in store.documents.values():
            index._put(doc)
        for mention in store.mentions.values():
            index._put(mention)
        for entity in store.entities.values():
            index._put(entity)
        return index

    def __len__(self) -> int:
        return len(self._entries)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, SearchIndex) and self._entries == other._entries

    @property
    def vocabulary(self) -> set[str]:
        out: set[str] = set()
        for entry in self._entries.values():
            out |= entry.tokens
        return out

    def _put(self, node: Node) -> None:
        if isinstance(node, DocumentNode):
            field, text = "title", node.title
        elif isinstance(node, EntityNode):
            field, text = "term", node.term
        else:
            field, text = "surface", node.surface
        self._entries[node.key] = _Entry(field, FIELD_BOOSTS[field], frozenset(tokenize(text)))

    def refresh(self, store: GraphStore, keys: Iterable[GlobalKey]) -> None:
        """Re-sync the given nodes after a mutation (or its undo)."""
        for key in keys:
            if store.has_node(key):
                self._put(store.node(key))
            else:
                self._entries.pop(key, None)

    def query(self, text: str, limit: int) -> list[SearchHit]:
        if limit < 1:
            raise ValueError("limit must be >= 1")
        query_tokens = tokenize(text)
        if not query_tokens:
            return []
        scores: dict[GlobalKey, float] = {}
        best_kinds: dict[GlobalKey, str] = {}
        for token in query_tokens:
            budget = fuzzy_budget(token)
            for key, entry in self._entries.items():
                kind = _match_kind(token, entry.tokens, budget)
                if kind is None:
                    continue
                scores[key] = scores.get(key, 0.0) + entry.boost * KIND_MULTIPLIERS[kind]
                current = best_kinds.get(key)
                if current is None or _KIND_RANK[kind] < _KIND_RANK[current]:
                    best_kinds[key] = kind
        ranked = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0].sort_key()))
        return [
            SearchHit(key=key, score=score, matched_field=self._entries[key].field, match_kind=best_kinds[key])
            for key, score in ranked[:limit]
        ]


def _match_kind(token: str, node_tokens: frozenset[str], budget: int) -> str | None:
    if token in node_tokens:
        return "exact"
    for candidate in node_tokens:
        if candidate.startswith(token):
            return "prefix"
    if budget > 0:
        for candidate in node_tokens:
            if levenshtein(token, candidate, cutoff=budget) <= budget:
                return "fuzzy"
    return None


def build_index(store: GraphStore) -> SearchIndex:
    return SearchIndex.build(store)


def query(index: SearchIndex, text: str, limit: int) -> list[SearchHit]:
    return index.query(text, limit)
