"""Semantic and agentic search over a declaration index."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ..providers import ChatClient, ProviderError
from .embedder import Embedder
from .index import DeclRecord, LeanIndex

log = logging.getLogger(__name__)

REFORMULATION_SYSTEM = (
    "You reformulate search queries for a Lean mathematics library. "
    "Given a query, reply with alternative phrasings or likely declaration "
    "names, one per line, nothing else."
)


@dataclass(frozen=True)
class RankedHit:
    record: DeclRecord
    score: float
    origin_query: str


@dataclass
class AgenticResult:
    hits: list[RankedHit]
    queries: list[str] = field(default_factory=list)
    degraded: bool = False


def semantic_search(
    index: LeanIndex,
    embedder: Embedder,
    query: str,
    k: int,
) -> list[RankedHit]:
    """Top-k records by cosine similarity; ties break lexicographically."""
    if not query.strip():
        raise ValueError("query must be non-empty")
    if k < 1:
        raise ValueError("k must be at least 1")
    if not index.records:
        return []
    query_vec = embedder.embed([query])[0].astype(np.float64)
    query_norm = float(np.linalg.norm(query_vec))
    vectors = index.vectors.astype(np.float64)
    norms = np.linalg.norm(vectors, axis=1) * (query_norm or 1.0)
    norms[norms == 0.0] = 1.0
    scores = (vectors @ query_vec) / norms
    order = sorted(range(len(index.records)),
                   key=lambda i: (-scores[i], index.records[i].name))
    return [
        RankedHit(record=index.records[i], score=float(scores[i]), origin_query=query)
        for i in order[:k]
    ]


def agentic_search(
    index: LeanIndex,
    embedder: Embedder,
    query: str,
    client: ChatClient,
    k: int,
    max_reformulations: int = 3,
) -> AgenticResult:
    """Search the query plus model reformulations of it, merged by best score.

    Each reformulation is searched with the same k; a record's merged score
    is its best score over all queries.  A model failure degrades to the
    plain semantic result with the degraded flag set.
    """
    base_hits = semantic_search(index, embedder, query, k)
    queries = [query]
    if max_reformulations > 0:
        try:
            exchange = client.complete([
                {"role": "system", "content": REFORMULATION_SYSTEM},
                {"role": "user", "content": query},
            ])
            rewrites = [line.strip() for line in exchange.response.splitlines() if line.strip()]
            for rewrite in rewrites[:max_reformulations]:
                if rewrite not in queries:
                    queries.append(rewrite)
        except ProviderError as exc:
            log.warning("reformulation model failed, degrading to plain search: %s", exc)
            return AgenticResult(hits=base_hits, queries=queries, degraded=True)

    best: dict[tuple[str, str], RankedHit] = {}
    for hit in base_hits:
        best[(hit.record.name, hit.record.package)] = hit
    for extra_query in queries[1:]:
        for hit in semantic_search(index, embedder, extra_query, k):
            key = (hit.record.name, hit.record.package)
            current = best.get(key)
            if current is None or hit.score > current.score:
                best[key] = hit
    merged = sorted(best.values(), key=lambda h: (-h.score, h.record.name))
    return AgenticResult(hits=merged[:k], queries=queries, degraded=False)
