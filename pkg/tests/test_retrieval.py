"""Declaration retrieval: index build, semantic and agentic search."""

import math
from pathlib import Path

import numpy as np
import pytest

from proverkit.providers import ProviderError, ScriptedClient
from proverkit.retrieval import (
    HashedBagOfWordsEmbedder,
    agentic_search,
    build_index,
    load_index,
    semantic_search,
)

CORPUS = Path(__file__).parent / "fixtures" / "corpus"


@pytest.fixture(scope="module")
def embedder():
    return HashedBagOfWordsEmbedder(256)


@pytest.fixture(scope="module")
def index(tmp_path_factory, embedder):
    out = tmp_path_factory.mktemp("index")
    build_index(
        [("mathlib", CORPUS / "mathlib_stub"), ("flt", CORPUS / "flt_stub")],
        embedder, out)
    return load_index(out)


def test_fixture_corpus_has_twelve_records(index):
    assert index.manifest.record_count == 12
    assert len(index.records) == 12
    assert index.vectors.shape == (12, 256)


def test_same_name_across_packages_both_retained(index):
    copies = [r for r in index.records if r.name == "Nat.add_comm"]
    assert sorted(c.package for c in copies) == ["flt", "mathlib"]


def test_empty_roots_build_valid_empty_index(tmp_path, embedder):
    empty_root = tmp_path / "empty"
    empty_root.mkdir()
    manifest = build_index([("nothing", empty_root)], embedder, tmp_path / "idx")
    assert manifest.record_count == 0
    loaded = load_index(tmp_path / "idx")
    assert loaded.records == []
    assert semantic_search(loaded, embedder, "anything", k=3) == []


def brute_force_ranking(index, embedder, query):
    """Independent oracle: per-record float64 cosine, then sort."""
    q = embedder.embed([query])[0].astype(np.float64)
    scored = []
    for i, record in enumerate(index.records):
        v = index.vectors[i].astype(np.float64)
        denom = math.sqrt(float(v @ v)) * math.sqrt(float(q @ q))
        score = float(v @ q) / denom if denom else 0.0
        scored.append((record.name, record.package, score))
    scored.sort(key=lambda t: (-t[2], t[0]))
    return scored


@pytest.mark.parametrize("query", [
    "commutativity of addition",
    "triangle inequality for norms",
    "perfect power discriminant",
    "associative",
])
def test_semantic_matches_brute_force_oracle(index, embedder, query):
    hits = semantic_search(index, embedder, query, k=12)
    oracle = brute_force_ranking(index, embedder, query)
    assert [(h.record.name, h.record.package) for h in hits] == \
           [(name, pkg) for name, pkg, _ in oracle]
    for hit, (_, _, score) in zip(hits, oracle):
        assert hit.score == pytest.approx(score, abs=1e-9)


def test_commutativity_query_finds_add_comm(index, embedder):
    hits = semantic_search(index, embedder, "commutativity of addition", k=3)
    assert any(h.record.name == "Nat.add_comm" for h in hits)


def test_k_larger_than_index_returns_all_ordered(index, embedder):
    hits = semantic_search(index, embedder, "triangle", k=100)
    assert len(hits) == 12
    scores = [h.score for h in hits]
    assert scores == sorted(scores, reverse=True)


def test_self_query_ranks_itself_first(index, embedder):
    record = index.records[3]
    hits = semantic_search(index, embedder, record.indexed_text, k=1)
    assert hits[0].record.name == record.name
    assert hits[0].score == pytest.approx(1.0, abs=1e-6)


def test_empty_query_rejected(index, embedder):
    with pytest.raises(ValueError):
        semantic_search(index, embedder, "   ", k=3)


def test_ties_break_lexicographically(tmp_path, embedder):
    root = tmp_path / "pkg"
    root.mkdir()
    (root / "Twins.lean").write_text(
        "theorem zeta_bound : twin prime bound := by sorry\n"
        "theorem alpha_bound : twin prime bound := by sorry\n")
    build_index([("twins", root)], embedder, tmp_path / "idx")
    index = load_index(tmp_path / "idx")
    hits = semantic_search(index, embedder, "twin prime bound", k=2)
    assert [h.record.name for h in hits] == ["alpha_bound", "zeta_bound"]
    assert hits[0].score == pytest.approx(hits[1].score)


def test_index_roundtrip_reproduces_rankings(tmp_path, embedder, index):
    out = tmp_path / "again"
    build_index(
        [("mathlib", CORPUS / "mathlib_stub"), ("flt", CORPUS / "flt_stub")],
        embedder, out)
    reloaded = load_index(out)
    for query in ("norm of a sum", "descent on exponents"):
        a = semantic_search(index, embedder, query, k=12)
        b = semantic_search(reloaded, embedder, query, k=12)
        assert [(h.record.name, h.score) for h in a] == \
               [(h.record.name, h.score) for h in b]


def test_agentic_reformulation_recovers_missed_record(index, embedder):
    query = "triangle inequality for norms"
    plain = semantic_search(index, embedder, query, k=3)
    assert all(h.record.name != "norm_add_le" for h in plain)
    client = ScriptedClient(["norm_add_le\nnorm of a sum is bounded"])
    result = agentic_search(index, embedder, query, client, k=3)
    assert any(h.record.name == "norm_add_le" for h in result.hits)
    assert not result.degraded


def test_agentic_zero_reformulations_equals_semantic(index, embedder):
    client = ScriptedClient(["should never be called"])
    result = agentic_search(index, embedder, "triangle", client, k=4,
                            max_reformulations=0)
    plain = semantic_search(index, embedder, "triangle", k=4)
    assert [(h.record.name, h.score) for h in result.hits] == \
           [(h.record.name, h.score) for h in plain]
    assert client.calls == []


def test_agentic_duplicate_rewrites_equal_semantic(index, embedder):
    query = "triangle inequality"
    client = ScriptedClient([f"{query}\n{query}\n{query}"])
    result = agentic_search(index, embedder, query, client, k=4)
    plain = semantic_search(index, embedder, query, k=4)
    assert [(h.record.name, h.score) for h in result.hits] == \
           [(h.record.name, h.score) for h in plain]


def test_agentic_degrades_on_model_failure(index, embedder):
    class Broken:
        def complete(self, messages):
            raise ProviderError("no model")

    query = "triangle inequality for norms"
    result = agentic_search(index, embedder, query, Broken(), k=3)
    plain = semantic_search(index, embedder, query, k=3)
    assert result.degraded
    assert [h.record.name for h in result.hits] == [h.record.name for h in plain]


def test_monotone_merge_invariant(index, embedder):
    query = "inequality"
    k = 3
    plain = semantic_search(index, embedder, query, k=k)
    kth = plain[-1].score
    client = ScriptedClient(["norm_add_le\ntriangle side\nmean inequality"])
    result = agentic_search(index, embedder, query, client, k=k)
    assert all(h.score >= kth - 1e-12 for h in result.hits)
