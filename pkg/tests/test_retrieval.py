import math
import random

import numpy as np
import pytest

from lexparse.retrieval import (
    DenseRetriever,
    HashEmbeddingProvider,
    HttpEmbeddingProvider,
    analyze,
    bm25_score,
    build_index,
    contrastive_loss,
    dense_retrieve,
    export_contrastive_pairs,
    recall_at_k,
    retrieve,
)
from lexparse.types import ConfigError, Domain, IdentityMode, Instance, LexiconEntry, Source


def seeded(entries):
    return [e.with_seq(i) for i, e in enumerate(entries)]


class TestAnalyzer:
    def test_lowercase_and_split(self):
        assert analyze("The current-Filehandle, v2!") == [
            "the", "current", "filehandle", "v2",
        ]

    def test_empty(self):
        assert analyze("  --- ") == []


def naive_bm25(query, entries, k1=1.2, b=0.75):
    """Independent reference scorer used to cross-check the indexed path."""
    docs = [analyze(e.key) for e in entries]
    avg = sum(len(d) for d in docs) / len(docs)
    n = len(docs)
    scores = []
    for doc in docs:
        s = 0.0
        for term in analyze(query):
            tf = doc.count(term)
            if tf == 0:
                continue
            df = sum(1 for d in docs if term in d)
            idf = math.log(1 + (n - df + 0.5) / (df + 0.5))
            s += idf * tf * (k1 + 1) / (tf + k1 * (1 - b + b * len(doc) / avg))
        scores.append(s)
    return scores


class TestBm25:
    def test_single_doc_score(self):
        entries = seeded([LexiconEntry("the current filehandle", "cfh")])
        index = build_index(entries)
        got = bm25_score(["filehandle"], entries[0], index)
        # one doc, df=1, tf=1, len == avglen -> idf * (k1+1)/(1+k1)  == idf
        assert got == pytest.approx(math.log(1 + 0.5 / 1.5))

    def test_zero_scores_excluded(self):
        entries = seeded(
            [LexiconEntry("alpha beta", "v1"), LexiconEntry("gamma delta", "v2")]
        )
        result = retrieve(build_index(entries), "alpha", 5)
        assert [e.value for e in result.entries] == ["v1"]

    def test_tie_break_by_seq(self):
        entries = seeded(
            [LexiconEntry("same words", "v1"), LexiconEntry("same words", "v2")]
        )
        result = retrieve(build_index(entries), "same words", 2)
        assert [e.seq for e in result.entries] == [0, 1]

    def test_matches_reference_scorer(self):
        rng = random.Random(17)
        vocab = [f"w{i}" for i in range(20)]
        for _ in range(25):
            entries = seeded(
                [
                    LexiconEntry(" ".join(rng.choices(vocab, k=rng.randint(1, 6))), f"v{j}")
                    for j in range(rng.randint(2, 15))
                ]
            )
            query = " ".join(rng.choices(vocab, k=3))
            expected = naive_bm25(query, entries)
            index = build_index(entries)
            for e, want in zip(entries, expected):
                assert bm25_score(analyze(query), e, index) == pytest.approx(want)
            result = retrieve(index, query, len(entries))
            want_rank = sorted(
                ((e, s) for e, s in zip(entries, expected) if s > 0),
                key=lambda p: (-p[1], p[0].seq),
            )
            assert [e.seq for e, _ in want_rank] == [e.seq for e in result.entries]

    def test_snapshot_seq_recorded(self):
        entries = seeded([LexiconEntry("a b", "v1"), LexiconEntry("c d", "v2")])
        index = build_index(entries)
        assert index.snapshot_seq == 2
        assert retrieve(index, "a", 1).snapshot_seq == 2

    def test_invalid_params_rejected(self):
        index = build_index(seeded([LexiconEntry("a", "v")]))
        with pytest.raises(ValueError):
            retrieve(index, "a", 0)
        with pytest.raises(ValueError):
            retrieve(index, "a", 1, k1=0)
        with pytest.raises(ValueError):
            retrieve(index, "a", 1, b=1.5)

    def test_unseeded_entry_rejected(self):
        with pytest.raises(ConfigError):
            build_index([LexiconEntry("a", "v")])


class TestDense:
    def test_hash_provider_deterministic_unit_vectors(self):
        p = HashEmbeddingProvider(dim=16)
        a = p.embed(["hello", "world"])
        b = p.embed(["hello", "world"])
        np.testing.assert_array_equal(a, b)
        np.testing.assert_allclose(np.linalg.norm(a, axis=1), 1.0)
        assert a.shape == (2, 16)

    def test_self_similarity_ranks_first(self):
        entries = seeded([LexiconEntry(f"phrase number {i}", f"v{i}") for i in range(20)])
        provider = HashEmbeddingProvider()
        result = dense_retrieve(entries[7].key, entries, 3, provider)
        assert result.entries[0].value == "v7"
        assert result.ranked[0][1] == pytest.approx(1.0)

    def test_cache_avoids_reembedding(self):
        calls = []

        class CountingProvider(HashEmbeddingProvider):
            def embed(self, texts):
                calls.append(list(texts))
                return super().embed(texts)

        entries = seeded([LexiconEntry(f"key {i}", f"v{i}") for i in range(3)])
        r = DenseRetriever(CountingProvider())
        r.retrieve("q", entries, 2)
        r.retrieve("q", entries, 2)
        embedded = [t for batch in calls for t in batch]
        assert len(embedded) == len(set(embedded)) == 4  # 3 keys + query, once each

    def test_http_provider_dimension_mismatch(self, monkeypatch):
        import httpx

        class FakeResponse:
            def raise_for_status(self):
                pass

            def json(self):
                return {"vectors": [[1.0, 0.0]], "dim": 2}

        monkeypatch.setattr(httpx, "post", lambda *a, **k: FakeResponse())
        provider = HttpEmbeddingProvider("http://example.invalid", dim=8)
        with pytest.raises(ConfigError, match="dimension"):
            provider.embed(["x"])


class TestContrastiveLoss:
    def test_zero_without_negatives(self):
        assert contrastive_loss([1.0, 0.0], [1.0, 0.0]) == 0.0

    def test_orthogonal_negative_tau_one(self):
        got = contrastive_loss([1, 0], [1, 0], negatives=[[0, 1]], tau=1.0)
        assert got == pytest.approx(math.log(1 + math.exp(-1)), abs=1e-12)

    def test_temperature_sharpens(self):
        got = contrastive_loss([1, 0], [1, 0], negatives=[[0, 1]], tau=0.5)
        assert got == pytest.approx(math.log(1 + math.exp(-2)), abs=1e-12)

    def test_large_scores_stable(self):
        got = contrastive_loss([1000.0], [1.0], negatives=[[2.0]], tau=1.0)
        assert math.isfinite(got)
        assert got == pytest.approx(1000.0, rel=1e-6)

    def test_bad_inputs(self):
        with pytest.raises(ValueError):
            contrastive_loss([1, 0], [1, 0], tau=0)
        with pytest.raises(ValueError):
            contrastive_loss([1, 0], [1, 0, 0])


class TestTrainingExport:
    def test_one_row_per_gold_entry(self):
        inst = Instance(
            x="the query",
            y="y",
            k_gold=[
                LexiconEntry("p1", "v1"),
                LexiconEntry("p2", "v2", source=Source.DISTRACTOR),
            ],
        )
        rows = export_contrastive_pairs([inst])
        assert rows == [{"query": "the query", "positive": "p1"}]


class TestRecallAtK:
    def test_full_and_partial(self):
        entries = seeded([LexiconEntry(f"k{i} phrase", f"v{i}") for i in range(5)])
        result = retrieve(build_index(entries), "k0 phrase k1", 5)
        gold = [entries[0], entries[1], entries[4]]
        r = recall_at_k(result, gold, k=2)
        assert float(r) == pytest.approx(2 / 3)
        assert not r.vacuous_gold

    def test_vacuous_gold(self):
        entries = seeded([LexiconEntry("a", "v")])
        result = retrieve(build_index(entries), "a", 1)
        r = recall_at_k(result, [], k=1)
        assert float(r) == 1.0
        assert r.vacuous_gold

    def test_value_identity_mode(self):
        stored = seeded([LexiconEntry("stored phrase", "v0")])
        result = retrieve(build_index(stored), "stored phrase", 1)
        gold = [LexiconEntry("different phrase", "v0")]
        assert float(recall_at_k(result, gold, 1, IdentityMode.VALUE)) == 1.0
        assert float(recall_at_k(result, gold, 1, IdentityMode.PAIR)) == 0.0
