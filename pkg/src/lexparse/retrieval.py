"""Ranking lexicon entries for a query sentence.

Two paths: a from-scratch Okapi BM25 ranker over entry keys, and a dense
path that delegates embedding to a provider (HTTP service or deterministic
local stub) and ranks by inner product of unit vectors.  Also here: the
in-batch-negative contrastive loss evaluator, the training-pair export,
and recall@k.

Indexes are immutable after build and record the KB snapshot seq they were
built from, so episode code can assert that retrieval never surfaces
entries added later.
"""

from __future__ import annotations

import hashlib
import math
import re
import time
from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np

from .types import (
    BackendError,
    ConfigError,
    IdentityMode,
    Instance,
    LexiconEntry,
    Source,
)

_SPLIT_RE = re.compile(r"[^0-9a-z]+")


def analyze(text: str) -> list[str]:
    """Lowercase, split on non-alphanumerics, drop empty tokens."""
    return [t for t in _SPLIT_RE.split(text.lower()) if t]


@dataclass
class LexiconIndex:
    entries: list[LexiconEntry]
    postings: dict[str, list[tuple[int, int]]]  # term -> [(seq, tf)]
    doc_lengths: dict[int, int]
    avg_doc_length: float
    corpus_size: int
    snapshot_seq: int
    index_values: bool = False


@dataclass
class RetrievalResult:
    ranked: list[tuple[LexiconEntry, float]]
    query: str
    n: int
    snapshot_seq: int

    @property
    def entries(self) -> list[LexiconEntry]:
        return [e for e, _ in self.ranked]

    def to_dict(self) -> dict:
        return {
            "query": self.query,
            "n": self.n,
            "snapshot_seq": self.snapshot_seq,
            "ranked": [
                {"entry": e.to_dict(), "score": s} for e, s in self.ranked
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RetrievalResult":
        return cls(
            ranked=[
                (LexiconEntry.from_dict(r["entry"]), float(r["score"]))
                for r in d["ranked"]
            ],
            query=d["query"],
            n=int(d["n"]),
            snapshot_seq=int(d["snapshot_seq"]),
        )


def build_index(
    snapshot: Sequence[LexiconEntry], index_values: bool = False
) -> LexiconIndex:
    """Inverted index over entry keys (and optionally values) of a KB snapshot."""
    postings: dict[str, list[tuple[int, int]]] = {}
    doc_lengths: dict[int, int] = {}
    for entry in snapshot:
        if entry.seq is None:
            raise ConfigError(f"cannot index entry without seq: {entry.key!r}")
        text = entry.key + (" " + entry.value if index_values else "")
        tokens = analyze(text)
        doc_lengths[entry.seq] = len(tokens)
        counts: dict[str, int] = {}
        for t in tokens:
            counts[t] = counts.get(t, 0) + 1
        for term, tf in counts.items():
            postings.setdefault(term, []).append((entry.seq, tf))
    n = len(snapshot)
    avg = sum(doc_lengths.values()) / n if n else 0.0
    return LexiconIndex(
        entries=list(snapshot),
        postings=postings,
        doc_lengths=doc_lengths,
        avg_doc_length=avg,
        corpus_size=n,
        snapshot_seq=(max(doc_lengths) + 1) if doc_lengths else 0,
        index_values=index_values,
    )


def _idf(index: LexiconIndex, term: str) -> float:
    df = len(index.postings.get(term, ()))
    return math.log(1.0 + (index.corpus_size - df + 0.5) / (df + 0.5))


def bm25_score(
    query_terms: list[str],
    entry: LexiconEntry,
    index: LexiconIndex,
    k1: float = 1.2,
    b: float = 0.75,
) -> float:
    """Okapi BM25 with ln(1 + .) smoothed idf."""
    if k1 <= 0 or not (0.0 <= b <= 1.0):
        raise ValueError("require k1 > 0 and 0 <= b <= 1")
    length = index.doc_lengths.get(entry.seq, 0)
    norm = k1 * (1.0 - b + b * (length / index.avg_doc_length if index.avg_doc_length else 0.0))
    score = 0.0
    for term in query_terms:
        tf = 0
        for seq, f in index.postings.get(term, ()):
            if seq == entry.seq:
                tf = f
                break
        if tf == 0:
            continue
        score += _idf(index, term) * tf * (k1 + 1.0) / (tf + norm)
    return score


def retrieve(
    index: LexiconIndex, query: str, n: int, k1: float = 1.2, b: float = 0.75
) -> RetrievalResult:
    """Top-n BM25 scored entries; zero scores excluded, ties broken by seq."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if k1 <= 0 or not (0.0 <= b <= 1.0):
        raise ValueError("require k1 > 0 and 0 <= b <= 1")
    terms = analyze(query)
    accum: dict[int, float] = {}
    for term in terms:
        plist = index.postings.get(term)
        if not plist:
            continue
        idf = _idf(index, term)
        for seq, tf in plist:
            length = index.doc_lengths[seq]
            norm = k1 * (
                1.0 - b + b * (length / index.avg_doc_length if index.avg_doc_length else 0.0)
            )
            accum[seq] = accum.get(seq, 0.0) + idf * tf * (k1 + 1.0) / (tf + norm)
    by_seq = {e.seq: e for e in index.entries}
    scored = sorted(
        ((by_seq[seq], s) for seq, s in accum.items() if s > 0.0),
        key=lambda pair: (-pair[1], pair[0].seq),
    )
    return RetrievalResult(
        ranked=scored[:n], query=query, n=n, snapshot_seq=index.snapshot_seq
    )


# ---------------------------------------------------------------------------
# Dense path
# ---------------------------------------------------------------------------


class EmbeddingProvider(Protocol):
    dim: int

    def embed(self, texts: list[str]) -> np.ndarray:
        """Return unit-normalized row vectors, shape (len(texts), dim)."""
        ...


def unit_normalize(vectors: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(vectors, axis=-1, keepdims=True)
    norms[norms == 0] = 1.0
    return vectors / norms


class HashEmbeddingProvider:
    """Deterministic stand-in provider: hashes text to a fixed unit vector."""

    def __init__(self, dim: int = 32):
        self.dim = dim

    def embed(self, texts: list[str]) -> np.ndarray:
        rows = []
        for text in texts:
            digest = hashlib.sha256(text.encode("utf-8")).digest()
            raw = np.frombuffer(
                (digest * (self.dim * 4 // len(digest) + 1))[: self.dim * 4],
                dtype="<u4",
            ).astype(np.float64)
            rows.append(raw - raw.mean())
        return unit_normalize(np.array(rows))


class HttpEmbeddingProvider:
    """Client for an embedding endpoint: {texts: [...]} -> {vectors, dim}."""

    def __init__(self, endpoint: str, dim: int, token: str | None = None,
                 max_retries: int = 3, timeout: float = 30.0):
        self.endpoint = endpoint
        self.dim = dim
        self.token = token
        self.max_retries = max_retries
        self.timeout = timeout

    def embed(self, texts: list[str]) -> np.ndarray:
        import httpx

        headers = {"Authorization": f"Bearer {self.token}"} if self.token else {}
        last_exc = None
        for attempt in range(self.max_retries):
            try:
                resp = httpx.post(
                    self.endpoint,
                    json={"texts": texts},
                    headers=headers,
                    timeout=self.timeout,
                )
                resp.raise_for_status()
                payload = resp.json()
                break
            except httpx.HTTPError as exc:
                last_exc = exc
                time.sleep(min(2.0**attempt * 0.1, 2.0))
        else:
            raise BackendError(
                f"embedding provider unavailable: {last_exc}", retryable=True
            )
        if payload.get("dim") != self.dim:
            raise ConfigError(
                f"provider dimension {payload.get('dim')} != configured {self.dim}"
            )
        vectors = np.asarray(payload["vectors"], dtype=np.float64)
        if vectors.shape != (len(texts), self.dim):
            raise ConfigError(f"bad vector shape {vectors.shape}")
        return unit_normalize(vectors)


class DenseRetriever:
    """Dense ranking over a KB snapshot with an embedding cache.

    Only texts not yet cached are sent to the provider, so growing the KB
    incrementally re-embeds new entries only.
    """

    def __init__(self, provider: EmbeddingProvider):
        self.provider = provider
        self._cache: dict[str, np.ndarray] = {}

    def _vectors(self, texts: list[str]) -> np.ndarray:
        missing = [t for t in texts if t not in self._cache]
        if missing:
            embedded = self.provider.embed(missing)
            if embedded.shape[1] != self.provider.dim:
                raise ConfigError("provider returned wrong dimension")
            for text, vec in zip(missing, embedded):
                self._cache[text] = vec
        return np.array([self._cache[t] for t in texts])

    def retrieve(
        self, query: str, snapshot: Sequence[LexiconEntry], n: int
    ) -> RetrievalResult:
        if n < 1:
            raise ValueError("n must be >= 1")
        snapshot_seq = (max(e.seq for e in snapshot) + 1) if snapshot else 0
        if not snapshot:
            return RetrievalResult([], query, n, snapshot_seq)
        keys = [e.key for e in snapshot]
        key_vecs = self._vectors(keys)
        query_vec = self._vectors([query])[0]
        scores = key_vecs @ query_vec
        order = sorted(range(len(snapshot)), key=lambda i: (-scores[i], snapshot[i].seq))
        ranked = [(snapshot[i], float(scores[i])) for i in order[:n]]
        return RetrievalResult(ranked, query, n, snapshot_seq)


def dense_retrieve(
    query: str,
    snapshot: Sequence[LexiconEntry],
    n: int,
    provider: EmbeddingProvider,
) -> RetrievalResult:
    return DenseRetriever(provider).retrieve(query, snapshot, n)


# ---------------------------------------------------------------------------
# Contrastive loss evaluator and training export
# ---------------------------------------------------------------------------


def contrastive_loss(
    e_p: Sequence[float],
    e_q: Sequence[float],
    negatives: Sequence[Sequence[float]] = (),
    tau: float = 1.0,
) -> float:
    """In-batch-negative InfoNCE term for one (positive, query) pair.

    -log( exp(<e_p,e_q>/tau) / (exp(<e_p,e_q>/tau) + sum_neg exp(<e_p,e_neg>/tau)) ),
    computed in log space:  log(1 + sum exp((s_neg - s_pos)/tau)).
    """
    if tau <= 0:
        raise ValueError("tau must be positive")
    p = np.asarray(e_p, dtype=np.float64)
    q = np.asarray(e_q, dtype=np.float64)
    if p.shape != q.shape:
        raise ValueError("vector dimensions differ")
    s_pos = float(p @ q)
    diffs = []
    for neg in negatives:
        nv = np.asarray(neg, dtype=np.float64)
        if nv.shape != p.shape:
            raise ValueError("vector dimensions differ")
        diffs.append((float(p @ nv) - s_pos) / tau)
    if not diffs:
        return 0.0
    m = max(max(diffs), 0.0)
    total = math.exp(-m) + sum(math.exp(d - m) for d in diffs)
    return m + math.log(total)


def export_contrastive_pairs(instances: Sequence[Instance]) -> list[dict]:
    """One {query, positive} row per (instance, genuine gold entry)."""
    rows = []
    for inst in instances:
        for entry in inst.k_gold:
            if entry.source is Source.DISTRACTOR:
                continue
            rows.append({"query": inst.x, "positive": entry.key})
    return rows


# ---------------------------------------------------------------------------
# Recall@k
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RecallResult:
    value: float
    vacuous_gold: bool = False

    def __float__(self) -> float:
        return self.value


def recall_at_k(
    result: RetrievalResult,
    gold: list[LexiconEntry],
    k: int,
    identity_mode: IdentityMode = IdentityMode.PAIR,
) -> RecallResult:
    """|gold ∩ top-k| / |gold| under the KB identity; empty gold -> 1.0 flagged."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if not gold:
        return RecallResult(1.0, vacuous_gold=True)
    top = {e.identity(identity_mode) for e, _ in result.ranked[:k]}
    hit = sum(1 for g in gold if g.identity(identity_mode) in top)
    return RecallResult(hit / len(gold))
