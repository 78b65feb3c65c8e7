"""The dynamic-knowledge episode protocol.

An episode streams instances against an initially empty knowledge base:
at each step the runner retrieves top-n lexicon entries from the current
KB snapshot, assembles generator context, produces a parse, scores the
gold constructs, extracts feedback per policy, and grows the KB so the
next step can use it.  Retrieval at step t only ever sees entries whose
seq was assigned before step t (asserted via snapshot_seq).
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from . import metrics
from .generation import (
    ContextMode,
    GenerationRequest,
    HttpLlmBackend,
    OracleBackend,
    assemble_context,
    load_exemplars,
    select_entries_within_budget,
)
from .lexicon import KnowledgeBase
from .metrics import EpisodeReport, OvcMatcherConfig, construct_of, extract_ovcs, matcher_for
from .retrieval import (
    DenseRetriever,
    HashEmbeddingProvider,
    HttpEmbeddingProvider,
    RetrievalResult,
    build_index,
    retrieve,
)
from .types import (
    ConfigError,
    Domain,
    IdentityMode,
    Instance,
    LexiconEntry,
    LexparseError,
    read_jsonl,
    write_jsonl,
)


class FeedbackPolicy(str, Enum):
    ALL_FIRST_SEEN = "ALL_FIRST_SEEN"
    ON_ERROR_ONLY = "ON_ERROR_ONLY"
    NONE = "NONE"


@dataclass
class EpisodeConfig:
    retriever: str = "bm25"  # bm25 | dense | none
    n: int = 10
    generator: str = "oracle"  # oracle | llm
    context_mode: ContextMode = ContextMode.LEX
    feedback_policy: FeedbackPolicy = FeedbackPolicy.ALL_FIRST_SEEN
    identity_mode: IdentityMode = IdentityMode.PAIR
    domain: Domain = Domain.LTL
    seed: int = 0
    token_budget: int | None = None
    llm_endpoint: str | None = None
    embed_endpoint: str | None = None
    embed_dim: int = 32
    exemplars_path: str | None = None
    bm25_k1: float = 1.2
    bm25_b: float = 0.75

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError("n must be >= 1")
        self.context_mode = ContextMode(self.context_mode)
        self.feedback_policy = FeedbackPolicy(self.feedback_policy)
        self.identity_mode = IdentityMode(self.identity_mode)
        self.domain = Domain(self.domain)

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        for key in ("context_mode", "feedback_policy", "identity_mode", "domain"):
            d[key] = d[key].value
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "EpisodeConfig":
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in d.items() if k in known})

    @classmethod
    def load(cls, path: str | Path) -> "EpisodeConfig":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass
class ParseRecord:
    t: int
    x: str
    y: str
    retrieved: RetrievalResult
    input_text: str
    y_hat: str
    ovc_gold: list[str]
    ovc_pred: list[str]
    k_new_added: list[LexiconEntry]
    kb_size_after: int
    backend_meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "x": self.x,
            "y": self.y,
            "retrieved": self.retrieved.to_dict(),
            "input_text": self.input_text,
            "y_hat": self.y_hat,
            "ovc_gold": self.ovc_gold,
            "ovc_pred": self.ovc_pred,
            "k_new_added": [e.to_dict() for e in self.k_new_added],
            "kb_size_after": self.kb_size_after,
            "backend_meta": self.backend_meta,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ParseRecord":
        return cls(
            t=d["t"],
            x=d["x"],
            y=d["y"],
            retrieved=RetrievalResult.from_dict(d["retrieved"]),
            input_text=d["input_text"],
            y_hat=d["y_hat"],
            ovc_gold=list(d["ovc_gold"]),
            ovc_pred=list(d["ovc_pred"]),
            k_new_added=[LexiconEntry.from_dict(e) for e in d["k_new_added"]],
            kb_size_after=d["kb_size_after"],
            backend_meta=d.get("backend_meta", {}),
        )


def extract_feedback(
    record: ParseRecord,
    k_gold: list[LexiconEntry],
    kb: KnowledgeBase,
    policy: FeedbackPolicy,
    matcher: OvcMatcherConfig,
) -> list[LexiconEntry]:
    """New lexicon entries the expert contributes after this parse.

    ALL_FIRST_SEEN adds every first-seen genuine gold entry; ON_ERROR_ONLY
    restricts to entries whose construct was missed in the output.
    """
    if policy is FeedbackPolicy.NONE:
        return []
    missing = kb.difference(k_gold)
    if policy is FeedbackPolicy.ALL_FIRST_SEEN:
        return missing
    missed = set(record.ovc_gold) - set(record.ovc_pred)
    return [e for e in missing if construct_of(e.value, matcher) in missed]


def make_backend(config: EpisodeConfig, matcher: OvcMatcherConfig):
    if config.generator == "oracle":
        return OracleBackend(matcher)
    if config.generator == "llm":
        endpoint = config.llm_endpoint or os.environ.get("LEXPARSE_LLM_ENDPOINT")
        if not endpoint:
            raise ConfigError("llm generator needs llm_endpoint or LEXPARSE_LLM_ENDPOINT")
        return HttpLlmBackend(endpoint, token=os.environ.get("LEXPARSE_LLM_TOKEN"))
    raise ConfigError(f"unknown generator {config.generator!r}")


def make_dense_retriever(config: EpisodeConfig) -> DenseRetriever:
    endpoint = config.embed_endpoint or os.environ.get("LEXPARSE_EMBED_ENDPOINT")
    if endpoint in (None, "hash"):
        return DenseRetriever(HashEmbeddingProvider(config.embed_dim))
    return DenseRetriever(
        HttpEmbeddingProvider(
            endpoint, config.embed_dim, token=os.environ.get("LEXPARSE_EMBED_TOKEN")
        )
    )


class EpisodeRunner:
    """Stateful driver for one episode; shared by the offline harness and
    the API server so both produce identical records for identical inputs."""

    def __init__(self, config: EpisodeConfig, backend=None, dense=None):
        self.config = config
        self.matcher = matcher_for(config.domain)
        self.backend = backend or make_backend(config, self.matcher)
        self.kb = KnowledgeBase(config.identity_mode)
        self.records: list[ParseRecord] = []
        self.t = 0
        self._dense = dense
        if config.retriever == "dense" and self._dense is None:
            self._dense = make_dense_retriever(config)
        self._exemplars = (
            load_exemplars(config.exemplars_path) if config.exemplars_path else None
        )

    def _retrieve(self, query: str) -> RetrievalResult:
        snapshot = self.kb.snapshot()
        if self.config.retriever == "bm25":
            index = build_index(snapshot)
            return retrieve(
                index, query, self.config.n, self.config.bm25_k1, self.config.bm25_b
            )
        if self.config.retriever == "dense":
            return self._dense.retrieve(query, snapshot, self.config.n)
        if self.config.retriever == "none":
            seq = (max(e.seq for e in snapshot) + 1) if snapshot else 0
            return RetrievalResult([], query, self.config.n, seq)
        raise ConfigError(f"unknown retriever {self.config.retriever!r}")

    def step(self, instance: Instance) -> ParseRecord:
        self.t += 1
        snapshot_seq_before = self.kb.snapshot_seq
        result = self._retrieve(instance.x)
        for entry, _ in result.ranked:
            if entry.seq >= snapshot_seq_before:
                raise LexparseError(
                    f"causality violation: retrieved seq {entry.seq} at step {self.t} "
                    f"with snapshot {snapshot_seq_before}"
                )
        mode = self.config.context_mode
        if mode in (ContextMode.LEX, ContextMode.DOCS):
            context_entries = select_entries_within_budget(
                instance.x, result.entries, self.config.token_budget, mode=mode
            )
        else:
            context_entries = []
        input_text = assemble_context(
            instance.x,
            context_entries,
            mode,
            exemplars=self._exemplars,
            token_budget=self.config.token_budget,
        )
        request = GenerationRequest(
            x=instance.x,
            context_entries=context_entries,
            mode=mode,
            exemplars=self._exemplars,
            token_budget=self.config.token_budget,
        )
        output = self.backend.generate(request, instance)

        genuine = instance.genuine_gold()
        ovc_gold = sorted(extract_ovcs(instance.y, genuine, self.matcher))
        ovc_pred = sorted(extract_ovcs(output.y_hat, instance.k_gold, self.matcher))
        record = ParseRecord(
            t=self.t,
            x=instance.x,
            y=instance.y,
            retrieved=result,
            input_text=input_text,
            y_hat=output.y_hat,
            ovc_gold=ovc_gold,
            ovc_pred=ovc_pred,
            k_new_added=[],
            kb_size_after=len(self.kb),
            backend_meta=output.backend_meta,
        )
        k_new = extract_feedback(
            record, genuine, self.kb, self.config.feedback_policy, self.matcher
        )
        added = self.kb.add_entries(k_new)
        record.k_new_added = self.kb.entries[len(self.kb) - added :] if added else []
        record.kb_size_after = len(self.kb)
        self.records.append(record)
        return record

    def report(self) -> EpisodeReport:
        rep = metrics.build_report(self.records)
        rep.metadata["config"] = self.config.to_dict()
        return rep


def run_episode(
    stream: list[Instance],
    config: EpisodeConfig,
    backend=None,
    records_path: str | Path | None = None,
) -> tuple[list[ParseRecord], EpisodeReport]:
    """Run the full protocol over a stream; KB starts empty.

    On backend failure the episode aborts with partial records persisted
    (when records_path is given) and the error re-raised.
    """
    if not stream:
        raise ValueError("stream must be nonempty")
    runner = EpisodeRunner(config, backend=backend)
    try:
        for instance in stream:
            runner.step(instance)
    except LexparseError:
        if records_path is not None:
            save_records(runner.records, records_path)
        raise
    if records_path is not None:
        save_records(runner.records, records_path)
    return runner.records, runner.report()


def save_records(records: list[ParseRecord], path: str | Path) -> int:
    return write_jsonl(path, (r.to_dict() for r in records))


def load_records(path: str | Path) -> list[ParseRecord]:
    return [ParseRecord.from_dict(rec) for _, rec in read_jsonl(path)]


def reuse_statistics(
    stream: list[Instance], matcher: OvcMatcherConfig | None = None
) -> dict:
    """Reuse potential of a stream's genuine gold construct occurrences.

    After k occurrences the cumulative reuse fraction is
    (k - unique_so_far) / k.
    """
    seen: set[str] = set()
    curve: list[float] = []
    k = 0
    for inst in stream:
        m = matcher or matcher_for(inst.domain)
        inst_constructs = []
        for entry in inst.genuine_gold():
            c = construct_of(entry.value, m)
            if c not in inst_constructs:
                inst_constructs.append(c)
        for c in inst_constructs:
            k += 1
            seen.add(c)
            curve.append((k - len(seen)) / k)
    return {
        "cumulative_reuse_fraction": curve,
        "final_reuse_fraction": curve[-1] if curve else 0.0,
        "unique_count": len(seen),
        "occurrence_count": k,
    }
