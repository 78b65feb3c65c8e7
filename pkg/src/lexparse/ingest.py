"""Lexicon construction from documentation records and (x, y) corpora.

Keys are excerpted from documentation (first N characters or first line),
values are the documented construct names.  Pair augmentation attaches to
each (x, y) pair the lexicon entries whose value occurs in y under the
domain's OVC matcher — the same matcher metrics scoring uses.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .metrics import OvcMatcherConfig, matcher_for, value_matches
from .types import Domain, Instance, LexiconEntry, Source, normalize_text


@dataclass(frozen=True)
class DocRecord:
    construct_id: str
    doc_text: str
    domain: Domain = Domain.OTHER

    @classmethod
    def from_dict(cls, d: dict) -> "DocRecord":
        return cls(
            construct_id=d["construct_id"],
            doc_text=d["doc_text"],
            domain=Domain(d.get("domain", "OTHER")),
        )


class ExcerptMode(str, Enum):
    FIRST_N_CHARS = "FIRST_N_CHARS"
    FIRST_LINE = "FIRST_LINE"


@dataclass(frozen=True)
class SkippedDoc:
    construct_id: str
    reason: str


def build_lexicon_from_docs(
    docs: list[DocRecord],
    mode: ExcerptMode,
    n: int = 200,
) -> tuple[list[LexiconEntry], list[SkippedDoc]]:
    """One entry per doc: key is the excerpt, value is the construct id.

    FIRST_N_CHARS counts Unicode scalar values on the whitespace-normalized
    text (the excerpt may span source lines).  Empty docs are skipped and
    reported, not raised.
    """
    mode = ExcerptMode(mode)
    if mode is ExcerptMode.FIRST_N_CHARS and n < 1:
        raise ValueError("n must be >= 1 for FIRST_N_CHARS")
    entries: list[LexiconEntry] = []
    skipped: list[SkippedDoc] = []
    for doc in docs:
        if not doc.doc_text.strip():
            skipped.append(SkippedDoc(doc.construct_id, "empty documentation"))
            continue
        if mode is ExcerptMode.FIRST_LINE:
            key = doc.doc_text.strip().splitlines()[0]
        else:
            key = normalize_text(doc.doc_text)[:n]
        if not key.strip():
            skipped.append(SkippedDoc(doc.construct_id, "empty excerpt"))
            continue
        entries.append(
            LexiconEntry(key, doc.construct_id, doc.domain, Source.INGESTED)
        )
    return entries, skipped


def augment_pairs(
    pairs: list[tuple[str, str]],
    lexicon: list[LexiconEntry],
    domain: Domain,
    matcher: OvcMatcherConfig | None = None,
) -> list[Instance]:
    """Attach k_gold to each (x, y) pair via the domain OVC matcher.

    Pairs with zero matches are kept with an empty k_gold.
    """
    matcher = matcher or matcher_for(domain)
    out = []
    for x, y in pairs:
        k_gold = [e for e in lexicon if value_matches(y, e.value, matcher)]
        out.append(Instance(x=x, y=y, k_gold=k_gold, domain=domain))
    return out
