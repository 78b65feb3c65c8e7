"""Core domain types shared across the package.

LexiconEntry is the unit of expert knowledge: an NL key phrase mapped to a
formal construct value.  Instance is one task item (NL input, gold output,
gold lexicon set).  Identity and normalization rules live here so that the
knowledge base, retrieval, and metrics never disagree about what counts as
"the same" entry.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator


class LexparseError(Exception):
    """Base class for errors raised by this package."""


class EntryValidationError(LexparseError):
    """A lexicon entry failed normalization (empty key or value)."""


class LexiconLoadError(LexparseError):
    """A persisted lexicon file could not be parsed."""

    def __init__(self, path, lineno: int, reason: str):
        super().__init__(f"{path}:{lineno}: {reason}")
        self.path = path
        self.lineno = lineno
        self.reason = reason


class GenerationError(LexparseError):
    """Grammar expansion or generator backend failure."""


class BudgetError(LexparseError):
    """Context token budget too small to fit the input sentence."""


class BackendError(LexparseError):
    """Transport-level failure talking to an external provider."""

    def __init__(self, message: str, retryable: bool = False):
        super().__init__(message)
        self.retryable = retryable


class ConfigError(LexparseError):
    """Invalid or inconsistent configuration."""


class Domain(str, Enum):
    LTL = "LTL"
    CODE = "CODE"
    CMD = "CMD"
    OTHER = "OTHER"


class Source(str, Enum):
    GOLD = "GOLD"
    EXPERT_UI = "EXPERT_UI"
    INGESTED = "INGESTED"
    DISTRACTOR = "DISTRACTOR"


class IdentityMode(str, Enum):
    PAIR = "PAIR"
    VALUE = "VALUE"


def normalize_text(s: str) -> str:
    """Trim and collapse internal whitespace runs to single spaces."""
    return " ".join(s.split())


@dataclass(frozen=True)
class LexiconEntry:
    """One expert knowledge unit: NL key phrase -> formal construct value.

    key and value are whitespace-normalized at construction.  Keys are
    case-folded only for identity comparison (values are formal constructs
    and stay case-sensitive).  seq is assigned by the knowledge base on
    insertion and is None before that.
    """

    key: str
    value: str
    domain: Domain = Domain.OTHER
    source: Source = Source.GOLD
    seq: int | None = None

    def __post_init__(self):
        key = normalize_text(self.key)
        value = normalize_text(self.value)
        if not key or not value:
            raise EntryValidationError(
                f"entry has empty {'key' if not key else 'value'} after "
                f"normalization: key={self.key!r} value={self.value!r}"
            )
        object.__setattr__(self, "key", key)
        object.__setattr__(self, "value", value)

    def identity(self, mode: IdentityMode) -> tuple:
        if mode is IdentityMode.VALUE:
            return (self.value,)
        return (self.key.casefold(), self.value)

    def with_seq(self, seq: int) -> "LexiconEntry":
        return dataclasses.replace(self, seq=seq)

    def to_dict(self) -> dict:
        return {
            "key": self.key,
            "value": self.value,
            "domain": self.domain.value,
            "source": self.source.value,
            "seq": self.seq,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LexiconEntry":
        return cls(
            key=d["key"],
            value=d["value"],
            domain=Domain(d.get("domain", "OTHER")),
            source=Source(d.get("source", "GOLD")),
            seq=d.get("seq"),
        )


@dataclass
class Instance:
    """One task item: NL input x, gold output y, gold lexicon set, domain."""

    x: str
    y: str
    k_gold: list[LexiconEntry] = field(default_factory=list)
    domain: Domain = Domain.OTHER

    def genuine_gold(self) -> list[LexiconEntry]:
        return [e for e in self.k_gold if e.source is not Source.DISTRACTOR]

    def to_dict(self) -> dict:
        return {
            "x": self.x,
            "y": self.y,
            "k_gold": [e.to_dict() for e in self.k_gold],
            "domain": self.domain.value,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Instance":
        return cls(
            x=d["x"],
            y=d["y"],
            k_gold=[LexiconEntry.from_dict(e) for e in d.get("k_gold", [])],
            domain=Domain(d.get("domain", "OTHER")),
        )


def write_jsonl(path: str | Path, records: Iterable[dict]) -> int:
    """Write one JSON object per line; returns number of lines written."""
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")
            n += 1
    return n


def read_jsonl(path: str | Path) -> Iterator[tuple[int, dict]]:
    """Yield (lineno, record) pairs; raises LexiconLoadError on bad lines."""
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                yield lineno, json.loads(line)
            except json.JSONDecodeError as exc:
                raise LexiconLoadError(path, lineno, f"malformed JSON: {exc}") from exc


def load_instances(path: str | Path) -> list[Instance]:
    return [Instance.from_dict(rec) for _, rec in read_jsonl(path)]
