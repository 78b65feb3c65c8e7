"""Append-only knowledge base of expert lexicon entries.

The KB is deduplicated under a configurable identity (key+value pair, or
value only), assigns strictly increasing seq numbers on insertion, and
persists as line-delimited JSON records.  Mutations are serialized by a
lock; readers work off immutable snapshots (the entry list is copied on
snapshot, entries themselves are frozen).
"""

from __future__ import annotations

import json
import threading
from pathlib import Path

from .types import (
    EntryValidationError,
    IdentityMode,
    LexiconEntry,
    LexiconLoadError,
    read_jsonl,
)


class KnowledgeBase:
    def __init__(self, identity_mode: IdentityMode = IdentityMode.PAIR):
        self.identity_mode = identity_mode
        self._entries: list[LexiconEntry] = []
        self._seen: set[tuple] = set()
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._entries)

    @property
    def entries(self) -> list[LexiconEntry]:
        return list(self._entries)

    def snapshot(self) -> list[LexiconEntry]:
        """Consistent view of the entries; safe to use while writers append."""
        with self._lock:
            return list(self._entries)

    @property
    def snapshot_seq(self) -> int:
        """seq that the next inserted entry would receive."""
        return len(self._entries)

    def contains(self, entry: LexiconEntry) -> bool:
        return entry.identity(self.identity_mode) in self._seen

    def add_entries(self, new: list[LexiconEntry]) -> int:
        """Append entries not matching an existing identity; returns count added.

        Duplicates (including duplicates within `new` itself) are silently
        skipped.  Invalid entries raise EntryValidationError at construction
        time, before any mutation here.
        """
        with self._lock:
            added = 0
            for entry in new:
                ident = entry.identity(self.identity_mode)
                if ident in self._seen:
                    continue
                self._entries.append(entry.with_seq(len(self._entries)))
                self._seen.add(ident)
                added += 1
            return added

    def difference(self, gold: list[LexiconEntry]) -> list[LexiconEntry]:
        """Gold entries whose identity is absent from the KB, order preserved."""
        return [e for e in gold if e.identity(self.identity_mode) not in self._seen]

    def persist(self, path: str | Path) -> None:
        with self._lock, open(path, "w", encoding="utf-8") as fh:
            fh.write(
                '{"_meta": {"identity_mode": "%s"}}\n' % self.identity_mode.value
            )
            for entry in self._entries:
                fh.write(json.dumps(entry.to_dict(), ensure_ascii=False) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "KnowledgeBase":
        kb: KnowledgeBase | None = None
        for lineno, rec in read_jsonl(path):
            if "_meta" in rec:
                kb = cls(IdentityMode(rec["_meta"].get("identity_mode", "PAIR")))
                continue
            if kb is None:
                kb = cls()
            try:
                entry = LexiconEntry.from_dict(rec)
            except (KeyError, ValueError, EntryValidationError) as exc:
                raise LexiconLoadError(path, lineno, str(exc)) from exc
            expected_seq = len(kb._entries)
            if rec.get("seq") is not None and rec["seq"] != expected_seq:
                raise LexiconLoadError(
                    path, lineno, f"seq {rec['seq']} out of order (expected {expected_seq})"
                )
            if kb.add_entries([entry]) != 1:
                raise LexiconLoadError(path, lineno, "duplicate entry in lexicon file")
        return kb if kb is not None else cls()
