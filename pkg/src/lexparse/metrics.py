"""Scoring: corpus BLEU, OVC extraction and P/R/F1, expert-effort cost.

The OVC matcher defined here is the single source of truth for "does this
construct occur in that string" — corpus ingestion builds gold sets with
the same code, so gold sets and scoring never diverge.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum

from .types import Domain, LexiconEntry, normalize_text


class MatchRule(str, Enum):
    WORD_BOUNDARY = "WORD_BOUNDARY"
    SUBSTRING = "SUBSTRING"
    CALL_HEAD = "CALL_HEAD"


@dataclass(frozen=True)
class OvcMatcherConfig:
    domain: Domain
    match_rule: MatchRule


# Command names match at word boundaries (rm must not match inside ipcrm);
# LTL predicates and code function heads match as identifier-followed-by-"(",
# falling back to a boundary token match for bare values like variable names.
DEFAULT_MATCH_RULES = {
    Domain.LTL: MatchRule.CALL_HEAD,
    Domain.CODE: MatchRule.WORD_BOUNDARY,
    Domain.CMD: MatchRule.WORD_BOUNDARY,
    Domain.OTHER: MatchRule.SUBSTRING,
}


def matcher_for(domain: Domain) -> OvcMatcherConfig:
    return OvcMatcherConfig(domain, DEFAULT_MATCH_RULES[domain])


def construct_of(value: str, matcher: OvcMatcherConfig) -> str:
    """Canonical construct identity of a lexicon value under this matcher."""
    value = normalize_text(value)
    if matcher.match_rule is MatchRule.CALL_HEAD and "(" in value:
        return value.split("(", 1)[0].strip()
    return value


def value_matches(text: str, value: str, matcher: OvcMatcherConfig) -> bool:
    value = normalize_text(value)
    if matcher.match_rule is MatchRule.SUBSTRING:
        return value in text
    if matcher.match_rule is MatchRule.CALL_HEAD and "(" in value:
        head = value.split("(", 1)[0].strip()
        return re.search(rf"(?<!\w){re.escape(head)}\s*\(", text) is not None
    return re.search(rf"(?<!\w){re.escape(value)}(?!\w)", text) is not None


def extract_ovcs(
    text: str, lexicon: list[LexiconEntry], matcher: OvcMatcherConfig
) -> set[str]:
    """Constructs from the lexicon whose pattern occurs in text."""
    return {
        construct_of(e.value, matcher)
        for e in lexicon
        if value_matches(text, e.value, matcher)
    }


# ---------------------------------------------------------------------------
# BLEU
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(r"\w+|[^\w\s]")


def formal_tokens(text: str) -> list[str]:
    """Split into words/identifiers and single punctuation/operator symbols."""
    return _TOKEN_RE.findall(text)


class Smoothing(str, Enum):
    NONE = "NONE"
    ADD_EPS = "ADD_EPS"


SMOOTHING_EPS = 0.1


def _ngrams(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu(
    hypotheses: list[str],
    references: list[str],
    max_n: int = 4,
    smoothing: Smoothing = Smoothing.NONE,
    tokenizer=formal_tokens,
) -> float:
    """Corpus-level BLEU on a 0..100 scale.

    Uniform n-gram weights 1/max_n; brevity penalty computed at corpus
    level; NONE smoothing yields 0 if any pooled n-gram precision is 0,
    ADD_EPS replaces zero numerators with 0.1.
    """
    if not hypotheses:
        raise ValueError("empty hypothesis list")
    if len(hypotheses) != len(references):
        raise ValueError("hypothesis/reference length mismatch")
    if max_n < 1:
        raise ValueError("max_n must be >= 1")
    smoothing = Smoothing(smoothing)

    hyp_len = ref_len = 0
    matches = [0] * max_n
    totals = [0] * max_n
    for hyp, ref in zip(hypotheses, references):
        h, r = tokenizer(hyp), tokenizer(ref)
        hyp_len += len(h)
        ref_len += len(r)
        for n in range(1, max_n + 1):
            hc, rc = _ngrams(h, n), _ngrams(r, n)
            totals[n - 1] += sum(hc.values())
            matches[n - 1] += sum(min(c, rc[g]) for g, c in hc.items())

    if hyp_len == 0:
        return 0.0
    log_sum = 0.0
    for num, den in zip(matches, totals):
        if den == 0:
            den = 1
        if num == 0:
            if smoothing is Smoothing.NONE:
                return 0.0
            num = SMOOTHING_EPS
        log_sum += math.log(num / den) / max_n
    bp = min(1.0, math.exp(1.0 - ref_len / hyp_len))
    return 100.0 * bp * math.exp(log_sum)


# ---------------------------------------------------------------------------
# OVC precision / recall / F1
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PrfResult:
    precision: float
    recall: float
    f1: float
    vacuous_gold: bool = False

    def __iter__(self):
        return iter((self.precision, self.recall, self.f1))


def ovc_prf(pred: set[str], gold: set[str]) -> PrfResult:
    """Unordered set precision/recall/F1 with explicit vacuous-gold cases."""
    if not gold:
        if not pred:
            return PrfResult(1.0, 1.0, 1.0, vacuous_gold=True)
        return PrfResult(0.0, 1.0, 0.0, vacuous_gold=True)
    if not pred:
        return PrfResult(0.0, 0.0, 0.0)
    tp = len(pred & gold)
    p = tp / len(pred)
    r = tp / len(gold)
    f1 = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return PrfResult(p, r, f1)


def micro_prf(pairs: list[tuple[set[str], set[str]]]) -> PrfResult:
    """Pool TP/FP/FN over (pred, gold) pairs; vacuous pairs contribute FPs only."""
    tp = fp = fn = 0
    for pred, gold in pairs:
        tp += len(pred & gold)
        fp += len(pred - gold)
        fn += len(gold - pred)
    if tp + fp + fn == 0:
        return PrfResult(1.0, 1.0, 1.0, vacuous_gold=True)
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 1.0
    f1 = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return PrfResult(p, r, f1)


# ---------------------------------------------------------------------------
# Expert-effort cost model
# ---------------------------------------------------------------------------


def effort_cost(records) -> tuple[int, int, int]:
    """(reading, error, total): 1 unit to read each parse, 1 per missed OVC."""
    reading = len(records)
    error = sum(len(set(r.ovc_gold) - set(r.ovc_pred)) for r in records)
    return reading, error, reading + error


def reduction(total_base: float, total_with_lexicon: float) -> float:
    """Percentage cost reduction relative to the baseline; sign-preserving."""
    if total_base <= 0:
        raise ValueError("total_base must be positive")
    return 100.0 * (total_base - total_with_lexicon) / total_base


# ---------------------------------------------------------------------------
# Episode report
# ---------------------------------------------------------------------------


@dataclass
class EpisodeReport:
    corpus_bleu: float
    ovc_precision: float
    ovc_recall: float
    ovc_f1: float
    reading_cost: int
    error_cost: int
    total_cost: int
    reuse: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "corpus_bleu": self.corpus_bleu,
            "ovc_precision": self.ovc_precision,
            "ovc_recall": self.ovc_recall,
            "ovc_f1": self.ovc_f1,
            "reading_cost": self.reading_cost,
            "error_cost": self.error_cost,
            "total_cost": self.total_cost,
            "reuse": self.reuse,
            "metadata": self.metadata,
        }


def build_report(records, smoothing: Smoothing = Smoothing.NONE) -> EpisodeReport:
    """Aggregate per-step parse records into one episode report.

    Records need y, y_hat, ovc_gold, ovc_pred attributes.  OVC metrics are
    micro-averaged (pooled TP/FP/FN); the reuse block tracks, for every
    gold construct occurrence in stream order, whether it was a first
    occurrence or a repeat, and whether it was produced correctly.
    """
    if not records:
        raise ValueError("no records to report on")
    corpus = bleu([r.y_hat for r in records], [r.y for r in records], smoothing=smoothing)
    prf = micro_prf([(set(r.ovc_pred), set(r.ovc_gold)) for r in records])
    reading, error, total = effort_cost(records)

    seen: set[str] = set()
    first_total = first_correct = repeat_total = repeat_correct = 0
    occurrences = 0
    curve = []
    for rec in records:
        pred = set(rec.ovc_pred)
        for construct in rec.ovc_gold:
            occurrences += 1
            correct = construct in pred
            if construct in seen:
                repeat_total += 1
                repeat_correct += correct
            else:
                first_total += 1
                first_correct += correct
        seen.update(rec.ovc_gold)
        curve.append(
            (occurrences - len(seen)) / occurrences if occurrences else 0.0
        )

    reuse = {
        "unique_constructs": len(seen),
        "total_occurrences": occurrences,
        "reuse_fraction": (occurrences - len(seen)) / occurrences if occurrences else 0.0,
        "first_occurrences": first_total,
        "first_recall": first_correct / first_total if first_total else 0.0,
        "repeat_occurrences": repeat_total,
        "repeat_recall": repeat_correct / repeat_total if repeat_total else 0.0,
        "cumulative_reuse_curve": curve,
    }
    return EpisodeReport(
        corpus_bleu=corpus,
        ovc_precision=prf.precision,
        ovc_recall=prf.recall,
        ovc_f1=prf.f1,
        reading_cost=reading,
        error_cost=error,
        total_cost=total,
        reuse=reuse,
        metadata={
            "ovc_averaging": "micro",
            "bleu_smoothing": smoothing.value,
            "tokenizer": "word-punct v1",
        },
    )
