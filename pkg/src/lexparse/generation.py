"""Generator-side machinery: context assembly, training-data formatting,
and parse production via pluggable backends.

Two backends ship: an HTTP client for an external LLM completion service,
and a deterministic oracle used as a closed-loop test double — it emits a
gold construct correctly iff that construct's lexicon value is present in
the supplied context, and the UNK_CONSTRUCT sentinel otherwise.  The
sentinel never matches any lexicon value, so metric code counts it as a
false negative.

Prompt/context templates are data (data/prompts.json), editable without
code changes.
"""

from __future__ import annotations

import json
import re
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .metrics import MatchRule, OvcMatcherConfig, matcher_for, value_matches
from .types import (
    BackendError,
    BudgetError,
    ConfigError,
    Instance,
    LexiconEntry,
    Source,
    normalize_text,
)

UNK_CONSTRUCT = "UNK_CONSTRUCT"

_PROMPTS_PATH = Path(__file__).parent / "data" / "prompts.json"


@dataclass(frozen=True)
class ContextTemplate:
    separator: str = "---"
    kv_format: str = "{key} => {value}"
    key_format: str = "{key}"
    exemplar_format: str = "Input: {x}\nOutput: {y}"
    ky_join: str = " ; "
    target_separator: str = "###"

    @classmethod
    def load(cls, path: str | Path = _PROMPTS_PATH) -> "ContextTemplate":
        return cls(**json.loads(Path(path).read_text(encoding="utf-8")))


DEFAULT_TEMPLATE = ContextTemplate.load()


class ContextMode(str, Enum):
    NONE = "NONE"
    LEX = "LEX"
    DOCS = "DOCS"
    EXEMPLAR = "EXEMPLAR"


def _count_tokens(text: str) -> int:
    return len(text.split())


def select_entries_within_budget(
    x: str,
    entries: list[LexiconEntry],
    token_budget: int | None,
    template: ContextTemplate = DEFAULT_TEMPLATE,
    mode: ContextMode = ContextMode.LEX,
) -> list[LexiconEntry]:
    """Entries that fit the budget, dropping lowest-ranked (tail) first."""
    if token_budget is None:
        return list(entries)
    base = _count_tokens(x) + _count_tokens(template.separator)
    if _count_tokens(x) > token_budget:
        raise BudgetError(
            f"token budget {token_budget} smaller than input ({_count_tokens(x)} tokens)"
        )
    kept: list[LexiconEntry] = []
    used = base
    fmt = template.key_format if mode is ContextMode.DOCS else template.kv_format
    for entry in entries:
        line = fmt.format(key=entry.key, value=entry.value)
        cost = _count_tokens(line)
        if used + cost > token_budget:
            break
        kept.append(entry)
        used += cost
    return kept


def assemble_context(
    x: str,
    entries: list[LexiconEntry],
    mode: ContextMode = ContextMode.LEX,
    exemplars: list[tuple[str, str]] | None = None,
    token_budget: int | None = None,
    template: ContextTemplate = DEFAULT_TEMPLATE,
) -> str:
    """Deterministic, order-preserving input text for the generator."""
    mode = ContextMode(mode)
    if mode is ContextMode.NONE:
        if entries:
            raise ConfigError("mode NONE requires empty context entries")
        return x
    if mode is ContextMode.EXEMPLAR:
        if not exemplars:
            raise ConfigError("mode EXEMPLAR requires nonempty exemplars")
        blocks = [template.exemplar_format.format(x=ex, y=ey) for ex, ey in exemplars]
        return "\n".join(blocks + [x])
    kept = select_entries_within_budget(x, entries, token_budget, template, mode)
    fmt = template.key_format if mode is ContextMode.DOCS else template.kv_format
    lines = [fmt.format(key=e.key, value=e.value) for e in kept]
    return "\n".join([x, template.separator] + lines)


# ---------------------------------------------------------------------------
# Training-data formatting for the four generator schemes
# ---------------------------------------------------------------------------


class Strategy(str, Enum):
    BASIC = "BASIC"
    EXTRA_SUP = "EXTRA_SUP"
    MULTITASK = "MULTITASK"
    TRANSFER = "TRANSFER"


class Stage(str, Enum):
    SINGLE = "SINGLE"
    STAGE1 = "STAGE1"
    STAGE2 = "STAGE2"


@dataclass(frozen=True)
class TrainingRow:
    input_text: str
    target_text: str
    stage: Stage
    strategy: Strategy

    def __post_init__(self):
        if self.stage in (Stage.STAGE1, Stage.STAGE2) and self.strategy is not Strategy.TRANSFER:
            raise ConfigError(f"stage {self.stage.value} only valid under TRANSFER")
        if self.strategy is Strategy.TRANSFER and self.stage is Stage.SINGLE:
            raise ConfigError("TRANSFER rows must carry STAGE1 or STAGE2")

    def to_dict(self) -> dict:
        return {
            "input_text": self.input_text,
            "target_text": self.target_text,
            "stage": self.stage.value,
            "strategy": self.strategy.value,
        }


def serialize_gold_lexicon(
    entries: list[LexiconEntry], template: ContextTemplate = DEFAULT_TEMPLATE
) -> str:
    return template.ky_join.join(
        template.kv_format.format(key=e.key, value=e.value)
        for e in entries
        if e.source is not Source.DISTRACTOR
    )


def format_training_data(
    instances: list[Instance],
    retrieved_per_instance: list[list[LexiconEntry]],
    strategy: Strategy,
    template: ContextTemplate = DEFAULT_TEMPLATE,
) -> list[TrainingRow]:
    """Rows per scheme: BASIC n, EXTRA_SUP 2n, MULTITASK n, TRANSFER 2n."""
    strategy = Strategy(strategy)
    if len(instances) != len(retrieved_per_instance):
        raise ConfigError("retrieved_per_instance not aligned with instances")
    rows: list[TrainingRow] = []
    for inst, retrieved in zip(instances, retrieved_per_instance):
        noisy = assemble_context(inst.x, retrieved, ContextMode.LEX, template=template)
        gold_entries = inst.genuine_gold()
        serialized = serialize_gold_lexicon(gold_entries, template)
        if strategy is Strategy.BASIC:
            rows.append(TrainingRow(noisy, inst.y, Stage.SINGLE, strategy))
        elif strategy is Strategy.EXTRA_SUP:
            clean = assemble_context(inst.x, gold_entries, ContextMode.LEX, template=template)
            rows.append(TrainingRow(noisy, inst.y, Stage.SINGLE, strategy))
            rows.append(TrainingRow(clean, inst.y, Stage.SINGLE, strategy))
        elif strategy is Strategy.MULTITASK:
            target = f"{serialized} {template.target_separator} {inst.y}"
            rows.append(TrainingRow(noisy, target, Stage.SINGLE, strategy))
        else:  # TRANSFER
            rows.append(TrainingRow(noisy, serialized, Stage.STAGE1, strategy))
            rows.append(TrainingRow(noisy, inst.y, Stage.STAGE2, strategy))
    return rows


# ---------------------------------------------------------------------------
# Backends
# ---------------------------------------------------------------------------


@dataclass
class GenerationRequest:
    x: str
    context_entries: list[LexiconEntry] = field(default_factory=list)
    mode: ContextMode = ContextMode.LEX
    exemplars: list[tuple[str, str]] | None = None
    temperature: float = 0.01
    max_tokens: int = 256
    token_budget: int | None = None


@dataclass
class GenerationOutput:
    y_hat: str
    backend_meta: dict = field(default_factory=dict)


def oracle_generate(
    instance: Instance,
    context_entries: list[LexiconEntry],
    matcher: OvcMatcherConfig | None = None,
) -> str:
    """Deterministic closed-loop double for the episode protocol.

    Each genuine gold construct in y is emitted verbatim iff its lexicon
    value is present (by normalized value) among the context entries, and
    replaced by UNK_CONSTRUCT otherwise.  Non-OVC tokens are copied.
    """
    matcher = matcher or matcher_for(instance.domain)
    available = {normalize_text(e.value) for e in context_entries}
    y_hat = instance.y
    for entry in instance.genuine_gold():
        if not value_matches(instance.y, entry.value, matcher):
            continue
        if normalize_text(entry.value) in available:
            continue
        value = normalize_text(entry.value)
        if matcher.match_rule is MatchRule.CALL_HEAD and "(" in value:
            head = value.split("(", 1)[0].strip()
            y_hat = re.sub(
                rf"(?<!\w){re.escape(head)}(?=\s*\()", UNK_CONSTRUCT, y_hat
            )
        elif matcher.match_rule is MatchRule.SUBSTRING:
            y_hat = y_hat.replace(value, UNK_CONSTRUCT)
        else:
            y_hat = re.sub(
                rf"(?<!\w){re.escape(value)}(?!\w)", UNK_CONSTRUCT, y_hat
            )
    return y_hat


class OracleBackend:
    """Backend wrapper around oracle_generate for harness plumbing."""

    name = "oracle"

    def __init__(self, matcher: OvcMatcherConfig | None = None):
        self.matcher = matcher

    def generate(
        self, request: GenerationRequest, instance: Instance | None = None
    ) -> GenerationOutput:
        if instance is None:
            raise ConfigError("oracle backend needs the gold instance")
        y_hat = oracle_generate(instance, request.context_entries, self.matcher)
        return GenerationOutput(y_hat, {"backend": self.name})


class HttpLlmBackend:
    """Client for a completion endpoint: {prompt, temperature, max_tokens} -> {text}."""

    name = "llm"

    def __init__(
        self,
        endpoint: str,
        token: str | None = None,
        template: ContextTemplate = DEFAULT_TEMPLATE,
        max_retries: int = 3,
        timeout: float = 60.0,
    ):
        self.endpoint = endpoint
        self.token = token
        self.template = template
        self.max_retries = max_retries
        self.timeout = timeout

    def generate(
        self, request: GenerationRequest, instance: Instance | None = None
    ) -> GenerationOutput:
        import httpx

        prompt = assemble_context(
            request.x,
            request.context_entries,
            request.mode,
            exemplars=request.exemplars,
            token_budget=request.token_budget,
            template=self.template,
        )
        headers = {"Authorization": f"Bearer {self.token}"} if self.token else {}
        last_exc = None
        started = time.monotonic()
        for attempt in range(self.max_retries):
            try:
                resp = httpx.post(
                    self.endpoint,
                    json={
                        "prompt": prompt,
                        "temperature": request.temperature,
                        "max_tokens": request.max_tokens,
                    },
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
            raise BackendError(f"LLM backend unavailable: {last_exc}", retryable=True)
        text = (payload.get("text") or "").strip()
        if not text:
            raise BackendError("LLM backend returned an empty completion")
        return GenerationOutput(
            text,
            {
                "backend": self.name,
                "raw": payload,
                "latency_s": time.monotonic() - started,
            },
        )


def load_exemplars(path: str | Path, count: int = 3) -> list[tuple[str, str]]:
    """First `count` (x, y) pairs of a line-delimited exemplar file."""
    from .types import read_jsonl

    out = []
    for _, rec in read_jsonl(path):
        out.append((rec["x"], rec["y"]))
        if len(out) >= count:
            break
    return out
