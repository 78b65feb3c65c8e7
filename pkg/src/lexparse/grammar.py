"""Synthetic (NL, LTL, lexicon) triple generation from a weighted CFG.

The grammar ships as a JSON data file: each record is one production
alternative with a formal right-hand side and a slot-aligned NL template.
RHS tokens come in three kinds:

    "<name:lbl>"  nonterminal expansion site; repeating a label within one
                  rule reuses the first expansion (shared subexpressions,
                  e.g. the x in  x >= u1 AND x <= u2)
    "$pool:lbl"   pool-backed preterminal ($verb, $noun, $variable,
                  $getter, $bound); open pools emit lexicon entries
    anything else a literal terminal of the formal language

NL templates use "{lbl}" for a site's NL yield and "{v:a}" for "the phrase
of the pool item sampled at v, with its argument placeholder A replaced by
the NL of site a".

Expansion is a pure function of (grammar, seed).  A recursive-descent
validator accepts exactly the strings derivable from the start symbol,
modulo a configurable surface-alias table (e.g. ALWAYS for G).
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass, field
from pathlib import Path

from .types import Domain, GenerationError, LexiconEntry, Source

DEFAULT_GRAMMAR_PATH = Path(__file__).parent / "data" / "ltl_grammar.json"

_SITE_RE = re.compile(r"^<(\w+):(\w+)>$")
_POOL_RE = re.compile(r"^\$(\w+):(\w+)$")
_SLOT_RE = re.compile(r"\{(\w+)(?::(\w+))?\}")
_ARG_RE = re.compile(r"\bA\b")
_LEX_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*|\d+|>=|<=|\S")


def construct_head(value: str) -> str:
    """'is_regular(A)' -> 'is_regular'; plain values pass through."""
    return value.split("(", 1)[0] if "(" in value else value


@dataclass(frozen=True)
class PoolItem:
    value: str
    phrase: str

    @property
    def head(self) -> str:
        return construct_head(self.value)


@dataclass
class Pool:
    name: str
    open_class: bool
    items: list[PoolItem]


@dataclass
class ProductionRule:
    id: int
    lhs: str
    rhs: list[str]
    nl_template: str
    weight: float


@dataclass
class Grammar:
    start: str
    rules: list[ProductionRule]
    pools: dict[str, Pool]
    max_depth: int = 12
    aliases: dict[str, str] = field(default_factory=dict)
    bound_range: tuple[int, int] = (0, 100)
    domain: Domain = Domain.LTL

    def __post_init__(self):
        self.by_lhs: dict[str, list[ProductionRule]] = {}
        for rule in self.rules:
            self.by_lhs.setdefault(rule.lhs, []).append(rule)
        self.check()

    def check(self) -> None:
        """Grammar invariants: closed nonterminals, slot/site alignment."""
        for rule in self.rules:
            if not (rule.weight > 0):
                raise GenerationError(f"rule {rule.id}: weight must be positive")
            labels = set()
            for tok in rule.rhs:
                if m := _SITE_RE.match(tok):
                    name, lbl = m.groups()
                    if name not in self.by_lhs:
                        raise GenerationError(
                            f"rule {rule.id}: nonterminal <{name}> has no productions"
                        )
                    labels.add(lbl)
                elif m := _POOL_RE.match(tok):
                    pool, lbl = m.groups()
                    if pool != "bound" and pool not in self.pools:
                        raise GenerationError(f"rule {rule.id}: unknown pool ${pool}")
                    labels.add(lbl)
            slots = set()
            for m in _SLOT_RE.finditer(rule.nl_template):
                slots.add(m.group(1))
                if m.group(2):
                    slots.add(m.group(2))
            if slots != labels:
                raise GenerationError(
                    f"rule {rule.id}: template slots {sorted(slots)} do not match "
                    f"rhs sites {sorted(labels)}"
                )

    @classmethod
    def load(cls, path: str | Path = DEFAULT_GRAMMAR_PATH) -> "Grammar":
        path = Path(path)
        raw = json.loads(path.read_text(encoding="utf-8"))
        pools_raw = raw.get("pools")
        if pools_raw is None and "pools_file" in raw:
            pools_raw = json.loads(
                (path.parent / raw["pools_file"]).read_text(encoding="utf-8")
            )
        pools = {
            name: Pool(
                name,
                bool(p.get("open", False)),
                [PoolItem(i["value"], i["phrase"]) for i in p["items"]],
            )
            for name, p in (pools_raw or {}).items()
        }
        rules = [
            ProductionRule(
                id=int(r["id"]),
                lhs=r["lhs"],
                rhs=list(r["rhs"]),
                nl_template=r["template"],
                weight=float(r.get("weight", 1.0)),
            )
            for r in raw["rules"]
        ]
        return cls(
            start=raw["start"],
            rules=rules,
            pools=pools,
            max_depth=int(raw.get("max_depth", 12)),
            aliases=dict(raw.get("aliases", {})),
            bound_range=tuple(raw.get("bound_range", [0, 100])),
        )

    def open_entries(self) -> list[LexiconEntry]:
        """All lexicon entries emittable by the open pool classes."""
        out = []
        for pool in self.pools.values():
            if pool.open_class:
                out.extend(
                    LexiconEntry(item.phrase, item.value, self.domain, Source.GOLD)
                    for item in pool.items
                )
        return out


@dataclass
class SyntheticInstance:
    x: str
    y: str
    k_gold: list[LexiconEntry]
    derivation: list[int]
    seed: int
    domain: Domain = Domain.LTL

    def to_dict(self) -> dict:
        return {
            "x": self.x,
            "y": self.y,
            "k_gold": [e.to_dict() for e in self.k_gold],
            "derivation": self.derivation,
            "seed": self.seed,
            "domain": self.domain.value,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SyntheticInstance":
        return cls(
            x=d["x"],
            y=d["y"],
            k_gold=[LexiconEntry.from_dict(e) for e in d["k_gold"]],
            derivation=list(d["derivation"]),
            seed=int(d["seed"]),
            domain=Domain(d.get("domain", "LTL")),
        )


@dataclass
class _SiteResult:
    tokens: list[str]
    nl: str
    item: PoolItem | None = None


def _render_formal(tokens: list[str]) -> str:
    s = " ".join(tokens)
    s = re.sub(r"(\w) \(", r"\1(", s)           # tight function application
    s = re.sub(r"\(\s*([^()\s]+)\s*\)", r"(\1)", s)  # single-token parens
    return s


def expand(grammar: Grammar, seed: int) -> SyntheticInstance:
    """Derive one instance starting at the grammar's start symbol.

    Deterministic for a fixed (grammar, seed).  Raises GenerationError
    naming the runaway nonterminal when max_depth is exceeded.
    """
    rng = random.Random(seed)
    entries: list[LexiconEntry] = []
    seen_entry_ids: set[tuple] = set()
    derivation: list[int] = []

    def emit_entry(item: PoolItem):
        ident = (item.phrase.casefold(), item.value)
        if ident not in seen_entry_ids:
            seen_entry_ids.add(ident)
            entries.append(
                LexiconEntry(item.phrase, item.value, grammar.domain, Source.GOLD)
            )

    def expand_nt(nt: str, depth: int) -> _SiteResult:
        if depth > grammar.max_depth:
            raise GenerationError(
                f"max derivation depth {grammar.max_depth} exceeded expanding <{nt}>"
            )
        rules = grammar.by_lhs[nt]
        rule = rng.choices(rules, weights=[r.weight for r in rules], k=1)[0]
        derivation.append(rule.id)
        sites: dict[str, _SiteResult] = {}
        tokens: list[str] = []
        for tok in rule.rhs:
            if m := _SITE_RE.match(tok):
                name, lbl = m.groups()
                if lbl not in sites:
                    sites[lbl] = expand_nt(name, depth + 1)
                tokens.extend(sites[lbl].tokens)
            elif m := _POOL_RE.match(tok):
                pool_name, lbl = m.groups()
                if lbl not in sites:
                    if pool_name == "bound":
                        lo, hi = grammar.bound_range
                        n = rng.randint(lo, hi)
                        sites[lbl] = _SiteResult([str(n)], str(n))
                    else:
                        pool = grammar.pools[pool_name]
                        item = rng.choice(pool.items)
                        if pool.open_class:
                            emit_entry(item)
                        sites[lbl] = _SiteResult([item.head], item.phrase, item)
                tokens.extend(sites[lbl].tokens)
            else:
                tokens.append(tok)

        def fill(m: re.Match) -> str:
            lbl, arg = m.group(1), m.group(2)
            if arg is None:
                return sites[lbl].nl
            item = sites[lbl].item
            if item is None:
                raise GenerationError(
                    f"rule {rule.id}: slot {{{lbl}:{arg}}} needs a pool site at {lbl}"
                )
            return _ARG_RE.sub(sites[arg].nl, item.phrase)

        nl = _SLOT_RE.sub(fill, rule.nl_template)
        return _SiteResult(tokens, nl)

    top = expand_nt(grammar.start, 1)
    sentence = top.nl.strip()
    sentence = sentence[0].upper() + sentence[1:] + "."
    return SyntheticInstance(
        x=sentence,
        y=_render_formal(top.tokens),
        k_gold=entries,
        derivation=derivation,
        seed=seed,
        domain=grammar.domain,
    )


def generate_dataset(
    grammar: Grammar, n: int, seed: int, distractor_count: int = 0
) -> list[SyntheticInstance]:
    """n instances with per-instance seeds seed+i, plus injected distractors.

    Distractors are sampled without replacement from the open-class pool,
    never colliding with the instance's genuine entries, and tagged
    source=DISTRACTOR.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    pool_entries = grammar.open_entries()
    out = []
    for i in range(n):
        inst = expand(grammar, seed + i)
        if distractor_count:
            genuine_values = {e.value for e in inst.k_gold}
            candidates = [e for e in pool_entries if e.value not in genuine_values]
            if distractor_count > len(candidates):
                raise GenerationError(
                    f"distractor_count {distractor_count} exceeds available pool "
                    f"({len(candidates)} after excluding genuine entries)"
                )
            rng = random.Random(f"{seed}:{i}:distractor")
            picked = rng.sample(candidates, distractor_count)
            inst.k_gold.extend(
                LexiconEntry(e.key, e.value, e.domain, Source.DISTRACTOR)
                for e in picked
            )
        out.append(inst)
    return out


@dataclass
class ValidationResult:
    accepted: bool
    derivation: list[int] | None = None
    fail_pos: int | None = None
    fail_token: str | None = None

    def __bool__(self) -> bool:
        return self.accepted


def _lex(text: str, aliases: dict[str, str]) -> tuple[list[str], list[int]]:
    tokens, offsets = [], []
    for m in _LEX_RE.finditer(text):
        tok = aliases.get(m.group(0), m.group(0))
        tokens.append(tok)
        offsets.append(m.start())
    return tokens, offsets


def validate(y: str, grammar: Grammar) -> ValidationResult:
    """Accept exactly the strings derivable from the start symbol.

    Spacing-insensitive: the input is lexed the same way grammar terminals
    are.  Surface aliases (e.g. ALWAYS for G) are canonicalized first.  On
    acceptance returns one derivation; on rejection, the character offset
    of the furthest token the parser could not get past.
    """
    tokens, offsets = _lex(y, grammar.aliases)
    pool_heads = {
        name: {item.head for item in pool.items}
        for name, pool in grammar.pools.items()
    }
    max_fail = 0

    def parse_nt(nt: str, pos: int):
        for rule in grammar.by_lhs[nt]:
            yield from match_rule(rule, pos)

    def match_rule(rule: ProductionRule, pos: int):
        nonlocal max_fail

        def rec(i: int, p: int, sites: dict[str, list[str]], deriv: list[int]):
            nonlocal max_fail
            if i == len(rule.rhs):
                yield p, deriv
                return
            tok = rule.rhs[i]
            if m := _SITE_RE.match(tok):
                name, lbl = m.groups()
                if lbl in sites:
                    span = sites[lbl]
                    if tokens[p : p + len(span)] == span:
                        yield from rec(i + 1, p + len(span), sites, deriv)
                    else:
                        max_fail = max(max_fail, p)
                else:
                    for end, d in parse_nt(name, p):
                        yield from rec(
                            i + 1, end, {**sites, lbl: tokens[p:end]}, deriv + d
                        )
            elif m := _POOL_RE.match(tok):
                pool_name, lbl = m.groups()
                if lbl in sites:
                    span = sites[lbl]
                    if tokens[p : p + len(span)] == span:
                        yield from rec(i + 1, p + len(span), sites, deriv)
                    else:
                        max_fail = max(max_fail, p)
                    return
                if p >= len(tokens):
                    max_fail = max(max_fail, p)
                    return
                cur = tokens[p]
                ok = (
                    cur.isdigit()
                    if pool_name == "bound"
                    else cur in pool_heads.get(pool_name, set())
                )
                if ok:
                    yield from rec(i + 1, p + 1, {**sites, lbl: [cur]}, deriv)
                else:
                    max_fail = max(max_fail, p)
            else:
                if p < len(tokens) and tokens[p] == tok:
                    yield from rec(i + 1, p + 1, sites, deriv)
                else:
                    max_fail = max(max_fail, p)

        yield from rec(0, pos, {}, [rule.id])

    for end, deriv in parse_nt(grammar.start, 0):
        if end == len(tokens):
            return ValidationResult(True, derivation=deriv)
        max_fail = max(max_fail, end)
    pos = offsets[max_fail] if max_fail < len(tokens) else len(y)
    tok = tokens[max_fail] if max_fail < len(tokens) else None
    return ValidationResult(False, fail_pos=pos, fail_token=tok)
