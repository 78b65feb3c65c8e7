import math
from dataclasses import dataclass, field

import pytest
from hypothesis import given
from hypothesis import strategies as st

from lexparse.metrics import (
    MatchRule,
    Smoothing,
    bleu,
    build_report,
    construct_of,
    effort_cost,
    extract_ovcs,
    formal_tokens,
    matcher_for,
    micro_prf,
    ovc_prf,
    reduction,
    value_matches,
)
from lexparse.types import Domain, LexiconEntry


@dataclass
class Rec:
    y: str = ""
    y_hat: str = ""
    ovc_gold: list = field(default_factory=list)
    ovc_pred: list = field(default_factory=list)


class TestMatchers:
    def test_default_rules_per_domain(self):
        assert matcher_for(Domain.LTL).match_rule is MatchRule.CALL_HEAD
        assert matcher_for(Domain.CMD).match_rule is MatchRule.WORD_BOUNDARY
        assert matcher_for(Domain.CODE).match_rule is MatchRule.WORD_BOUNDARY
        assert matcher_for(Domain.OTHER).match_rule is MatchRule.SUBSTRING

    def test_construct_identity(self):
        ltl = matcher_for(Domain.LTL)
        assert construct_of("is_regular(A)", ltl) == "is_regular"
        assert construct_of("cfh", ltl) == "cfh"
        assert construct_of("  spaced   value ", matcher_for(Domain.OTHER)) == "spaced value"

    def test_call_head_matches_any_argument(self):
        ltl = matcher_for(Domain.LTL)
        assert value_matches("G( is_regular(cfh) )", "is_regular(A)", ltl)
        assert value_matches("is_regular (x)", "is_regular(A)", ltl)
        assert not value_matches("not_is_regular(x)", "is_regular(A)", ltl)

    def test_word_boundary(self):
        cmd = matcher_for(Domain.CMD)
        assert value_matches("rm -rf /tmp/x", "rm", cmd)
        assert not value_matches("ipcrm -q 5", "rm", cmd)

    def test_substring(self):
        other = matcher_for(Domain.OTHER)
        assert value_matches("xfloaty", "float", other)

    def test_extract_ovcs(self):
        ltl = matcher_for(Domain.LTL)
        lex = [
            LexiconEntry("a", "is_regular(A)"),
            LexiconEntry("b", "cfh"),
            LexiconEntry("c", "exists(A)"),
        ]
        got = extract_ovcs("G( is_regular(cfh) )", lex, ltl)
        assert got == {"is_regular", "cfh"}


class TestBleu:
    def test_identity_is_hundred(self):
        hyps = ["G( is_regular(cfh) )", "rm -rf x"]
        assert bleu(hyps, list(hyps)) == pytest.approx(100.0)

    def test_known_value_bigram(self):
        # hyp "a b c" vs ref "a b c d": p1=1, p2=1, bp=exp(1-4/3)
        got = bleu(["a b c"], ["a b c d"], max_n=2)
        assert got == pytest.approx(100.0 * math.exp(-1.0 / 3.0), abs=1e-3)

    def test_zero_overlap_unsmoothed(self):
        assert bleu(["a b"], ["c d"]) == 0.0

    def test_epsilon_smoothing_positive(self):
        got = bleu(["a b"], ["a c"], max_n=2, smoothing=Smoothing.ADD_EPS)
        assert 0.0 < got < 100.0

    def test_corpus_level_brevity(self):
        # pooled lengths: hyp 2+4=6, ref 4+4=8 -> bp = exp(1 - 8/6)
        got = bleu(["a b", "e f g h"], ["a b c d", "e f g h"], max_n=1)
        assert got == pytest.approx(100.0 * math.exp(1 - 8 / 6) * (6 / 6), abs=1e-3)

    def test_formal_tokenizer_splits_punctuation(self):
        assert formal_tokens("G(is_regular(cfh))") == [
            "G", "(", "is_regular", "(", "cfh", ")", ")",
        ]

    def test_input_validation(self):
        with pytest.raises(ValueError):
            bleu([], [])
        with pytest.raises(ValueError):
            bleu(["a"], ["a", "b"])
        with pytest.raises(ValueError):
            bleu(["a"], ["a"], max_n=0)

    @given(
        st.lists(
            st.text(alphabet="ab c", min_size=1).filter(str.strip), min_size=1, max_size=5
        )
    )
    def test_bounded_and_reflexive(self, sentences):
        score = bleu(sentences, list(sentences))
        assert 0.0 <= score <= 100.0 + 1e-9


class TestPrf:
    def test_standard_case(self):
        r = ovc_prf({"a", "b", "x"}, {"a", "b", "c", "d"})
        assert r.precision == pytest.approx(2 / 3)
        assert r.recall == pytest.approx(0.5)
        assert r.f1 == pytest.approx(2 * (2 / 3) * 0.5 / (2 / 3 + 0.5))
        assert not r.vacuous_gold

    def test_both_empty_vacuous(self):
        r = ovc_prf(set(), set())
        assert tuple(r) == (1.0, 1.0, 1.0)
        assert r.vacuous_gold

    def test_spurious_on_empty_gold(self):
        r = ovc_prf({"a"}, set())
        assert tuple(r) == (0.0, 1.0, 0.0)
        assert r.vacuous_gold

    def test_empty_pred_on_nonempty_gold(self):
        assert tuple(ovc_prf(set(), {"a"})) == (0.0, 0.0, 0.0)

    def test_micro_pools_counts(self):
        r = micro_prf([({"a"}, {"a", "b"}), ({"c", "x"}, {"c"})])
        # tp=2, fp=1, fn=1
        assert r.precision == pytest.approx(2 / 3)
        assert r.recall == pytest.approx(2 / 3)

    def test_micro_all_vacuous(self):
        assert tuple(micro_prf([(set(), set())])) == (1.0, 1.0, 1.0)


class TestCost:
    def test_reading_and_error_units(self):
        records = [
            Rec(ovc_gold=["a", "b"], ovc_pred=["a"]),
            Rec(ovc_gold=["c"], ovc_pred=["c"]),
            Rec(ovc_gold=[], ovc_pred=["spurious"]),
        ]
        assert effort_cost(records) == (3, 1, 4)

    def test_reduction(self):
        assert reduction(280, 212) == pytest.approx(100 * 68 / 280)
        with pytest.raises(ValueError):
            reduction(0, 1)

    def test_negative_reduction_possible(self):
        assert reduction(100, 120) == pytest.approx(-20.0)


class TestReport:
    def test_reuse_accounting(self):
        records = [
            Rec(y="a", y_hat="a", ovc_gold=["f"], ovc_pred=[]),
            Rec(y="a", y_hat="a", ovc_gold=["f", "g"], ovc_pred=["f"]),
            Rec(y="a", y_hat="a", ovc_gold=["f"], ovc_pred=["f"]),
        ]
        rep = build_report(records)
        reuse = rep.reuse
        assert reuse["unique_constructs"] == 2
        assert reuse["total_occurrences"] == 4
        assert reuse["reuse_fraction"] == pytest.approx(0.5)
        assert reuse["first_occurrences"] == 2
        assert reuse["first_recall"] == 0.0
        assert reuse["repeat_occurrences"] == 2
        assert reuse["repeat_recall"] == 1.0
        assert reuse["cumulative_reuse_curve"] == [0.0, 1 / 3, 0.5]

    def test_costs_and_prf_wired_through(self):
        records = [Rec(y="f(a, b)", y_hat="f(a, b)", ovc_gold=["a"], ovc_pred=["a"])]
        rep = build_report(records)
        assert rep.corpus_bleu == pytest.approx(100.0)
        assert rep.ovc_f1 == 1.0
        assert (rep.reading_cost, rep.error_cost, rep.total_cost) == (1, 0, 1)

    def test_empty_records_rejected(self):
        with pytest.raises(ValueError):
            build_report([])
