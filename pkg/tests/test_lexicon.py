import pytest
from hypothesis import given
from hypothesis import strategies as st

from lexparse.lexicon import KnowledgeBase
from lexparse.types import (
    Domain,
    EntryValidationError,
    IdentityMode,
    LexiconEntry,
    LexiconLoadError,
    Source,
    normalize_text,
)


class TestLexiconEntry:
    def test_whitespace_normalized_on_construction(self):
        e = LexiconEntry("  the  current\tfilehandle ", " cfh ")
        assert e.key == "the current filehandle"
        assert e.value == "cfh"

    def test_original_case_kept_in_key(self):
        e = LexiconEntry("A Is Returned", "return(A)")
        assert e.key == "A Is Returned"

    @pytest.mark.parametrize("key,value", [("", "v"), ("k", ""), ("  ", "v"), ("k", " \t ")])
    def test_empty_field_rejected(self, key, value):
        with pytest.raises(EntryValidationError):
            LexiconEntry(key, value)

    def test_pair_identity_casefolds_key_only(self):
        a = LexiconEntry("The Handle", "cfh")
        b = LexiconEntry("the handle", "cfh")
        c = LexiconEntry("the handle", "CFH")
        assert a.identity(IdentityMode.PAIR) == b.identity(IdentityMode.PAIR)
        assert a.identity(IdentityMode.PAIR) != c.identity(IdentityMode.PAIR)

    def test_value_identity_ignores_key(self):
        a = LexiconEntry("one phrase", "cfh")
        b = LexiconEntry("another phrase", "cfh")
        assert a.identity(IdentityMode.VALUE) == b.identity(IdentityMode.VALUE)

    def test_dict_round_trip(self):
        e = LexiconEntry("k phrase", "val(A)", Domain.LTL, Source.EXPERT_UI, seq=3)
        assert LexiconEntry.from_dict(e.to_dict()) == e

    @given(st.text(min_size=1), st.text(min_size=1))
    def test_normalization_idempotent(self, key, value):
        try:
            e = LexiconEntry(key, value)
        except EntryValidationError:
            assert not normalize_text(key) or not normalize_text(value)
            return
        assert e.key == normalize_text(e.key)
        assert e.value == normalize_text(e.value)


class TestKnowledgeBase:
    def test_seq_strictly_increasing_from_zero(self):
        kb = KnowledgeBase()
        kb.add_entries([LexiconEntry(f"key {i}", f"v{i}") for i in range(5)])
        assert [e.seq for e in kb.entries] == [0, 1, 2, 3, 4]

    def test_duplicate_skipped_and_counted(self):
        kb = KnowledgeBase()
        assert kb.add_entries([LexiconEntry("a phrase", "v1")]) == 1
        assert kb.add_entries([LexiconEntry("A  Phrase", "v1")]) == 0
        assert len(kb) == 1

    def test_duplicates_within_one_batch(self):
        kb = KnowledgeBase()
        added = kb.add_entries(
            [LexiconEntry("p", "v"), LexiconEntry("p", "v"), LexiconEntry("q", "v")]
        )
        assert added == 2
        assert [e.seq for e in kb.entries] == [0, 1]

    def test_value_identity_mode_collapses_keys(self):
        kb = KnowledgeBase(IdentityMode.VALUE)
        kb.add_entries([LexiconEntry("p1", "v"), LexiconEntry("p2", "v")])
        assert len(kb) == 1

    def test_difference_preserves_order(self):
        kb = KnowledgeBase()
        kb.add_entries([LexiconEntry("a", "v1")])
        gold = [LexiconEntry("b", "v2"), LexiconEntry("a", "v1"), LexiconEntry("c", "v3")]
        assert [e.value for e in kb.difference(gold)] == ["v2", "v3"]

    def test_snapshot_is_isolated_copy(self):
        kb = KnowledgeBase()
        kb.add_entries([LexiconEntry("a", "v1")])
        snap = kb.snapshot()
        kb.add_entries([LexiconEntry("b", "v2")])
        assert len(snap) == 1

    def test_persist_load_round_trip(self, tmp_path):
        kb = KnowledgeBase(IdentityMode.VALUE)
        kb.add_entries([LexiconEntry(f"phrase {i}", f"v{i}", Domain.LTL) for i in range(4)])
        path = tmp_path / "kb.jsonl"
        kb.persist(path)
        loaded = KnowledgeBase.load(path)
        assert loaded.identity_mode is IdentityMode.VALUE
        assert loaded.entries == kb.entries

    def test_load_rejects_out_of_order_seq(self, tmp_path):
        path = tmp_path / "kb.jsonl"
        path.write_text(
            '{"_meta": {"identity_mode": "PAIR"}}\n'
            '{"key": "a", "value": "v1", "seq": 1}\n'
        )
        with pytest.raises(LexiconLoadError, match="seq 1 out of order"):
            KnowledgeBase.load(path)

    def test_load_rejects_duplicate_line(self, tmp_path):
        path = tmp_path / "kb.jsonl"
        path.write_text(
            '{"key": "a", "value": "v1", "seq": 0}\n'
            '{"key": "a", "value": "v1", "seq": 1}\n'
        )
        with pytest.raises(LexiconLoadError, match="duplicate"):
            KnowledgeBase.load(path)

    def test_load_reports_line_number_for_blank_field(self, tmp_path):
        path = tmp_path / "kb.jsonl"
        path.write_text(
            '{"key": "a", "value": "v1", "seq": 0}\n{"key": "  ", "value": "v2", "seq": 1}\n'
        )
        with pytest.raises(LexiconLoadError, match=":2:"):
            KnowledgeBase.load(path)

    def test_load_rejects_malformed_json(self, tmp_path):
        path = tmp_path / "kb.jsonl"
        path.write_text('{"key": "a", "value": "v1"}\nnot json\n')
        with pytest.raises(LexiconLoadError, match=":2:"):
            KnowledgeBase.load(path)

    @given(
        st.lists(
            st.tuples(
                st.text(alphabet="abc ", min_size=1).filter(str.strip),
                st.text(alphabet="xyz", min_size=1),
            ),
            max_size=30,
        )
    )
    def test_append_only_invariants(self, pairs):
        kb = KnowledgeBase()
        for key, value in pairs:
            before = kb.entries
            kb.add_entries([LexiconEntry(key, value)])
            after = kb.entries
            assert after[: len(before)] == before
        assert [e.seq for e in kb.entries] == list(range(len(kb)))
        idents = [e.identity(IdentityMode.PAIR) for e in kb.entries]
        assert len(idents) == len(set(idents))
