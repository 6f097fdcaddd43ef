import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mddpheno.corpus import (
    Corpus,
    Document,
    read_corpus,
    segment_sentences,
    write_corpus,
)
from mddpheno.errors import ValidationError

from conftest import make_document


class TestSegmentation:
    def test_two_clauses(self):
        doc = make_document("Patient has hx of dysthymia. There is no evidence of depression.")
        sents = segment_sentences(doc)
        assert [s.text for s in sents] == [
            "Patient has hx of dysthymia.",
            "There is no evidence of depression.",
        ]

    def test_empty_text(self):
        assert segment_sentences(make_document("")) == []
        assert segment_sentences(make_document("   \n ")) == []

    def test_abbreviation_suppresses_split(self):
        sents = segment_sentences(make_document("Dr. Smith saw the patient."))
        assert len(sents) == 1
        assert sents[0].text == "Dr. Smith saw the patient."

    def test_all_listed_abbreviations(self):
        text = "Seen by Dr. Jones and Mr. Roe, e.g. at intake, i.e. early, with hx. of pain vs. strain from Mrs. Doe and Ms. Poe."
        assert len(segment_sentences(make_document(text))) == 1

    def test_decimal_number_not_split(self):
        sents = segment_sentences(make_document("Temp was 98.6 today. Pulse 72."))
        assert [s.text for s in sents] == ["Temp was 98.6 today.", "Pulse 72."]

    def test_blank_line_splits(self):
        sents = segment_sentences(make_document("First line without period\n\nSecond paragraph"))
        assert [s.text for s in sents] == ["First line without period", "Second paragraph"]

    def test_single_newline_does_not_split(self):
        sents = segment_sentences(make_document("wrapped\nline here."))
        assert [s.text for s in sents] == ["wrapped\nline here."]

    def test_question_and_bang(self):
        sents = segment_sentences(make_document("Any concerns? None noted! Done."))
        assert [s.text for s in sents] == ["Any concerns?", "None noted!", "Done."]

    def test_sentence_ids_stable_and_indexed(self):
        doc = make_document("One. Two. Three.", doc_id="abc")
        first = segment_sentences(doc)
        second = segment_sentences(doc)
        assert [s.sentence_id for s in first] == ["abc#0", "abc#1", "abc#2"]
        assert first == second

    def test_offsets_slice_to_text(self):
        doc = make_document("  Padded sentence.  And another?  ")
        for s in segment_sentences(doc):
            raw = doc.text.encode("utf-8")[s.start : s.end].decode("utf-8")
            assert raw == s.text

    def test_byte_offsets_non_ascii(self):
        doc = make_document("Café visit noted. Second sentence.")
        sents = segment_sentences(doc)
        raw = doc.text.encode("utf-8")
        assert len(sents) == 2
        for s in sents:
            assert raw[s.start : s.end].decode("utf-8") == s.text

    @given(st.text(alphabet=st.characters(blacklist_categories=("Cs",)), max_size=300))
    @settings(max_examples=200, deadline=None)
    def test_covers_all_non_whitespace(self, text):
        doc = Document(doc_id="h", text=text)
        sents = segment_sentences(doc)
        joined = "".join(s.text for s in sents)
        stripped = "".join(text.split())
        assert "".join(joined.split()) == stripped
        # ordered, non-overlapping
        for a, b in zip(sents, sents[1:]):
            assert a.end <= b.start


class TestCorpusIO:
    def _docs(self):
        return Corpus(
            documents=(
                Document(doc_id="a", text="First doc. Second sentence."),
                Document(doc_id="b", text="Text with\nnewline и unicode.", patient_id="p1"),
            )
        )

    def test_round_trip(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        original = self._docs()
        write_corpus(original, path)
        assert read_corpus(path) == original

    def test_three_valid_lines(self, tmp_path):
        path = tmp_path / "c.jsonl"
        lines = [json.dumps({"doc_id": f"d{i}", "text": "x"}) for i in range(3)]
        path.write_text("\n".join(lines) + "\n")
        assert len(read_corpus(path)) == 3

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.jsonl"
        path.write_text("")
        assert len(read_corpus(path)) == 0

    def test_duplicate_doc_id_names_line(self, tmp_path):
        path = tmp_path / "dup.jsonl"
        rec = json.dumps({"doc_id": "same", "text": "x"})
        path.write_text(rec + "\n" + rec + "\n")
        with pytest.raises(ValidationError, match=r"same.*line 2|line 2.*same"):
            read_corpus(path)

    def test_malformed_line_names_line(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"doc_id": "a", "text": "x"}\nnot json\n')
        with pytest.raises(ValidationError, match="line 2"):
            read_corpus(path)

    def test_unwritable_path_raises_oserror(self, tmp_path):
        with pytest.raises(OSError):
            write_corpus(self._docs(), tmp_path / "missing-dir" / "c.jsonl")

    @given(
        st.lists(
            st.text(alphabet=st.characters(blacklist_categories=("Cs",)), max_size=80),
            min_size=1,
            max_size=5,
        )
    )
    @settings(max_examples=50, deadline=None)
    def test_round_trip_arbitrary_text(self, texts):
        import tempfile
        from pathlib import Path

        docs = Corpus(
            documents=tuple(
                Document(doc_id=f"d{i}", text=t) for i, t in enumerate(texts)
            )
        )
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "c.jsonl"
            write_corpus(docs, path)
            assert read_corpus(path) == docs

    def test_duplicate_in_constructor(self):
        with pytest.raises(ValidationError, match="dup"):
            Corpus(documents=(Document("dup", "a"), Document("dup", "b")))
