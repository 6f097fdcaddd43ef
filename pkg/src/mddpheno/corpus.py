"""Clinical note corpus model: documents, sentence segmentation, JSONL I/O.

Sentence offsets are byte offsets into the UTF-8 encoding of the document
text, so the slicing contract is unambiguous regardless of the consumer's
string representation.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

from .errors import ValidationError

# Periods inside these never end a sentence.  Clinical notes lean on a
# small set of title/shorthand abbreviations; anything fancier belongs in
# a real segmenter.
_ABBREVIATIONS = ("dr.", "mr.", "mrs.", "ms.", "hx.", "e.g.", "i.e.", "vs.")

_ABBREV_RE = re.compile(
    r"(?<![A-Za-z])(?:" + "|".join(re.escape(a) for a in _ABBREVIATIONS) + r")",
    re.IGNORECASE,
)
_DECIMAL_DOT_RE = re.compile(r"(?<=\d)\.(?=\d)")
_BLANK_LINE_RE = re.compile(r"\n[ \t\r]*\n")
_TERMINATORS = ".!?"


@dataclass(frozen=True)
class Document:
    """One clinical note."""

    doc_id: str
    text: str
    patient_id: str | None = None

    def __post_init__(self):
        if not self.doc_id:
            raise ValidationError("document requires a non-empty doc_id")


@dataclass(frozen=True)
class Sentence:
    """A segmented sentence; start/end are byte offsets into the document."""

    sentence_id: str
    doc_id: str
    start: int
    end: int
    text: str

    def __post_init__(self):
        if not (0 <= self.start < self.end):
            raise ValidationError(
                f"sentence {self.sentence_id}: invalid span [{self.start},{self.end})"
            )


@dataclass(frozen=True)
class Corpus:
    """Ordered collection of documents with unique ids."""

    documents: tuple[Document, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "documents", tuple(self.documents))
        seen = set()
        for doc in self.documents:
            if doc.doc_id in seen:
                raise ValidationError(f"duplicate doc_id {doc.doc_id!r}")
            seen.add(doc.doc_id)

    def __len__(self):
        return len(self.documents)

    def __iter__(self):
        return iter(self.documents)


def _protected_dots(text: str) -> set[int]:
    """Indices of '.' characters that must not end a sentence."""
    protected = set()
    for m in _ABBREV_RE.finditer(text):
        for i in range(m.start(), m.end()):
            if text[i] == ".":
                protected.add(i)
    for m in _DECIMAL_DOT_RE.finditer(text):
        protected.add(m.start())
    return protected


def _byte_offsets(text: str) -> list[int] | None:
    """Cumulative UTF-8 byte offset per char index, or None for ASCII text."""
    if text.isascii():
        return None
    offsets = [0]
    total = 0
    for ch in text:
        total += len(ch.encode("utf-8"))
        offsets.append(total)
    return offsets


def segment_sentences(doc: Document) -> list[Sentence]:
    """Split a document into ordered, non-overlapping sentences.

    Boundaries: runs of '.', '!', '?' (except after known abbreviations and
    inside decimal numbers) and blank lines.  Deterministic; whitespace-only
    input yields no sentences.
    """
    text = doc.text
    if not text or text.isspace():
        return []

    protected = _protected_dots(text)
    cuts = []
    n = len(text)
    i = 0
    while i < n:
        ch = text[i]
        if ch in _TERMINATORS and i not in protected:
            j = i + 1
            while j < n and text[j] in _TERMINATORS and j not in protected:
                j += 1
            cuts.append(j)
            i = j
        else:
            i += 1
    for m in _BLANK_LINE_RE.finditer(text):
        cuts.append(m.start())
    cuts = sorted(set(cuts))

    spans = []
    prev = 0
    for cut in cuts + [n]:
        if cut > prev:
            spans.append((prev, cut))
            prev = cut

    offsets = _byte_offsets(text)
    sentences = []
    for start, end in spans:
        while start < end and text[start].isspace():
            start += 1
        while end > start and text[end - 1].isspace():
            end -= 1
        if start == end:
            continue
        idx = len(sentences)
        if offsets is None:
            bstart, bend = start, end
        else:
            bstart, bend = offsets[start], offsets[end]
        sentences.append(
            Sentence(
                sentence_id=f"{doc.doc_id}#{idx}",
                doc_id=doc.doc_id,
                start=bstart,
                end=bend,
                text=text[start:end],
            )
        )
    return sentences


def read_corpus(path) -> Corpus:
    """Read a JSONL corpus file: one {doc_id, text[, patient_id]} per line."""
    documents = []
    seen: dict[str, int] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{path}: malformed JSON on line {lineno}: {exc}") from exc
            if not isinstance(record, dict):
                raise ValidationError(f"{path}: line {lineno} is not an object")
            extra = set(record) - {"doc_id", "text", "patient_id"}
            if extra:
                raise ValidationError(
                    f"{path}: line {lineno} has unexpected fields {sorted(extra)}"
                )
            doc_id = record.get("doc_id")
            text = record.get("text")
            if not isinstance(doc_id, str) or not doc_id:
                raise ValidationError(f"{path}: line {lineno} missing doc_id")
            if not isinstance(text, str):
                raise ValidationError(f"{path}: line {lineno} missing text")
            patient_id = record.get("patient_id")
            if patient_id is not None and not isinstance(patient_id, str):
                raise ValidationError(f"{path}: line {lineno} has non-string patient_id")
            if doc_id in seen:
                raise ValidationError(
                    f"{path}: duplicate doc_id {doc_id!r} on line {lineno}"
                    f" (first seen on line {seen[doc_id]})"
                )
            seen[doc_id] = lineno
            documents.append(Document(doc_id=doc_id, text=text, patient_id=patient_id))
    return Corpus(documents=tuple(documents))


def write_corpus(corpus: Corpus, path) -> None:
    """Write a corpus as JSONL (UTF-8, LF endings). Round-trips exactly."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for doc in corpus:
            record: dict = {"doc_id": doc.doc_id, "text": doc.text}
            if doc.patient_id is not None:
                record["patient_id"] = doc.patient_id
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")
