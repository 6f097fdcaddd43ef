import pytest

from mddpheno.corpus import Document, Sentence
from mddpheno.rules import load_ruleset


def make_sentence(text: str, doc_id: str = "t", idx: int = 0) -> Sentence:
    return Sentence(
        sentence_id=f"{doc_id}#{idx}",
        doc_id=doc_id,
        start=0,
        end=len(text.encode("utf-8")),
        text=text,
    )


def make_document(text: str, doc_id: str = "t") -> Document:
    return Document(doc_id=doc_id, text=text)


@pytest.fixture(scope="session")
def default_rules():
    return load_ruleset()
