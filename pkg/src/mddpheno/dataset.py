"""Weak-label dataset construction: corpus-wide labeling, class balancing,
train/validation splitting, and JSONL dataset I/O.

Dataset files are JSONL records {sentence_id, doc_id, text, label, source}
with a companion "<path>.meta.json" carrying provenance (ruleset hash,
seeds, counts, distribution).  This file pair is the contract every
downstream trainer consumes.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .corpus import Corpus, segment_sentences
from .errors import ValidationError
from .rules import CLASS_ORDER, CompiledRuleSet, Label, label_sentence

WEAK = "weak"
GOLD = "gold"

MDD_LABELS = (Label.POSITIVE, Label.POSSIBLE, Label.NEGATED)


@dataclass(frozen=True)
class LabeledSentence:
    sentence_id: str
    doc_id: str
    text: str
    label: Label
    source: str  # weak | gold

    def __post_init__(self):
        if self.source not in (WEAK, GOLD):
            raise ValidationError(f"label source must be weak or gold, got {self.source!r}")


@dataclass(frozen=True)
class LabeledSet:
    """Ordered labeled sentences plus provenance metadata."""

    sentences: tuple[LabeledSentence, ...]
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "sentences", tuple(self.sentences))
        seen = set()
        for s in self.sentences:
            if s.sentence_id in seen:
                raise ValidationError(f"duplicate sentence_id {s.sentence_id!r}")
            seen.add(s.sentence_id)

    def __len__(self):
        return len(self.sentences)

    def __iter__(self):
        return iter(self.sentences)

    def counts(self) -> dict[Label, int]:
        counts = {label: 0 for label in CLASS_ORDER}
        for s in self.sentences:
            counts[s.label] += 1
        return counts


@dataclass(frozen=True)
class ClassDistribution:
    counts: dict[Label, int]
    percentages: dict[Label, float]  # one decimal
    total: int


def weak_label_corpus(
    corpus: Corpus, rules: CompiledRuleSet, source_path: str | None = None
) -> LabeledSet:
    """Segment and rule-label every document; order is document order then
    sentence index."""
    sentences = []
    for doc in corpus:
        for sent in segment_sentences(doc):
            sentences.append(label_sentence(sent, rules))
    metadata = {
        "ruleset_hash": rules.fingerprint(),
        "source_corpus": source_path,
        "documents": len(corpus),
    }
    return LabeledSet(sentences=tuple(sentences), metadata=metadata)


def balance_unknown(labeled: LabeledSet, seed: int) -> LabeledSet:
    """Down-sample unknowns to the MDD-related sentence count.

    Keeps every non-unknown sentence, samples unknowns uniformly without
    replacement, and preserves the original relative order.
    """
    unknown_idx = [i for i, s in enumerate(labeled) if s.label is Label.UNKNOWN]
    n_mdd = len(labeled) - len(unknown_idx)
    target = min(len(unknown_idx), n_mdd)

    metadata = dict(labeled.metadata)
    metadata["balance_seed"] = seed
    metadata["unknown_before_balance"] = len(unknown_idx)
    metadata["unknown_after_balance"] = target

    if target == len(unknown_idx):
        return LabeledSet(sentences=labeled.sentences, metadata=metadata)

    rng = np.random.default_rng(seed)
    chosen = rng.choice(len(unknown_idx), size=target, replace=False)
    keep = set(unknown_idx[i] for i in chosen)
    sentences = tuple(
        s for i, s in enumerate(labeled) if s.label is not Label.UNKNOWN or i in keep
    )
    return LabeledSet(sentences=sentences, metadata=metadata)


def split_train_validation(
    labeled: LabeledSet, train_fraction: float = 0.99, seed: int = 0
) -> tuple[LabeledSet, LabeledSet]:
    """Stratified split into disjoint train/validation sets.

    Per class the validation share is round(count * (1 - fraction)),
    half-up, at least 1 when the class has >= 2 members; classes with a
    single member go entirely to train with a warning.
    """
    if not (0.0 < train_fraction < 1.0):
        raise ValidationError(f"train_fraction must be in (0,1), got {train_fraction}")

    rng = np.random.default_rng(seed)
    val_indices: set[int] = set()
    for label in CLASS_ORDER:
        idx = [i for i, s in enumerate(labeled) if s.label is label]
        n = len(idx)
        if n == 0:
            continue
        if n < 2:
            warnings.warn(
                f"class {label.value!r} has {n} member(s); keeping all in train",
                stacklevel=2,
            )
            continue
        n_val = max(1, math.floor((1.0 - train_fraction) * n + 0.5))
        n_val = min(n_val, n - 1)
        order = rng.permutation(n)
        val_indices.update(idx[j] for j in order[:n_val])

    base = dict(labeled.metadata)
    base["split_seed"] = seed
    base["train_fraction"] = train_fraction
    train = tuple(s for i, s in enumerate(labeled) if i not in val_indices)
    valid = tuple(s for i, s in enumerate(labeled) if i in val_indices)
    return (
        LabeledSet(sentences=train, metadata={**base, "split_part": "train"}),
        LabeledSet(sentences=valid, metadata={**base, "split_part": "validation"}),
    )


def _round1(x: float) -> float:
    return math.floor(x * 10.0 + 0.5) / 10.0


def class_distribution(labeled: LabeledSet) -> ClassDistribution:
    """Exact per-class counts with percentages at one decimal."""
    counts = labeled.counts()
    total = len(labeled)
    percentages = {
        label: _round1(100.0 * counts[label] / total) if total else 0.0
        for label in CLASS_ORDER
    }
    return ClassDistribution(counts=counts, percentages=percentages, total=total)


def relabel_source(labeled: LabeledSet, source: str) -> LabeledSet:
    """Copy of the set with every sentence's source replaced."""
    return LabeledSet(
        sentences=tuple(replace(s, source=source) for s in labeled),
        metadata=dict(labeled.metadata),
    )


def write_dataset(labeled: LabeledSet, path) -> None:
    """Write dataset JSONL plus the companion .meta.json file."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for s in labeled:
            record = {
                "sentence_id": s.sentence_id,
                "doc_id": s.doc_id,
                "text": s.text,
                "label": s.label.value,
                "source": s.source,
            }
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")
    dist = class_distribution(labeled)
    meta = dict(labeled.metadata)
    meta["sentence_count"] = len(labeled)
    meta["counts"] = {label.value: dist.counts[label] for label in CLASS_ORDER}
    meta["percentages"] = {label.value: dist.percentages[label] for label in CLASS_ORDER}
    with open(str(path) + ".meta.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_dataset(path) -> LabeledSet:
    """Read a dataset JSONL file (metadata file is optional)."""
    sentences = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{path}: malformed JSON on line {lineno}: {exc}") from exc
            try:
                sentences.append(
                    LabeledSentence(
                        sentence_id=obj["sentence_id"],
                        doc_id=obj["doc_id"],
                        text=obj["text"],
                        label=Label.from_string(obj["label"]),
                        source=obj["source"],
                    )
                )
            except (KeyError, TypeError) as exc:
                raise ValidationError(f"{path}: bad record on line {lineno}: {exc}") from exc
    metadata = {}
    meta_path = str(path) + ".meta.json"
    try:
        with open(meta_path, encoding="utf-8") as fh:
            metadata = json.load(fh)
    except FileNotFoundError:
        pass
    return LabeledSet(sentences=tuple(sentences), metadata=metadata)
