"""Synthetic corpus generation with planted gold labels.

Rule-consistent templates instantiate to sentences whose gold class equals
the rule engine's output; hard templates (adapted from real mislabeling
modes: instrument mentions, family history, "rule out ... etiologies")
carry a gold label the rules cannot reproduce, giving a tunable weak-label
noise knob.  Class quotas are allocated exactly (largest remainder), so
the realized mix matches the target up to integer rounding.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from importlib import resources
from itertools import product

import numpy as np

from .corpus import Corpus, Document, segment_sentences
from .dataset import GOLD, LabeledSentence, LabeledSet
from .errors import ValidationError
from .rules import CLASS_ORDER, CompiledRuleSet, Label, classify_assertion, find_concept_mentions

_SLOT_RE = re.compile(r"\{(keyword|negcue|posscue)(?:=([^}]*))?\}")

TRAIN_MIX = {
    Label.UNKNOWN: 0.50,
    Label.POSITIVE: 0.445,
    Label.POSSIBLE: 0.036,
    Label.NEGATED: 0.019,
}
# Test-style gold mix; renormalized from 99 / 0.825 / 0.087 / 0.066.
_raw_test = {
    Label.UNKNOWN: 0.99,
    Label.POSITIVE: 0.00825,
    Label.POSSIBLE: 0.00087,
    Label.NEGATED: 0.00066,
}
TEST_MIX = {k: v / sum(_raw_test.values()) for k, v in _raw_test.items()}


@dataclass(frozen=True)
class HardTemplate:
    text: str
    gold: Label


@dataclass(frozen=True)
class TemplateBank:
    templates: dict[Label, tuple[str, ...]]
    hard_templates: tuple[HardTemplate, ...]
    fillers: dict[str, tuple[str, ...]]  # keyword / negcue / posscue

    def fingerprint(self) -> str:
        payload = json.dumps(
            {
                "templates": {k.value: list(v) for k, v in self.templates.items()},
                "hard": [[h.gold.value, h.text] for h in self.hard_templates],
                "fillers": {k: list(v) for k, v in self.fillers.items()},
            },
            sort_keys=True,
        ).encode("utf-8")
        return hashlib.sha256(payload).hexdigest()


@dataclass(frozen=True)
class GenerationConfig:
    n_documents: int = 100
    sentences_per_document: tuple[int, int] = (4, 12)
    class_mix: dict[Label, float] = field(default_factory=lambda: dict(TRAIN_MIX))
    hard_fraction: float = 0.0
    seed: int = 0

    def __post_init__(self):
        lo, hi = self.sentences_per_document
        if not (1 <= lo <= hi):
            raise ValidationError("sentences_per_document range must satisfy 1 <= lo <= hi")
        if not (0.0 <= self.hard_fraction <= 1.0):
            raise ValidationError("hard_fraction must be in [0,1]")
        total = sum(self.class_mix.values())
        if abs(total - 1.0) > 1e-6:
            raise ValidationError(f"class mix must sum to 1, got {total}")
        if self.n_documents < 1:
            raise ValidationError("n_documents must be >= 1")


def default_bank_path():
    return resources.files("mddpheno.data") / "template_bank.cfg"


def read_template_bank(path=None) -> TemplateBank:
    """Parse a template bank config file (see the bundled default for the
    section layout)."""
    if path is None:
        path = default_bank_path()
    sections: dict[str, list[str]] = {}
    current = None
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            stripped = line.strip()
            if stripped.startswith("[") and stripped.endswith("]"):
                current = stripped[1:-1]
                sections.setdefault(current, [])
                continue
            if current is None:
                raise ValidationError(f"{path}: entry before any section on line {lineno}")
            sections[current].append(stripped)

    templates = {}
    for label in CLASS_ORDER:
        templates[label] = tuple(sections.get(f"templates.{label.value}", ()))
    hard = []
    for entry in sections.get("templates.hard", ()):
        if "|" not in entry:
            raise ValidationError(f"{path}: hard template needs '<gold>|<text>': {entry!r}")
        gold, text = entry.split("|", 1)
        hard.append(HardTemplate(text=text.strip(), gold=Label.from_string(gold.strip())))
    fillers = {
        name: tuple(sections.get(f"fillers.{name}", ()))
        for name in ("keyword", "negcue", "posscue")
    }
    return TemplateBank(templates=templates, hard_templates=tuple(hard), fillers=fillers)


def _slots(template: str) -> list[tuple[str, str | None]]:
    return [(m.group(1), m.group(2)) for m in _SLOT_RE.finditer(template)]


def _instantiate(template: str, bank: TemplateBank, rng: np.random.Generator) -> str:
    def fill(m: re.Match) -> str:
        name, pinned = m.group(1), m.group(2)
        if pinned is not None:
            return pinned
        options = bank.fillers.get(name, ())
        if not options:
            raise ValidationError(f"template slot {{{name}}} has no fillers")
        return options[int(rng.integers(0, len(options)))]

    return _SLOT_RE.sub(fill, template)


def _instantiate_all(template: str, bank: TemplateBank) -> list[str]:
    """Every instantiation of a template (cartesian product over slots)."""
    slots = _slots(template)
    if not slots:
        return [template]
    option_lists = []
    for name, pinned in slots:
        if pinned is not None:
            option_lists.append([pinned])
        else:
            options = bank.fillers.get(name, ())
            if not options:
                raise ValidationError(f"template slot {{{name}}} has no fillers")
            option_lists.append(list(options))
    out = []
    for combo in product(*option_lists):
        it = iter(combo)
        out.append(_SLOT_RE.sub(lambda m: next(it), template))
    return out


def _label_text(text: str, rules: CompiledRuleSet) -> Label:
    from .corpus import Sentence

    probe = Sentence(sentence_id="probe#0", doc_id="probe", start=0,
                     end=len(text.encode("utf-8")), text=text)
    return classify_assertion(probe, find_concept_mentions(probe, rules), rules)


@dataclass(frozen=True)
class BankViolation:
    template: str
    text: str
    declared: Label
    actual: Label


@dataclass(frozen=True)
class BankValidation:
    violations: tuple[BankViolation, ...]
    checked: int

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_bank(bank: TemplateBank, rules: CompiledRuleSet) -> BankValidation:
    """Exhaustively instantiate the bank and check declared classes.

    Rule-consistent templates must reproduce their declared class; hard
    templates must NOT (their whole point is gold != rule label).
    """
    violations = []
    checked = 0
    for label in CLASS_ORDER:
        for template in bank.templates[label]:
            for text in _instantiate_all(template, bank):
                checked += 1
                actual = _label_text(text, rules)
                if actual is not label:
                    violations.append(
                        BankViolation(template=template, text=text, declared=label, actual=actual)
                    )
    for hard in bank.hard_templates:
        for text in _instantiate_all(hard.text, bank):
            checked += 1
            actual = _label_text(text, rules)
            if actual is hard.gold:
                violations.append(
                    BankViolation(template=hard.text, text=text, declared=hard.gold, actual=actual)
                )
    return BankValidation(violations=tuple(violations), checked=checked)


def _quotas(weights: list[float], total: int) -> list[int]:
    """Largest-remainder allocation of `total` across `weights`."""
    raw = [w * total for w in weights]
    base = [int(x) for x in raw]
    short = total - sum(base)
    remainders = sorted(range(len(raw)), key=lambda i: (-(raw[i] - base[i]), i))
    for i in remainders[:short]:
        base[i] += 1
    return base


def generate_corpus(
    config: GenerationConfig, bank: TemplateBank
) -> tuple[Corpus, LabeledSet]:
    """Generate a corpus and its aligned gold labels.

    Every generated document re-segments into exactly the planted
    sentences (checked), so gold sentence_ids line up with the weak
    labeler's output.
    """
    rng = np.random.default_rng(config.seed)
    lo, hi = config.sentences_per_document
    doc_lengths = [int(rng.integers(lo, hi + 1)) for _ in range(config.n_documents)]
    total = sum(doc_lengths)

    mix = [config.class_mix.get(label, 0.0) for label in CLASS_ORDER]
    class_counts = _quotas(mix, total)
    hard_by_gold: dict[Label, list[HardTemplate]] = {label: [] for label in CLASS_ORDER}
    for h in bank.hard_templates:
        hard_by_gold[h.gold].append(h)

    jobs: list[tuple[Label, bool]] = []
    for label, count in zip(CLASS_ORDER, class_counts):
        if count == 0:
            continue
        if not bank.templates[label] and not (config.hard_fraction > 0 and hard_by_gold[label]):
            raise ValidationError(
                f"template bank has no templates for requested class {label.value!r}"
            )
        n_hard = 0
        if config.hard_fraction > 0 and hard_by_gold[label]:
            n_hard = int(config.hard_fraction * count + 0.5)
            n_hard = min(n_hard, count)
            if n_hard < count and not bank.templates[label]:
                n_hard = count
        jobs.extend([(label, True)] * n_hard)
        jobs.extend([(label, False)] * (count - n_hard))
    perm = rng.permutation(len(jobs))
    jobs = [jobs[i] for i in perm]

    width = len(str(config.n_documents))
    documents = []
    gold = []
    cursor = 0
    for d, length in enumerate(doc_lengths):
        doc_id = f"synth-{d:0{width}d}"
        texts = []
        labels = []
        for label, is_hard in jobs[cursor : cursor + length]:
            if is_hard:
                options = hard_by_gold[label]
                template = options[int(rng.integers(0, len(options)))].text
            else:
                options = bank.templates[label]
                template = options[int(rng.integers(0, len(options)))]
            text = _instantiate(template, bank, rng)
            if not text.rstrip().endswith((".", "!", "?")):
                text += "."
            texts.append(text)
            labels.append(label)
        cursor += length
        doc = Document(doc_id=doc_id, text=" ".join(texts))
        documents.append(doc)
        segmented = segment_sentences(doc)
        if [s.text for s in segmented] != texts:
            raise ValidationError(
                f"document {doc_id} does not re-segment into its planted sentences; "
                "check the template bank for stray terminators"
            )
        for sent, label in zip(segmented, labels):
            gold.append(
                LabeledSentence(
                    sentence_id=sent.sentence_id,
                    doc_id=sent.doc_id,
                    text=sent.text,
                    label=label,
                    source=GOLD,
                )
            )

    metadata = {
        "generator_seed": config.seed,
        "bank_hash": bank.fingerprint(),
        "hard_fraction": config.hard_fraction,
        "class_mix": {label.value: config.class_mix.get(label, 0.0) for label in CLASS_ORDER},
        "documents": config.n_documents,
    }
    return Corpus(documents=tuple(documents)), LabeledSet(sentences=tuple(gold), metadata=metadata)
