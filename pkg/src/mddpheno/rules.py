"""Keyword/assertion rule engine for sentence-level MDD labeling.

Each sentence gets exactly one of four labels: a sentence with no concept
mention is unknown; a mentioned concept is then asserted as positive,
possible, or negated depending on nearby cue phrases.  Family-history and
other experiencer cues push a mention back to unknown (the condition is
not the patient's).

Cue scope: a cue applies to a mention when it sits on the cue's declared
side (pre = before the keyword, post = after) and the token-position gap
between cue and keyword is at most SCOPE_TOKENS.  Tokens here are maximal
non-whitespace runs.
"""

from __future__ import annotations

import enum
import hashlib
import json
import re
from dataclasses import dataclass, field
from importlib import resources

from .corpus import Sentence
from .errors import ValidationError

SCOPE_TOKENS = 6

PRE = "pre"
POST = "post"


class Label(enum.Enum):
    UNKNOWN = "unknown"
    POSITIVE = "positive"
    POSSIBLE = "possible"
    NEGATED = "negated"

    @classmethod
    def from_string(cls, value: str) -> "Label":
        for member in cls:
            if member.value == value:
                return member
        raise ValidationError(f"unknown label {value!r}")


# Fixed class order used everywhere ties must be broken deterministically.
CLASS_ORDER = (Label.UNKNOWN, Label.POSITIVE, Label.POSSIBLE, Label.NEGATED)
CLASS_INDEX = {label: i for i, label in enumerate(CLASS_ORDER)}


@dataclass(frozen=True)
class Cue:
    """A trigger pattern with the direction it scopes over."""

    pattern: str
    direction: str  # pre | post

    def __post_init__(self):
        if self.direction not in (PRE, POST):
            raise ValidationError(
                f"cue {self.pattern!r}: direction must be 'pre' or 'post'"
            )


@dataclass(frozen=True)
class RuleSpec:
    concept_keywords: tuple[str, ...]
    exclusion_suffixes: tuple[str, ...] = ()
    negation_cues: tuple[Cue, ...] = ()
    possibility_cues: tuple[Cue, ...] = ()
    experiencer_cues: tuple[Cue, ...] = ()

    def to_canonical_dict(self) -> dict:
        return {
            "keywords": list(self.concept_keywords),
            "exclusions": list(self.exclusion_suffixes),
            "cues": {
                name: [[c.direction, c.pattern] for c in cues]
                for name, cues in (
                    ("negation", self.negation_cues),
                    ("possibility", self.possibility_cues),
                    ("experiencer", self.experiencer_cues),
                )
            },
        }

    def fingerprint(self) -> str:
        payload = json.dumps(self.to_canonical_dict(), sort_keys=True).encode("utf-8")
        return hashlib.sha256(payload).hexdigest()


@dataclass(frozen=True)
class MatchSpan:
    """Concept mention; start/end are byte offsets within the sentence text."""

    start: int
    end: int
    matched_keyword: str


@dataclass(frozen=True)
class _CompiledCue:
    cue: Cue
    regex: re.Pattern


@dataclass(frozen=True)
class CompiledRuleSet:
    spec: RuleSpec
    concept_regex: re.Pattern = field(repr=False)
    negation: tuple[_CompiledCue, ...] = field(repr=False)
    possibility: tuple[_CompiledCue, ...] = field(repr=False)
    experiencer: tuple[_CompiledCue, ...] = field(repr=False)

    def fingerprint(self) -> str:
        return self.spec.fingerprint()


def _phrase_pattern(phrase: str) -> str:
    """Escape a literal phrase; whitespace matches any whitespace run."""
    parts = phrase.split()
    return r"\s+".join(re.escape(p) for p in parts)


def _cue_regex(cue: Cue) -> re.Pattern:
    # Cue entries are regex fragments; literal spaces widen to whitespace runs.
    body = r"\s+".join(cue.pattern.split(" "))
    try:
        return re.compile(r"\b(?:" + body + r")\b", re.IGNORECASE)
    except re.error as exc:
        raise ValidationError(f"bad cue pattern {cue.pattern!r}: {exc}") from exc


def compile_ruleset(spec: RuleSpec) -> CompiledRuleSet:
    """Compile a RuleSpec into deterministic, case-insensitive matchers."""
    keywords = tuple(k.strip().lower() for k in spec.concept_keywords)
    if not keywords or any(not k for k in keywords):
        raise ValidationError("ruleset requires a non-empty keyword list")

    # Longest alternative first: the regex engine tries alternatives in
    # order, which yields leftmost-longest matching for finditer.
    ordered = sorted(set(keywords), key=lambda k: (-len(k), k))
    concept = r"\b(?:" + "|".join(_phrase_pattern(k) for k in ordered) + r")\b"
    exclusions = tuple(s.strip().lower() for s in spec.exclusion_suffixes if s.strip())
    if exclusions:
        alt = "|".join(_phrase_pattern(s) for s in sorted(set(exclusions), key=lambda s: (-len(s), s)))
        concept += r"(?!\s+(?:" + alt + r")\b)"
    try:
        concept_regex = re.compile(concept, re.IGNORECASE)
    except re.error as exc:
        raise ValidationError(f"bad keyword pattern: {exc}") from exc

    normalized = RuleSpec(
        concept_keywords=keywords,
        exclusion_suffixes=exclusions,
        negation_cues=spec.negation_cues,
        possibility_cues=spec.possibility_cues,
        experiencer_cues=spec.experiencer_cues,
    )
    return CompiledRuleSet(
        spec=normalized,
        concept_regex=concept_regex,
        negation=tuple(_CompiledCue(c, _cue_regex(c)) for c in spec.negation_cues),
        possibility=tuple(_CompiledCue(c, _cue_regex(c)) for c in spec.possibility_cues),
        experiencer=tuple(_CompiledCue(c, _cue_regex(c)) for c in spec.experiencer_cues),
    )


_TOKEN_RE = re.compile(r"\S+")


def _token_spans(text: str) -> list[tuple[int, int]]:
    return [(m.start(), m.end()) for m in _TOKEN_RE.finditer(text)]


def _token_range(spans: list[tuple[int, int]], start: int, end: int) -> tuple[int, int]:
    """Indices of the tokens containing char positions start and end-1."""
    first = last = -1
    for i, (ts, te) in enumerate(spans):
        if ts <= start < te:
            first = i
        if ts < end <= te:
            last = i
    return first, last


def _to_byte(text: str, char_pos: int) -> int:
    if text.isascii():
        return char_pos
    return len(text[:char_pos].encode("utf-8"))


def _to_char(text: str, byte_pos: int) -> int:
    if text.isascii():
        return byte_pos
    return len(text.encode("utf-8")[:byte_pos].decode("utf-8"))


def find_concept_mentions(sentence: Sentence, rules: CompiledRuleSet) -> list[MatchSpan]:
    """All non-overlapping leftmost-longest keyword matches, minus excluded ones."""
    text = sentence.text
    spans = []
    for m in rules.concept_regex.finditer(text):
        keyword = re.sub(r"\s+", " ", m.group(0).lower())
        spans.append(
            MatchSpan(
                start=_to_byte(text, m.start()),
                end=_to_byte(text, m.end()),
                matched_keyword=keyword,
            )
        )
    return spans


def _mention_label(
    kw_first: int,
    kw_last: int,
    kw_cstart: int,
    kw_cend: int,
    cue_hits: dict[str, list[tuple[int, int, int, int, str]]],
) -> Label:
    """Assertion for one mention given cue hits (tok_first, tok_last, cstart, cend, dir)."""

    def in_scope(hit) -> bool:
        first, last, cstart, cend, direction = hit
        if direction == PRE:
            return cend <= kw_cstart and 0 <= kw_first - last <= SCOPE_TOKENS
        return cstart >= kw_cend and 0 <= first - kw_last <= SCOPE_TOKENS

    # Precedence within a mention: experiencer > negation > possibility.
    if any(in_scope(h) for h in cue_hits["experiencer"]):
        return Label.UNKNOWN
    if any(in_scope(h) for h in cue_hits["negation"]):
        return Label.NEGATED
    if any(in_scope(h) for h in cue_hits["possibility"]):
        return Label.POSSIBLE
    return Label.POSITIVE


def classify_assertion(
    sentence: Sentence, spans: list[MatchSpan], rules: CompiledRuleSet
) -> Label:
    """Aggregate per-mention assertions into one sentence label.

    Across mentions: positive > possible > negated; experiencer-attributed
    mentions contribute nothing.  No mentions at all means unknown.
    """
    if not spans:
        return Label.UNKNOWN
    text = sentence.text
    byte_len = len(text.encode("utf-8"))
    for span in spans:
        if not (0 <= span.start < span.end <= byte_len):
            raise ValidationError(
                f"mention span [{span.start},{span.end}) out of bounds for "
                f"sentence {sentence.sentence_id}"
            )

    token_spans = _token_spans(text)
    cue_hits: dict[str, list[tuple[int, int, int, int, str]]] = {
        "negation": [],
        "possibility": [],
        "experiencer": [],
    }
    for name, compiled in (
        ("negation", rules.negation),
        ("possibility", rules.possibility),
        ("experiencer", rules.experiencer),
    ):
        for item in compiled:
            for m in item.regex.finditer(text):
                first, last = _token_range(token_spans, m.start(), m.end())
                cue_hits[name].append((first, last, m.start(), m.end(), item.cue.direction))

    mention_labels = []
    for span in spans:
        cstart = _to_char(text, span.start)
        cend = _to_char(text, span.end)
        first, last = _token_range(token_spans, cstart, cend)
        mention_labels.append(_mention_label(first, last, cstart, cend, cue_hits))

    for label in (Label.POSITIVE, Label.POSSIBLE, Label.NEGATED):
        if label in mention_labels:
            return label
    return Label.UNKNOWN


def label_sentence(sentence: Sentence, rules: CompiledRuleSet):
    """Label one sentence; total over all inputs."""
    from .dataset import LabeledSentence, WEAK

    label = classify_assertion(sentence, find_concept_mentions(sentence, rules), rules)
    return LabeledSentence(
        sentence_id=sentence.sentence_id,
        doc_id=sentence.doc_id,
        text=sentence.text,
        label=label,
        source=WEAK,
    )


# ---------------------------------------------------------------------------
# Ruleset config file
#
# Line-oriented sections; '#' starts a comment.  Cue lines carry an optional
# "pre:" / "post:" direction prefix (default pre).
#
#   [keywords]
#   depression
#   [exclusions]
#   scale
#   [cues.negation]
#   pre: no evidence of
#   [cues.possibility]
#   post: suspect
#   [cues.experiencer]
#   pre: family history of
# ---------------------------------------------------------------------------

_SECTIONS = ("keywords", "exclusions", "cues.negation", "cues.possibility", "cues.experiencer")


def default_ruleset_path():
    return resources.files("mddpheno.data") / "default_ruleset.cfg"


def read_rulespec(path) -> RuleSpec:
    """Parse a ruleset config file into a RuleSpec."""
    sections: dict[str, list[str]] = {name: [] for name in _SECTIONS}
    current = None
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line.startswith("[") and line.endswith("]"):
                name = line[1:-1].strip()
                if name not in sections:
                    raise ValidationError(f"{path}: unknown section {name!r} on line {lineno}")
                current = name
                continue
            if current is None:
                raise ValidationError(f"{path}: entry before any section on line {lineno}")
            sections[current].append(line)

    def parse_cues(entries: list[str]) -> tuple[Cue, ...]:
        cues = []
        for entry in entries:
            direction = PRE
            body = entry
            for prefix in (PRE, POST):
                if entry.lower().startswith(prefix + ":"):
                    direction = prefix
                    body = entry[len(prefix) + 1 :].strip()
                    break
            if not body:
                raise ValidationError(f"{path}: empty cue pattern in entry {entry!r}")
            cues.append(Cue(pattern=body, direction=direction))
        return tuple(cues)

    return RuleSpec(
        concept_keywords=tuple(sections["keywords"]),
        exclusion_suffixes=tuple(sections["exclusions"]),
        negation_cues=parse_cues(sections["cues.negation"]),
        possibility_cues=parse_cues(sections["cues.possibility"]),
        experiencer_cues=parse_cues(sections["cues.experiencer"]),
    )


def load_ruleset(path=None) -> CompiledRuleSet:
    """Read and compile a ruleset config; None means the bundled default."""
    return compile_ruleset(read_rulespec(path if path is not None else default_ruleset_path()))
