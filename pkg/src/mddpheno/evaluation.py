"""Model scoring: confusion matrices, per-class precision/recall/F1,
comparison tables, and error listings.

Class order everywhere is (unknown, positive, possible, negated); rows of
a confusion matrix are gold classes, columns are predictions.  Metrics
with a zero denominator are 0 by convention.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .dataset import LabeledSet
from .errors import ValidationError
from .rules import CLASS_INDEX, CLASS_ORDER, Label


@dataclass(frozen=True)
class ConfusionMatrix:
    counts: np.ndarray  # 4x4 int64, rows gold, columns predicted

    def __post_init__(self):
        if self.counts.shape != (4, 4):
            raise ValidationError("confusion matrix must be 4x4")

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def accuracy(self) -> float:
        return float(np.trace(self.counts)) / self.total if self.total else 0.0


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class EvalReport:
    model: str
    per_class: dict[Label, ClassMetrics]
    fingerprint: str
    accuracy: float


def read_predictions(path) -> dict[str, Label]:
    """Read a predictions JSONL file {sentence_id, predicted_label, ...}."""
    preds: dict[str, Label] = {}
    duplicates = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{path}: malformed JSON on line {lineno}: {exc}") from exc
            sid = obj.get("sentence_id")
            label = obj.get("predicted_label")
            if not isinstance(sid, str) or not isinstance(label, str):
                raise ValidationError(
                    f"{path}: line {lineno} needs sentence_id and predicted_label"
                )
            if sid in preds:
                duplicates.append(sid)
            preds[sid] = Label.from_string(label)
    if duplicates:
        raise ValidationError(f"{path}: duplicate prediction ids {sorted(set(duplicates))}")
    return preds


def write_predictions(pairs, path) -> None:
    """Write (sentence_id, Label) pairs as a predictions JSONL file."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for sid, label in pairs:
            fh.write(
                json.dumps({"sentence_id": sid, "predicted_label": label.value}) + "\n"
            )


def confusion(gold: LabeledSet, predictions: dict[str, Label]) -> ConfusionMatrix:
    """Count (gold, predicted) pairs; ids must match one-to-one."""
    gold_ids = {s.sentence_id for s in gold}
    missing = sorted(gold_ids - set(predictions))
    extra = sorted(set(predictions) - gold_ids)
    if missing or extra:
        parts = []
        if missing:
            parts.append(f"missing predictions for {missing[:10]}")
        if extra:
            parts.append(f"unexpected prediction ids {extra[:10]}")
        raise ValidationError("prediction id mismatch: " + "; ".join(parts))
    counts = np.zeros((4, 4), dtype=np.int64)
    for s in gold:
        counts[CLASS_INDEX[s.label], CLASS_INDEX[predictions[s.sentence_id]]] += 1
    return ConfusionMatrix(counts=counts)


def per_class_metrics(
    m: ConfusionMatrix, model: str = "", fingerprint: str = ""
) -> EvalReport:
    """Per-class precision/recall/F1 with supports from the gold rows."""
    per_class = {}
    for label in CLASS_ORDER:
        c = CLASS_INDEX[label]
        tp = float(m.counts[c, c])
        colsum = float(m.counts[:, c].sum())
        rowsum = float(m.counts[c, :].sum())
        precision = tp / colsum if colsum > 0 else 0.0
        recall = tp / rowsum if rowsum > 0 else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
        per_class[label] = ClassMetrics(
            precision=precision, recall=recall, f1=f1, support=int(rowsum)
        )
    return EvalReport(
        model=model, per_class=per_class, fingerprint=fingerprint, accuracy=m.accuracy()
    )


_CLASS_TITLES = {
    Label.UNKNOWN: "unknown",
    Label.POSITIVE: "Positive MDD",
    Label.POSSIBLE: "Possible MDD",
    Label.NEGATED: "Negated MDD",
}


def render_comparison(reports: list[EvalReport]) -> str:
    """Plain-text comparison table: one row per model, P/R/F1 per class
    at two decimals."""
    if not reports:
        raise ValidationError("need at least one report to render")
    name_w = max([len("MODEL")] + [len(r.model) for r in reports])
    group_w = 3 * 6
    lines = []
    header1 = "MODEL".ljust(name_w)
    header2 = " " * name_w
    for label in CLASS_ORDER:
        header1 += "  " + _CLASS_TITLES[label].ljust(group_w)
        header2 += "  " + "".join(h.ljust(6) for h in ("P", "R", "F1"))
    lines.append(header1.rstrip())
    lines.append(header2.rstrip())
    for r in reports:
        row = r.model.ljust(name_w)
        for label in CLASS_ORDER:
            cm = r.per_class[label]
            row += "  " + "".join(
                f"{v:.2f}".ljust(6) for v in (cm.precision, cm.recall, cm.f1)
            )
        lines.append(row.rstrip())
    return "\n".join(lines) + "\n"


def render_comparison_csv(reports: list[EvalReport]) -> str:
    """Full-precision CSV: model,class,precision,recall,f1,support."""
    lines = ["model,class,precision,recall,f1,support"]
    for r in reports:
        for label in CLASS_ORDER:
            cm = r.per_class[label]
            lines.append(
                f"{r.model},{label.value},{cm.precision!r},{cm.recall!r},"
                f"{cm.f1!r},{cm.support}"
            )
    return "\n".join(lines) + "\n"


def error_listing(
    gold: LabeledSet,
    predictions_by_model: dict[str, dict[str, Label]],
    max_per_class: int = 5,
) -> str:
    """Per gold class, example sentences with a C/NC mark per model.

    Sentences where at least one model is wrong come first (in corpus
    order); all-correct sentences pad the listing when needed.
    """
    if not predictions_by_model:
        raise ValidationError("need at least one model's predictions")
    models = list(predictions_by_model)
    lines = []
    col_w = max(12, max(len(m) for m in models) + 2)
    for label in CLASS_ORDER:
        members = [s for s in gold if s.label is label]
        wrong_first = sorted(
            members,
            key=lambda s: (
                all(
                    predictions_by_model[m].get(s.sentence_id) is label for m in models
                ),
            ),
        )
        chosen = wrong_first[:max_per_class]
        if not chosen:
            continue
        lines.append(f"{_CLASS_TITLES[label]}")
        header = "  " + "#".ljust(4) + "sentence".ljust(60) + "".join(
            m.ljust(col_w) for m in models
        )
        lines.append(header.rstrip())
        for i, s in enumerate(chosen, start=1):
            text = s.text if len(s.text) <= 57 else s.text[:54] + "..."
            marks = "".join(
                ("C" if predictions_by_model[m].get(s.sentence_id) is label else "NC").ljust(col_w)
                for m in models
            )
            lines.append(("  " + str(i).ljust(4) + text.ljust(60) + marks).rstrip())
        lines.append("")
    return "\n".join(lines).rstrip() + "\n" if lines else ""
