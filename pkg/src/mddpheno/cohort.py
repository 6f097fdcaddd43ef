"""Case/control cohort assignment from ICD code histories.

A patient with two or more MDD-related code occurrences is a case; a
patient with none is a control; anyone else (exactly one occurrence) is
excluded from both cohorts.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

from .errors import ValidationError

CASE = "case"
CONTROL = "control"
EXCLUDED = "excluded"


def normalize_code(code: str) -> str:
    return code.strip().upper()


@dataclass(frozen=True)
class PatientRecord:
    patient_id: str
    icd_codes: tuple[str, ...]

    def __post_init__(self):
        if not self.patient_id:
            raise ValidationError("patient record requires a non-empty patient_id")
        object.__setattr__(
            self, "icd_codes", tuple(normalize_code(c) for c in self.icd_codes)
        )


@dataclass(frozen=True)
class CohortAssignment:
    patient_id: str
    cohort: str  # case | control | excluded


def default_codeset_path():
    """Path to the bundled MDD-related ICD-9/ICD-10 code list."""
    return resources.files("mddpheno.data") / "mdd_icd_codes.txt"


def load_icd_codeset(path) -> frozenset[str]:
    """Load a code file (one code per line, '#' comments) into a normalized set."""
    codes = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            entry = line.split("#", 1)[0].strip()
            if entry:
                codes.add(normalize_code(entry))
    if not codes:
        raise ValidationError(f"{path}: code file contains no codes")
    return frozenset(codes)


def select_cohort(
    records: list[PatientRecord], codes: frozenset[str]
) -> list[CohortAssignment]:
    """Partition patients into case / control / excluded.

    Counts code occurrences with multiplicity; matching is exact string
    equality on normalized codes (no prefix expansion).
    """
    if not codes:
        raise ValidationError("cohort selection requires a non-empty code set")
    seen = set()
    assignments = []
    for record in records:
        if record.patient_id in seen:
            raise ValidationError(f"duplicate patient_id {record.patient_id!r}")
        seen.add(record.patient_id)
        hits = sum(1 for code in record.icd_codes if code in codes)
        if hits >= 2:
            cohort = CASE
        elif hits == 0:
            cohort = CONTROL
        else:
            cohort = EXCLUDED
        assignments.append(CohortAssignment(patient_id=record.patient_id, cohort=cohort))
    return assignments


def read_patient_records(path) -> list[PatientRecord]:
    """Read patient records from JSONL {patient_id, icd_codes: [str]}."""
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{path}: malformed JSON on line {lineno}: {exc}") from exc
            patient_id = obj.get("patient_id")
            icd_codes = obj.get("icd_codes")
            if not isinstance(patient_id, str) or not patient_id:
                raise ValidationError(f"{path}: line {lineno} missing patient_id")
            if not isinstance(icd_codes, list) or not all(
                isinstance(c, str) for c in icd_codes
            ):
                raise ValidationError(f"{path}: line {lineno} missing icd_codes list")
            records.append(PatientRecord(patient_id=patient_id, icd_codes=tuple(icd_codes)))
    return records


def write_assignments(assignments: list[CohortAssignment], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for a in assignments:
            fh.write(json.dumps({"patient_id": a.patient_id, "cohort": a.cohort}) + "\n")
