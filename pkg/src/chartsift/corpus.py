"""Patient-record data model and line-delimited corpus ingestion.

A corpus directory holds two files: ``reports.jsonl`` with one report per
line and ``codes.jsonl`` with one diagnosis-code event per line.  Records
are sorted by timestamp in memory regardless of on-disk order; ties among
reports break by report id.  Timestamps are integer days.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Optional

from .lexical import split_sentences

logger = logging.getLogger(__name__)

REPORT_KINDS = (
    "discharge_summary",
    "operative",
    "pathology",
    "progress",
    "radiology",
    "visit",
)

REPORTS_FILE = "reports.jsonl"
CODES_FILE = "codes.jsonl"


class CorpusError(ValueError):
    """Unreadable or unacceptably malformed corpus input."""


@dataclass(frozen=True)
class Report:
    id: str
    patient_id: str
    kind: str
    timestamp: int
    text: str

    def __post_init__(self):
        if self.kind not in REPORT_KINDS:
            raise ValueError(f"unknown report kind {self.kind!r}")


@dataclass(frozen=True)
class CodeEvent:
    patient_id: str
    code: str
    system: str
    timestamp: int

    def __post_init__(self):
        if self.system not in ("ICD9", "ICD10"):
            raise ValueError(f"unknown code system {self.system!r}")


@dataclass
class PatientRecord:
    id: str
    reports: list[Report] = field(default_factory=list)
    code_events: list[CodeEvent] = field(default_factory=list)

    def sort(self) -> None:
        self.reports.sort(key=lambda r: (r.timestamp, r.id))
        self.code_events.sort(key=lambda e: (e.timestamp, e.code))


@dataclass(frozen=True)
class Sentence:
    """One sentence of a report, with its position within that report."""

    text: str
    report_id: str
    index: int


@dataclass
class Corpus:
    patients: dict[str, PatientRecord] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.patients)

    def __iter__(self) -> Iterator[PatientRecord]:
        for pid in sorted(self.patients):
            yield self.patients[pid]

    def patient(self, patient_id: str) -> PatientRecord:
        try:
            return self.patients[patient_id]
        except KeyError:
            raise KeyError(f"unknown patient {patient_id!r}") from None

    def _ensure(self, patient_id: str) -> PatientRecord:
        rec = self.patients.get(patient_id)
        if rec is None:
            rec = PatientRecord(id=patient_id)
            self.patients[patient_id] = rec
        return rec

    def add_report(self, report: Report) -> None:
        self._ensure(report.patient_id).reports.append(report)

    def add_code_event(self, event: CodeEvent) -> None:
        self._ensure(event.patient_id).code_events.append(event)

    def sort(self) -> None:
        for rec in self.patients.values():
            rec.sort()

    def sentences_before(self, patient_id: str, t: int) -> list[Sentence]:
        """Sentences of all reports strictly before day ``t``, in temporal order."""
        record = self.patient(patient_id)
        out: list[Sentence] = []
        for report in record.reports:
            if report.timestamp >= t:
                continue
            for i, text in enumerate(split_sentences(report.text)):
                out.append(Sentence(text=text, report_id=report.id, index=i))
        return out

    def report_by_id(self, patient_id: str, report_id: str) -> Optional[Report]:
        for report in self.patient(patient_id).reports:
            if report.id == report_id:
                return report
        return None


@dataclass
class IngestStats:
    reports: int = 0
    code_events: int = 0
    malformed: int = 0
    total_lines: int = 0


def _parse_report(rec: dict) -> Report:
    return Report(
        id=str(rec["id"]),
        patient_id=str(rec["patient_id"]),
        kind=rec["kind"],
        timestamp=int(rec["timestamp"]),
        text=rec["text"],
    )


def _parse_code_event(rec: dict) -> CodeEvent:
    return CodeEvent(
        patient_id=str(rec["patient_id"]),
        code=str(rec["code"]),
        system=rec["system"],
        timestamp=int(rec["timestamp"]),
    )


def ingest(
    path: str | Path, max_malformed_fraction: float = 0.01
) -> tuple[Corpus, IngestStats]:
    """Load a corpus directory; abort when too many lines are malformed."""
    path = Path(path)
    corpus = Corpus()
    stats = IngestStats()
    for filename, parse, add in (
        (REPORTS_FILE, _parse_report, corpus.add_report),
        (CODES_FILE, _parse_code_event, corpus.add_code_event),
    ):
        file_path = path / filename
        if not file_path.exists():
            raise CorpusError(f"missing corpus file {file_path}")
        with open(file_path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                stats.total_lines += 1
                try:
                    add(parse(json.loads(line)))
                except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                    stats.malformed += 1
                    logger.warning("%s:%d: malformed line (%s)", file_path, lineno, exc)
    stats.reports = sum(len(p.reports) for p in corpus.patients.values())
    stats.code_events = sum(len(p.code_events) for p in corpus.patients.values())
    if stats.total_lines and stats.malformed / stats.total_lines > max_malformed_fraction:
        raise CorpusError(
            f"{stats.malformed}/{stats.total_lines} malformed lines exceeds "
            f"the {max_malformed_fraction:.0%} limit"
        )
    corpus.sort()
    return corpus, stats


def export(corpus: Corpus, path: str | Path) -> None:
    """Write a corpus back out in the ingestion format."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    with open(path / REPORTS_FILE, "w", encoding="utf-8") as fh:
        for record in corpus:
            for r in record.reports:
                fh.write(json.dumps({
                    "id": r.id, "patient_id": r.patient_id, "kind": r.kind,
                    "timestamp": r.timestamp, "text": r.text,
                }) + "\n")
    with open(path / CODES_FILE, "w", encoding="utf-8") as fh:
        for record in corpus:
            for e in record.code_events:
                fh.write(json.dumps({
                    "patient_id": e.patient_id, "code": e.code,
                    "system": e.system, "timestamp": e.timestamp,
                }) + "\n")
