"""Embedded single-writer store for statements, derived artifacts, and reviews.

Everything lives in memory behind one write lock; JSONL bundles are the
interchange format. The review trail is append-only: prior decisions are
never mutated, and replaying the log from empty reproduces the effective
state exactly.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from .backends import PredictionError, RelevancePrediction
from .corpus import (
    Jurisdiction,
    Sentence,
    Statement,
    StatementMetadata,
    parse_sector,
    parse_turnover_band,
)
from .criteria import CRITERIA, Criterion
from .errors import NotFound, StaleRevision, UnknownTarget, VersionConflict
from .evidence import EvidenceLabel, EvidenceStatus, Provenance
from .explain import TokenAttribution

BUNDLE_FILES = (
    "statements.jsonl",
    "predictions.jsonl",
    "attributions.jsonl",
    "evidence.jsonl",
    "reviews.jsonl",
)

VERDICTS = ("Accept", "OverrideRelevant", "OverrideIrrelevant")
DECISIONS = ("Met", "NotMet", "Unclear")


@dataclass(frozen=True)
class ReviewDecision:
    statement_id: str
    sentence_index: int
    criterion: Criterion
    verdict: str
    reviewer_id: str
    timestamp: str
    revision: int

    def __post_init__(self):
        if self.verdict not in VERDICTS:
            raise ValueError(f"verdict must be one of {VERDICTS}")


@dataclass(frozen=True)
class ComplianceDetermination:
    statement_id: str
    criterion: Criterion
    decision: str
    cited_sentences: tuple[int, ...]
    reviewer_id: str
    timestamp: str

    def __post_init__(self):
        if self.decision not in DECISIONS:
            raise ValueError(f"decision must be one of {DECISIONS}")


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _dump(record: dict) -> str:
    return json.dumps(record, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


class Store:
    """Many concurrent readers, one writer; snapshots are plain dict reads."""

    def __init__(self):
        self._lock = threading.RLock()
        self._statements: dict[str, Statement] = {}
        self._order: list[str] = []
        self._predictions: dict[str, list[RelevancePrediction | PredictionError]] = {}
        self._attributions: dict[str, dict[tuple[int, str], TokenAttribution]] = {}
        self._evidence: dict[str, dict[tuple[int, str], EvidenceStatus]] = {}
        self._reviews: list[ReviewDecision] = []
        self._determinations: list[ComplianceDetermination] = []
        self._runs: dict[str, dict] = {}

    # -- statements ---------------------------------------------------------

    def put_statement(self, statement: Statement) -> None:
        with self._lock:
            existing = self._statements.get(statement.id)
            if existing is not None:
                if existing.raw_text != statement.raw_text:
                    raise VersionConflict(
                        f"statement {statement.id} already stored with different content"
                    )
                return
            self._statements[statement.id] = statement
            self._order.append(statement.id)

    def get_statement(self, statement_id: str) -> Statement:
        statement = self._statements.get(statement_id)
        if statement is None:
            raise NotFound(f"statement {statement_id} not found")
        return statement

    def statement_ids(self) -> list[str]:
        return list(self._order)

    # -- derived artifacts ---------------------------------------------------

    def put_predictions(self, statement_id: str, cells: list[RelevancePrediction | PredictionError]) -> None:
        self.get_statement(statement_id)
        order = {c.value: i for i, c in enumerate(CRITERIA)}
        with self._lock:
            self._predictions[statement_id] = sorted(
                cells, key=lambda c: (order[c.criterion.value], c.sentence_index)
            )

    def get_predictions(self, statement_id: str) -> list[RelevancePrediction | PredictionError]:
        return list(self._predictions.get(statement_id, []))

    def put_attribution(
        self, statement_id: str, sentence_index: int, criterion: Criterion, attribution: TokenAttribution
    ) -> None:
        self.get_statement(statement_id)
        with self._lock:
            self._attributions.setdefault(statement_id, {})[(sentence_index, criterion.value)] = attribution

    def get_attributions(self, statement_id: str) -> dict[tuple[int, str], TokenAttribution]:
        return dict(self._attributions.get(statement_id, {}))

    def put_evidence(
        self, statement_id: str, sentence_index: int, criterion: Criterion, status: EvidenceStatus
    ) -> None:
        self.get_statement(statement_id)
        with self._lock:
            self._evidence.setdefault(statement_id, {})[(sentence_index, criterion.value)] = status

    def get_evidence(self, statement_id: str) -> dict[tuple[int, str], EvidenceStatus]:
        return dict(self._evidence.get(statement_id, {}))

    # -- runs ----------------------------------------------------------------

    def put_run(self, run: dict) -> None:
        with self._lock:
            self._runs[run["run_id"]] = run

    def get_run(self, run_id: str) -> dict:
        run = self._runs.get(run_id)
        if run is None:
            raise NotFound(f"run {run_id} not found")
        return run

    def run_ids(self) -> list[str]:
        return list(self._runs)

    # -- review audit trail ----------------------------------------------------

    def current_revision(self, statement_id: str, sentence_index: int, criterion: Criterion) -> int:
        revision = 0
        for decision in self._reviews:
            if (
                decision.statement_id == statement_id
                and decision.sentence_index == sentence_index
                and decision.criterion == criterion
            ):
                revision = max(revision, decision.revision)
        return revision

    def append_review(
        self,
        statement_id: str,
        sentence_index: int,
        criterion: Criterion,
        verdict: str,
        reviewer_id: str,
        expected_revision: int | None = None,
        timestamp: str | None = None,
    ) -> ReviewDecision:
        with self._lock:
            statement = self._statements.get(statement_id)
            if statement is None:
                raise UnknownTarget(f"statement {statement_id} does not exist")
            if not 0 <= sentence_index < len(statement.sentences):
                raise UnknownTarget(
                    f"sentence {sentence_index} does not exist in statement {statement_id}"
                )
            current = self.current_revision(statement_id, sentence_index, criterion)
            if expected_revision is not None and expected_revision != current:
                raise StaleRevision(expected=expected_revision, actual=current)
            decision = ReviewDecision(
                statement_id=statement_id,
                sentence_index=sentence_index,
                criterion=Criterion(criterion),
                verdict=verdict,
                reviewer_id=reviewer_id,
                timestamp=timestamp or _now(),
                revision=current + 1,
            )
            self._reviews.append(decision)
            return decision

    def reviews(self, statement_id: str | None = None) -> list[ReviewDecision]:
        if statement_id is None:
            return list(self._reviews)
        return [d for d in self._reviews if d.statement_id == statement_id]

    def append_determination(
        self,
        statement_id: str,
        criterion: Criterion,
        decision: str,
        cited_sentences: list[int],
        reviewer_id: str,
        timestamp: str | None = None,
    ) -> ComplianceDetermination:
        with self._lock:
            statement = self._statements.get(statement_id)
            if statement is None:
                raise UnknownTarget(f"statement {statement_id} does not exist")
            for index in cited_sentences:
                if not 0 <= index < len(statement.sentences):
                    raise UnknownTarget(f"cited sentence {index} does not exist")
            if decision == "Met":
                effective = self.effective_relevance(statement_id)
                row = effective[Criterion(criterion).value]
                not_relevant = [i for i in cited_sentences if not row[i]]
                if not cited_sentences or not_relevant:
                    raise ValueError(
                        "a Met determination must cite sentences that are relevant "
                        f"after review overrides; offending indices: {not_relevant or 'none cited'}"
                    )
            determination = ComplianceDetermination(
                statement_id=statement_id,
                criterion=Criterion(criterion),
                decision=decision,
                cited_sentences=tuple(cited_sentences),
                reviewer_id=reviewer_id,
                timestamp=timestamp or _now(),
            )
            self._determinations.append(determination)
            return determination

    def determinations(self, statement_id: str | None = None) -> list[ComplianceDetermination]:
        if statement_id is None:
            return list(self._determinations)
        return [d for d in self._determinations if d.statement_id == statement_id]

    def effective_relevance(self, statement_id: str) -> dict[str, list[bool]]:
        """Model relevance grid with the latest review verdict applied per cell."""
        statement = self.get_statement(statement_id)
        n = len(statement.sentences)
        grid: dict[str, list[bool]] = {c.value: [False] * n for c in CRITERIA}
        for cell in self._predictions.get(statement_id, []):
            if isinstance(cell, RelevancePrediction):
                grid[cell.criterion.value][cell.sentence_index] = cell.relevant
        latest: dict[tuple[str, int], ReviewDecision] = {}
        for decision in self._reviews:
            if decision.statement_id != statement_id:
                continue
            key = (decision.criterion.value, decision.sentence_index)
            if key not in latest or decision.revision > latest[key].revision:
                latest[key] = decision
        for (criterion_value, index), decision in latest.items():
            if decision.verdict == "OverrideRelevant":
                grid[criterion_value][index] = True
            elif decision.verdict == "OverrideIrrelevant":
                grid[criterion_value][index] = False
        return grid

    # -- bundle export / import ----------------------------------------------

    def export_bundle(self, directory: str | Path) -> None:
        """Write the five-file JSONL bundle, deterministically ordered."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        ordered_ids = sorted(self._order)
        criterion_order = {c.value: i for i, c in enumerate(CRITERIA)}

        lines = []
        for sid in ordered_ids:
            lines.append(_dump(statement_record(self._statements[sid])))
        _write_lines(directory / "statements.jsonl", lines)

        lines = []
        for sid in ordered_ids:
            cells = sorted(
                self._predictions.get(sid, []),
                key=lambda c: (criterion_order[c.criterion.value], c.sentence_index),
            )
            for cell in cells:
                lines.append(_dump(prediction_record(sid, cell)))
        _write_lines(directory / "predictions.jsonl", lines)

        lines = []
        for sid in ordered_ids:
            items = sorted(
                self._attributions.get(sid, {}).items(),
                key=lambda kv: (criterion_order[kv[0][1]], kv[0][0]),
            )
            for (index, criterion_value), attribution in items:
                lines.append(_dump(attribution_record(sid, index, criterion_value, attribution)))
        _write_lines(directory / "attributions.jsonl", lines)

        lines = []
        for sid in ordered_ids:
            items = sorted(
                self._evidence.get(sid, {}).items(),
                key=lambda kv: (criterion_order[kv[0][1]], kv[0][0]),
            )
            for (index, criterion_value), status in items:
                lines.append(_dump(evidence_record(sid, index, criterion_value, status)))
        _write_lines(directory / "evidence.jsonl", lines)

        lines = [_dump(review_record(d)) for d in self._reviews]
        lines.extend(_dump(determination_record(d)) for d in self._determinations)
        _write_lines(directory / "reviews.jsonl", lines)

    @classmethod
    def import_bundle(cls, directory: str | Path) -> "Store":
        directory = Path(directory)
        store = cls()
        for line in _read_lines(directory / "statements.jsonl"):
            store.put_statement(statement_from_stored(json.loads(line)))
        by_statement: dict[str, list] = {}
        for line in _read_lines(directory / "predictions.jsonl"):
            record = json.loads(line)
            by_statement.setdefault(record["statement_id"], []).append(prediction_from_record(record))
        for sid, cells in by_statement.items():
            store.put_predictions(sid, cells)
        for line in _read_lines(directory / "attributions.jsonl"):
            record = json.loads(line)
            store.put_attribution(
                record["statement_id"],
                record["sentence_index"],
                Criterion(record["criterion"]),
                attribution_from_record(record),
            )
        for line in _read_lines(directory / "evidence.jsonl"):
            record = json.loads(line)
            store.put_evidence(
                record["statement_id"],
                record["sentence_index"],
                Criterion(record["criterion"]),
                evidence_from_record(record),
            )
        for line in _read_lines(directory / "reviews.jsonl"):
            record = json.loads(line)
            if record.get("type") == "determination":
                store.append_determination(
                    record["statement_id"],
                    Criterion(record["criterion"]),
                    record["decision"],
                    list(record["cited_sentences"]),
                    record["reviewer_id"],
                    timestamp=record["timestamp"],
                )
            else:
                store.append_review(
                    record["statement_id"],
                    record["sentence_index"],
                    Criterion(record["criterion"]),
                    record["verdict"],
                    record["reviewer_id"],
                    timestamp=record["timestamp"],
                )
        return store


def _write_lines(path: Path, lines: list[str]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        for line in lines:
            handle.write(line)
            handle.write("\n")


def _read_lines(path: Path) -> list[str]:
    if not path.exists():
        return []
    return [line for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]


# -- record codecs ------------------------------------------------------------


def statement_record(statement: Statement) -> dict:
    md = statement.metadata
    return {
        "id": statement.id,
        "raw_text": statement.raw_text,
        "sentences": [
            {
                "index": s.index,
                "span": [s.span[0], s.span[1]],
                "text": s.text,
                "word_count": s.word_count,
            }
            for s in statement.sentences
        ],
        "metadata": {
            "jurisdiction": md.jurisdiction.value,
            "sector": md.sector.value,
            "turnover_band": md.turnover_band.value,
            "publication_year": md.publication_year,
            "company_id": md.company_id,
        },
    }


def statement_from_stored(record: dict) -> Statement:
    md = record["metadata"]
    metadata = StatementMetadata(
        jurisdiction=Jurisdiction(md["jurisdiction"]),
        sector=parse_sector(md["sector"]),
        turnover_band=parse_turnover_band(md["turnover_band"]),
        publication_year=md["publication_year"],
        company_id=md.get("company_id", ""),
    )
    sentences = tuple(
        Sentence(
            index=s["index"],
            span=(s["span"][0], s["span"][1]),
            text=s["text"],
            word_count=s["word_count"],
        )
        for s in record["sentences"]
    )
    return Statement(
        id=record["id"], raw_text=record["raw_text"], sentences=sentences, metadata=metadata
    )


def prediction_record(statement_id: str, cell: RelevancePrediction | PredictionError) -> dict:
    if isinstance(cell, RelevancePrediction):
        return {
            "statement_id": statement_id,
            "sentence_index": cell.sentence_index,
            "criterion": cell.criterion.value,
            "probability": cell.probability,
            "relevant": cell.relevant,
            "threshold": cell.threshold,
            "backend_id": cell.backend_id,
        }
    return {
        "statement_id": statement_id,
        "sentence_index": cell.sentence_index,
        "criterion": cell.criterion.value,
        "error": cell.error,
        "detail": cell.detail,
    }


def prediction_from_record(record: dict) -> RelevancePrediction | PredictionError:
    if "error" in record:
        return PredictionError(
            sentence_index=record["sentence_index"],
            criterion=Criterion(record["criterion"]),
            error=record["error"],
            detail=record.get("detail", ""),
        )
    return RelevancePrediction(
        sentence_index=record["sentence_index"],
        criterion=Criterion(record["criterion"]),
        probability=record["probability"],
        relevant=record["relevant"],
        threshold=record["threshold"],
        backend_id=record["backend_id"],
    )


def attribution_record(
    statement_id: str, sentence_index: int, criterion_value: str, attribution: TokenAttribution
) -> dict:
    record = {
        "statement_id": statement_id,
        "sentence_index": sentence_index,
        "criterion": criterion_value,
        "tokens": list(attribution.tokens),
        "phi": list(attribution.phi),
        "base": attribution.base_value,
        "method": attribution.method,
    }
    if attribution.samples_used is not None:
        record["samples_used"] = attribution.samples_used
    return record


def attribution_from_record(record: dict) -> TokenAttribution:
    return TokenAttribution(
        tokens=tuple(record["tokens"]),
        phi=tuple(record["phi"]),
        base_value=record["base"],
        method=record["method"],
        samples_used=record.get("samples_used"),
    )


def evidence_record(
    statement_id: str, sentence_index: int, criterion_value: str, status: EvidenceStatus
) -> dict:
    return {
        "statement_id": statement_id,
        "sentence_index": sentence_index,
        "criterion": criterion_value,
        "status": status.label.value,
        "detector": status.provenance.detector,
        "score": status.provenance.score,
        "cue": status.provenance.cue,
        "fallback_used": status.provenance.fallback_used,
        "conflict": status.provenance.conflict,
    }


def evidence_from_record(record: dict) -> EvidenceStatus:
    return EvidenceStatus(
        label=EvidenceLabel(record["status"]),
        provenance=Provenance(
            detector=record["detector"],
            score=record["score"],
            cue=record.get("cue"),
            fallback_used=record.get("fallback_used", False),
            conflict=record.get("conflict", False),
        ),
    )


def review_record(decision: ReviewDecision) -> dict:
    return {
        "type": "decision",
        "statement_id": decision.statement_id,
        "sentence_index": decision.sentence_index,
        "criterion": decision.criterion.value,
        "verdict": decision.verdict,
        "reviewer_id": decision.reviewer_id,
        "timestamp": decision.timestamp,
        "revision": decision.revision,
    }


def determination_record(determination: ComplianceDetermination) -> dict:
    return {
        "type": "determination",
        "statement_id": determination.statement_id,
        "criterion": determination.criterion.value,
        "decision": determination.decision,
        "cited_sentences": list(determination.cited_sentences),
        "reviewer_id": determination.reviewer_id,
        "timestamp": determination.timestamp,
    }
