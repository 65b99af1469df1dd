"""Pipeline orchestration: ingest -> classify -> explain -> evidence -> persist.

Per-statement failures are isolated in the run status; with the native
backend and a fixed seed the whole run, including the exported bundle, is
byte-for-byte reproducible.
"""

from __future__ import annotations

import hashlib
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .backends import (
    DEFAULT_THRESHOLD,
    Backend,
    BackendDescriptor,
    build_backend,
)
from .corpus import DEFAULT_CONTEXT_BUDGET, Statement, build_context, iter_statement_records, statement_from_record
from .errors import MsaLensError
from .evidence import NliBackendConfig, NliClient, evidence_status
from .explain import DEFAULT_SAMPLE_BUDGET, EXACT_TOKEN_LIMIT, attribute, stable_cell_seed
from .model import NativeModel
from .store import Store

STAGES = ("ingest", "classify", "explain", "evidence")


@dataclass(frozen=True)
class PipelineConfig:
    backend: BackendDescriptor
    context_budget: int = DEFAULT_CONTEXT_BUDGET
    threshold: float = DEFAULT_THRESHOLD
    seed: int = 0
    exact_limit: int = EXACT_TOKEN_LIMIT
    sample_budget: int = DEFAULT_SAMPLE_BUDGET
    attribute_all_cells: bool = False  # default: only relevant cells get attributions
    workers: int = 1
    nli: NliBackendConfig | None = None

    def canonical(self) -> dict:
        return {
            "backend_kind": self.backend.kind,
            "model_path": self.backend.model_path,
            "endpoint": self.backend.endpoint,
            "context_budget": self.context_budget,
            "threshold": self.threshold,
            "seed": self.seed,
            "exact_limit": self.exact_limit,
            "sample_budget": self.sample_budget,
            "attribute_all_cells": self.attribute_all_cells,
        }


@dataclass
class StatementStatus:
    statement_id: str | None
    line_number: int | None = None
    stages: dict[str, str] = field(default_factory=dict)  # stage -> "ok" | "failed" | "skipped"
    error: str | None = None


@dataclass
class PipelineRun:
    run_id: str
    config: dict
    statements: list[StatementStatus] = field(default_factory=list)
    timings: dict[str, float] = field(default_factory=dict)

    @property
    def statement_ids(self) -> list[str]:
        return [s.statement_id for s in self.statements if s.statement_id]

    def to_json(self) -> dict:
        return {
            "run_id": self.run_id,
            "config": self.config,
            "statements": [
                {
                    "statement_id": s.statement_id,
                    "line_number": s.line_number,
                    "stages": s.stages,
                    "error": s.error,
                }
                for s in self.statements
            ],
            "timings": self.timings,
        }


def _run_id(statement_ids: list[str], config: PipelineConfig) -> str:
    payload = json.dumps(
        {"statements": sorted(statement_ids), "config": config.canonical()}, sort_keys=True
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


def _process_statement(
    statement: Statement,
    backend: Backend,
    config: PipelineConfig,
    store: Store,
    status: StatementStatus,
    nli_client: NliClient | None,
) -> None:
    from .backends import predict_statement

    matrix = predict_statement(backend, statement, config.context_budget, config.threshold)
    store.put_predictions(statement.id, matrix.cells())
    status.stages["classify"] = "ok"

    targets = matrix.predictions() if config.attribute_all_cells else matrix.relevant_cells()
    for cell in targets:
        sentence = statement.sentences[cell.sentence_index]
        window = build_context(statement, cell.sentence_index, config.context_budget)
        attribution = attribute(
            backend,
            cell.criterion,
            sentence.text,
            window,
            exact_limit=config.exact_limit,
            sample_budget=config.sample_budget,
            seed=stable_cell_seed(config.seed, statement.id, cell.sentence_index, cell.criterion),
            max_concurrency=config.backend.max_concurrency,
        )
        store.put_attribution(statement.id, cell.sentence_index, cell.criterion, attribution)
    status.stages["explain"] = "ok"

    for cell in matrix.relevant_cells():
        sentence = statement.sentences[cell.sentence_index]
        result = evidence_status(sentence.text, cell.criterion, cell, nli_client)
        store.put_evidence(statement.id, cell.sentence_index, cell.criterion, result)
    status.stages["evidence"] = "ok"


def execute_run(
    store: Store,
    statements: list[Statement],
    config: PipelineConfig,
    model: NativeModel | None = None,
    failures: list[StatementStatus] | None = None,
) -> PipelineRun:
    """Run classify/explain/evidence for already-ingested statements."""
    backend = build_backend(config.backend, model=model)
    nli_client = NliClient(config.nli) if config.nli else None
    run = PipelineRun(
        run_id=_run_id([s.id for s in statements], config),
        config=config.canonical(),
    )
    if failures:
        run.statements.extend(failures)

    t0 = time.perf_counter()
    statuses = []
    for statement in statements:
        status = StatementStatus(statement_id=statement.id, stages={"ingest": "ok"})
        statuses.append(status)
        run.statements.append(status)

    def work(pair: tuple[Statement, StatementStatus]) -> None:
        statement, status = pair
        try:
            _process_statement(statement, backend, config, store, status, nli_client)
        except MsaLensError as exc:
            status.error = f"{type(exc).__name__}: {exc}"
            for stage in STAGES[1:]:
                status.stages.setdefault(stage, "failed")

    pairs = list(zip(statements, statuses))
    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            list(pool.map(work, pairs))
    else:
        for pair in pairs:
            work(pair)

    run.timings["total_seconds"] = time.perf_counter() - t0
    store.put_run(run.to_json())
    return run


def run_pipeline(
    input_path: str | Path,
    config: PipelineConfig,
    store: Store | None = None,
    model: NativeModel | None = None,
    export_dir: str | Path | None = None,
) -> tuple[PipelineRun, Store]:
    """Ingest a statements JSONL file and run the whole pipeline over it.

    Malformed lines and statements that fail validation are marked failed in
    the run status without aborting the rest. When export_dir is given the
    five-file bundle is written there (plus run.json with the run status).
    """
    store = store or Store()
    statements: list[Statement] = []
    failures: list[StatementStatus] = []

    lines = Path(input_path).read_text(encoding="utf-8").splitlines()
    for lineno, record, error in iter_statement_records(lines):
        if error is not None:
            failures.append(
                StatementStatus(
                    statement_id=None,
                    line_number=lineno,
                    stages={"ingest": "failed"},
                    error=error,
                )
            )
            continue
        try:
            statement = statement_from_record(record)
            store.put_statement(statement)
            statements.append(statement)
        except MsaLensError as exc:
            failures.append(
                StatementStatus(
                    statement_id=record.get("id"),
                    line_number=lineno,
                    stages={"ingest": "failed"},
                    error=f"{type(exc).__name__}: {exc}",
                )
            )

    run = execute_run(store, statements, config, model=model, failures=failures)

    if export_dir is not None:
        export_dir = Path(export_dir)
        store.export_bundle(export_dir)
        run_json = dict(run.to_json())
        run_json.pop("timings", None)  # timings vary run to run; keep the bundle reproducible
        (export_dir / "run.json").write_text(
            json.dumps(run_json, sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )
    return run, store
