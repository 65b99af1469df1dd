"""HTTP+JSON gateway for the review console and pipeline control.

Bodies use the store schemas verbatim. Reads serve consistent snapshots;
review writes are optimistic via expected_revision.
"""

from __future__ import annotations

from typing import Literal

from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .corpus import iter_statement_records, statement_from_record
from .criteria import CRITERIA, Criterion
from .errors import (
    MsaLensError,
    NotFound,
    StaleRevision,
    UnknownTarget,
    VersionConflict,
)
from .metrics import FACETS, StatementPredictions, trend_report
from .model import NativeModel
from .pipeline import PipelineConfig, execute_run
from .store import (
    Store,
    attribution_record,
    determination_record,
    evidence_record,
    prediction_record,
    review_record,
    statement_record,
)


class ReviewBody(BaseModel):
    statement_id: str
    sentence_index: int
    criterion: str
    verdict: Literal["Accept", "OverrideRelevant", "OverrideIrrelevant"]
    reviewer_id: str
    expected_revision: int | None = None


class DeterminationBody(BaseModel):
    statement_id: str
    criterion: str
    decision: Literal["Met", "NotMet", "Unclear"]
    cited_sentences: list[int]
    reviewer_id: str


class RunBody(BaseModel):
    statement_ids: list[str] | None = None  # default: every stored statement
    context_budget: int | None = None
    threshold: float | None = None
    seed: int | None = None


def create_app(
    store: Store,
    model: NativeModel | None = None,
    config: PipelineConfig | None = None,
) -> FastAPI:
    app = FastAPI(title="msalens gateway")
    app.state.store = store
    app.state.model = model
    app.state.config = config

    @app.exception_handler(MsaLensError)
    async def engine_error(request: Request, exc: MsaLensError):
        status = 500
        if isinstance(exc, (NotFound, UnknownTarget)):
            status = 404
        elif isinstance(exc, (StaleRevision, VersionConflict)):
            status = 409
        return JSONResponse(
            status_code=status, content={"error": type(exc).__name__, "detail": str(exc)}
        )

    @app.get("/statements")
    def list_statements():
        out = []
        for sid in store.statement_ids():
            statement = store.get_statement(sid)
            record = statement_record(statement)
            out.append(
                {
                    "id": statement.id,
                    "sentence_count": len(statement.sentences),
                    "metadata": record["metadata"],
                }
            )
        return {"statements": out}

    @app.get("/statements/{statement_id}")
    def get_statement(statement_id: str):
        statement = store.get_statement(statement_id)
        return {
            "statement": statement_record(statement),
            "predictions": [
                prediction_record(statement_id, cell) for cell in store.get_predictions(statement_id)
            ],
            "attributions": [
                attribution_record(statement_id, index, criterion_value, attribution)
                for (index, criterion_value), attribution in sorted(
                    store.get_attributions(statement_id).items()
                )
            ],
            "evidence": [
                evidence_record(statement_id, index, criterion_value, status)
                for (index, criterion_value), status in sorted(store.get_evidence(statement_id).items())
            ],
            "reviews": [review_record(d) for d in store.reviews(statement_id)],
            "determinations": [determination_record(d) for d in store.determinations(statement_id)],
            "effective_relevance": store.effective_relevance(statement_id),
        }

    @app.post("/statements")
    async def upload_statements(request: Request):
        body = (await request.body()).decode("utf-8")
        ingested = []
        errors = []
        for lineno, record, error in iter_statement_records(body.splitlines()):
            if error is not None:
                errors.append({"line": lineno, "error": error})
                continue
            try:
                statement = statement_from_record(record)
                store.put_statement(statement)
                ingested.append(statement.id)
            except MsaLensError as exc:
                errors.append({"line": lineno, "error": f"{type(exc).__name__}: {exc}"})
        return {"ingested": ingested, "errors": errors}

    @app.post("/runs")
    def start_run(body: RunBody):
        if app.state.config is None:
            raise HTTPException(status_code=400, detail="service started without a pipeline config")
        base: PipelineConfig = app.state.config
        cfg = PipelineConfig(
            backend=base.backend,
            context_budget=body.context_budget if body.context_budget is not None else base.context_budget,
            threshold=body.threshold if body.threshold is not None else base.threshold,
            seed=body.seed if body.seed is not None else base.seed,
            exact_limit=base.exact_limit,
            sample_budget=base.sample_budget,
            attribute_all_cells=base.attribute_all_cells,
            workers=base.workers,
            nli=base.nli,
        )
        ids = body.statement_ids if body.statement_ids is not None else store.statement_ids()
        statements = [store.get_statement(sid) for sid in ids]
        run = execute_run(store, statements, cfg, model=app.state.model)
        return run.to_json()

    @app.get("/runs/{run_id}")
    def get_run(run_id: str):
        return store.get_run(run_id)

    @app.post("/reviews")
    def post_review(body: ReviewBody):
        decision = store.append_review(
            statement_id=body.statement_id,
            sentence_index=body.sentence_index,
            criterion=Criterion(body.criterion),
            verdict=body.verdict,
            reviewer_id=body.reviewer_id,
            expected_revision=body.expected_revision,
        )
        return review_record(decision)

    @app.post("/determinations")
    def post_determination(body: DeterminationBody):
        try:
            determination = store.append_determination(
                statement_id=body.statement_id,
                criterion=Criterion(body.criterion),
                decision=body.decision,
                cited_sentences=body.cited_sentences,
                reviewer_id=body.reviewer_id,
            )
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return determination_record(determination)

    @app.get("/reports/{run_id}")
    def get_report(run_id: str, facet: str = "sector"):
        if facet not in FACETS:
            raise HTTPException(status_code=422, detail=f"facet must be one of {FACETS}")
        run = store.get_run(run_id)
        items = []
        for entry in run["statements"]:
            sid = entry.get("statement_id")
            if not sid or entry.get("error"):
                continue
            items.append(
                StatementPredictions(
                    statement=store.get_statement(sid),
                    relevance=store.effective_relevance(sid),
                )
            )
        report = trend_report(items, facet)
        compliance = {
            c.value: (
                sum(1 for item in items if item.has_relevant(c)) / len(items) if items else 0.0
            )
            for c in CRITERIA
        }
        return {"run_id": run_id, "compliance": compliance, "trend": report.to_json()}

    return app
