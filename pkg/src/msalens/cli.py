"""Command-line interface.

Verbs: ingest, train, classify, explain, evidence, run, report, export, serve.
Stage verbs operate on a store directory (the five-file JSONL bundle); `run`
executes the whole pipeline over an input file and exports a fresh bundle.
The report path writes delimited tables plus matplotlib figures side by side.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import click

from .backends import BackendDescriptor, build_backend, predict_statement
from .corpus import build_context, iter_statement_records, statement_from_record
from .criteria import CRITERIA, default_mapping
from .errors import MsaLensError
from .evidence import NliBackendConfig, NliClient, evidence_status
from .explain import attribute, stable_cell_seed
from .metrics import FACETS, StatementPredictions, compliance_fraction, trend_report
from .model import NativeModel, TrainConfig, TrainingExample, train_native
from .pipeline import PipelineConfig, run_pipeline
from .store import Store
from .synth import bundled_sample_path, generate_separable_corpus


def _load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    return json.loads(Path(path).read_text(encoding="utf-8"))


def _descriptor(ctx_obj: dict, model_path: str | None, endpoint: str | None) -> BackendDescriptor:
    kind = ctx_obj.get("backend", "native")
    if kind in ("native", "NativeLinear"):
        return BackendDescriptor(kind="NativeLinear", model_path=model_path or ctx_obj.get("model_path"))
    return BackendDescriptor(
        kind="RemoteYesNo",
        endpoint=endpoint or ctx_obj.get("endpoint"),
        template_ids=ctx_obj.get("template_ids", {}),
        default_template_id=ctx_obj.get("default_template_id", "zero_shot"),
    )


def _pipeline_config(ctx_obj: dict, model_path: str | None, endpoint: str | None) -> PipelineConfig:
    nli_endpoint = ctx_obj.get("nli_endpoint")
    return PipelineConfig(
        backend=_descriptor(ctx_obj, model_path, endpoint),
        context_budget=ctx_obj["context_budget"],
        threshold=ctx_obj["threshold"],
        seed=ctx_obj["seed"],
        workers=ctx_obj.get("workers", 1),
        nli=NliBackendConfig(endpoint=nli_endpoint) if nli_endpoint else None,
    )


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None, help="JSON config file.")
@click.option("--backend", type=click.Choice(["native", "remote"]), default=None, help="Backend kind.")
@click.option("--context-budget", type=int, default=None, help="Context word budget.")
@click.option("--threshold", type=float, default=None, help="Relevance threshold.")
@click.option("--seed", type=int, default=None, help="Random seed.")
@click.pass_context
def main(ctx, config_path, backend, context_budget, threshold, seed):
    """Compliance analysis engine for modern slavery statements."""
    obj = {
        "backend": "native",
        "context_budget": 100,
        "threshold": 0.5,
        "seed": 0,
    }
    obj.update(_load_config_file(config_path))
    if backend is not None:
        obj["backend"] = backend
    if context_budget is not None:
        obj["context_budget"] = context_budget
    if threshold is not None:
        obj["threshold"] = threshold
    if seed is not None:
        obj["seed"] = seed
    ctx.obj = obj


@main.command()
@click.argument("input_file", type=click.Path(exists=True))
@click.option("--store", "store_dir", type=click.Path(), required=True, help="Store bundle directory.")
def ingest(input_file, store_dir):
    """Ingest a statements JSONL file into a store."""
    store = Store.import_bundle(store_dir) if Path(store_dir, "statements.jsonl").exists() else Store()
    ok, failed = 0, 0
    for lineno, record, error in iter_statement_records(
        Path(input_file).read_text(encoding="utf-8").splitlines()
    ):
        if error is not None:
            click.echo(f"line {lineno}: {error}", err=True)
            failed += 1
            continue
        try:
            store.put_statement(statement_from_record(record))
            ok += 1
        except MsaLensError as exc:
            click.echo(f"line {lineno}: {type(exc).__name__}: {exc}", err=True)
            failed += 1
    store.export_bundle(store_dir)
    click.echo(f"ingested {ok} statements into {store_dir} ({failed} failed)")


@main.command()
@click.argument("examples_file", type=click.Path(exists=True), required=False)
@click.option("--synthetic", type=int, default=None, help="Generate N synthetic sentences per criterion instead.")
@click.option("--out", "out_path", type=click.Path(), required=True, help="Model output path.")
@click.option("--epochs", type=int, default=20)
@click.option("--learning-rate", type=float, default=0.1)
@click.option("--l2", type=float, default=1e-4)
@click.option("--batch-size", type=int, default=64)
@click.pass_obj
def train(obj, examples_file, synthetic, out_path, epochs, learning_rate, l2, batch_size):
    """Train the native classifier from labeled examples JSONL (or --synthetic)."""
    if synthetic:
        examples = generate_separable_corpus(synthetic, seed=obj["seed"])
    elif examples_file:
        examples = []
        for line in Path(examples_file).read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            record = json.loads(line)
            examples.append(
                TrainingExample(
                    sentence=record["sentence"],
                    context=record.get("context", ""),
                    labels={c.value: bool(record["labels"].get(c.value, False)) for c in CRITERIA},
                )
            )
    else:
        raise click.UsageError("provide EXAMPLES_FILE or --synthetic N")
    config = TrainConfig(
        learning_rate=learning_rate, epochs=epochs, l2=l2, batch_size=batch_size, seed=obj["seed"]
    )
    model = train_native(examples, config)
    model.save(out_path)
    losses = ", ".join(f"{c.value}={model.final_losses[c]:.4f}" for c in CRITERIA)
    click.echo(f"trained on {len(examples)} examples; final losses: {losses}")
    click.echo(f"model written to {out_path}")


@main.command()
@click.option("--store", "store_dir", type=click.Path(exists=True), required=True)
@click.option("--model", "model_path", type=click.Path(exists=True), default=None)
@click.option("--endpoint", default=None, help="Remote backend endpoint.")
@click.pass_obj
def classify(obj, store_dir, model_path, endpoint):
    """Predict relevance for every stored statement."""
    store = Store.import_bundle(store_dir)
    backend = build_backend(_descriptor(obj, model_path, endpoint))
    for sid in store.statement_ids():
        statement = store.get_statement(sid)
        matrix = predict_statement(backend, statement, obj["context_budget"], obj["threshold"])
        store.put_predictions(sid, matrix.cells())
        click.echo(f"{sid}: {len(matrix.relevant_cells())} relevant cells")
    store.export_bundle(store_dir)


@main.command()
@click.option("--store", "store_dir", type=click.Path(exists=True), required=True)
@click.option("--model", "model_path", type=click.Path(exists=True), default=None)
@click.option("--endpoint", default=None)
@click.option("--statement", "statement_id", default=None, help="Limit to one statement.")
@click.option("--sentence", "sentence_index", type=int, default=None, help="Limit to one sentence.")
@click.option("--criterion", "criterion_key", default=None, help="Limit to one criterion.")
@click.option("--plot", "plot_path", type=click.Path(), default=None, help="Write a heatmap PNG.")
@click.pass_obj
def explain(obj, store_dir, model_path, endpoint, statement_id, sentence_index, criterion_key, plot_path):
    """Compute token attributions for relevant cells (or one chosen cell)."""
    store = Store.import_bundle(store_dir)
    backend = build_backend(_descriptor(obj, model_path, endpoint))
    ids = [statement_id] if statement_id else store.statement_ids()
    last = None
    for sid in ids:
        statement = store.get_statement(sid)
        from .backends import RelevancePrediction

        for cell in store.get_predictions(sid):
            if not isinstance(cell, RelevancePrediction) or not cell.relevant:
                continue
            if sentence_index is not None and cell.sentence_index != sentence_index:
                continue
            if criterion_key is not None and cell.criterion.value != criterion_key:
                continue
            window = build_context(statement, cell.sentence_index, obj["context_budget"])
            attribution = attribute(
                backend,
                cell.criterion,
                statement.sentences[cell.sentence_index].text,
                window,
                seed=stable_cell_seed(obj["seed"], sid, cell.sentence_index, cell.criterion),
            )
            store.put_attribution(sid, cell.sentence_index, cell.criterion, attribution)
            last = attribution
            click.echo(
                f"{sid}[{cell.sentence_index}] {cell.criterion.value}: "
                f"base={attribution.base_value:.3f} sum(phi)={attribution.total():+.3f} ({attribution.method})"
            )
    store.export_bundle(store_dir)
    if plot_path and last is not None:
        from .plots import render_attribution

        render_attribution(last, plot_path)
        click.echo(f"heatmap written to {plot_path}")


@main.command()
@click.option("--store", "store_dir", type=click.Path(exists=True), required=True)
@click.option("--nli-endpoint", default=None, help="Remote NLI endpoint for negative evidence.")
@click.pass_obj
def evidence(obj, store_dir, nli_endpoint):
    """Assign evidence status to every relevant cell."""
    store = Store.import_bundle(store_dir)
    endpoint = nli_endpoint or obj.get("nli_endpoint")
    nli = NliClient(NliBackendConfig(endpoint=endpoint)) if endpoint else None
    from .backends import RelevancePrediction

    counts: dict[str, int] = {}
    for sid in store.statement_ids():
        statement = store.get_statement(sid)
        for cell in store.get_predictions(sid):
            if not isinstance(cell, RelevancePrediction) or not cell.relevant:
                continue
            status = evidence_status(
                statement.sentences[cell.sentence_index].text, cell.criterion, cell, nli
            )
            store.put_evidence(sid, cell.sentence_index, cell.criterion, status)
            counts[status.label.value] = counts.get(status.label.value, 0) + 1
    store.export_bundle(store_dir)
    click.echo("evidence statuses: " + json.dumps(counts, sort_keys=True))


@main.command()
@click.argument("input_file", type=click.Path(exists=True), required=False)
@click.option("--model", "model_path", type=click.Path(exists=True), default=None)
@click.option("--endpoint", default=None)
@click.option("--out", "out_dir", type=click.Path(), required=True, help="Export bundle directory.")
@click.option("--sample", is_flag=True, help="Use the bundled 3-statement sample as input.")
@click.pass_obj
def run(obj, input_file, model_path, endpoint, out_dir, sample):
    """Run the full pipeline over a statements JSONL file and export the bundle."""
    if sample:
        input_file = str(bundled_sample_path())
    if not input_file:
        raise click.UsageError("provide INPUT_FILE or --sample")
    config = _pipeline_config(obj, model_path, endpoint)
    pipeline_run, _ = run_pipeline(input_file, config, export_dir=out_dir)
    failed = [s for s in pipeline_run.statements if s.error]
    click.echo(
        f"run {pipeline_run.run_id}: {len(pipeline_run.statements) - len(failed)} ok, "
        f"{len(failed)} failed, bundle in {out_dir}"
    )
    for status in failed:
        where = status.statement_id or f"line {status.line_number}"
        click.echo(f"  failed {where}: {status.error}", err=True)


@main.command()
@click.option("--store", "store_dir", type=click.Path(exists=True), required=True)
@click.option("--facet", type=click.Choice(FACETS), default="sector")
@click.option("--out", "out_dir", type=click.Path(), required=True)
def report(store_dir, facet, out_dir):
    """Write compliance and trend tables (CSV + JSON) with matplotlib figures."""
    from .plots import render_trend

    store = Store.import_bundle(store_dir)
    items = [
        StatementPredictions(
            statement=store.get_statement(sid), relevance=store.effective_relevance(sid)
        )
        for sid in store.statement_ids()
    ]
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    mapping = default_mapping()

    with open(out / "compliance.csv", "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["criterion", "display_name", "compliance_fraction"])
        for criterion in CRITERIA:
            writer.writerow(
                [
                    criterion.value,
                    mapping.info(criterion).display_name,
                    f"{compliance_fraction(items, criterion):.6f}",
                ]
            )

    trend = trend_report(items, facet)
    with open(out / f"trend_{facet}.csv", "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["facet_value", "statement_count", *(c.value for c in CRITERIA)])
        for row in trend.rows:
            writer.writerow(
                [
                    row.facet_value,
                    row.statement_count,
                    *(f"{row.fractions[c.value]:.6f}" for c in CRITERIA),
                ]
            )
    (out / f"trend_{facet}.json").write_text(
        json.dumps(trend.to_json(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    render_trend(trend, out / f"trend_{facet}.png")
    click.echo(f"report written to {out} (compliance.csv, trend_{facet}.csv/.json/.png)")


@main.command()
@click.option("--store", "store_dir", type=click.Path(exists=True), required=True)
@click.option("--out", "out_dir", type=click.Path(), required=True)
def export(store_dir, out_dir):
    """Re-export the store as a fresh JSONL bundle."""
    store = Store.import_bundle(store_dir)
    store.export_bundle(out_dir)
    click.echo(f"bundle exported to {out_dir}")


@main.command()
@click.option("--store", "store_dir", type=click.Path(), required=True)
@click.option("--model", "model_path", type=click.Path(exists=True), default=None)
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8000)
@click.pass_obj
def serve(obj, store_dir, model_path, host, port):
    """Serve the review API over the store."""
    import uvicorn

    from .service import create_app

    store = (
        Store.import_bundle(store_dir)
        if Path(store_dir, "statements.jsonl").exists()
        else Store()
    )
    model = NativeModel.load(model_path) if model_path else None
    config = _pipeline_config(obj, model_path, None) if model_path else None
    app = create_app(store, model=model, config=config)
    uvicorn.run(app, host=host, port=port, log_level="warning")


if __name__ == "__main__":
    main()
