"""Top-level command line interface.

Commands: corpus validate, segment, labels build/audit, train, eval,
analyze-entailment, predict, serve.  Every command reads the config file
named by $BIAE_CONFIG (or --config) and lets flags override it.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import corpus as corpus_mod
from . import evaluation, qgen, training
from .config import AppConfig, apply_overrides, load_app_config
from .encoder import encoder_from_name
from .errors import ValidationError
from .pipeline import PipelinePredictor
from .segmenter import build_premise_set, segment_document, segment_scenario
from .service import DialogueEngine, create_app
from .weak_labels import (agreement_rate, align_labels, cache_record,
                          embedding_oracle, entailment_labels,
                          labels_from_record, read_label_cache,
                          write_label_cache)


@click.group()
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="Config file (defaults to $BIAE_CONFIG).")
@click.pass_context
def main(ctx, config_path):
    ctx.obj = load_app_config(config_path)


def _cfg(ctx) -> AppConfig:
    return ctx.obj


@main.group()
def corpus():
    """Corpus inspection."""


@corpus.command("validate")
@click.argument("path", type=click.Path(exists=True))
@click.option("--split", default="train", show_default=True)
def corpus_validate(path, split):
    """Print instance count and all schema violations; exit 0 iff none."""
    errors = list(corpus_mod.iter_record_errors(path, split))
    instances = None
    if not errors:
        instances = corpus_mod.load_dataset(path, split)
        click.echo(f"{len(instances)} instances, 0 schema violations")
        return
    with open(corpus_mod._resolve_split_path(path, split), encoding="utf-8") as f:
        total = len(json.load(f))
    click.echo(f"{total} records, {len(errors)} schema violations")
    for index, message in errors:
        click.echo(f"  record {index}: {message}")
    sys.exit(1)


@main.command()
@click.option("--doc", "doc_path", type=click.Path(exists=True),
              help="Segment a document file.")
@click.option("--instance", "instance_id", default=None,
              help="Segment one corpus instance by utterance id.")
@click.option("--split", default="dev", show_default=True)
@click.option("--data", "data_dir", default=None)
@click.pass_context
def segment(ctx, doc_path, instance_id, split, data_dir):
    """Print numbered hypothesis units (and premises for an instance)."""
    cfg = apply_overrides(_cfg(ctx), data_dir=data_dir)
    if doc_path:
        document = Path(doc_path).read_text(encoding="utf-8")
        for h in segment_document(document):
            click.echo(f"[{h.index}] {h.text}")
        return
    if not instance_id:
        raise click.UsageError("pass --doc or --instance")
    instances = corpus_mod.load_dataset(cfg.data_dir, split)
    matches = [i for i in instances if i.utterance_id == instance_id]
    if not matches:
        raise click.ClickException(f"no instance {instance_id!r} in {split}")
    instance = matches[0]
    click.echo("hypotheses:")
    for h in segment_document(instance.document):
        click.echo(f"  [{h.index}] {h.text}")
    click.echo("premises:")
    for p in build_premise_set(segment_scenario(instance.scenario), instance.history):
        click.echo(f"  [{p.index}] ({p.source.value}) {p.text}")


@main.group()
def labels():
    """Weak supervision labels."""


@labels.command("build")
@click.option("--split", default="train", show_default=True)
@click.option("--oracle", "oracle_name", default=None)
@click.option("--data", "data_dir", default=None)
@click.option("--out", "out_path", default=None, help="Cache file path.")
@click.pass_context
def labels_build(ctx, split, oracle_name, data_dir, out_path):
    """Compute alignment + entailment labels offline and cache them."""
    cfg = apply_overrides(_cfg(ctx), oracle=oracle_name, data_dir=data_dir)
    oracle = embedding_oracle(cfg.oracle)
    instances = corpus_mod.load_dataset(cfg.data_dir, split)
    records = []
    for instance in instances:
        hypotheses = segment_document(instance.document)
        premises = build_premise_set(segment_scenario(instance.scenario),
                                     instance.history)
        alignment = align_labels(hypotheses, premises, oracle)
        entailment = entailment_labels(hypotheses, premises, alignment)
        records.append(cache_record(instance.utterance_id, oracle.name,
                                    alignment, entailment))
    out = Path(out_path or f"labels_{split}.jsonl")
    write_label_cache(out, records)
    click.echo(f"wrote {len(records)} label records to {out}")


@labels.command("audit")
@click.option("--gold", "gold_path", type=click.Path(exists=True), required=True,
              help="JSON {utterance_id: {premise_index: hypothesis_index}}.")
@click.option("--cache", "cache_path", type=click.Path(exists=True), required=True)
def labels_audit(gold_path, cache_path):
    """Agreement of cached alignments with a gold mapping."""
    gold = json.loads(Path(gold_path).read_text(encoding="utf-8"))
    cache = read_label_cache(cache_path)
    agreements = []
    for utterance_id, mapping in gold.items():
        record = cache.get(utterance_id)
        if record is None:
            raise click.ClickException(f"cache misses instance {utterance_id}")
        alignment, _ = labels_from_record(record)
        gold_map = {int(j): int(i) for j, i in mapping.items()}
        agreements.append((len(gold_map),
                           agreement_rate(alignment, gold_map)))
    total = sum(n for n, _ in agreements)
    weighted = sum(n * rate for n, rate in agreements) / total
    click.echo(f"agreement rate: {weighted:.4f} over {total} premises")


@main.command()
@click.option("--split", default="train", show_default=True)
@click.option("--data", "data_dir", default=None)
@click.option("--encoder", "encoder_name", default=None)
@click.option("--oracle", "oracle_name", default=None)
@click.option("--labels", "labels_path", type=click.Path(exists=True), default=None,
              help="Label cache from `labels build`.")
@click.option("--epochs", type=int, default=None)
@click.option("--batch-size", type=int, default=None)
@click.option("--learning-rate", type=float, default=None)
@click.option("--dropout", type=float, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--out", "out_path", default=None, help="Checkpoint path.")
@click.option("--curve", "curve_path", default=None, help="Loss curve CSV path.")
@click.pass_context
def train(ctx, split, data_dir, encoder_name, oracle_name, labels_path, epochs,
          batch_size, learning_rate, dropout, seed, out_path, curve_path):
    """Train the decision model and write a checkpoint."""
    cfg = apply_overrides(_cfg(ctx), data_dir=data_dir, encoder=encoder_name,
                          oracle=oracle_name, epochs=epochs,
                          batch_size=batch_size, learning_rate=learning_rate,
                          dropout=dropout, seed=seed)
    instances = corpus_mod.load_dataset(cfg.data_dir, split)
    encoder = encoder_from_name(cfg.encoder)
    label_cache = read_label_cache(labels_path) if labels_path else None
    oracle = None if label_cache else embedding_oracle(cfg.oracle)
    train_config = training.TrainConfig(
        decision_weight=cfg.decision_weight,
        learning_rate=cfg.learning_rate,
        epochs=cfg.epochs,
        batch_size=cfg.batch_size,
        dropout=cfg.dropout,
        warmup_fraction=cfg.warmup_fraction,
        seed=cfg.seed,
        encoder_name=cfg.encoder,
    )
    examples = training.prepare_examples(instances, encoder, oracle,
                                         label_cache=label_cache)
    result = training.train_decision(examples, encoder, train_config)
    out = Path(out_path or cfg.checkpoint)
    training.save_checkpoint(out, result.parameters, encoder, train_config)
    if curve_path:
        Path(curve_path).write_text(
            "step,loss\n" + "".join(f"{i},{loss}\n" for i, loss
                                    in enumerate(result.loss_curve)),
            encoding="utf-8")
    click.echo(f"trained {len(examples)} instances for {len(result.loss_curve)} "
               f"steps; train accuracy {result.train_accuracy:.3f}; "
               f"checkpoint -> {out}")


@main.command("eval")
@click.option("--checkpoint", "checkpoint_path", type=click.Path(exists=True),
              required=True)
@click.option("--split", default="dev", show_default=True)
@click.option("--data", "data_dir", default=None)
@click.option("--report", "report_path", default="report.json", show_default=True)
@click.pass_context
def eval_command(ctx, checkpoint_path, split, data_dir, report_path):
    """Evaluate a checkpoint; writes a JSON report and a CSV of predictions."""
    cfg = apply_overrides(_cfg(ctx), data_dir=data_dir)
    instances = corpus_mod.load_dataset(cfg.data_dir, split)
    predictor = PipelinePredictor.from_checkpoint(checkpoint_path)
    result = evaluation.evaluate(instances, predictor)
    evaluation.write_report_files(result, report_path)
    click.echo(f"micro {result.report.micro_accuracy:.4f} "
               f"macro {result.report.macro_accuracy:.4f} -> {report_path}")


@main.command("analyze-entailment")
@click.option("--checkpoint", "checkpoint_path", type=click.Path(exists=True),
              required=True)
@click.option("--split", default="dev", show_default=True)
@click.option("--data", "data_dir", default=None)
@click.option("--oracle", "oracle_name", default=None)
@click.option("--out", "out_path", default="entailment_analysis.json",
              show_default=True)
@click.pass_context
def analyze_entailment_command(ctx, checkpoint_path, split, data_dir,
                               oracle_name, out_path):
    """Per-document state-agreement stats for success/fail predictions,
    plus an agreement histogram (JSON table + SVG chart)."""
    cfg = apply_overrides(_cfg(ctx), data_dir=data_dir, oracle=oracle_name)
    instances = corpus_mod.load_dataset(cfg.data_dir, split)
    predictor = PipelinePredictor.from_checkpoint(checkpoint_path)
    out = Path(out_path)
    report = evaluation.analyze_entailment(
        instances, predictor, oracle=embedding_oracle(cfg.oracle),
        svg_path=out.with_suffix(".svg"))
    out.write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")
    click.echo(f"analysis -> {out}, histogram -> {out.with_suffix('.svg')}")


@main.command()
@click.option("--json", "json_path", type=click.Path(exists=True), required=True,
              help="File with {document, question, scenario?, history?}.")
@click.option("--checkpoint", "checkpoint_path", type=click.Path(exists=True),
              required=True)
def predict(json_path, checkpoint_path):
    """One-shot decision (plus follow-up question when clarification is
    needed) for an instance-shaped JSON file."""
    payload = json.loads(Path(json_path).read_text(encoding="utf-8"))
    history = tuple(
        corpus_mod.HistoryTurn(t["follow_up_question"],
                               corpus_mod.Answer.parse(t["follow_up_answer"]))
        for t in payload.get("history", []))
    predictor = PipelinePredictor.from_checkpoint(checkpoint_path)
    try:
        result = predictor.predict(payload["document"], payload["question"],
                                   payload.get("scenario", ""), history)
    except ValidationError as exc:
        raise click.ClickException(str(exc))
    click.echo(json.dumps({
        "decision": result.decision.name,
        "probabilities": result.probabilities.tolist(),
        "follow_up": result.follow_up,
        "hypotheses": result.hypotheses,
    }, indent=2))


@main.command()
@click.option("--port", type=int, default=None)
@click.option("--host", default=None)
@click.option("--checkpoint", "checkpoint_path", type=click.Path(exists=True),
              required=True)
@click.option("--turn-cap", type=int, default=None)
@click.pass_context
def serve(ctx, port, host, checkpoint_path, turn_cap):
    """Serve the dialogue HTTP API."""
    import uvicorn

    cfg = apply_overrides(_cfg(ctx), port=port, host=host, turn_cap=turn_cap)
    predictor = PipelinePredictor.from_checkpoint(checkpoint_path)
    engine = DialogueEngine(predictor, turn_cap=cfg.turn_cap)
    uvicorn.run(create_app(engine), host=cfg.host, port=cfg.port)


if __name__ == "__main__":
    main()
