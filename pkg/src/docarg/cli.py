"""Command-line interface.

Commands cover the full workflow: attach semantic parses, train, predict,
evaluate, and break down errors. Training and report outputs land under the
chosen output directory in ``checkpoints/``, ``predictions/`` and
``reports/``.
"""

from __future__ import annotations

import functools
import json
import logging
from pathlib import Path

import click

from . import __version__
from .amr import argument_coverage, attach_parses, load_parser_output
from .config import RunConfig, apply_overrides, parse_override_pair
from .corpus import FORMATS, Schema, load_corpus, save_corpus
from .errors import DocargError
from .fusion_head import EventPrediction, read_predictions, write_predictions
from .metrics import (
    distance_breakdown,
    error_examples,
    error_taxonomy,
    evaluate_all,
    format_report_text,
    write_report_json,
)
from .model import ArgumentExtractor
from .training import Trainer, load_checkpoint, predict_corpus, set_seed


def _fail_on_docarg_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except DocargError as exc:
            raise click.ClickException(str(exc)) from exc

    return wrapper


def _corpus_options(fn):
    fn = click.option(
        "--format",
        "corpus_format",
        type=click.Choice(FORMATS),
        default="normalized",
        show_default=True,
        help="Input corpus layout.",
    )(fn)
    fn = click.option(
        "--coref",
        "coref_path",
        type=click.Path(exists=True, dir_okay=False),
        default=None,
        help="Separate coreference file (wikievents layout).",
    )(fn)
    return fn


def _load(path: str, corpus_format: str, coref_path: str | None, schema: Schema | None = None):
    return load_corpus(path, format=corpus_format, coref_path=coref_path, schema=schema)


def _build_config(config_path: str | None, overrides: tuple[str, ...]) -> RunConfig:
    config = RunConfig.load(config_path) if config_path else RunConfig()
    if overrides:
        pairs = dict(parse_override_pair(p) for p in overrides)
        config = apply_overrides(config, pairs)
    return config


def _ensure_outdir(out_dir: str) -> Path:
    root = Path(out_dir)
    for sub in ("checkpoints", "predictions", "reports"):
        (root / sub).mkdir(parents=True, exist_ok=True)
    return root


@click.group()
@click.version_option(version=__version__, prog_name="docarg")
@click.option("-v", "--verbose", is_flag=True, help="Debug-level logging.")
def main(verbose: bool) -> None:
    """Document-level event argument extraction."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )


@main.command("prepare-amr")
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option(
    "--parses",
    "parses_path",
    required=True,
    type=click.Path(exists=True),
    help="Semantic-parser output (JSONL or a directory of per-document files).",
)
@click.option("--out", "out_path", required=True, type=click.Path())
@_corpus_options
@_fail_on_docarg_errors
def prepare_amr(
    corpus_path: str,
    parses_path: str,
    out_path: str,
    corpus_format: str,
    coref_path: str | None,
) -> None:
    """Attach sentence-level semantic graphs to a corpus and report coverage."""
    corpus = _load(corpus_path, corpus_format, coref_path)
    graphs = load_parser_output(parses_path)
    corpus = attach_parses(corpus, graphs)
    coverage = argument_coverage(corpus)
    save_corpus(out_path, corpus)
    click.echo(f"documents: {len(corpus)}")
    click.echo(f"argument coverage: {coverage:.4f}")
    click.echo(f"wrote {out_path}")


@main.command()
@click.option("--train", "train_path", type=click.Path(exists=True), default=None)
@click.option("--dev", "dev_path", type=click.Path(exists=True), default=None)
@click.option("--out-dir", type=click.Path(), default=None)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option(
    "--set",
    "overrides",
    multiple=True,
    metavar="SECTION.KEY=VALUE",
    help="Override one config entry (repeatable), e.g. --set head.lambda=0.2",
)
@click.option("--epochs", type=int, default=None, help="Shortcut for training.epochs.")
@click.option("--seed", type=int, default=None, help="Shortcut for training.seed.")
@_corpus_options
@_fail_on_docarg_errors
def train(
    train_path: str | None,
    dev_path: str | None,
    out_dir: str | None,
    config_path: str | None,
    overrides: tuple[str, ...],
    epochs: int | None,
    seed: int | None,
    corpus_format: str,
    coref_path: str | None,
) -> None:
    """Train a model and keep the best dev checkpoint."""
    config = _build_config(config_path, overrides)
    shortcuts: dict[str, object] = {}
    if epochs is not None:
        shortcuts["training.epochs"] = epochs
    if seed is not None:
        shortcuts["training.seed"] = seed
    if train_path is not None:
        shortcuts["data.train"] = train_path
    if dev_path is not None:
        shortcuts["data.dev"] = dev_path
    if out_dir is not None:
        shortcuts["data.out_dir"] = out_dir
    if shortcuts:
        config = apply_overrides(config, shortcuts)
    if config.data.train is None:
        raise click.UsageError("no training corpus: pass --train or set data.train")
    if config.data.out_dir is None:
        raise click.UsageError("no output directory: pass --out-dir or set data.out_dir")
    set_seed(config.training.seed)
    train_corpus = _load(config.data.train, corpus_format, coref_path)
    schema = Schema.from_corpus(train_corpus)
    dev_corpus = (
        _load(config.data.dev, corpus_format, coref_path, schema=schema)
        if config.data.dev
        else None
    )
    root = _ensure_outdir(config.data.out_dir)
    model = ArgumentExtractor(config, schema)
    trainer = Trainer(model, config, train_corpus, dev_corpus, out_dir=root)
    log = trainer.train()
    config.save(root / "config.json")
    with open(root / "schema.json", "w", encoding="utf-8") as f:
        json.dump(schema.to_dict(), f, indent=2)
    write_report_json(root / "reports" / "training_log.json", log.as_dict())
    if log.best_epoch is not None:
        click.echo(f"best epoch: {log.best_epoch} (dev_f1={log.best_dev_f1:.4f})")
    click.echo(f"checkpoints under {root / 'checkpoints'}")


@main.command()
@click.option("--checkpoint", "checkpoint_path", required=True, type=click.Path(exists=True))
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--out-dir", required=True, type=click.Path())
@click.option("--name", default="predictions", show_default=True)
@_corpus_options
@_fail_on_docarg_errors
def predict(
    checkpoint_path: str,
    corpus_path: str,
    out_dir: str,
    name: str,
    corpus_format: str,
    coref_path: str | None,
) -> None:
    """Run a trained model over a corpus and write predictions JSONL."""
    model = load_checkpoint(checkpoint_path)
    corpus = _load(corpus_path, corpus_format, coref_path, schema=model.schema)
    predictions = predict_corpus(model, corpus)
    root = _ensure_outdir(out_dir)
    out_path = root / "predictions" / f"{name}.jsonl"
    write_predictions(
        out_path,
        predictions,
        meta={
            "tool": "docarg",
            "version": __version__,
            "checkpoint": str(checkpoint_path),
            "corpus": str(corpus_path),
            "num_events": len(predictions),
        },
    )
    click.echo(f"wrote {out_path}")


@main.command()
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--checkpoint", "checkpoint_path", type=click.Path(exists=True), default=None)
@click.option("--predictions", "predictions_path", type=click.Path(exists=True), default=None)
@click.option("--out-dir", required=True, type=click.Path())
@click.option(
    "--head-fallback",
    is_flag=True,
    help="Resolve head words as the span end when dependency parses are absent.",
)
@_corpus_options
@_fail_on_docarg_errors
def evaluate(
    corpus_path: str,
    checkpoint_path: str | None,
    predictions_path: str | None,
    out_dir: str,
    head_fallback: bool,
    corpus_format: str,
    coref_path: str | None,
) -> None:
    """Score predictions (from a file or a checkpoint) against gold arguments."""
    if (checkpoint_path is None) == (predictions_path is None):
        raise click.UsageError("give exactly one of --checkpoint / --predictions")
    corpus = _load(corpus_path, corpus_format, coref_path)
    if predictions_path is not None:
        predictions, _ = read_predictions(predictions_path)
    else:
        model = load_checkpoint(checkpoint_path)
        predictions = predict_corpus(model, corpus)
    report = evaluate_all(corpus, predictions, head_fallback_to_span_end=head_fallback)
    report["distance"] = distance_breakdown(corpus, predictions)
    report["errors"] = error_taxonomy(corpus, predictions)
    root = _ensure_outdir(out_dir)
    out_path = root / "reports" / "evaluation.json"
    write_report_json(out_path, report)
    click.echo(format_report_text(report), nl=False)
    click.echo(f"wrote {out_path}")


@main.command("analyze-errors")
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--predictions", "predictions_path", required=True, type=click.Path(exists=True))
@click.option("--out-dir", required=True, type=click.Path())
@click.option(
    "--sample",
    "sample_size",
    type=int,
    default=None,
    help="Restrict the analysis to N randomly chosen events.",
)
@click.option("--seed", type=int, default=13, show_default=True, help="Sampling seed.")
@_corpus_options
@_fail_on_docarg_errors
def analyze_errors(
    corpus_path: str,
    predictions_path: str,
    out_dir: str,
    sample_size: int | None,
    seed: int,
    corpus_format: str,
    coref_path: str | None,
) -> None:
    """Bucket false positives by error kind and split scores by distance."""
    corpus = _load(corpus_path, corpus_format, coref_path)
    predictions, _ = read_predictions(predictions_path)
    if sample_size is not None:
        corpus, predictions = _sample_events(corpus, predictions, sample_size, seed)
    report = {
        "errors": error_taxonomy(corpus, predictions),
        "examples": error_examples(corpus, predictions),
        "distance": distance_breakdown(corpus, predictions),
    }
    if sample_size is not None:
        report["sample"] = {"size": sample_size, "seed": seed}
    root = _ensure_outdir(out_dir)
    out_path = root / "reports" / "errors.json"
    write_report_json(out_path, report)
    click.echo(format_report_text(report), nl=False)
    click.echo(f"wrote {out_path}")


def _sample_events(corpus, predictions, sample_size: int, seed: int):
    """Keep N randomly drawn events, renumbering prediction records to match."""
    import random

    keys = [
        (doc.doc_id, idx) for doc, events in corpus for idx, _ in enumerate(events)
    ]
    rng = random.Random(seed)
    chosen = set(rng.sample(keys, min(sample_size, len(keys))))
    index_map: dict[tuple[str, int], int] = {}
    sampled_corpus = []
    for doc, events in corpus:
        kept = []
        for idx, event in enumerate(events):
            if (doc.doc_id, idx) in chosen:
                index_map[(doc.doc_id, idx)] = len(kept)
                kept.append(event)
        if kept:
            sampled_corpus.append((doc, kept))
    sampled_predictions = []
    for p in predictions:
        key = (p.doc_id, p.event_index)
        if key in chosen:
            sampled_predictions.append(
                EventPrediction(
                    doc_id=p.doc_id,
                    event_index=index_map[key],
                    predictions=p.predictions,
                )
            )
    return sampled_corpus, sampled_predictions


if __name__ == "__main__":
    main()
