"""
Command-line entry point.

    xsumforge preprocess | train-lda | train | summarize | evaluate |
              analyze-corpus | topics | baselines

Exit codes: 0 success, 1 usage or config error, 2 data error.
"""
from __future__ import annotations

import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence

import click

from app.config import PipelineConfig
from app.corpus.documents import Document
from app.corpus.encode import encode_pair
from app.corpus.split import load_split_file, split_by_assignment, split_corpus
from app.corpus.tokenize import tokenize
from app.corpus.vocab import build_vocab
from app.decode.summarize import Summarizer
from app.errors import ConfigError, DataError, EmptyCorpus, EmptySource, XsumForgeError
from app.evaluate.corpus_stats import analyze_corpus
from app.evaluate.extractive import baseline_outputs
from app.evaluate.system import evaluate_many
from app.ingest.corpus_files import ingest_html_dir, load_jsonl_corpus
from app.model.config import VARIANTS
from app.model.params import ModelParams
from app.publish.report_table import (
    render_corpus_analysis,
    render_rouge_table,
    render_topics,
    write_json_report,
)
from app.store.artifacts import (
    load_checkpoint,
    load_topic_model,
    load_vocab,
    read_documents,
    read_jsonl,
    read_pairs,
    save_topic_model,
    save_vocab,
    write_documents,
    write_jsonl,
    write_pairs,
)
from app.topics.lda import corpus_topics, document_bag, stopword_ids, top_words, train_lda
from app.train.trainer import train as train_model

logger = logging.getLogger(__name__)

SPLITS = ("train", "val", "test")
LOG_FORMAT = "%(asctime)s : %(levelname)s : %(message)s"


@dataclass
class AppContext:
    config: PipelineConfig
    progress: bool


def step(title: str) -> None:
    click.echo(f"\n=== STEP: {title} ===")


def ok(message: str) -> None:
    click.echo(f"✅ {message}")


def warn(message: str) -> None:
    click.echo(f"⚠️ {message}")


def _load_raw_docs(input_path: Optional[Path], html_dir: Optional[Path], app: AppContext) -> List[Document]:
    paths = app.config.paths
    input_path = input_path or paths.corpus
    html_dir = html_dir or paths.html_dir
    if input_path is not None:
        docs = load_jsonl_corpus(input_path)
    elif html_dir is not None:
        docs = ingest_html_dir(html_dir)
    else:
        raise click.UsageError("give --input (JSONL corpus) or --html-dir, or set paths.corpus in the config")
    if not docs:
        raise EmptyCorpus("no usable documents in the input")
    return docs


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.option("--config", "config_path", type=click.Path(path_type=Path), default=None,
              help="JSON pipeline config.")
@click.option("--seed", type=int, default=None, help="Override the config seed.")
@click.option("--work-dir", type=click.Path(path_type=Path), default=None,
              help="Artifact directory (default: data/ or XSUMFORGE_DATA_DIR).")
@click.option("--verbose", "-v", is_flag=True, help="Debug logging.")
@click.option("--quiet", "-q", is_flag=True, help="Warnings only, no progress bars.")
@click.pass_context
def cli(ctx: click.Context, config_path, seed, work_dir, verbose, quiet) -> None:
    """Extreme summarization toolkit: topic-aware convolutional seq2seq, LDA, ROUGE."""
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(level=level, format=LOG_FORMAT, force=True)
    config = PipelineConfig.from_file(config_path).with_overrides(**{"seed": seed, "paths.work_dir": work_dir})
    ctx.obj = AppContext(config=config, progress=not quiet and sys.stderr.isatty())


@cli.command()
@click.option("--input", "input_path", type=click.Path(path_type=Path), default=None,
              help="XSum-format JSONL corpus.")
@click.option("--html-dir", type=click.Path(path_type=Path), default=None,
              help="Directory of <id>.html article pages.")
@click.option("--split-file", type=click.Path(path_type=Path), default=None,
              help="Published split JSON (train/validation/test id lists).")
@click.pass_obj
def preprocess(app: AppContext, input_path, html_dir, split_file) -> None:
    """Tokenize, split, build the vocabulary and encode every split."""
    config = app.config
    step("Load corpus")
    docs = _load_raw_docs(input_path, html_dir, app)
    ok(f"{len(docs)} documents loaded")

    step("Split")
    split_file = split_file or config.paths.split_file
    if split_file is not None:
        parts = split_by_assignment(docs, load_split_file(split_file))
    else:
        parts = split_corpus(docs, config.corpus.split_ratios, config.seed)
    for name, part in zip(SPLITS, parts):
        click.echo(f"→ {name}: {len(part)}")
    if not parts[0]:
        raise EmptyCorpus("training split is empty")

    step("Vocabulary")
    vocab = build_vocab(parts[0], config.corpus.vocab_cap)
    vocab_path = config.paths.resolved("vocab")
    save_vocab(vocab, vocab_path)
    ok(f"{len(vocab)} entries → {vocab_path}")

    step("Encode")
    for name, part in zip(SPLITS, parts):
        pairs, kept = [], []
        for doc in part:
            try:
                pairs.append(encode_pair(doc, vocab, config.corpus.max_source_tokens, config.corpus.max_target_tokens))
            except EmptySource:
                warn(f"Skipping {doc.id}: empty source")
                continue
            kept.append(doc)
        write_documents(config.paths.split_path(name), kept)
        write_pairs(config.paths.pairs_path(name), pairs)
        ok(f"{name}: {len(pairs)} pairs → {config.paths.pairs_path(name)}")


@cli.command("train-lda")
@click.option("--topics", "n_topics", type=int, default=None, help="Number of LDA topics K.")
@click.option("--iters", type=int, default=None, help="Gibbs sweeps.")
@click.pass_obj
def train_lda_cmd(app: AppContext, n_topics, iters) -> None:
    """Fit LDA on the training split and write the topic model."""
    config = app.config.with_overrides(**{"lda.topics": n_topics, "lda.iters": iters})
    step("Train LDA")
    vocab = load_vocab(config.paths.resolved("vocab"))
    docs = read_documents(config.paths.split_path("train"))
    full_bags = [vocab.encode(d.tokens) for d in docs]
    stopwords = stopword_ids(full_bags, config.lda.stopword_fraction)
    bags = [document_bag(ids, stopwords) for ids in full_bags]
    model = train_lda(
        bags,
        K=config.lda.topics,
        alpha=config.lda.resolved_alpha,
        beta=config.lda.beta,
        iters=config.lda.iters,
        seed=config.seed,
        vocab_size=len(vocab),
        progress=app.progress,
    )
    out = config.paths.resolved("topics")
    save_topic_model(model, out)
    ok(f"K={model.K} topics over {len(bags)} documents ({len(stopwords)} stopwords excluded) → {out}")


@cli.command()
@click.option("--topics", "n_topics", type=int, default=None, help="Topic count f' (must match the LDA model).")
@click.option("--variant", type=click.Choice(VARIANTS), default=None, help="Topic conditioning variant.")
@click.option("--max-epochs", type=int, default=None, help="Hard epoch cap.")
@click.pass_obj
def train(app: AppContext, n_topics, variant, max_epochs) -> None:
    """Train the convolutional summarizer; writes ckpt-epochN, ckpt-best and training_log.csv."""
    config = app.config.with_overrides(**{
        "lda.topics": n_topics, "model.variant": variant, "trainer.max_epochs": max_epochs,
    })
    paths = config.paths
    step("Load artifacts")
    vocab = load_vocab(paths.resolved("vocab"))
    train_pairs = read_pairs(paths.pairs_path("train"))
    val_pairs = read_pairs(paths.pairs_path("val"))
    ok(f"{len(train_pairs)} train / {len(val_pairs)} val pairs, vocabulary {len(vocab)}")

    overrides = {"model.vocab_size": len(vocab)}
    topics = None
    if config.model.variant != "plain":
        topic_model = load_topic_model(paths.resolved("topics"))
        if n_topics is not None and n_topics != topic_model.K:
            raise ConfigError(f"--topics {n_topics} does not match the topic model (K={topic_model.K})")
        overrides["model.f_prime"] = topic_model.K
        step("Infer document topics")
        topics = corpus_topics(
            topic_model,
            [(p.doc_id, p.source_ids) for p in [*train_pairs, *val_pairs]],
            config.lda.infer_iters,
            config.seed,
        )
        ok(f"t_D for {len(topics.doc_topics)} documents")
    config = config.with_overrides(**overrides)

    step(f"Train {config.model.variant}")
    checkpoints = paths.resolved("checkpoints")
    state = train_model(
        config.model, config.trainer, train_pairs, val_pairs, topics,
        seed=config.seed, checkpoint_dir=checkpoints, progress=app.progress,
    )
    for epoch, loss, ppl, lr in state.history:
        click.echo(f"epoch {epoch:>3} | loss {loss:8.4f} | val ppl {ppl:10.3f} | lr {lr:.0e}")
    ok(f"{state.epoch} epochs, best val ppl {state.best_val_ppl:.3f} → {checkpoints}")


def _read_inputs(stream) -> List[tuple]:
    items = []
    for lineno, line in enumerate(stream, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            record = json.loads(line)
            doc_id, document = str(record["id"]), record["document"]
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise DataError(f"input line {lineno}: expected {{\"id\", \"document\"}}: {exc}") from exc
        text = document if isinstance(document, str) else " ".join(document)
        tokens = tokenize(text)
        if not tokens:
            raise EmptySource(f"document {doc_id} is empty")
        items.append((doc_id, tokens))
    return items


@cli.command()
@click.option("--ckpt", type=click.Path(path_type=Path), required=True, help="Model checkpoint.")
@click.option("--topics", "topics_path", type=click.Path(path_type=Path), default=None, help="LDA topic model file.")
@click.option("--vocab", "vocab_path", type=click.Path(path_type=Path), default=None, help="Vocabulary TSV.")
@click.option("--beam", type=int, default=None, help="Beam size.")
@click.option("--input", "input_file", type=click.File("r", encoding="utf-8"), default="-",
              help="JSONL documents ({\"id\", \"document\"}); stdin by default.")
@click.option("--output", "output_file", type=click.File("w", encoding="utf-8"), default="-",
              help="JSONL summaries; stdout by default.")
@click.pass_obj
def summarize(app: AppContext, ckpt, topics_path, vocab_path, beam, input_file, output_file) -> None:
    """Beam-search one summary per input document."""
    config = app.config.with_overrides(**{"decode.beam": beam})
    params: ModelParams = load_checkpoint(ckpt)
    vocab = load_vocab(vocab_path or config.paths.resolved("vocab"))
    topic_model = None
    if params.config.encoder_topics:
        topic_model = load_topic_model(topics_path or config.paths.resolved("topics"))
    summarizer = Summarizer(vocab, params, topic_model, config.decode, config.lda.infer_iters, config.seed)

    for row in summarizer.summarize_many(_read_inputs(input_file)):
        output_file.write(json.dumps(row, ensure_ascii=False) + "\n")


@cli.command()
@click.option("--outputs", "output_paths", type=click.Path(path_type=Path), multiple=True, required=True,
              help="System outputs JSONL ({\"id\", \"summary\"}); repeat for several systems.")
@click.option("--refs", type=click.Path(path_type=Path), default=None,
              help="Tokenized reference documents (default: the preprocessed test split).")
@click.option("--stem", is_flag=True, help="Porter-stem tokens before scoring.")
@click.option("--report", type=click.Path(path_type=Path), default=None, help="JSON report path.")
@click.pass_obj
def evaluate(app: AppContext, output_paths, refs, stem, report) -> None:
    """ROUGE F1, novel n-grams and length of system outputs against references."""
    docs = read_documents(refs or app.config.paths.split_path("test"))
    references = {d.id: d.summary for d in docs}
    sources = {d.id: d.tokens for d in docs}
    systems = {}
    for path in output_paths:
        systems[Path(path).stem] = {str(r["id"]): tokenize(r["summary"]) for r in read_jsonl(path)}
    reports = evaluate_many(systems, references, sources, stem)
    click.echo(render_rouge_table(reports))
    report = report or app.config.paths.resolved("reports") / "evaluation.json"
    write_json_report(report, reports)
    ok(f"report → {report}")


@cli.command("analyze-corpus")
@click.option("--input", "input_path", type=click.Path(path_type=Path), default=None,
              help="XSum-format JSONL corpus.")
@click.option("--html-dir", type=click.Path(path_type=Path), default=None,
              help="Directory of <id>.html article pages.")
@click.option("--stem", is_flag=True, help="Porter-stem tokens before ROUGE.")
@click.option("--report", type=click.Path(path_type=Path), default=None, help="JSON report path.")
@click.pass_obj
def analyze_corpus_cmd(app: AppContext, input_path, html_dir, stem, report) -> None:
    """Corpus sizes and lengths, gold-summary novelty, LEAD and EXT-ORACLE ROUGE."""
    docs = _load_raw_docs(input_path, html_dir, app)
    analysis = analyze_corpus(docs, stem)
    click.echo(render_corpus_analysis(analysis))
    report = report or app.config.paths.resolved("reports") / "corpus_analysis.json"
    write_json_report(report, analysis)
    ok(f"report → {report}")


@cli.command()
@click.option("--topics", "topics_path", type=click.Path(path_type=Path), default=None, help="LDA topic model file.")
@click.option("--vocab", "vocab_path", type=click.Path(path_type=Path), default=None, help="Vocabulary TSV.")
@click.option("-n", "n_words", type=int, default=12, show_default=True, help="Words per topic.")
@click.pass_obj
def topics(app: AppContext, topics_path, vocab_path, n_words) -> None:
    """Print the most probable words of every topic."""
    paths = app.config.paths
    model = load_topic_model(topics_path or paths.resolved("topics"))
    vocab = load_vocab(vocab_path or paths.resolved("vocab"))
    click.echo(render_topics(top_words(model, vocab, n_words)))


@cli.command()
@click.option("--split", type=click.Choice(SPLITS), default="test", show_default=True)
@click.option("--stem", is_flag=True, help="Porter-stem tokens before ROUGE.")
@click.pass_obj
def baselines(app: AppContext, split, stem) -> None:
    """RANDOM, LEAD and EXT-ORACLE outputs for a split, with their ROUGE table."""
    config = app.config
    docs = read_documents(config.paths.split_path(split))
    if not docs:
        raise EmptyCorpus(f"{split} split is empty")
    outputs = baseline_outputs(docs, config.seed, stem)
    reports_dir = config.paths.resolved("reports")
    for name, rows in outputs.items():
        write_jsonl(reports_dir / f"{name}.{split}.jsonl",
                    ({"id": i, "summary": " ".join(toks)} for i, toks in sorted(rows.items())))
    reports = evaluate_many(outputs, {d.id: d.summary for d in docs}, {d.id: d.tokens for d in docs}, stem)
    click.echo(render_rouge_table(reports))
    write_json_report(reports_dir / f"baselines.{split}.json", reports)
    ok(f"{len(docs)} documents, outputs and report → {reports_dir}")


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Run the CLI and map failures to exit codes instead of raising."""
    args = list(sys.argv[1:] if argv is None else argv)
    try:
        result = cli.main(args=args, prog_name="xsumforge", standalone_mode=False)
    except click.UsageError as exc:
        exc.show()
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except click.Abort:
        click.echo("❌ Aborted.", err=True)
        return 1
    except ConfigError as exc:
        click.echo(f"❌ Config error: {exc}", err=True)
        return 1
    except XsumForgeError as exc:
        click.echo(f"❌ {type(exc).__name__}: {exc}", err=True)
        return 2
    return result if isinstance(result, int) else 0
