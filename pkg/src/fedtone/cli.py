"""Pipeline command line: composable stages with file-based handoffs.

Stages read and write fixed artifact names under the output directory:

    ingest           sentences.jsonl
    embed            embeddings.jsonl
    aspects          aspects.jsonl
    sentiment        sentiment.jsonl
    series           series.csv
    regress          regression.json, regression.txt [, regression.svg]
    stats            corpus_stats.json
    compare-pooling  pooling_report.json

``run-all`` chains ingest through series (plus regress when a macro CSV is
given). Exit codes: 0 ok, 1 configuration or processing error, 2 missing
upstream artifact. Outputs are written atomically (temp file + rename).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields
from datetime import date
from pathlib import Path
from typing import Callable, Iterable, Sequence

from . import __version__
from .aspects import (
    DEFAULT_ANCHOR_SPECS,
    AspectAssignment,
    aspect_distribution,
    build_anchors,
    classify_aspect,
    classify_aspect_wordlevel,
    compare_pooling,
    load_anchor_config,
)
from .corpus import (
    DEFAULT_BLACKLIST,
    Sentence,
    corpus_stats,
    ingest_document,
    load_blacklist,
    load_corpus,
)
from .embedding import (
    BackendError,
    CacheBackend,
    EmbeddingBackendConfig,
    cls_state,
    load_vocab,
    make_backend,
    sentence_embedding,
    word_embeddings,
    write_embedding_cache,
)
from .regression import (
    aggregate_monthly,
    align,
    format_report_table,
    load_macro_csv,
    ols_fit,
    plot_fit_svg,
    report_json,
)
from .sentiment import (
    SentencePrediction,
    check_labels_sidecar,
    classify_sentiment,
    document_aspect_breakdown,
    load_head,
    prediction_from_logits,
    build_series,
    series_from_csv,
    series_to_csv,
    stub_head,
)
from .tokenizer import tokenize

log = logging.getLogger("fedtone")

SENTENCES_FILE = "sentences.jsonl"
EMBEDDINGS_FILE = "embeddings.jsonl"
ASPECTS_FILE = "aspects.jsonl"
SENTIMENT_FILE = "sentiment.jsonl"
SERIES_FILE = "series.csv"
REGRESSION_JSON_FILE = "regression.json"
REGRESSION_TXT_FILE = "regression.txt"
REGRESSION_SVG_FILE = "regression.svg"
STATS_FILE = "corpus_stats.json"
POOLING_REPORT_FILE = "pooling_report.json"


class ConfigError(Exception):
    """Bad or missing configuration; exit code 1."""


class MissingArtifactError(Exception):
    """A required input file is absent; exit code 2."""


@dataclass
class PipelineConfig:
    corpus_dir: str | None = None
    blacklist_path: str | None = None
    encoder_path: str | None = None
    classifier_path: str | None = None
    vocab_path: str | None = None
    anchors_path: str | None = None
    pooling: str = "sentence"
    backend_mode: str = "stub"
    output_dir: str = "out"
    seed: int = 0
    workers: int = 1
    hidden_size: int = 32


_CONFIG_FIELDS = tuple(f.name for f in fields(PipelineConfig))


def load_config_file(path: str | Path) -> PipelineConfig:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    unknown = sorted(set(data) - set(_CONFIG_FIELDS))
    if unknown:
        raise ConfigError(f"unknown config keys in {path}: {', '.join(unknown)}")
    return PipelineConfig(**data)


def resolve_config(args: argparse.Namespace) -> PipelineConfig:
    config = (
        load_config_file(args.config) if getattr(args, "config", None) else PipelineConfig()
    )
    for name in _CONFIG_FIELDS:
        value = getattr(args, name, None)
        if value is not None:
            setattr(config, name, value)
    if config.pooling not in ("sentence", "word"):
        raise ConfigError(f"pooling must be 'sentence' or 'word', got {config.pooling!r}")
    if config.backend_mode not in ("model", "cache", "stub"):
        raise ConfigError(
            f"backend_mode must be 'model', 'cache' or 'stub', got {config.backend_mode!r}"
        )
    if config.workers < 1:
        raise ConfigError("workers must be >= 1")
    return config


def atomic_write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    try:
        tmp.write_text(text, encoding="utf-8")
        os.replace(tmp, path)
    finally:
        tmp.unlink(missing_ok=True)


def require_artifact(path: Path, hint: str) -> Path:
    if not path.exists():
        raise MissingArtifactError(f"missing {hint}: {path}")
    return path


def read_jsonl(path: Path) -> list[dict]:
    records = []
    for line in path.read_text(encoding="utf-8").splitlines():
        if line.strip():
            records.append(json.loads(line))
    return records


def jsonl_dumps(records: Iterable[dict]) -> str:
    lines = [json.dumps(rec) for rec in records]
    return "\n".join(lines) + ("\n" if lines else "")


def parallel_map(fn: Callable, items: Sequence, workers: int) -> list:
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _out(config: PipelineConfig, name: str) -> Path:
    return Path(config.output_dir) / name


def _backend_config(config: PipelineConfig) -> EmbeddingBackendConfig:
    try:
        return EmbeddingBackendConfig(
            mode=config.backend_mode,
            encoder_path=config.encoder_path,
            vocab_path=config.vocab_path,
            hidden_size=config.hidden_size,
            seed=config.seed,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _encoder_and_vocab(config: PipelineConfig):
    backend_config = _backend_config(config)
    if backend_config.mode == "model":
        require_artifact(Path(backend_config.encoder_path), "encoder graph")
        require_artifact(Path(backend_config.vocab_path), "vocabulary file")
    return make_backend(backend_config), load_vocab(backend_config)


def _anchor_specs(config: PipelineConfig) -> list[dict]:
    if config.anchors_path:
        require_artifact(Path(config.anchors_path), "anchor config")
        return load_anchor_config(config.anchors_path)
    return [dict(spec) for spec in DEFAULT_ANCHOR_SPECS]


# ---------------------------------------------------------------- stages


def cmd_ingest(config: PipelineConfig, args) -> None:
    if not config.corpus_dir:
        raise ConfigError("corpus_dir is not set")
    corpus_dir = Path(config.corpus_dir)
    if not corpus_dir.is_dir():
        raise MissingArtifactError(f"missing corpus directory: {corpus_dir}")
    if config.blacklist_path:
        require_artifact(Path(config.blacklist_path), "blacklist file")
        blacklist = load_blacklist(config.blacklist_path)
    else:
        blacklist = DEFAULT_BLACKLIST
    docs = load_corpus(corpus_dir)
    records = []
    for doc in docs:
        for sent in ingest_document(doc, blacklist):
            records.append(
                {
                    "doc_id": sent.doc_id,
                    "date": doc.meeting_date.isoformat(),
                    "sent_index": sent.sent_index,
                    "text": sent.text,
                    "word_count": sent.word_count,
                }
            )
    atomic_write_text(_out(config, SENTENCES_FILE), jsonl_dumps(records))
    log.info("ingest: %d documents, %d sentences", len(docs), len(records))


def _load_sentences(config: PipelineConfig) -> list[dict]:
    path = require_artifact(_out(config, SENTENCES_FILE), "sentences artifact")
    return read_jsonl(path)


def cmd_embed(config: PipelineConfig, args) -> None:
    if config.backend_mode == "cache":
        raise ConfigError("embed computes embeddings; backend_mode must be stub or model")
    sentences = _load_sentences(config)
    backend, vocab = _encoder_and_vocab(config)

    def embed_one(rec: dict):
        seq = tokenize(rec["text"], vocab)
        sent = sentence_embedding(seq, backend)
        cls = cls_state(seq, backend)
        return (
            (rec["doc_id"], rec["sent_index"], sent.pooling, sent.vector),
            (rec["doc_id"], rec["sent_index"], cls.pooling, cls.vector),
            seq.truncated,
        )

    results = parallel_map(embed_one, sentences, config.workers)
    rows = []
    n_truncated = 0
    for sent_row, cls_row, truncated in results:
        rows.append(sent_row)
        rows.append(cls_row)
        n_truncated += int(truncated)
    write_embedding_cache(_out(config, EMBEDDINGS_FILE), rows)
    log.info("embed: %d sentences, %d truncated to 510 tokens", len(sentences), n_truncated)


def cmd_aspects(config: PipelineConfig, args) -> None:
    sentences = _load_sentences(config)
    min_cos = getattr(args, "min_cos", None)
    specs = _anchor_specs(config)
    if config.backend_mode == "cache":
        if config.pooling == "word":
            raise ConfigError("word pooling needs token states; cache mode serves sentence vectors only")
        cache = CacheBackend(require_artifact(_out(config, EMBEDDINGS_FILE), "embedding cache"))
        anchors = build_anchors(specs, None, None)

        def assign_one(rec: dict) -> AspectAssignment:
            emb = cache.vector(rec["doc_id"], rec["sent_index"], "sentence-mean")
            return classify_aspect(
                emb, anchors, doc_id=rec["doc_id"], sent_index=rec["sent_index"], min_cos=min_cos
            )

    else:
        backend, vocab = _encoder_and_vocab(config)
        anchors = build_anchors(specs, backend, vocab)

        def assign_one(rec: dict) -> AspectAssignment:
            seq = tokenize(rec["text"], vocab)
            if config.pooling == "word":
                return classify_aspect_wordlevel(
                    word_embeddings(seq, backend), anchors,
                    doc_id=rec["doc_id"], sent_index=rec["sent_index"], min_cos=min_cos,
                )
            return classify_aspect(
                sentence_embedding(seq, backend), anchors,
                doc_id=rec["doc_id"], sent_index=rec["sent_index"], min_cos=min_cos,
            )

    assignments = parallel_map(assign_one, sentences, config.workers)
    records = [
        {
            "doc_id": a.doc_id,
            "sent_index": a.sent_index,
            "label": a.label,
            "scores": {label: a.scores[label] for label in sorted(a.scores)},
        }
        for a in assignments
    ]
    atomic_write_text(_out(config, ASPECTS_FILE), jsonl_dumps(records))
    log.info("aspects: %s", aspect_distribution(assignments))


def cmd_sentiment(config: PipelineConfig, args) -> None:
    sentences = _load_sentences(config)
    if config.backend_mode == "stub":
        backend, vocab = _encoder_and_vocab(config)
        head = stub_head(config.hidden_size, config.seed)

        def predict_one(rec: dict) -> SentencePrediction:
            cls = cls_state(tokenize(rec["text"], vocab), backend)
            return classify_sentiment(cls, head, doc_id=rec["doc_id"], sent_index=rec["sent_index"])

    elif config.backend_mode == "cache":
        if not config.classifier_path:
            raise ConfigError("cache-mode sentiment needs classifier_path (head weights JSON)")
        head_path = require_artifact(Path(config.classifier_path), "classifier head file")
        head = load_head(head_path)
        cache = CacheBackend(require_artifact(_out(config, EMBEDDINGS_FILE), "embedding cache"))

        def predict_one(rec: dict) -> SentencePrediction:
            cls = cache.vector(rec["doc_id"], rec["sent_index"], "cls")
            return classify_sentiment(cls, head, doc_id=rec["doc_id"], sent_index=rec["sent_index"])

    else:
        if not config.classifier_path:
            raise ConfigError("model-mode sentiment needs classifier_path (exported graph)")
        graph_path = require_artifact(Path(config.classifier_path), "classifier graph")
        check_labels_sidecar(graph_path)
        from .embedding import OnnxClassifierBackend

        classifier = OnnxClassifierBackend(graph_path)
        _, vocab = _encoder_and_vocab(config)

        def predict_one(rec: dict) -> SentencePrediction:
            logits = classifier.logits(tokenize(rec["text"], vocab))
            return prediction_from_logits(
                logits, doc_id=rec["doc_id"], sent_index=rec["sent_index"]
            )

    predictions = parallel_map(predict_one, sentences, config.workers)
    records = [
        {
            "doc_id": p.doc_id,
            "sent_index": p.sent_index,
            "probs": list(p.probs),
            "label": p.label,
        }
        for p in predictions
    ]
    atomic_write_text(_out(config, SENTIMENT_FILE), jsonl_dumps(records))
    labels = [p.label for p in predictions]
    log.info(
        "sentiment: %d sentences (%d pos / %d neg / %d neu)",
        len(labels), labels.count("positive"), labels.count("negative"), labels.count("neutral"),
    )


def cmd_series(config: PipelineConfig, args) -> None:
    sentences = _load_sentences(config)
    aspect_records = read_jsonl(require_artifact(_out(config, ASPECTS_FILE), "aspects artifact"))
    sentiment_records = read_jsonl(
        require_artifact(_out(config, SENTIMENT_FILE), "sentiment artifact")
    )
    assigns = [
        AspectAssignment(
            doc_id=rec["doc_id"], sent_index=rec["sent_index"],
            label=rec["label"], scores=rec.get("scores", {}),
        )
        for rec in aspect_records
    ]
    preds = [
        SentencePrediction(
            doc_id=rec["doc_id"], sent_index=rec["sent_index"],
            probs=tuple(rec["probs"]), label=rec["label"],
        )
        for rec in sentiment_records
    ]
    doc_dates: dict[str, date] = {}
    doc_order: list[str] = []
    for rec in sentences:
        if rec["doc_id"] not in doc_dates:
            doc_order.append(rec["doc_id"])
        doc_dates[rec["doc_id"]] = date.fromisoformat(rec["date"])
    per_doc = [
        (doc_id, document_aspect_breakdown(preds, assigns, doc_id)) for doc_id in doc_order
    ]
    rows = build_series(per_doc, doc_dates)
    atomic_write_text(_out(config, SERIES_FILE), series_to_csv(rows))
    log.info("series: %d (month, aspect) rows", len(rows))


def cmd_regress(config: PipelineConfig, args) -> None:
    series_path = Path(args.series) if args.series else _out(config, SERIES_FILE)
    require_artifact(series_path, "series artifact")
    if not args.macro:
        raise ConfigError("regress needs --macro pointing at a date,value CSV")
    macro_path = require_artifact(Path(args.macro), "macro CSV")
    if not args.aspect:
        raise ConfigError("regress needs --aspect (a label present in the series)")
    rows = series_from_csv(series_path.read_text(encoding="utf-8"))
    sentiment = [(row.month, row.score) for row in rows if row.aspect == args.aspect]
    if not sentiment:
        raise ConfigError(f"series {series_path} has no rows for aspect {args.aspect!r}")
    macro = load_macro_csv(macro_path, indicator=args.indicator)
    monthly = aggregate_monthly(macro)
    macro_months = [
        (f"{day.year:04d}-{day.month:02d}", value) for day, value in monthly.observations
    ]
    pairs = align(sentiment, macro_months, lead=args.lead)
    result = ols_fit(pairs, indicator=monthly.indicator, aspect=args.aspect, lead=args.lead)
    atomic_write_text(_out(config, REGRESSION_JSON_FILE), report_json([result]))
    atomic_write_text(_out(config, REGRESSION_TXT_FILE), format_report_table([result]))
    if getattr(args, "plot", False):
        svg_path = _out(config, REGRESSION_SVG_FILE)
        svg_path.parent.mkdir(parents=True, exist_ok=True)
        plot_fit_svg(pairs, result, svg_path)
    log.info(
        "regress: %s on %s tone, n=%d, beta=%.4f, p=%.3e, R2=%.4f",
        result.indicator, result.aspect, result.n, result.beta, result.p_beta, result.r_squared,
    )


def cmd_stats(config: PipelineConfig, args) -> None:
    if not config.corpus_dir:
        raise ConfigError("corpus_dir is not set")
    corpus_dir = Path(config.corpus_dir)
    if not corpus_dir.is_dir():
        raise MissingArtifactError(f"missing corpus directory: {corpus_dir}")
    sentences = [
        Sentence(
            doc_id=rec["doc_id"], sent_index=rec["sent_index"],
            text=rec["text"], word_count=rec["word_count"],
        )
        for rec in _load_sentences(config)
    ]
    stats = corpus_stats(load_corpus(corpus_dir), sentences)
    payload = {
        "n_documents": stats.n_documents,
        "n_words": stats.n_words,
        "doc_len_max": stats.doc_len_max,
        "doc_len_median": stats.doc_len_median,
        "doc_len_min": stats.doc_len_min,
        "sent_len_max": stats.sent_len_max,
        "sent_len_median": stats.sent_len_median,
        "sent_len_min": stats.sent_len_min,
    }
    atomic_write_text(_out(config, STATS_FILE), json.dumps(payload, indent=2) + "\n")
    log.info("stats: %s", payload)


def cmd_compare_pooling(config: PipelineConfig, args) -> None:
    if config.backend_mode == "cache":
        raise ConfigError("compare-pooling needs token states; backend_mode must be stub or model")
    sentences = _load_sentences(config)
    backend, vocab = _encoder_and_vocab(config)
    anchors = build_anchors(_anchor_specs(config), backend, vocab)
    triples = [(rec["doc_id"], rec["sent_index"], rec["text"]) for rec in sentences]
    report = compare_pooling(triples, backend, anchors, vocab)
    atomic_write_text(
        _out(config, POOLING_REPORT_FILE), json.dumps(report, indent=2) + "\n"
    )
    log.info(
        "compare-pooling: entropy sentence=%.4f word=%.4f",
        report["entropy_sentence"], report["entropy_word"],
    )


def cmd_run_all(config: PipelineConfig, args) -> None:
    cmd_ingest(config, args)
    cmd_embed(config, args)
    cmd_aspects(config, args)
    cmd_sentiment(config, args)
    cmd_series(config, args)
    if args.macro:
        cmd_regress(config, args)


# ------------------------------------------------------------- argparse


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file; flags override its fields")
    parser.add_argument("--corpus-dir", dest="corpus_dir")
    parser.add_argument("--blacklist-path", dest="blacklist_path")
    parser.add_argument("--encoder-path", dest="encoder_path")
    parser.add_argument("--classifier-path", dest="classifier_path")
    parser.add_argument("--vocab-path", dest="vocab_path")
    parser.add_argument("--anchors-path", dest="anchors_path")
    parser.add_argument("--pooling", choices=("sentence", "word"))
    parser.add_argument("--backend-mode", dest="backend_mode", choices=("model", "cache", "stub"))
    parser.add_argument("--output-dir", dest="output_dir")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--workers", type=int)
    parser.add_argument("--hidden-size", dest="hidden_size", type=int)


def _add_regress_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--series", help="series CSV (default: <output-dir>/series.csv)")
    parser.add_argument("--macro", help="macro indicator CSV with date,value rows")
    parser.add_argument("--indicator", help="indicator name (default: macro file stem)")
    parser.add_argument("--aspect", help="aspect label to regress on")
    parser.add_argument("--lead", type=int, default=0, help="months the macro value trails the sentiment month")
    parser.add_argument("--plot", action="store_true", help="also write a scatter+fit SVG")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fedtone",
        description="Aspect-based sentiment indices from minutes corpora, with macro regressions",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    handlers = {
        "ingest": cmd_ingest,
        "embed": cmd_embed,
        "aspects": cmd_aspects,
        "sentiment": cmd_sentiment,
        "series": cmd_series,
        "regress": cmd_regress,
        "stats": cmd_stats,
        "compare-pooling": cmd_compare_pooling,
        "run-all": cmd_run_all,
    }
    for name, handler in handlers.items():
        sp = sub.add_parser(name)
        _add_config_flags(sp)
        if name in ("aspects", "run-all"):
            sp.add_argument("--min-cos", dest="min_cos", type=float, default=None,
                            help="leave sentences below this best cosine unclassified")
        if name in ("regress", "run-all"):
            _add_regress_flags(sp)
        sp.set_defaults(handler=handler)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        config = resolve_config(args)
        args.handler(config, args)
    except MissingArtifactError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, KeyError, FileNotFoundError, ArithmeticError, BackendError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
