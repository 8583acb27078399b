"""Command line: inspect the dataset, fine-tune, evaluate, and export.

    fedtone-finetune stats --phrasebank-dir data/phrasebank
    fedtone-finetune run --phrasebank-dir data/phrasebank \
        --pretrained-dir models/finbert --output-dir export/
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .evaluation import evaluate, majority_baseline_accuracy
from .export import export_metadata, export_model
from .phrasebank import agreement_counts, filter_phrasebank, load_phrasebank, split_train_test
from .training import FineTuneConfig, finetune

log = logging.getLogger("fedtone_finetune")


def cmd_stats(args) -> int:
    records = load_phrasebank(args.phrasebank_dir)
    counts = agreement_counts(records)
    total = len(records)
    print(f"total records: {total}")
    for level, count in counts.items():
        share = count / total if total else 0.0
        print(f"  {level:>7}: {count:5d} ({share:.1%})")
    return 0


def cmd_run(args) -> int:
    config = FineTuneConfig(
        learning_rate=args.learning_rate,
        dropout=args.dropout,
        epochs=args.epochs,
        train_fraction=args.train_fraction,
        agreement_filter=None if args.agreement == "all" else args.agreement,
        seed=args.seed,
        batch_size=args.batch_size,
        max_length=args.max_length,
        pretrained_dir=args.pretrained_dir,
    )
    records = load_phrasebank(args.phrasebank_dir)
    subset = filter_phrasebank(records, config.agreement_filter)
    log.info("dataset: %d records, %d after agreement filter", len(records), len(subset))
    train, test = split_train_test(subset, config.train_fraction, config.seed)
    log.info(
        "split: %d train / %d test (majority baseline %.3f)",
        len(train), len(test), majority_baseline_accuracy(test),
    )

    out = Path(args.output_dir)
    result = finetune(train, config, checkpoint_dir=out / "checkpoints")
    metrics = evaluate(result.model, result.tokenizer, test, batch_size=config.batch_size)
    log.info("test accuracy %.4f, mean loss %.4f", metrics.accuracy, metrics.mean_loss)
    print(json.dumps(metrics.as_manifest(), indent=2))

    if args.skip_export:
        export_metadata(result, out, metrics=metrics, extra={"export": None})
        log.info("export skipped; metadata written to %s", out)
        return 0
    export_model(result, test, out, metrics=metrics)
    print(f"exported graphs and assets to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fedtone-finetune", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    stats = sub.add_parser("stats", help="print the agreement-band partition")
    stats.add_argument("--phrasebank-dir", required=True)
    stats.set_defaults(handler=cmd_stats)

    run = sub.add_parser("run", help="fine-tune, evaluate and export")
    run.add_argument("--phrasebank-dir", required=True)
    run.add_argument("--pretrained-dir", required=True)
    run.add_argument("--output-dir", default="export")
    run.add_argument("--learning-rate", type=float, default=1e-6)
    run.add_argument("--dropout", type=float, default=0.1)
    run.add_argument("--epochs", type=int, default=10)
    run.add_argument("--train-fraction", type=float, default=0.8)
    run.add_argument("--agreement", default="100%",
                     help="exact agreement band, or 'all' for the full dataset")
    run.add_argument("--seed", type=int, default=42)
    run.add_argument("--batch-size", type=int, default=16)
    run.add_argument("--max-length", type=int, default=128)
    run.add_argument("--skip-export", action="store_true",
                     help="stop after evaluation; write metadata only")
    run.set_defaults(handler=cmd_run)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except (ValueError, FileNotFoundError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
