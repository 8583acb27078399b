"""Graph and asset export for the inference pipeline.

Writes into the output directory:

    encoder.onnx        inputs input_ids/attention_mask (int64, [batch, seq]),
                        outputs hidden_<L-3>..hidden_<L> (float32, [batch, seq, d])
    classifier.onnx     same inputs, output logits (float32, [batch, 3])
    vocab.txt           one token per line, line number = token id
    labels.json         {"labels": ["positive", "negative", "neutral"]}
    run_manifest.json   hyperparameters, metrics, export details

Export is gated on logit parity: the serialized classifier must reproduce
the in-framework logits within 1e-4 absolute on held-out sentences, or the
graphs are removed and the export aborts.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path

import numpy as np
import torch

from .evaluation import EvalMetrics
from .phrasebank import LABELS, PhraseBankRecord
from .training import FineTuneResult

log = logging.getLogger(__name__)

PARITY_TOLERANCE = 1e-4
PARITY_SAMPLE = 100
OPSET = 14


class ExportError(RuntimeError):
    """Export failed or the required onnx tooling is unavailable."""


class _EncoderWithHiddenStates(torch.nn.Module):
    def __init__(self, model):
        super().__init__()
        self.model = model

    def forward(self, input_ids, attention_mask):
        out = self.model(
            input_ids=input_ids,
            attention_mask=attention_mask,
            output_hidden_states=True,
            return_dict=True,
        )
        return tuple(out.hidden_states[-4:])


class _ClassifierLogits(torch.nn.Module):
    def __init__(self, model):
        super().__init__()
        self.model = model

    def forward(self, input_ids, attention_mask):
        return self.model(
            input_ids=input_ids, attention_mask=attention_mask, return_dict=True
        ).logits


def hidden_output_names(num_layers: int) -> list[str]:
    return [f"hidden_{k}" for k in range(num_layers - 3, num_layers + 1)]


def write_vocab_file(tokenizer, path: str | Path) -> None:
    """One token per line, line number = token id; ids must be contiguous."""
    vocab = tokenizer.get_vocab()
    ordered = sorted(vocab.items(), key=lambda item: item[1])
    if [token_id for _, token_id in ordered] != list(range(len(ordered))):
        raise ExportError("tokenizer vocabulary has non-contiguous ids")
    Path(path).write_text(
        "\n".join(token for token, _ in ordered) + "\n", encoding="utf-8"
    )


def export_metadata(
    result: FineTuneResult,
    output_dir: str | Path,
    metrics: EvalMetrics | None = None,
    extra: dict | None = None,
) -> None:
    """vocab.txt, labels.json and run_manifest.json (no model runtime needed)."""
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_vocab_file(result.tokenizer, out / "vocab.txt")
    (out / "labels.json").write_text(
        json.dumps({"labels": list(LABELS)}) + "\n", encoding="utf-8"
    )
    manifest = {
        "config": result.config.as_manifest(),
        "epoch_losses": result.epoch_losses,
        "metrics": metrics.as_manifest() if metrics is not None else None,
    }
    manifest.update(extra or {})
    (out / "run_manifest.json").write_text(
        json.dumps(manifest, indent=2) + "\n", encoding="utf-8"
    )


def export_graphs(result: FineTuneResult, output_dir: str | Path) -> dict[str, Path]:
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    model = result.model
    model.eval()
    num_layers = int(model.config.num_hidden_layers)
    vocab_size = int(model.config.vocab_size)
    example_ids = torch.randint(0, vocab_size, (1, 8), dtype=torch.int64)
    example_mask = torch.ones_like(example_ids)
    dynamic = {"input_ids": {0: "batch", 1: "seq"}, "attention_mask": {0: "batch", 1: "seq"}}

    encoder_path = out / "encoder.onnx"
    classifier_path = out / "classifier.onnx"
    try:
        torch.onnx.export(
            _EncoderWithHiddenStates(model),
            (example_ids, example_mask),
            str(encoder_path),
            input_names=["input_ids", "attention_mask"],
            output_names=hidden_output_names(num_layers),
            dynamic_axes=dynamic,
            opset_version=OPSET,
            dynamo=False,
        )
        torch.onnx.export(
            _ClassifierLogits(model),
            (example_ids, example_mask),
            str(classifier_path),
            input_names=["input_ids", "attention_mask"],
            output_names=["logits"],
            dynamic_axes=dynamic,
            opset_version=OPSET,
            dynamo=False,
        )
    except Exception as exc:
        raise ExportError(f"graph serialization failed: {exc}") from exc
    return {"encoder": encoder_path, "classifier": classifier_path}


def check_logit_parity(
    result: FineTuneResult,
    classifier_path: str | Path,
    records: list[PhraseBankRecord],
    tolerance: float = PARITY_TOLERANCE,
    sample: int = PARITY_SAMPLE,
) -> float:
    """Max absolute deviation between exported-graph and in-framework logits."""
    try:
        import onnxruntime
    except ImportError as exc:
        raise ExportError("parity check needs the onnxruntime package") from exc
    if not records:
        raise ValueError("parity check needs held-out records")
    session = onnxruntime.InferenceSession(
        str(classifier_path), providers=["CPUExecutionProvider"]
    )
    model = result.model
    model.eval()
    worst = 0.0
    with torch.no_grad():
        for record in records[:sample]:
            encoded = result.tokenizer(
                record.text,
                truncation=True,
                max_length=result.config.max_length,
                return_tensors="pt",
            )
            reference = model(
                input_ids=encoded["input_ids"],
                attention_mask=encoded["attention_mask"],
            ).logits.numpy()[0]
            (exported,) = session.run(
                ["logits"],
                {
                    "input_ids": encoded["input_ids"].numpy().astype(np.int64),
                    "attention_mask": encoded["attention_mask"].numpy().astype(np.int64),
                },
            )
            worst = max(worst, float(np.max(np.abs(exported[0] - reference))))
    if worst > tolerance:
        raise ExportError(
            f"logit parity failure: max deviation {worst:.3e} > {tolerance}"
        )
    return worst


def export_model(
    result: FineTuneResult,
    holdout: list[PhraseBankRecord],
    output_dir: str | Path,
    metrics: EvalMetrics | None = None,
    tolerance: float = PARITY_TOLERANCE,
) -> dict:
    """Full export with the parity gate; failed parity removes the graphs."""
    out = Path(output_dir)
    paths = export_graphs(result, out)
    try:
        deviation = check_logit_parity(result, paths["classifier"], holdout, tolerance)
    except Exception:
        for path in paths.values():
            Path(path).unlink(missing_ok=True)
        raise
    export_metadata(
        result,
        out,
        metrics=metrics,
        extra={"export": {"opset": OPSET, "parity_max_deviation": deviation}},
    )
    log.info("export complete: parity deviation %.3e (tolerance %g)", deviation, tolerance)
    return {"paths": {k: str(v) for k, v in paths.items()}, "parity_max_deviation": deviation}
