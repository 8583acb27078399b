"""Held-out evaluation: accuracy, mean loss, per-class scores, confusion."""

from __future__ import annotations

from dataclasses import dataclass

import torch

from .phrasebank import LABELS, PhraseBankRecord
from .training import LABEL2ID, encode_batch


@dataclass(frozen=True)
class EvalMetrics:
    accuracy: float
    mean_loss: float
    per_class: dict[str, dict[str, float]]  # precision / recall / f1 / support
    confusion: list[list[int]]  # rows = true label, cols = predicted label

    def as_manifest(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "mean_loss": self.mean_loss,
            "per_class": self.per_class,
            "confusion": self.confusion,
        }


def metrics_from_predictions(
    y_true: list[int], y_pred: list[int], mean_loss: float
) -> EvalMetrics:
    if not y_true or len(y_true) != len(y_pred):
        raise ValueError("y_true and y_pred must be non-empty and equal length")
    k = len(LABELS)
    confusion = [[0] * k for _ in range(k)]
    for t, p in zip(y_true, y_pred):
        confusion[t][p] += 1
    per_class = {}
    for i, label in enumerate(LABELS):
        tp = confusion[i][i]
        support = sum(confusion[i])
        predicted = sum(confusion[t][i] for t in range(k))
        precision = tp / predicted if predicted else 0.0
        recall = tp / support if support else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        per_class[label] = {
            "precision": precision, "recall": recall, "f1": f1, "support": support,
        }
    accuracy = sum(confusion[i][i] for i in range(k)) / len(y_true)
    return EvalMetrics(
        accuracy=accuracy, mean_loss=mean_loss, per_class=per_class, confusion=confusion
    )


def evaluate(
    model,
    tokenizer,
    records: list[PhraseBankRecord],
    batch_size: int = 32,
    max_length: int = 128,
) -> EvalMetrics:
    if not records:
        raise ValueError("empty test set")
    model.eval()
    y_true: list[int] = []
    y_pred: list[int] = []
    total_loss = 0.0
    with torch.no_grad():
        for start in range(0, len(records), batch_size):
            batch = records[start : start + batch_size]
            input_ids, attention_mask, labels = encode_batch(tokenizer, batch, max_length)
            out = model(input_ids=input_ids, attention_mask=attention_mask, labels=labels)
            total_loss += float(out.loss) * len(batch)
            y_true.extend(int(v) for v in labels)
            y_pred.extend(int(v) for v in out.logits.argmax(dim=-1))
    return metrics_from_predictions(y_true, y_pred, total_loss / len(records))


def majority_baseline_accuracy(records: list[PhraseBankRecord]) -> float:
    if not records:
        raise ValueError("empty test set")
    counts = [0] * len(LABELS)
    for record in records:
        counts[LABEL2ID[record.label]] += 1
    return max(counts) / len(records)
