"""Sentence sentiment scoring and aggregation to a monthly per-aspect index.

A sentence is scored by softmax over a dense head applied to the [CLS]
vector. Documents aggregate to a net-tone score per aspect,
(n_pos - n_neg) / n with neutral sentences in the denominator, and months
average the document scores of that calendar month.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .aspects import AspectAssignment
from .embedding import SentenceEmbedding

SENTIMENT_LABELS = ("positive", "negative", "neutral")


@dataclass(frozen=True, eq=False)
class SentimentHead:
    weights: np.ndarray  # [3, hidden_size]
    bias: np.ndarray  # [3]

    def __post_init__(self):
        if self.weights.ndim != 2 or self.weights.shape[0] != 3:
            raise ValueError(f"head weights must be [3, d], got {self.weights.shape}")
        if self.bias.shape != (3,):
            raise ValueError(f"head bias must be [3], got {self.bias.shape}")


@dataclass(frozen=True)
class SentencePrediction:
    doc_id: str
    sent_index: int
    probs: tuple[float, float, float]  # positive, negative, neutral
    label: str


class AspectDocScore(NamedTuple):
    score: float
    n_pos: int
    n_neg: int
    n_neu: int

    @property
    def n(self) -> int:
        return self.n_pos + self.n_neg + self.n_neu


@dataclass(frozen=True)
class SeriesRow:
    month: str  # YYYY-MM
    aspect: str
    score: float
    n_sentences: int


def softmax(logits: np.ndarray) -> np.ndarray:
    logits = np.asarray(logits, dtype=np.float64)
    shifted = logits - logits.max()
    exp = np.exp(shifted)
    return exp / exp.sum()


def classify_sentiment(
    cls_vec: SentenceEmbedding,
    head: SentimentHead,
    *,
    doc_id: str = "",
    sent_index: int = 0,
) -> SentencePrediction:
    """probs = softmax(W v + b); ties resolve in label order positive,
    negative, neutral (argmax takes the first maximum)."""
    logits = head.weights @ cls_vec.vector + head.bias
    return prediction_from_logits(logits, doc_id=doc_id, sent_index=sent_index)


def prediction_from_logits(
    logits: np.ndarray, *, doc_id: str = "", sent_index: int = 0
) -> SentencePrediction:
    logits = np.asarray(logits, dtype=np.float64)
    if logits.shape != (3,):
        raise ValueError(f"expected 3 logits, got shape {logits.shape}")
    if not np.all(np.isfinite(logits)):
        raise ValueError(f"non-finite logits for ({doc_id!r}, {sent_index})")
    probs = softmax(logits)
    label = SENTIMENT_LABELS[int(np.argmax(probs))]
    return SentencePrediction(
        doc_id=doc_id,
        sent_index=sent_index,
        probs=(float(probs[0]), float(probs[1]), float(probs[2])),
        label=label,
    )


def stub_head(hidden_size: int, seed: int = 0) -> SentimentHead:
    """Deterministic dense head for stub runs."""
    gen = np.random.Generator(np.random.Philox(key=seed + 0x5EED))
    return SentimentHead(
        weights=gen.standard_normal((3, hidden_size)),
        bias=gen.standard_normal(3),
    )


def load_head(path: str | Path) -> SentimentHead:
    """JSON {"weights": [[...]x3], "bias": [...], "labels": [...]}."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    labels = tuple(data.get("labels", SENTIMENT_LABELS))
    if labels != SENTIMENT_LABELS:
        raise ValueError(
            f"head file {path} has labels {labels}, expected {SENTIMENT_LABELS}"
        )
    return SentimentHead(
        weights=np.asarray(data["weights"], dtype=np.float64),
        bias=np.asarray(data["bias"], dtype=np.float64),
    )


def save_head(head: SentimentHead, path: str | Path) -> None:
    data = {
        "weights": [[float(x) for x in row] for row in head.weights],
        "bias": [float(x) for x in head.bias],
        "labels": list(SENTIMENT_LABELS),
    }
    Path(path).write_text(json.dumps(data), encoding="utf-8")


def check_labels_sidecar(classifier_path: str | Path) -> None:
    """An exported classifier graph ships a labels.json sidecar pinning the
    class order; refuse to score with a missing or reordered sidecar."""
    sidecar = Path(classifier_path).with_name("labels.json")
    if not sidecar.is_file():
        raise ValueError(f"classifier sidecar not found: {sidecar}")
    data = json.loads(sidecar.read_text(encoding="utf-8"))
    labels = tuple(data.get("labels", ()))
    if labels != SENTIMENT_LABELS:
        raise ValueError(
            f"classifier sidecar {sidecar} pins labels {labels}, expected {SENTIMENT_LABELS}"
        )


def head_logit_parity(
    graph_logits: Sequence[np.ndarray],
    head_logits: Sequence[np.ndarray],
    tol: float = 1e-4,
) -> float:
    """Validation path for exported classifiers: the full-graph logits must
    match explicit head multiplication within tol. Returns the max deviation."""
    worst = 0.0
    for a, b in zip(graph_logits, head_logits, strict=True):
        worst = max(worst, float(np.max(np.abs(np.asarray(a) - np.asarray(b)))))
    if worst > tol:
        raise ValueError(f"logit parity failure: max deviation {worst:.3e} > {tol}")
    return worst


def document_aspect_breakdown(
    preds: Iterable[SentencePrediction],
    assigns: Iterable[AspectAssignment],
    doc_id: str,
) -> dict[str, AspectDocScore]:
    """Join predictions and assignments for one document and count per aspect.

    Sentences left unclassified by the aspect stage are excluded. Classified
    sentences without a prediction, or predictions for sentences the aspect
    stage never saw, are reported as orphaned keys.
    """
    doc_preds = {p.sent_index: p for p in preds if p.doc_id == doc_id}
    doc_assigns = [a for a in assigns if a.doc_id == doc_id]
    classified = {a.sent_index: a for a in doc_assigns if a.label is not None}
    seen_indices = {a.sent_index for a in doc_assigns}
    orphaned = sorted(
        (set(classified) - set(doc_preds)) | (set(doc_preds) - seen_indices)
    )
    if orphaned:
        raise ValueError(
            f"prediction/assignment mismatch for doc {doc_id!r}: "
            f"orphaned sent_index values {orphaned}"
        )
    counts: dict[str, list[int]] = {}
    for sent_index, assign in classified.items():
        tally = counts.setdefault(assign.label, [0, 0, 0])
        tally[SENTIMENT_LABELS.index(doc_preds[sent_index].label)] += 1
    out = {}
    for aspect, (n_pos, n_neg, n_neu) in counts.items():
        n = n_pos + n_neg + n_neu
        out[aspect] = AspectDocScore(
            score=(n_pos - n_neg) / n, n_pos=n_pos, n_neg=n_neg, n_neu=n_neu
        )
    return out


def document_aspect_score(
    preds: Iterable[SentencePrediction],
    assigns: Iterable[AspectAssignment],
    doc_id: str,
) -> dict[str, float]:
    """Net tone per aspect: (n_pos - n_neg) / n. Aspects with no sentences are
    absent from the map."""
    return {
        aspect: item.score
        for aspect, item in document_aspect_breakdown(preds, assigns, doc_id).items()
    }


def month_key(day: date) -> str:
    return f"{day.year:04d}-{day.month:02d}"


def build_series(
    per_doc_scores: Sequence[tuple[str, Mapping[str, AspectDocScore]]],
    doc_dates: Mapping[str, date],
) -> list[SeriesRow]:
    """Monthly index: unweighted mean of document scores per (month, aspect);
    months with no documents are absent."""
    grouped: dict[tuple[str, str], list[AspectDocScore]] = {}
    for doc_id, aspect_scores in per_doc_scores:
        month = month_key(doc_dates[doc_id])
        for aspect, item in aspect_scores.items():
            grouped.setdefault((month, aspect), []).append(item)
    rows = []
    for (month, aspect) in sorted(grouped):
        items = grouped[(month, aspect)]
        rows.append(
            SeriesRow(
                month=month,
                aspect=aspect,
                score=sum(it.score for it in items) / len(items),
                n_sentences=sum(it.n for it in items),
            )
        )
    return rows


def series_to_csv(rows: Sequence[SeriesRow]) -> str:
    lines = ["month,aspect,score,n_sentences"]
    for row in rows:
        lines.append(f"{row.month},{row.aspect},{row.score!r},{row.n_sentences}")
    return "\n".join(lines) + "\n"


def series_from_csv(text: str) -> list[SeriesRow]:
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines or lines[0] != "month,aspect,score,n_sentences":
        raise ValueError("series CSV must start with header month,aspect,score,n_sentences")
    rows = []
    for line in lines[1:]:
        month, aspect, score, n_sentences = line.split(",")
        rows.append(
            SeriesRow(
                month=month, aspect=aspect,
                score=float(score), n_sentences=int(n_sentences),
            )
        )
    return rows
