"""Aspect assignment by cosine similarity against anchor embeddings.

Each aspect is represented by an anchor vector (the mean sentence embedding
of its seed terms). A sentence gets the label of the anchor with the highest
cosine similarity; exact ties break to the lexicographically smallest label.
Word-level classification scores an aspect by the maximum cosine between any
content-token vector and the anchor.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .embedding import (
    EncoderBackend,
    SentenceEmbedding,
    TokenEmbeddingMatrix,
    embed_text,
    make_sentence_embedding,
    sentence_embedding,
    word_embeddings,
)
from .tokenizer import WordPieceVocab, tokenize

log = logging.getLogger(__name__)

DEFAULT_ANCHOR_SPECS = (
    {"label": "inflation", "seeds": ["inflation"]},
    {"label": "growth", "seeds": ["growth"]},
    {"label": "employment", "seeds": ["employment"]},
)


@dataclass(frozen=True, eq=False)
class AspectAnchor:
    label: str
    seed_terms: tuple[str, ...]
    vector: SentenceEmbedding


@dataclass(frozen=True)
class AspectAssignment:
    doc_id: str
    sent_index: int
    label: str | None  # None marks an unclassified sentence
    scores: dict[str, float]


def cosine_similarity(u: np.ndarray, v: np.ndarray) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise ValueError("degenerate vector")
    return float(np.clip(float(u @ v) / (nu * nv), -1.0, 1.0))


def build_anchor(
    label: str,
    seed_terms: Sequence[str],
    backend: EncoderBackend,
    vocab: WordPieceVocab,
) -> AspectAnchor:
    """Anchor vector = mean sentence embedding of the seed terms, each embedded
    as a standalone sequence."""
    if not seed_terms:
        raise ValueError(f"aspect {label!r} has no seed terms")
    vectors = [embed_text(term, backend, vocab).vector for term in seed_terms]
    mean = np.mean(vectors, axis=0)
    if float(np.linalg.norm(mean)) == 0.0:
        raise ValueError(f"degenerate vector for aspect {label!r}")
    return AspectAnchor(
        label=label,
        seed_terms=tuple(seed_terms),
        vector=make_sentence_embedding(mean, "anchor"),
    )


def load_anchor_config(path: str | Path) -> list[dict]:
    """JSON list [{"label", "seeds", optional "vector"}]; a precomputed vector
    lets cache-mode runs skip anchor embedding."""
    specs = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(specs, list) or not specs:
        raise ValueError(f"anchor config {path} must be a non-empty JSON list")
    labels = set()
    for spec in specs:
        if "label" not in spec:
            raise ValueError(f"anchor config {path}: entry missing 'label'")
        if spec["label"] in labels:
            raise ValueError(f"anchor config {path}: duplicate label {spec['label']!r}")
        labels.add(spec["label"])
    return specs


def build_anchors(
    specs: Iterable[Mapping],
    backend: EncoderBackend | None,
    vocab: WordPieceVocab | None,
) -> list[AspectAnchor]:
    anchors = []
    for spec in specs:
        label = spec["label"]
        if "vector" in spec:
            vec = make_sentence_embedding(np.asarray(spec["vector"]), "anchor")
            if vec.norm == 0.0:
                raise ValueError(f"degenerate vector for aspect {label!r}")
            anchors.append(
                AspectAnchor(label=label, seed_terms=tuple(spec.get("seeds", ())), vector=vec)
            )
            continue
        if backend is None or vocab is None:
            raise ValueError(
                f"aspect {label!r} has no precomputed vector; anchors need an "
                "encoder backend (stub or model)"
            )
        anchors.append(build_anchor(label, spec.get("seeds") or [label], backend, vocab))
    return anchors


def _argmax_label(scores: Mapping[str, float]) -> str:
    return min(scores, key=lambda lab: (-scores[lab], lab))


def _unclassified(doc_id: str, sent_index: int, scores: dict[str, float], why: str) -> AspectAssignment:
    log.warning("unclassified sentence (%s, %s): %s", doc_id, sent_index, why)
    return AspectAssignment(doc_id=doc_id, sent_index=sent_index, label=None, scores=scores)


def classify_aspect(
    emb: SentenceEmbedding,
    anchors: Sequence[AspectAnchor],
    *,
    doc_id: str = "",
    sent_index: int = 0,
    min_cos: float | None = None,
) -> AspectAssignment:
    if not anchors:
        raise ValueError("no anchors")
    if emb.norm == 0.0:
        return _unclassified(doc_id, sent_index, {}, "zero-norm embedding")
    scores = {
        a.label: cosine_similarity(emb.vector, a.vector.vector) for a in anchors
    }
    label = _argmax_label(scores)
    if min_cos is not None and scores[label] < min_cos:
        return _unclassified(
            doc_id, sent_index, scores, f"best cosine {scores[label]:.4f} < {min_cos}"
        )
    return AspectAssignment(doc_id=doc_id, sent_index=sent_index, label=label, scores=scores)


def classify_aspect_wordlevel(
    matrix: TokenEmbeddingMatrix,
    anchors: Sequence[AspectAnchor],
    *,
    doc_id: str = "",
    sent_index: int = 0,
    min_cos: float | None = None,
) -> AspectAssignment:
    """Label by the best cosine any content-token vector attains against each
    anchor; zero-norm rows are skipped."""
    if not anchors:
        raise ValueError("no anchors")
    rows = matrix.content_rows
    if rows.shape[0] == 0:
        raise ValueError("no content tokens")
    norms = np.linalg.norm(rows, axis=1)
    valid = norms > 0.0
    if not np.any(valid):
        return _unclassified(doc_id, sent_index, {}, "all token rows zero-norm")
    rows = rows[valid]
    norms = norms[valid]
    scores = {}
    for anchor in anchors:
        av = anchor.vector.vector
        if rows.shape[1] != av.shape[0]:
            raise ValueError(f"dimension mismatch: {rows.shape[1]} vs {av.shape[0]}")
        cos = (rows @ av) / (norms * anchor.vector.norm)
        scores[anchor.label] = float(np.clip(cos, -1.0, 1.0).max())
    label = _argmax_label(scores)
    if min_cos is not None and scores[label] < min_cos:
        return _unclassified(
            doc_id, sent_index, scores, f"best cosine {scores[label]:.4f} < {min_cos}"
        )
    return AspectAssignment(doc_id=doc_id, sent_index=sent_index, label=label, scores=scores)


def aspect_distribution(
    assignments: Iterable[AspectAssignment], labels: Sequence[str] | None = None
) -> dict[str, int]:
    """Counts per label over classified assignments; unclassified are skipped."""
    assignments = list(assignments)
    if labels is None:
        labels = sorted({a.label for a in assignments if a.label is not None})
    counts = {label: 0 for label in labels}
    for a in assignments:
        if a.label is not None:
            counts[a.label] = counts.get(a.label, 0) + 1
    return counts


def label_entropy(counts: Mapping[str, int]) -> float:
    """Shannon entropy (natural log) of the normalized count distribution."""
    total = sum(counts.values())
    if total <= 0:
        raise ValueError("empty distribution")
    entropy = 0.0
    for count in counts.values():
        if count > 0:
            p = count / total
            entropy -= p * math.log(p)
    return entropy


def compare_pooling(
    sentences: Sequence[tuple[str, int, str]],
    backend: EncoderBackend,
    anchors: Sequence[AspectAnchor],
    vocab: WordPieceVocab,
) -> dict:
    """Label-distribution balance under sentence pooling vs word pooling.

    ``sentences`` is (doc_id, sent_index, text) triples. Returns both entropies
    and the underlying label counts.
    """
    if not sentences:
        raise ValueError("empty corpus")
    labels = [a.label for a in anchors]
    sent_assigns = []
    word_assigns = []
    for doc_id, sent_index, text in sentences:
        seq = tokenize(text, vocab)
        sent_assigns.append(
            classify_aspect(
                sentence_embedding(seq, backend), anchors,
                doc_id=doc_id, sent_index=sent_index,
            )
        )
        word_assigns.append(
            classify_aspect_wordlevel(
                word_embeddings(seq, backend), anchors,
                doc_id=doc_id, sent_index=sent_index,
            )
        )
    dist_sentence = aspect_distribution(sent_assigns, labels)
    dist_word = aspect_distribution(word_assigns, labels)
    return {
        "entropy_sentence": label_entropy(dist_sentence),
        "entropy_word": label_entropy(dist_word),
        "distribution_sentence": dist_sentence,
        "distribution_word": dist_word,
    }
