"""Embedding backends and pooling operations.

Three interchangeable ways to obtain vectors:

* ``StubBackend`` -- deterministic hash-seeded hidden states, for tests and
  dry runs; no model runtime needed.
* ``CacheBackend`` -- precomputed sentence vectors from a JSON Lines cache
  keyed by (doc_id, sent_index, pooling).
* ``OnnxEncoderBackend`` -- a serialized encoder graph executed through
  onnxruntime, exposing the hidden states of its last four layers.

Word vectors are the per-token mean of the last four encoder layers; the
sentence vector is the mean of the word vectors over content tokens only
([CLS] and [SEP] excluded).
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from functools import lru_cache
from hashlib import blake2b
from pathlib import Path
from typing import Iterable, Protocol

import numpy as np

from .tokenizer import TokenSequence, WordPieceVocab, stub_vocab, tokenize

POOLING_SENTENCE_MEAN = "sentence-mean"
POOLING_CLS = "cls"
BACKEND_MODES = ("model", "cache", "stub")


class BackendError(RuntimeError):
    """An embedding backend failed or is unavailable."""


@dataclass(frozen=True)
class EmbeddingBackendConfig:
    mode: str = "stub"
    encoder_path: str | None = None
    vocab_path: str | None = None
    batch_size: int = 8
    hidden_size: int = 32  # stub dimensionality; real encoders report their own
    seed: int = 0

    def __post_init__(self):
        if self.mode not in BACKEND_MODES:
            raise ValueError(f"unknown backend mode {self.mode!r}")
        if self.mode == "model" and not (self.encoder_path and self.vocab_path):
            raise ValueError("model mode requires encoder_path and vocab_path")
        if self.batch_size < 1:
            raise ValueError("batch_size must be positive")


@dataclass(frozen=True, eq=False)
class TokenEmbeddingMatrix:
    rows: np.ndarray  # [attention_length, hidden_size]
    pooling_source: str = "last4-mean"

    @property
    def content_rows(self) -> np.ndarray:
        return self.rows[1:-1]


@dataclass(frozen=True, eq=False)
class SentenceEmbedding:
    vector: np.ndarray
    pooling: str
    norm: float


def make_sentence_embedding(vector: np.ndarray, pooling: str) -> SentenceEmbedding:
    vector = np.asarray(vector, dtype=np.float64)
    if not np.all(np.isfinite(vector)):
        raise ValueError("non-finite embedding vector")
    return SentenceEmbedding(
        vector=vector, pooling=pooling, norm=float(np.linalg.norm(vector))
    )


class EncoderBackend(Protocol):
    hidden_size: int

    def last4_hidden_states(self, seq: TokenSequence) -> np.ndarray:
        """Hidden states of the last four layers, shape [4, attention_length, d];
        index 3 is the final layer."""
        ...


def _hash_key(*parts) -> int:
    digest = blake2b("|".join(str(p) for p in parts).encode("utf-8"), digest_size=8)
    return int.from_bytes(digest.digest(), "big")


@lru_cache(maxsize=100_000)
def _stub_state(
    seed: int, hidden_size: int, seq_key: int, layer: int, position: int, token_id: int
):
    gen = np.random.Generator(
        np.random.Philox(key=_hash_key("state", seed, seq_key, layer, position, token_id))
    )
    vec = gen.standard_normal(hidden_size)
    vec.flags.writeable = False
    return vec


class StubBackend:
    """Deterministic encoder stand-in.

    The hidden state of a token depends only on (seed, sequence content,
    layer, position, token id). The sequence-content key makes states
    context-dependent like a real encoder's, while staying pure and
    independent of batch composition.
    """

    def __init__(self, hidden_size: int = 32, seed: int = 0):
        if hidden_size < 1:
            raise ValueError("hidden_size must be positive")
        self.hidden_size = hidden_size
        self.seed = seed

    def last4_hidden_states(self, seq: TokenSequence) -> np.ndarray:
        seq_key = _hash_key("seq", *seq.token_ids[: seq.attention_length])
        states = np.empty((4, seq.attention_length, self.hidden_size))
        for layer in range(4):
            for pos in range(seq.attention_length):
                states[layer, pos] = _stub_state(
                    self.seed, self.hidden_size, seq_key, layer, pos, seq.token_ids[pos]
                )
        return states


class OnnxEncoderBackend:
    """Encoder graph with inputs input_ids/attention_mask and one output per
    exported layer; the graph must expose at least four hidden-state outputs."""

    def __init__(self, encoder_path: str | Path):
        try:
            import onnxruntime
        except ImportError as exc:
            raise BackendError(
                "model mode needs the onnxruntime package; install the 'model' extra"
            ) from exc
        path = Path(encoder_path)
        if not path.is_file():
            raise FileNotFoundError(f"encoder graph not found: {path}")
        self._session = onnxruntime.InferenceSession(
            str(path), providers=["CPUExecutionProvider"]
        )
        names = [out.name for out in self._session.get_outputs()]
        hidden = sorted(
            (n for n in names if n.startswith("hidden_")),
            key=lambda n: int(n.rsplit("_", 1)[1]),
        )
        if len(hidden) < 4:
            raise BackendError(
                f"encoder graph exposes {len(hidden)} hidden-state outputs, need 4"
            )
        self._output_names = hidden[-4:]
        self.hidden_size = int(self._session.get_outputs()[0].shape[-1])

    def last4_hidden_states(self, seq: TokenSequence) -> np.ndarray:
        ids = np.asarray([seq.token_ids[: seq.attention_length]], dtype=np.int64)
        mask = np.ones_like(ids)
        outputs = self._session.run(
            self._output_names, {"input_ids": ids, "attention_mask": mask}
        )
        return np.stack([np.asarray(out[0], dtype=np.float64) for out in outputs])


class OnnxClassifierBackend:
    """Full classifier graph (encoder + dense head) with a ``logits`` output."""

    def __init__(self, classifier_path: str | Path):
        try:
            import onnxruntime
        except ImportError as exc:
            raise BackendError(
                "model mode needs the onnxruntime package; install the 'model' extra"
            ) from exc
        path = Path(classifier_path)
        if not path.is_file():
            raise FileNotFoundError(f"classifier graph not found: {path}")
        self._session = onnxruntime.InferenceSession(
            str(path), providers=["CPUExecutionProvider"]
        )

    def logits(self, seq: TokenSequence) -> np.ndarray:
        ids = np.asarray([seq.token_ids[: seq.attention_length]], dtype=np.int64)
        mask = np.ones_like(ids)
        (out,) = self._session.run(["logits"], {"input_ids": ids, "attention_mask": mask})
        return np.asarray(out[0], dtype=np.float64)


def word_embeddings(seq: TokenSequence, backend: EncoderBackend) -> TokenEmbeddingMatrix:
    """Per-token vectors: arithmetic mean of the last four layers' states."""
    try:
        states = np.asarray(backend.last4_hidden_states(seq), dtype=np.float64)
    except Exception as exc:
        raise BackendError(
            f"backend failed while embedding {seq.original_text[:60]!r}: {exc}"
        ) from exc
    if states.ndim != 3 or states.shape[0] < 4:
        raise BackendError(
            f"backend returned states of shape {states.shape}, expected [>=4, T, d]"
        )
    if not np.all(np.isfinite(states)):
        raise BackendError(
            f"non-finite hidden states for {seq.original_text[:60]!r}"
        )
    rows = states[-4:].mean(axis=0)
    return TokenEmbeddingMatrix(rows=rows)


def sentence_embedding(seq: TokenSequence, backend: EncoderBackend) -> SentenceEmbedding:
    """Mean of the word vectors over content tokens; [CLS]/[SEP] excluded."""
    matrix = word_embeddings(seq, backend)
    content = matrix.content_rows
    if content.shape[0] == 0:
        raise ValueError("no content tokens")
    return make_sentence_embedding(content.mean(axis=0), POOLING_SENTENCE_MEAN)


def cls_state(seq: TokenSequence, backend: EncoderBackend) -> SentenceEmbedding:
    """Final-layer hidden state at position 0 (the [CLS] slot)."""
    try:
        states = np.asarray(backend.last4_hidden_states(seq), dtype=np.float64)
    except Exception as exc:
        raise BackendError(
            f"backend failed while embedding {seq.original_text[:60]!r}: {exc}"
        ) from exc
    return make_sentence_embedding(states[-1, 0], POOLING_CLS)


def stub_embed(text: str, hidden_size: int = 32) -> SentenceEmbedding:
    """Unit vector drawn from a counter-based generator keyed by a 64-bit
    hash of the text; same text always yields the same vector."""
    if hidden_size < 1:
        raise ValueError("hidden_size must be positive")
    gen = np.random.Generator(
        np.random.Philox(key=_hash_key("stub-embed", text))
    )
    vec = gen.standard_normal(hidden_size)
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:  # essentially impossible for a continuous draw
        vec = np.ones(hidden_size)
        norm = float(np.linalg.norm(vec))
    return SentenceEmbedding(vector=vec / norm, pooling="stub", norm=1.0)


def embed_text(text: str, backend: EncoderBackend, vocab: WordPieceVocab) -> SentenceEmbedding:
    return sentence_embedding(tokenize(text, vocab), backend)


class CacheBackend:
    """Serves precomputed sentence vectors; cannot produce token matrices."""

    def __init__(self, path: str | Path):
        self._path = Path(path)
        self._vectors = read_embedding_cache(self._path)
        dims = {v.shape[0] for v in self._vectors.values()}
        if len(dims) > 1:
            raise ValueError(f"embedding cache mixes dimensions: {sorted(dims)}")
        self.hidden_size = dims.pop() if dims else 0

    def vector(self, doc_id: str, sent_index: int, pooling: str) -> SentenceEmbedding:
        key = (doc_id, sent_index, pooling)
        if key not in self._vectors:
            raise KeyError(
                f"embedding cache {self._path} has no {pooling!r} vector for "
                f"({doc_id!r}, {sent_index})"
            )
        return make_sentence_embedding(self._vectors[key], pooling)


def write_embedding_cache(
    path: str | Path, records: Iterable[tuple[str, int, str, np.ndarray]]
) -> None:
    """JSON Lines rows {"doc_id", "sent_index", "pooling", "vector"}; float
    repr round-trips bit-exactly."""
    lines = []
    for doc_id, sent_index, pooling, vector in records:
        row = {
            "doc_id": doc_id,
            "sent_index": sent_index,
            "pooling": pooling,
            "vector": [float(x) for x in vector],
        }
        lines.append(json.dumps(row))
    tmp = Path(path).with_name(Path(path).name + ".tmp")
    tmp.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
    os.replace(tmp, path)


def read_embedding_cache(path: str | Path) -> dict[tuple[str, int, str], np.ndarray]:
    vectors: dict[tuple[str, int, str], np.ndarray] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            row = json.loads(line)
            key = (row["doc_id"], int(row["sent_index"]), row["pooling"])
            vectors[key] = np.asarray(row["vector"], dtype=np.float64)
    return vectors


def make_backend(config: EmbeddingBackendConfig):
    if config.mode == "stub":
        return StubBackend(hidden_size=config.hidden_size, seed=config.seed)
    if config.mode == "model":
        return OnnxEncoderBackend(config.encoder_path)
    raise ValueError("cache mode has no encoder backend; use CacheBackend")


def load_vocab(config: EmbeddingBackendConfig) -> WordPieceVocab:
    if config.vocab_path:
        return WordPieceVocab.from_file(config.vocab_path)
    return stub_vocab()
