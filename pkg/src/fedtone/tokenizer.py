"""Lowercase WordPiece tokenization against a fixed vocabulary file.

The vocabulary file has one token per line; the line number is the token id.
Words are split on whitespace, punctuation characters become standalone
words, and each word is matched greedily (longest piece first) against the
vocabulary, with ``##`` continuation pieces. A word with any unmatched
remainder maps to a single [UNK].
"""

from __future__ import annotations

import string
import unicodedata
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

PAD_TOKEN = "[PAD]"
UNK_TOKEN = "[UNK]"
CLS_TOKEN = "[CLS]"
SEP_TOKEN = "[SEP]"
REQUIRED_TOKENS = (PAD_TOKEN, UNK_TOKEN, CLS_TOKEN, SEP_TOKEN)

MAX_CONTENT_TOKENS = 510  # leaves room for [CLS] and [SEP] in a 512 window
MAX_WORD_CHARS = 100


class WordPieceVocab:
    """Token-to-id table with the special tokens required for encoding."""

    def __init__(self, tokens: Iterable[str]):
        self.tokens = list(tokens)
        self.id_of = {tok: i for i, tok in enumerate(self.tokens)}
        if len(self.id_of) != len(self.tokens):
            raise ValueError("vocabulary contains duplicate tokens")
        for required in REQUIRED_TOKENS:
            if required not in self.id_of:
                raise ValueError(f"vocabulary is missing {required}")
        self.pad_id = self.id_of[PAD_TOKEN]
        self.unk_id = self.id_of[UNK_TOKEN]
        self.cls_id = self.id_of[CLS_TOKEN]
        self.sep_id = self.id_of[SEP_TOKEN]

    @classmethod
    def from_file(cls, path: str | Path) -> "WordPieceVocab":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        return cls(line.rstrip("\n") for line in lines)

    def __len__(self) -> int:
        return len(self.tokens)

    def piece(self, token_id: int) -> str:
        return self.tokens[token_id]


@dataclass(frozen=True)
class TokenSequence:
    token_ids: tuple[int, ...]
    attention_length: int
    original_text: str
    truncated: bool = False

    @property
    def content_ids(self) -> tuple[int, ...]:
        return self.token_ids[1 : self.attention_length - 1]


def _is_punctuation(ch: str) -> bool:
    cp = ord(ch)
    # All non-alphanumeric ASCII counts as punctuation, plus Unicode category P.
    if 33 <= cp <= 47 or 58 <= cp <= 64 or 91 <= cp <= 96 or 123 <= cp <= 126:
        return True
    return unicodedata.category(ch).startswith("P")


def basic_tokenize(text: str) -> list[str]:
    """Lowercase and split into words, with punctuation as standalone words."""
    words: list[str] = []
    for chunk in text.lower().split():
        current = ""
        for ch in chunk:
            if _is_punctuation(ch):
                if current:
                    words.append(current)
                    current = ""
                words.append(ch)
            else:
                current += ch
        if current:
            words.append(current)
    return words


def wordpiece_word(word: str, vocab: WordPieceVocab) -> list[int]:
    """Greedy longest-match-first split of one word into piece ids."""
    if len(word) > MAX_WORD_CHARS:
        return [vocab.unk_id]
    ids: list[int] = []
    start = 0
    while start < len(word):
        end = len(word)
        found = None
        while start < end:
            piece = word[start:end]
            if start > 0:
                piece = "##" + piece
            token_id = vocab.id_of.get(piece)
            if token_id is not None:
                found = token_id
                break
            end -= 1
        if found is None:
            return [vocab.unk_id]
        ids.append(found)
        start = end
    return ids


def tokenize(
    text: str, vocab: WordPieceVocab, max_content_tokens: int = MAX_CONTENT_TOKENS
) -> TokenSequence:
    """Encode text as [CLS] pieces... [SEP]; overlong inputs truncate silently."""
    words = basic_tokenize(text)
    if not words:
        raise ValueError("empty input")
    content: list[int] = []
    for word in words:
        content.extend(wordpiece_word(word, vocab))
    truncated = len(content) > max_content_tokens
    if truncated:
        content = content[:max_content_tokens]
    ids = (vocab.cls_id, *content, vocab.sep_id)
    return TokenSequence(
        token_ids=ids,
        attention_length=len(ids),
        original_text=text,
        truncated=truncated,
    )


def detokenize(token_ids: Iterable[int], vocab: WordPieceVocab) -> str:
    """Concatenate pieces stripping ``##``; inverse of wordpiece_word for
    fully-matched words."""
    out = []
    for token_id in token_ids:
        piece = vocab.piece(token_id)
        out.append(piece[2:] if piece.startswith("##") else piece)
    return "".join(out)


def stub_vocab() -> WordPieceVocab:
    """Self-contained character-level vocabulary for the stub backend.

    Any lowercase ASCII word tokenizes without [UNK], so stub runs need no
    vocabulary file.
    """
    chars = string.ascii_lowercase + string.digits + string.punctuation
    tokens = list(REQUIRED_TOKENS)
    tokens.extend(chars)
    tokens.extend("##" + c for c in chars)
    return WordPieceVocab(tokens)
