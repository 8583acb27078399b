"""Corpus loading, rule-based sentence segmentation, and sentence cleaning.

A corpus is a directory of plain-text minutes, one file per document, named
``<doc_id>__<YYYY-MM-DD>.txt``. Cleaning keeps a sentence only if, after
lowercasing and truncation to 80 words, it has at least 7 words, contains at
least one alphabetic character, and matches no boilerplate phrase.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from statistics import median
from typing import NamedTuple, Sequence

SENTENCE_MIN_WORDS = 7
SENTENCE_MAX_WORDS = 80

DEFAULT_BLACKLIST = ("return to the previous page",)

# Terminators never split after these (lowercased, compared against the end of
# the preceding whitespace-delimited token).
ABBREVIATIONS = (
    "mr.", "mrs.", "ms.", "dr.", "u.s.", "gov.",
    "jan.", "feb.", "mar.", "apr.", "may.", "jun.",
    "jul.", "aug.", "sep.", "oct.", "nov.", "dec.",
    "vol.", "no.", "pp.", "fig.", "e.g.", "i.e.",
)

_FILENAME_RE = re.compile(r"^(?P<doc_id>.+)__(?P<date>\d{4}-\d{2}-\d{2})\.txt$")
_TERMINATORS = frozenset(".!?")


@dataclass(frozen=True)
class RawDocument:
    doc_id: str
    meeting_date: date
    text: str


@dataclass(frozen=True)
class Sentence:
    doc_id: str
    sent_index: int  # 0-based position among the retained sentences of the document
    text: str
    word_count: int


class CleanSentence(NamedTuple):
    text: str
    word_count: int


@dataclass(frozen=True)
class CorpusStats:
    n_documents: int
    n_words: int
    doc_len_max: int
    doc_len_median: float
    doc_len_min: int
    sent_len_max: int
    sent_len_median: float
    sent_len_min: int


def load_corpus(corpus_dir: str | Path) -> list[RawDocument]:
    """Read every document file under ``corpus_dir``, ordered by (date, doc_id).

    Every visible regular file must match the filename grammar; duplicate
    doc_ids and non-UTF-8 content are fatal.
    """
    root = Path(corpus_dir)
    if not root.is_dir():
        raise FileNotFoundError(f"corpus directory not found: {root}")
    docs: list[RawDocument] = []
    seen: dict[str, str] = {}
    for path in sorted(root.iterdir()):
        if not path.is_file() or path.name.startswith("."):
            continue
        m = _FILENAME_RE.match(path.name)
        if m is None:
            raise ValueError(
                f"malformed corpus filename {path.name!r}"
                " (expected <doc_id>__<YYYY-MM-DD>.txt)"
            )
        try:
            meeting_date = date.fromisoformat(m["date"])
        except ValueError:
            raise ValueError(
                f"malformed corpus filename {path.name!r}: invalid date {m['date']!r}"
            ) from None
        doc_id = m["doc_id"]
        if doc_id in seen:
            raise ValueError(
                f"duplicate doc_id {doc_id!r} ({seen[doc_id]} and {path.name})"
            )
        seen[doc_id] = path.name
        try:
            text = path.read_text(encoding="utf-8")
        except UnicodeDecodeError as exc:
            raise ValueError(f"cannot decode {path.name!r} as UTF-8: {exc}") from None
        docs.append(RawDocument(doc_id=doc_id, meeting_date=meeting_date, text=text))
    docs.sort(key=lambda d: (d.meeting_date.isoformat(), d.doc_id))
    return docs


def _token_is_abbreviation(token: str) -> bool:
    for abbr in ABBREVIATIONS:
        if token == abbr:
            return True
        # Allow a leading bracket/quote, e.g. "(e.g." -- but not "casino."
        if token.endswith(abbr) and not token[-len(abbr) - 1].isalnum():
            return True
    return False


def _is_boundary(text: str, i: int) -> int | None:
    """If a sentence boundary follows the terminator at ``text[i]``, return the
    start index of the next sentence, else None."""
    n = len(text)
    j = i + 1
    if j >= n or not text[j].isspace():
        return None
    k = j
    while k < n and text[k].isspace():
        k += 1
    if k >= n:
        return None
    nxt = text[k]
    if not (nxt.isupper() or nxt.isdigit()):
        return None
    if text[i] == ".":
        start = i
        while start > 0 and not text[start - 1].isspace():
            start -= 1
        if _token_is_abbreviation(text[start : i + 1].lower()):
            return None
    return k


def segment_text(text: str) -> list[str]:
    """Split text into sentences at ``.``/``!``/``?`` followed by whitespace and
    an uppercase letter or digit, except after a known abbreviation.

    Lossless up to whitespace: joining the segments with single spaces and
    collapsing whitespace reproduces the collapsed input.
    """
    segments: list[str] = []
    prev = 0
    for i, ch in enumerate(text):
        if ch not in _TERMINATORS:
            continue
        nxt = _is_boundary(text, i)
        if nxt is None:
            continue
        seg = text[prev : i + 1].strip()
        if seg:
            segments.append(seg)
        prev = nxt
    tail = text[prev:].strip()
    if tail:
        segments.append(tail)
    return segments


def segment_document(doc: RawDocument) -> list[str]:
    return segment_text(doc.text)


def preprocess_sentence(
    raw: str, blacklist: Sequence[str] = DEFAULT_BLACKLIST
) -> CleanSentence | None:
    """Lowercase, truncate to 80 words, and filter one raw sentence.

    Returns None for sentences that are too short, contain no alphabetic
    character, or contain a blacklisted phrase. Idempotent on accepted text.
    """
    words = raw.lower().split()
    if len(words) > SENTENCE_MAX_WORDS:
        words = words[:SENTENCE_MAX_WORDS]
    text = " ".join(words)
    if len(words) < SENTENCE_MIN_WORDS:
        return None
    if not any(ch.isalpha() for ch in text):
        return None
    if any(phrase in text for phrase in blacklist):
        return None
    return CleanSentence(text=text, word_count=len(words))


def ingest_document(
    doc: RawDocument, blacklist: Sequence[str] = DEFAULT_BLACKLIST
) -> list[Sentence]:
    """Segment and clean one document; sent_index counts retained sentences."""
    out: list[Sentence] = []
    for raw in segment_document(doc):
        clean = preprocess_sentence(raw, blacklist)
        if clean is None:
            continue
        out.append(
            Sentence(
                doc_id=doc.doc_id,
                sent_index=len(out),
                text=clean.text,
                word_count=clean.word_count,
            )
        )
    return out


def ingest_corpus(
    docs: Sequence[RawDocument], blacklist: Sequence[str] = DEFAULT_BLACKLIST
) -> list[Sentence]:
    sentences: list[Sentence] = []
    for doc in docs:
        sentences.extend(ingest_document(doc, blacklist))
    return sentences


def load_blacklist(path: str | Path) -> tuple[str, ...]:
    """One lowercase phrase per line; blank lines ignored."""
    phrases = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        phrase = line.strip().lower()
        if phrase:
            phrases.append(phrase)
    return tuple(phrases)


def word_count(text: str) -> int:
    # A word is a maximal run of non-whitespace characters.
    return len(text.split())


def corpus_stats(
    docs: Sequence[RawDocument], sentences: Sequence[Sentence]
) -> CorpusStats:
    """Summary statistics over document and sentence lengths in words.

    Document lengths are measured on the raw text; sentence lengths on the
    cleaned sentences. Median of an even-sized list is the mean of the two
    middle values.
    """
    if not docs or not sentences:
        raise ValueError("empty corpus")
    doc_lens = [word_count(d.text) for d in docs]
    sent_lens = [s.word_count for s in sentences]
    return CorpusStats(
        n_documents=len(docs),
        n_words=sum(doc_lens),
        doc_len_max=max(doc_lens),
        doc_len_median=float(median(doc_lens)),
        doc_len_min=min(doc_lens),
        sent_len_max=max(sent_lens),
        sent_len_median=float(median(sent_lens)),
        sent_len_min=min(sent_lens),
    )
