"""Financial PhraseBank loading, agreement partitioning, and splitting.

The published distribution ships four nested files, each one line per
sentence in the form ``<text>@<label>``:

    Sentences_AllAgree.txt   sentences every annotator labeled the same way
    Sentences_75Agree.txt    >= 75% agreement (superset of AllAgree)
    Sentences_66Agree.txt    >= 66% agreement
    Sentences_50Agree.txt    >= 50% agreement (the full dataset)

Exact agreement bands fall out of the set differences between consecutive
files.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)

LABELS = ("positive", "negative", "neutral")
AGREEMENT_LEVELS = ("50-65%", "66-74%", "75-99%", "100%")

# processed innermost-first so each record lands in its exact band
_FILES_INNER_TO_OUTER = (
    ("Sentences_AllAgree.txt", "100%"),
    ("Sentences_75Agree.txt", "75-99%"),
    ("Sentences_66Agree.txt", "66-74%"),
    ("Sentences_50Agree.txt", "50-65%"),
)


@dataclass(frozen=True)
class PhraseBankRecord:
    text: str
    label: str
    agreement: str


def _read_lines(path: Path) -> list[str]:
    try:
        raw = path.read_text(encoding="utf-8")
    except UnicodeDecodeError:
        # the published files are Latin-1 encoded
        raw = path.read_text(encoding="latin-1")
    return [line.strip() for line in raw.splitlines() if line.strip()]


def _parse_line(line: str, path: Path, lineno: int) -> tuple[str, str]:
    text, sep, label = line.rpartition("@")
    if not sep or label not in LABELS:
        raise ValueError(f"{path} line {lineno}: expected '<text>@<label>', got {line!r}")
    return text.strip(), label


def load_phrasebank(directory: str | Path) -> list[PhraseBankRecord]:
    """Read all four distribution files and assign each sentence its exact
    agreement band."""
    root = Path(directory)
    records: list[PhraseBankRecord] = []
    seen: set[tuple[str, str]] = set()
    for filename, band in _FILES_INNER_TO_OUTER:
        path = root / filename
        if not path.is_file():
            raise FileNotFoundError(f"missing distribution file: {path}")
        for lineno, line in enumerate(_read_lines(path), start=1):
            text, label = _parse_line(line, path, lineno)
            key = (text, label)
            if key in seen:
                continue  # already assigned a stricter band
            seen.add(key)
            records.append(PhraseBankRecord(text=text, label=label, agreement=band))
    return records


def filter_phrasebank(
    records: list[PhraseBankRecord], agreement_filter: str | None
) -> list[PhraseBankRecord]:
    """Keep records at exactly the requested agreement level; None keeps all."""
    if agreement_filter is None:
        return list(records)
    if agreement_filter not in AGREEMENT_LEVELS:
        raise ValueError(
            f"unknown agreement level {agreement_filter!r}; expected one of {AGREEMENT_LEVELS}"
        )
    subset = [r for r in records if r.agreement == agreement_filter]
    if not subset:
        log.warning("agreement filter %s matched no records", agreement_filter)
    return subset


def split_train_test(
    records: list[PhraseBankRecord], train_fraction: float, seed: int
) -> tuple[list[PhraseBankRecord], list[PhraseBankRecord]]:
    """Disjoint, exhaustive, label-stratified split, deterministic per seed."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must be in (0, 1), got {train_fraction}")
    by_label: dict[str, list[PhraseBankRecord]] = {}
    for record in records:
        by_label.setdefault(record.label, []).append(record)
    rng = np.random.default_rng(seed)
    train: list[PhraseBankRecord] = []
    test: list[PhraseBankRecord] = []
    for label in sorted(by_label):
        group = by_label[label]
        if len(group) < 2:
            raise ValueError(f"class {label!r} has {len(group)} record(s); need at least 2")
        order = rng.permutation(len(group))
        n_train = int(round(train_fraction * len(group)))
        n_train = min(max(n_train, 1), len(group) - 1)  # both sides stay non-empty
        train.extend(group[i] for i in order[:n_train])
        test.extend(group[i] for i in order[n_train:])
    return train, test


def agreement_counts(records: list[PhraseBankRecord]) -> dict[str, int]:
    counts = {level: 0 for level in AGREEMENT_LEVELS}
    for record in records:
        counts[record.agreement] += 1
    return counts
