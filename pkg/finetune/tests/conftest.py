from pathlib import Path

import pytest
import torch
from transformers import BertConfig, BertForSequenceClassification, BertTokenizer

from fedtone_finetune.training import ID2LABEL, LABEL2ID

WORDS = [
    "profits", "losses", "revenue", "rose", "fell", "flat", "stayed", "guidance",
    "strong", "weak", "steady", "quarter", "year", "margin", "outlook", "improved",
    "declined", "unchanged", "company", "sales", "sharply", "slightly", "the", "this",
]

TEMPLATES = {
    "positive": "{w} rose sharply this {p} and guidance improved",
    "negative": "{w} fell sharply this {p} and guidance declined",
    "neutral": "{w} stayed flat this {p} and guidance unchanged",
}


def synthetic_sentences(label: str, n: int, salt: str) -> list[str]:
    subjects = ["profits", "losses", "revenue", "sales", "margin"]
    periods = ["quarter", "year"]
    out = []
    for i in range(n):
        out.append(
            TEMPLATES[label].format(w=subjects[i % len(subjects)], p=periods[i % 2])
            + f" {salt} {i}"
        )
    return out


@pytest.fixture(scope="session")
def phrasebank_dir(tmp_path_factory) -> Path:
    """Nested distribution files: 12 unanimous, +6, +4, +3 at looser bands."""
    root = tmp_path_factory.mktemp("phrasebank")

    def lines(label_counts, salt):
        rows = []
        for label, count in label_counts:
            rows.extend(f"{text}@{label}" for text in synthetic_sentences(label, count, salt))
        return rows

    all_agree = lines([("positive", 4), ("negative", 4), ("neutral", 4)], "unanimous")
    band75 = lines([("positive", 2), ("negative", 2), ("neutral", 2)], "threequarters")
    band66 = lines([("positive", 2), ("negative", 1), ("neutral", 1)], "twothirds")
    band50 = lines([("positive", 1), ("negative", 1), ("neutral", 1)], "half")

    (root / "Sentences_AllAgree.txt").write_text("\n".join(all_agree) + "\n", encoding="utf-8")
    (root / "Sentences_75Agree.txt").write_text(
        "\n".join(all_agree + band75) + "\n", encoding="utf-8"
    )
    (root / "Sentences_66Agree.txt").write_text(
        "\n".join(all_agree + band75 + band66) + "\n", encoding="utf-8"
    )
    (root / "Sentences_50Agree.txt").write_text(
        "\n".join(all_agree + band75 + band66 + band50) + "\n", encoding="latin-1"
    )
    return root


@pytest.fixture(scope="session")
def toy_tokenizer(tmp_path_factory) -> BertTokenizer:
    vocab_dir = tmp_path_factory.mktemp("vocab")
    digits = [str(d) for d in range(10)]
    tokens = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"] + WORDS + digits + [
        "unanimous", "threequarters", "twothirds", "half",
    ]
    path = vocab_dir / "vocab.txt"
    path.write_text("\n".join(tokens) + "\n", encoding="utf-8")
    return BertTokenizer(str(path), do_lower_case=True)


def tiny_classifier(vocab_size: int, seed: int = 0) -> BertForSequenceClassification:
    config = BertConfig(
        vocab_size=vocab_size,
        hidden_size=32,
        num_hidden_layers=2,
        num_attention_heads=2,
        intermediate_size=64,
        max_position_embeddings=64,
        num_labels=3,
        id2label=ID2LABEL,
        label2id=LABEL2ID,
        classifier_dropout=0.1,
    )
    torch.manual_seed(seed)
    return BertForSequenceClassification(config)


@pytest.fixture
def toy_model(toy_tokenizer) -> BertForSequenceClassification:
    return tiny_classifier(toy_tokenizer.vocab_size)
