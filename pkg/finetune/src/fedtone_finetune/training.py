"""Fine-tuning loop for the 3-class sentence sentiment classifier.

Defaults reproduce the reference recipe: learning rate 1e-6, classifier
dropout 0.1, 10 epochs, 80/20 split on the unanimous-agreement subset.
The optimizer is AdamW with linear warmup, the standard setup for this
encoder family; only the learning rate deviates from it.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import torch
from transformers import (
    AutoModelForSequenceClassification,
    AutoTokenizer,
    get_linear_schedule_with_warmup,
)

from .phrasebank import LABELS, PhraseBankRecord

log = logging.getLogger(__name__)

ID2LABEL = {i: label for i, label in enumerate(LABELS)}
LABEL2ID = {label: i for i, label in enumerate(LABELS)}


@dataclass
class FineTuneConfig:
    learning_rate: float = 1e-6
    dropout: float = 0.1
    epochs: int = 10
    train_fraction: float = 0.8
    agreement_filter: str | None = "100%"
    seed: int = 42
    batch_size: int = 16
    max_length: int = 128
    warmup_fraction: float = 0.1
    pretrained_dir: str | None = None

    def as_manifest(self) -> dict:
        return asdict(self)


@dataclass
class FineTuneResult:
    model: torch.nn.Module
    tokenizer: object
    config: FineTuneConfig
    epoch_losses: list[float] = field(default_factory=list)


def load_pretrained(config: FineTuneConfig):
    """Instantiate the classifier head on top of locally stored encoder
    weights; the class order is pinned positive, negative, neutral."""
    if not config.pretrained_dir:
        raise ValueError("pretrained_dir is not set")
    path = Path(config.pretrained_dir)
    if not path.is_dir():
        raise FileNotFoundError(f"pretrained encoder directory not found: {path}")
    model = AutoModelForSequenceClassification.from_pretrained(
        path,
        num_labels=3,
        id2label=ID2LABEL,
        label2id=LABEL2ID,
        classifier_dropout=config.dropout,
    )
    tokenizer = AutoTokenizer.from_pretrained(path)
    return model, tokenizer


def encode_batch(tokenizer, records: list[PhraseBankRecord], max_length: int):
    encoded = tokenizer(
        [r.text for r in records],
        padding=True,
        truncation=True,
        max_length=max_length,
        return_tensors="pt",
    )
    labels = torch.tensor([LABEL2ID[r.label] for r in records], dtype=torch.long)
    return encoded["input_ids"], encoded["attention_mask"], labels


def finetune(
    train_records: list[PhraseBankRecord],
    config: FineTuneConfig,
    model=None,
    tokenizer=None,
    checkpoint_dir: str | Path | None = None,
) -> FineTuneResult:
    """Train the classifier; returns the model plus per-epoch mean losses.

    A non-finite loss aborts with diagnostics. When checkpoint_dir is given,
    the state dict is saved after every epoch.
    """
    if not train_records:
        raise ValueError("empty training set")
    if model is None or tokenizer is None:
        model, tokenizer = load_pretrained(config)
    torch.manual_seed(config.seed)
    model.train()

    n = len(train_records)
    steps_per_epoch = math.ceil(n / config.batch_size)
    total_steps = steps_per_epoch * config.epochs
    optimizer = torch.optim.AdamW(model.parameters(), lr=config.learning_rate)
    scheduler = get_linear_schedule_with_warmup(
        optimizer,
        num_warmup_steps=int(config.warmup_fraction * total_steps),
        num_training_steps=total_steps,
    )
    shuffler = torch.Generator().manual_seed(config.seed)

    if checkpoint_dir is not None:
        checkpoint_dir = Path(checkpoint_dir)
        checkpoint_dir.mkdir(parents=True, exist_ok=True)

    epoch_losses: list[float] = []
    for epoch in range(config.epochs):
        order = torch.randperm(n, generator=shuffler).tolist()
        total_loss = 0.0
        for start in range(0, n, config.batch_size):
            batch = [train_records[i] for i in order[start : start + config.batch_size]]
            input_ids, attention_mask, labels = encode_batch(
                tokenizer, batch, config.max_length
            )
            optimizer.zero_grad()
            out = model(input_ids=input_ids, attention_mask=attention_mask, labels=labels)
            loss = out.loss
            if not torch.isfinite(loss):
                raise RuntimeError(
                    f"training diverged: non-finite loss at epoch {epoch}, "
                    f"step {start // config.batch_size} (lr={config.learning_rate})"
                )
            loss.backward()
            optimizer.step()
            scheduler.step()
            total_loss += float(loss.detach()) * len(batch)
        epoch_losses.append(total_loss / n)
        log.info("epoch %d/%d: mean loss %.4f", epoch + 1, config.epochs, epoch_losses[-1])
        if checkpoint_dir is not None:
            torch.save(model.state_dict(), checkpoint_dir / f"epoch_{epoch + 1:02d}.pt")

    if len(epoch_losses) > 1 and epoch_losses[-1] > epoch_losses[0]:
        log.warning(
            "mean loss rose across training: %.4f -> %.4f",
            epoch_losses[0], epoch_losses[-1],
        )
    model.eval()
    return FineTuneResult(
        model=model, tokenizer=tokenizer, config=config, epoch_losses=epoch_losses
    )
