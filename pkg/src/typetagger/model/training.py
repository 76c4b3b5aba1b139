"""Teacher-forced batches and the training loop."""

from __future__ import annotations

import copy
import json
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from typing import TextIO

import numpy as np
import torch
from torch import nn

from .functional import log_sigsoftmax, loss_kl_smoothed, lr_schedule
from .network import ModelConfig, TaggerNetwork
from .words import Precomputed, TrainableLookup

PAD_ID = 0
BOS_ID = 1


class Divergence(RuntimeError):
    pass


class Supertagger(nn.Module):
    """A word representation provider stacked under the encoder-decoder."""

    def __init__(self, cfg: ModelConfig, provider: TrainableLookup | Precomputed, n_symbols: int):
        super().__init__()
        self.cfg = cfg
        self.provider = provider
        self.network = TaggerNetwork(cfg, n_symbols, word_dim=provider.dim)

    def source(self, sentences: Sequence[Sequence[str]]) -> tuple[torch.Tensor, torch.Tensor]:
        vectors = self.provider(sentences)
        mask = torch.zeros(vectors.shape[:2], dtype=torch.bool)
        for i, s in enumerate(sentences):
            mask[i, : len(s)] = True
        return vectors.to(self.network.symbols.weight.dtype), mask


@dataclass
class Batch:
    sentences: list[list[str]]
    inputs: torch.Tensor  # (B, T): start symbol then gold prefix
    gold: torch.Tensor  # (B, T): next symbol at each position
    tgt_mask: torch.Tensor  # (B, T): True on non-padding positions

    @property
    def size(self) -> int:
        return len(self.sentences)


def make_batch(sentences: Sequence[Sequence[str]], targets: Sequence[Sequence[int]],
               pad_id: int = PAD_ID, bos_id: int = BOS_ID) -> Batch:
    if len(sentences) != len(targets) or not sentences:
        raise ValueError("a batch needs equally many (and at least one) sentences and targets")
    width = max(len(t) for t in targets)
    inputs = torch.full((len(targets), width), pad_id, dtype=torch.long)
    gold = torch.full((len(targets), width), pad_id, dtype=torch.long)
    for i, t in enumerate(targets):
        if not t:
            raise ValueError(f"target {i} is empty")
        seq = torch.tensor(list(t), dtype=torch.long)
        gold[i, : len(t)] = seq
        inputs[i, 0] = bos_id
        inputs[i, 1: len(t)] = seq[:-1]
    return Batch([list(s) for s in sentences], inputs, gold, inputs != pad_id)


def forward_teacher_forced(model: Supertagger, batch: Batch) -> torch.Tensor:
    """Log-probabilities (B, T, V); position t sees gold symbols before t only."""
    words, src_mask = model.source(batch.sentences)
    net = model.network
    memory = net.encode(words, src_mask)
    return log_sigsoftmax(net.decoder_logits(memory, src_mask, batch.inputs, batch.tgt_mask))


def batch_loss(model: Supertagger, batch: Batch) -> torch.Tensor:
    log_probs = forward_teacher_forced(model, batch)
    return loss_kl_smoothed(log_probs, batch.gold, model.cfg.smoothing, PAD_ID)


@dataclass
class TrainLog:
    records: list[dict] = field(default_factory=list)
    lr_trace: list[float] = field(default_factory=list)
    best_epoch: int | None = None
    best_score: float | None = None
    stopped_early: bool = False

    @property
    def losses(self) -> list[float]:
        return [r["loss"] for r in self.records]

    def write(self, fh: TextIO, header: dict | None = None) -> None:
        if header is not None:
            fh.write(json.dumps({"config": header}, sort_keys=True) + "\n")
        for rec in self.records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def length_buckets(lengths: Sequence[int], batch_size: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Batches of similar target length, in random order.

    Samples are shuffled, stably sorted by length, cut into batches, and
    the batches are shuffled again.
    """
    order = rng.permutation(len(lengths))
    order = order[np.argsort(np.asarray(lengths)[order], kind="stable")]
    batches = [order[i: i + batch_size] for i in range(0, len(order), batch_size)]
    return [batches[j] for j in rng.permutation(len(batches))]


def train(model: Supertagger, sentences: Sequence[Sequence[str]], targets: Sequence[Sequence[int]],
          cfg: ModelConfig | None = None, evaluate: Callable[[Supertagger], float] | None = None,
          eval_every: int = 1, stop_at: float | None = None,
          on_epoch: Callable[[dict], None] | None = None) -> TrainLog:
    """Train in place with Adam under the warmup schedule.

    ``evaluate`` scores the model (validation type accuracy) every
    ``eval_every`` epochs; the best-scoring weights are restored at the end.
    Training stops once the score reaches ``stop_at``.
    """
    cfg = cfg or model.cfg
    if len(sentences) != len(targets) or not sentences:
        raise ValueError("training needs equally many (and at least one) sentences and targets")
    torch.manual_seed(cfg.seed)
    rng = np.random.default_rng(cfg.seed)
    optimizer = torch.optim.Adam(model.parameters(), lr=0.0, betas=(0.9, 0.98), eps=1e-9)
    log = TrainLog()
    best_state = None
    step = 0
    lengths = [len(t) for t in targets]
    for epoch in range(1, cfg.epochs + 1):
        model.train()
        total, tokens = 0.0, 0
        for idx in length_buckets(lengths, cfg.batch_size, rng):
            batch = make_batch([sentences[i] for i in idx], [targets[i] for i in idx])
            step += 1
            lr = cfg.lr_scale * lr_schedule(step, cfg.d, cfg.warmup)
            for group in optimizer.param_groups:
                group["lr"] = lr
            log.lr_trace.append(lr)
            loss = batch_loss(model, batch)
            if not torch.isfinite(loss):
                raise Divergence(f"loss became {loss.item()} at epoch {epoch}, step {step} (lr {lr:.3e})")
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            count = int(batch.tgt_mask.sum())
            total += loss.item() * count
            tokens += count
        record = {"epoch": epoch, "loss": total / tokens, "lr": log.lr_trace[-1]}
        if evaluate is not None and (epoch % eval_every == 0 or epoch == cfg.epochs):
            model.eval()
            score = float(evaluate(model))
            record["val_accuracy"] = score
            if log.best_score is None or score > log.best_score:
                log.best_score, log.best_epoch = score, epoch
                best_state = copy.deepcopy(model.state_dict())
        log.records.append(record)
        if on_epoch is not None:
            on_epoch(record)
        if stop_at is not None and record.get("val_accuracy", -math.inf) >= stop_at:
            log.stopped_early = True
            break
    if best_state is not None:
        model.load_state_dict(best_state)
    model.eval()
    return log
