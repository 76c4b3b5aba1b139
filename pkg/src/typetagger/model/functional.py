"""Activation, output normalization, loss and learning-rate schedule."""

from __future__ import annotations

import math

import torch
import torch.nn.functional as F


def gelu(x: torch.Tensor | float) -> torch.Tensor | float:
    """x * Phi(x) with the exact erf form of the normal CDF."""
    if isinstance(x, torch.Tensor):
        return x * 0.5 * (1.0 + torch.erf(x / math.sqrt(2.0)))
    return x * 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


def log_sigsoftmax(logits: torch.Tensor, dim: int = -1) -> torch.Tensor:
    """log of exp(z) * sigmoid(z), normalized along ``dim``.

    Working in log space keeps it finite: log sigmoid never overflows and
    logsumexp subtracts the running maximum.
    """
    s = logits + F.logsigmoid(logits)
    return s - torch.logsumexp(s, dim=dim, keepdim=True)


def sigsoftmax(logits: torch.Tensor, dim: int = -1) -> torch.Tensor:
    return log_sigsoftmax(logits, dim).exp()


def smoothed_targets(gold: torch.Tensor, vocab_size: int, smoothing: float, pad_index: int) -> torch.Tensor:
    """Target distributions: 1 - smoothing on gold, the rest spread over the other non-pad symbols."""
    shape = gold.shape + (vocab_size,)
    others = vocab_size - 2 if pad_index is not None else vocab_size - 1
    fill = smoothing / others if others > 0 else 0.0
    q = torch.full(shape, fill, dtype=torch.float64)
    if pad_index is not None:
        q[..., pad_index] = 0.0
    q.scatter_(-1, gold.unsqueeze(-1), 1.0 - smoothing if others > 0 else 1.0)
    return q


def loss_kl_smoothed(log_probs: torch.Tensor, gold: torch.Tensor, smoothing: float = 0.2,
                     pad_index: int | None = 0) -> torch.Tensor:
    """KL(q || p) against label-smoothed targets, averaged over non-pad positions.

    ``log_probs`` has shape (..., V); ``gold`` the matching (...) indices.
    """
    if not 0.0 <= smoothing < 1.0:
        raise ValueError("smoothing must lie in [0, 1)")
    q = smoothed_targets(gold, log_probs.shape[-1], smoothing, pad_index).to(log_probs.dtype)
    # 0 * log 0 counts as 0
    log_q = torch.where(q > 0, q.clamp_min(1e-300).log(), torch.zeros_like(q))
    kl = (q * (log_q - log_probs)).sum(-1)
    keep = gold != pad_index if pad_index is not None else torch.ones_like(gold, dtype=torch.bool)
    n = keep.sum()
    if n == 0:
        return log_probs.sum() * 0.0
    return (kl * keep).sum() / n


def lr_schedule(step: int, d: int, warmup: int) -> float:
    if step < 1:
        raise ValueError("step counts from 1")
    if warmup < 1:
        raise ValueError("warmup must be positive")
    return d ** -0.5 * min(step ** -0.5, step * warmup ** -1.5)
