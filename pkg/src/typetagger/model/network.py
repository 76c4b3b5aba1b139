"""Encoder-decoder network of the constructive supertagger."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields

import torch
from torch import nn

from .functional import gelu, log_sigsoftmax


class ShapeMismatch(ValueError):
    pass


@dataclass
class ModelConfig:
    d: int = 128
    enc_layers: int = 1
    enc_heads: int = 3
    dec_layers: int = 2
    dec_heads: int = 8
    ffn: int | None = None
    dropout: float = 0.2
    smoothing: float = 0.2
    warmup: int = 400
    lr_scale: float = 1.0
    max_tokens_per_word: int = 32
    batch_size: int = 128
    epochs: int = 300
    seed: int = 0
    word_dim: int | None = None

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        for name in ("d", "enc_layers", "enc_heads", "dec_layers", "dec_heads", "warmup",
                     "max_tokens_per_word", "batch_size"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.epochs < 0:
            raise ValueError("epochs must be non-negative")
        if self.d < max(self.enc_heads, self.dec_heads):
            raise ValueError("d must be at least the number of attention heads")
        for name in ("dropout", "smoothing"):
            if not 0.0 <= getattr(self, name) < 1.0:
                raise ValueError(f"{name} must lie in [0, 1)")
        if self.ffn is not None and self.ffn < 1:
            raise ValueError("ffn must be positive")
        if self.word_dim is not None and self.word_dim < 1:
            raise ValueError("word_dim must be positive")
        if self.lr_scale <= 0:
            raise ValueError("lr_scale must be positive")

    @property
    def ffn_width(self) -> int:
        return self.ffn or self.d

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> ModelConfig:
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in data.items() if k in known})


def sinusoidal_positions(length: int, d: int, dtype=torch.float32) -> torch.Tensor:
    pos = torch.arange(length, dtype=torch.float64).unsqueeze(1)
    i = torch.arange(0, d, 2, dtype=torch.float64)
    angle = pos / torch.pow(10000.0, i / d)
    pe = torch.zeros(length, d, dtype=torch.float64)
    pe[:, 0::2] = torch.sin(angle)
    pe[:, 1::2] = torch.cos(angle[:, : d // 2])
    return pe.to(dtype)


class MultiHeadAttention(nn.Module):
    """Scaled dot-product attention over ``heads`` heads of width d // heads.

    When d is not a multiple of the head count the concatenated heads are
    narrower than d and the output projection maps them back.
    """

    def __init__(self, d: int, heads: int, dropout: float):
        super().__init__()
        self.heads = heads
        self.dk = d // heads
        inner = self.dk * heads
        self.q = nn.Linear(d, inner)
        self.k = nn.Linear(d, inner)
        self.v = nn.Linear(d, inner)
        self.out = nn.Linear(inner, d)
        self.drop = nn.Dropout(dropout)
        self.last_weights: torch.Tensor | None = None

    def forward(self, query: torch.Tensor, memory: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
        """``mask`` is boolean, broadcastable to (B, Tq, Tk); True marks allowed keys."""
        b, tq, _ = query.shape
        tk = memory.shape[1]
        q = self.q(query).view(b, tq, self.heads, self.dk).transpose(1, 2)
        k = self.k(memory).view(b, tk, self.heads, self.dk).transpose(1, 2)
        v = self.v(memory).view(b, tk, self.heads, self.dk).transpose(1, 2)
        scores = q @ k.transpose(-1, -2) / math.sqrt(self.dk)
        scores = scores.masked_fill(~mask.unsqueeze(1), float("-inf"))
        weights = torch.softmax(scores, dim=-1)
        # a query with no admissible key (padding rows) attends to nothing
        weights = torch.nan_to_num(weights, nan=0.0)
        self.last_weights = weights.detach()
        ctx = (self.drop(weights) @ v).transpose(1, 2).reshape(b, tq, self.heads * self.dk)
        return self.out(ctx)


class FeedForward(nn.Module):
    def __init__(self, d: int, width: int, dropout: float):
        super().__init__()
        self.inner = nn.Linear(d, width)
        self.outer = nn.Linear(width, d)
        self.drop = nn.Dropout(dropout)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.outer(self.drop(gelu(self.inner(x))))


class EncoderLayer(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.attn = MultiHeadAttention(cfg.d, cfg.enc_heads, cfg.dropout)
        self.ffn = FeedForward(cfg.d, cfg.ffn_width, cfg.dropout)
        self.norm1 = nn.LayerNorm(cfg.d)
        self.norm2 = nn.LayerNorm(cfg.d)
        self.drop = nn.Dropout(cfg.dropout)

    def forward(self, x: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
        x = self.norm1(x + self.drop(self.attn(x, x, mask)))
        return self.norm2(x + self.drop(self.ffn(x)))


class DecoderLayer(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.self_attn = MultiHeadAttention(cfg.d, cfg.dec_heads, cfg.dropout)
        self.cross_attn = MultiHeadAttention(cfg.d, cfg.dec_heads, cfg.dropout)
        self.ffn = FeedForward(cfg.d, cfg.ffn_width, cfg.dropout)
        self.norm1 = nn.LayerNorm(cfg.d)
        self.norm2 = nn.LayerNorm(cfg.d)
        self.norm3 = nn.LayerNorm(cfg.d)
        self.drop = nn.Dropout(cfg.dropout)

    def forward(self, y: torch.Tensor, memory: torch.Tensor, self_mask: torch.Tensor,
                cross_mask: torch.Tensor) -> torch.Tensor:
        y = self.norm1(y + self.drop(self.self_attn(y, y, self_mask)))
        y = self.norm2(y + self.drop(self.cross_attn(y, memory, cross_mask)))
        return self.norm3(y + self.drop(self.ffn(y)))

    def step(self, y: torch.Tensor, past: torch.Tensor, memory: torch.Tensor,
             cross_mask: torch.Tensor) -> torch.Tensor:
        """One new position ``y`` (B, 1, d) attending over ``past`` (B, t, d), which ends with ``y``."""
        allowed = torch.ones(y.shape[0], 1, past.shape[1], dtype=torch.bool)
        y = self.norm1(y + self.drop(self.self_attn(y, past, allowed)))
        y = self.norm2(y + self.drop(self.cross_attn(y, memory, cross_mask)))
        return self.norm3(y + self.drop(self.ffn(y)))


class TaggerNetwork(nn.Module):
    """Word vectors in, per-step log-probabilities over output symbols out.

    The symbol embedding matrix doubles as the output projection, so the
    two always share one storage.
    """

    def __init__(self, cfg: ModelConfig, n_symbols: int, word_dim: int | None = None):
        super().__init__()
        self.cfg = cfg
        self.n_symbols = n_symbols
        word_dim = word_dim or cfg.word_dim or cfg.d
        self.word_dim = word_dim
        self.project = nn.Linear(word_dim, cfg.d) if word_dim != cfg.d else nn.Identity()
        self.symbols = nn.Embedding(n_symbols, cfg.d)
        nn.init.normal_(self.symbols.weight, std=cfg.d ** -0.5)
        self.encoder = nn.ModuleList(EncoderLayer(cfg) for _ in range(cfg.enc_layers))
        self.decoder = nn.ModuleList(DecoderLayer(cfg) for _ in range(cfg.dec_layers))
        self.drop = nn.Dropout(cfg.dropout)

    @property
    def output_projection(self) -> torch.Tensor:
        return self.symbols.weight

    def positions(self, length: int, like: torch.Tensor) -> torch.Tensor:
        return sinusoidal_positions(length, self.cfg.d, like.dtype)

    def encode(self, words: torch.Tensor, src_mask: torch.Tensor) -> torch.Tensor:
        """``words``: (B, S, word_dim) vectors; ``src_mask``: (B, S), True on real words."""
        if words.dim() != 3 or words.shape[-1] != self.word_dim:
            raise ShapeMismatch(f"expected (batch, words, {self.word_dim}) input, got {tuple(words.shape)}")
        if src_mask.shape != words.shape[:2]:
            raise ShapeMismatch("source mask does not match the input block")
        x = self.project(words)
        x = self.drop(x + self.positions(x.shape[1], x))
        attn_mask = src_mask.unsqueeze(1)
        for layer in self.encoder:
            x = layer(x, attn_mask)
        return x

    def decoder_logits(self, memory: torch.Tensor, src_mask: torch.Tensor, targets: torch.Tensor,
                       tgt_mask: torch.Tensor) -> torch.Tensor:
        """Scores (B, T, V) before normalization, one row per target prefix."""
        if targets.dim() != 2 or targets.shape != tgt_mask.shape or targets.shape[0] != memory.shape[0]:
            raise ShapeMismatch("target block and mask shapes disagree")
        t = targets.shape[1]
        y = self.symbols(targets) * math.sqrt(self.cfg.d)
        y = self.drop(y + self.positions(t, y))
        causal = torch.ones(t, t, dtype=torch.bool).tril()
        self_mask = causal.unsqueeze(0) & tgt_mask.unsqueeze(1)
        cross_mask = src_mask.unsqueeze(1)
        for layer in self.decoder:
            y = layer(y, memory, self_mask, cross_mask)
        return y @ self.output_projection.t()

    def decode_step(self, memory: torch.Tensor, src_mask: torch.Tensor, symbol: torch.Tensor,
                    cache: list[torch.Tensor] | None) -> tuple[torch.Tensor, list[torch.Tensor]]:
        """Scores (B, V) for the position after ``symbol`` (B,), reusing earlier layer inputs.

        ``cache`` holds, per decoder layer, that layer's inputs at all earlier
        positions (None before the first step).  Equal to the last row of
        ``decoder_logits`` on the full prefix when dropout is off.
        """
        t = 0 if cache is None else cache[0].shape[1]
        y = self.symbols(symbol).unsqueeze(1) * math.sqrt(self.cfg.d)
        y = self.drop(y + sinusoidal_positions(t + 1, self.cfg.d, y.dtype)[t])
        cross_mask = src_mask.unsqueeze(1)
        new_cache = []
        for i, layer in enumerate(self.decoder):
            past = y if cache is None else torch.cat([cache[i], y], dim=1)
            new_cache.append(past)
            y = layer.step(y, past, memory, cross_mask)
        return (y @ self.output_projection.t())[:, 0], new_cache

    def forward(self, words: torch.Tensor, src_mask: torch.Tensor, targets: torch.Tensor,
                tgt_mask: torch.Tensor) -> torch.Tensor:
        """Log-probabilities (B, T, V) under teacher forcing."""
        memory = self.encode(words, src_mask)
        return log_sigsoftmax(self.decoder_logits(memory, src_mask, targets, tgt_mask))
