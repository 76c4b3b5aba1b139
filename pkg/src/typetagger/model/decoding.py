"""Greedy autoregressive decoding."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import torch

from ..typegram import SymbolVocab, allowed_next
from .training import BOS_ID, Supertagger


@dataclass(frozen=True)
class Decoded:
    tokens: tuple[str, ...]
    cap_exceeded: bool = False


def greedy_decode(model: Supertagger, sentences: Sequence[Sequence[str]], vocab: SymbolVocab,
                  grammar_mask: bool = False, max_tokens_per_word: int | None = None,
                  batch_size: int = 64) -> list[Decoded]:
    """Emit the argmax symbol step by step until the sentence has one type per word.

    Without a separator in ``vocab`` (fully merged models) every emitted
    symbol is one type.  Output is capped at words x ``max_tokens_per_word``
    symbols; hitting the cap sets ``cap_exceeded``.  Special symbols are
    never emitted; with ``grammar_mask`` only continuations that keep the
    output well-formed are considered.
    """
    per_word = max_tokens_per_word or model.cfg.max_tokens_per_word
    out: list[Decoded] = []
    model.eval()
    with torch.no_grad():
        for start in range(0, len(sentences), batch_size):
            out += _decode_block(model, [list(s) for s in sentences[start: start + batch_size]], vocab,
                                 grammar_mask, per_word)
    return out


def _decode_block(model: Supertagger, sentences: list[list[str]], vocab: SymbolVocab, grammar_mask: bool,
                  per_word: int) -> list[Decoded]:
    net = model.network
    words, src_mask = model.source(sentences)
    memory = net.encode(words, src_mask)
    tokens = vocab.tokens
    sep_id = vocab.index(vocab.separator) if vocab.separator else None
    banned = torch.zeros(len(tokens), dtype=torch.bool)
    for sp in vocab.specials:
        banned[vocab.index(sp)] = True
    n = len(sentences)
    caps = [len(s) * per_word for s in sentences]
    emitted: list[list[int]] = [[] for _ in range(n)]
    types_done = [0] * n
    active = [i for i in range(n) if len(sentences[i]) > 0]
    if not active:
        return [Decoded(()) for _ in sentences]
    capped = [False] * n
    cache = None
    previous = torch.full((len(active),), BOS_ID, dtype=torch.long)
    rows = torch.tensor(active)  # block rows still decoding
    while active:
        last, cache = net.decode_step(memory[rows], src_mask[rows], previous, cache)
        last = last.masked_fill(banned, float("-inf"))
        if grammar_mask and sep_id is not None:
            for row, i in enumerate(active):
                allowed = torch.tensor(allowed_next([tokens[t] for t in emitted[i]], vocab))
                last[row] = last[row].masked_fill(~allowed, float("-inf"))
        choice = last.argmax(-1).tolist()
        keep, still = [], []
        for row, i in enumerate(active):
            sym = choice[row]
            emitted[i].append(sym)
            if sep_id is None or sym == sep_id:
                types_done[i] += 1
            if types_done[i] >= len(sentences[i]):
                continue
            if len(emitted[i]) >= caps[i]:
                capped[i] = True
                continue
            keep.append(row)
            still.append(i)
        active = still
        keep_t = torch.tensor(keep, dtype=torch.long)
        previous = torch.tensor([choice[r] for r in keep], dtype=torch.long)
        rows = rows[keep_t]
        cache = [c[keep_t] for c in cache]
    return [Decoded(tuple(tokens[t] for t in e), c) for e, c in zip(emitted, capped)]
