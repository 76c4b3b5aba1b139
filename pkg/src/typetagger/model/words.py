"""Word representation providers feeding the encoder."""

from __future__ import annotations

import json
from collections.abc import Iterable, Sequence
from pathlib import Path

import torch
from torch import nn

UNK = "<unk>"
WORD_PAD = "<wpad>"


class MissingVectors(KeyError):
    pass


class TrainableLookup(nn.Module):
    """A trainable embedding table; unknown words share the ``<unk>`` row."""

    kind = "lookup"

    def __init__(self, words: Iterable[str], dim: int):
        super().__init__()
        self.words = [WORD_PAD, UNK] + sorted(set(words) - {WORD_PAD, UNK})
        self.index = {w: i for i, w in enumerate(self.words)}
        self.dim = dim
        self.table = nn.Embedding(len(self.words), dim, padding_idx=0)

    def ids(self, sentence: Sequence[str]) -> list[int]:
        unk = self.index[UNK]
        return [self.index.get(w, unk) for w in sentence]

    def forward(self, sentences: Sequence[Sequence[str]]) -> torch.Tensor:
        width = max(len(s) for s in sentences)
        block = torch.zeros(len(sentences), width, dtype=torch.long)
        for i, s in enumerate(sentences):
            block[i, : len(s)] = torch.tensor(self.ids(s), dtype=torch.long)
        return self.table(block)

    def spec(self) -> dict:
        return {"kind": self.kind, "dim": self.dim, "words": self.words}


class Precomputed(nn.Module):
    """Frozen per-word vectors produced elsewhere, keyed by sentence.

    File format: one JSON object per line with ``words`` (list of str) and
    ``vectors`` (one list of ``dim`` floats per word).
    """

    kind = "precomputed"

    def __init__(self, vectors: dict[tuple[str, ...], torch.Tensor], dim: int):
        super().__init__()
        self.vectors = vectors
        self.dim = dim

    @classmethod
    def from_file(cls, path: str | Path) -> Precomputed:
        vectors: dict[tuple[str, ...], torch.Tensor] = {}
        dim = None
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    rec = json.loads(line)
                    words, vecs = tuple(rec["words"]), rec["vectors"]
                except (json.JSONDecodeError, KeyError, TypeError) as exc:
                    raise ValueError(f"{path}:{lineno}: malformed record ({exc})") from None
                if len(vecs) != len(words) or not words:
                    raise ValueError(f"{path}:{lineno}: {len(words)} words but {len(vecs)} vectors")
                widths = {len(v) for v in vecs}
                if len(widths) != 1 or (dim is not None and widths != {dim}):
                    raise ValueError(f"{path}:{lineno}: vectors are not of one fixed width")
                dim = widths.pop()
                vectors[words] = torch.tensor(vecs, dtype=torch.float64)
        if dim is None:
            raise ValueError(f"{path}: no vectors")
        return cls(vectors, dim)

    def forward(self, sentences: Sequence[Sequence[str]]) -> torch.Tensor:
        width = max(len(s) for s in sentences)
        block = torch.zeros(len(sentences), width, self.dim, dtype=torch.get_default_dtype())
        for i, s in enumerate(sentences):
            try:
                block[i, : len(s)] = self.vectors[tuple(s)]
            except KeyError:
                raise MissingVectors(f"no precomputed vectors for sentence {' '.join(s)!r}") from None
        return block

    def spec(self) -> dict:
        return {"kind": self.kind, "dim": self.dim}


WordRepProvider = TrainableLookup | Precomputed
