"""Checkpoints and symbol embedding export."""

from __future__ import annotations

import io
from collections.abc import Sequence
from pathlib import Path

import numpy as np
import torch

CHECKPOINT_FORMAT = "typetagger-checkpoint"
CHECKPOINT_VERSION = 1
EMBEDDINGS_HEADER = "# typetagger-embeddings v1"


class CheckpointError(ValueError):
    pass


def save_checkpoint(path: str | Path, payload: dict) -> None:
    """Write ``payload`` (must hold a ``state`` dict of tensors) with format, version and shapes."""
    state = payload["state"]
    data = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "shapes": {k: list(v.shape) for k, v in state.items()},
        **payload,
    }
    buf = io.BytesIO()
    torch.save(data, buf)
    Path(path).write_bytes(buf.getvalue())


def load_checkpoint(path: str | Path) -> dict:
    try:
        data = torch.load(path, map_location="cpu", weights_only=False)
    except Exception as exc:  # torch raises a variety of unpickling errors
        raise CheckpointError(f"{path}: not a readable checkpoint ({exc})") from None
    if not isinstance(data, dict) or data.get("format") != CHECKPOINT_FORMAT:
        raise CheckpointError(f"{path}: not a {CHECKPOINT_FORMAT} file")
    if data.get("version") != CHECKPOINT_VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {data.get('version')!r}")
    for name, shape in data["shapes"].items():
        if list(data["state"][name].shape) != shape:
            raise CheckpointError(f"{path}: tensor {name} has shape {list(data['state'][name].shape)}, header says {shape}")
    return data


def export_symbol_embeddings(path: str | Path, tokens: Sequence[str], matrix: torch.Tensor | np.ndarray,
                             header: Sequence[str] = ()) -> None:
    """One labeled vector per symbol; floats written with repr so reloading is exact."""
    m = matrix.detach().cpu().double().numpy() if isinstance(matrix, torch.Tensor) else np.asarray(matrix, dtype=float)
    if m.shape[0] != len(tokens):
        raise ValueError(f"{len(tokens)} symbols but {m.shape[0]} rows")
    lines = [EMBEDDINGS_HEADER, f"# rows {m.shape[0]} dim {m.shape[1]}"]
    lines += [f"# {h}" for h in header]
    for tok, row in zip(tokens, m):
        lines.append(tok + "\t" + " ".join(repr(float(x)) for x in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_symbol_embeddings(path: str | Path) -> tuple[list[str], np.ndarray]:
    text = Path(path).read_text(encoding="utf-8").splitlines()
    if not text or text[0] != EMBEDDINGS_HEADER:
        raise ValueError(f"{path}:1: missing header {EMBEDDINGS_HEADER!r}")
    tokens, rows = [], []
    for lineno, line in enumerate(text[1:], start=2):
        # header lines start with "# "; the separator symbol's row starts with "#\t"
        if line.startswith("# ") or not line:
            continue
        tok, sep, values = line.partition("\t")
        if not sep:
            raise ValueError(f"{path}:{lineno}: expected a tab between symbol and vector")
        tokens.append(tok)
        rows.append([float(v) for v in values.split()])
    if len({len(r) for r in rows}) > 1:
        raise ValueError(f"{path}: rows differ in width")
    return tokens, np.array(rows, dtype=float)


def cosine_similarity(matrix: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(matrix, axis=1, keepdims=True)
    unit = matrix / np.where(norms == 0, 1.0, norms)
    return unit @ unit.T
