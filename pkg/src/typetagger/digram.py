"""Digram (byte-pair) merges over intra-type symbol sequences."""

from __future__ import annotations

from collections import Counter
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .typegram import SPECIALS, SymbolVocab, flatten_assignment, segment_assignment, split_segments
from .types import SEPARATOR, Type, UnknownSymbolError, Vocabulary

EXHAUSTIVE = "exhaustive"
JOIN = "·"
FORMAT_HEADER = "# typetagger-merges v1"


class EmptyCorpusError(ValueError):
    pass


@dataclass
class MergeTable:
    rules: list[tuple[str, str, str]] = field(default_factory=list)
    expansions: dict[str, tuple[str, ...]] = field(default_factory=dict)
    exhaustive: bool = False
    frequencies: list[int] = field(default_factory=list)
    _memo: dict = field(default_factory=dict, repr=False, compare=False)

    def __len__(self) -> int:
        return len(self.rules)

    def add(self, left: str, right: str, count: int = 0) -> str:
        expansion = self.expand(left) + self.expand(right)
        merged = JOIN.join(expansion)
        known = self.expansions.get(merged)
        if known is not None and known != expansion:
            raise ValueError(f"merged name {merged!r} already used for {known!r}")
        self.expansions[merged] = expansion
        self.rules.append((left, right, merged))
        self._memo.clear()
        self.frequencies.append(count)
        return merged

    def expand(self, token: str) -> tuple[str, ...]:
        return self.expansions.get(token, (token,))

    def encode_run(self, run: tuple[str, ...]) -> tuple[str, ...]:
        """Apply every rule in order to one barrier-free run."""
        cached = self._memo.get(run)
        if cached is None:
            r = run
            for left, right, merged in self.rules:
                if len(r) < 2:
                    break
                r = _merge_run(r, left, right, merged)
            cached = self._memo[run] = r
        return cached

    def validate(self) -> None:
        known: set[str] = set()
        for left, right, merged in self.rules:
            for tok in (left, right):
                if tok == SEPARATOR or tok in SPECIALS:
                    raise ValueError(f"rule pairs across a barrier token: {left} {right}")
            if self.expansions.get(merged) != self.expand(left) + self.expand(right):
                raise ValueError(f"expansion of {merged!r} does not match its rule")
            known.add(merged)
        for merged, expansion in self.expansions.items():
            if merged not in known:
                raise ValueError(f"expansion listed for unknown merged token {merged!r}")
            if any(t == SEPARATOR or t in SPECIALS or t in self.expansions for t in expansion):
                raise ValueError(f"expansion of {merged!r} is not over base symbols")


def _segments(seq: Sequence[str]) -> list[tuple[str, ...]]:
    return [run for run, _ in split_segments(seq)]


def _merge_run(run: Sequence[str], left: str, right: str, merged: str) -> tuple[str, ...]:
    out: list[str] = []
    i = 0
    n = len(run)
    while i < n:
        if i + 1 < n and run[i] == left and run[i + 1] == right:
            out.append(merged)
            i += 2
        else:
            out.append(run[i])
            i += 1
    return tuple(out)


def count_digrams(segments: Counter) -> Counter:
    pairs: Counter = Counter()
    for run, weight in segments.items():
        for a, b in zip(run, run[1:]):
            pairs[a, b] += weight
    return pairs


def best_digram(pairs: Counter) -> tuple[tuple[str, str], int]:
    """Most frequent pair; ties go to the smallest (left, right) by name."""
    best = max(pairs.values())
    return min(p for p, c in pairs.items() if c == best), best


def learn_merges(sequences: Iterable[Sequence[str]], n: int | str = 0) -> MergeTable:
    """Learn up to ``n`` merges (or merge to exhaustion) from flattened sequences.

    Every occurrence of a type in the corpus contributes to the counts.
    Pairs are only counted inside separator-delimited runs.
    """
    segments: Counter = Counter()
    empty = True
    for seq in sequences:
        empty = False
        for run in _segments(seq):
            if run:
                segments[run] += 1
    if empty:
        raise EmptyCorpusError("cannot learn merges from an empty corpus")
    exhaustive = n == EXHAUSTIVE
    if not exhaustive and (not isinstance(n, (int, np.integer)) or n < 0):
        raise ValueError(f"merge count must be a non-negative integer or {EXHAUSTIVE!r}, got {n!r}")
    table = MergeTable(exhaustive=exhaustive)
    while exhaustive or len(table) < n:
        pairs = count_digrams(segments)
        if not pairs:
            break
        (left, right), count = best_digram(pairs)
        merged = table.add(left, right, count)
        updated: Counter = Counter()
        for run, weight in segments.items():
            updated[_merge_run(run, left, right, merged)] += weight
        segments = updated
    return table


def apply_merges(seq: Sequence[str], table: MergeTable) -> list[str]:
    out: list[str] = []
    run: list[str] = []

    def flush():
        out.extend(table.encode_run(tuple(run)))
        run.clear()

    for tok in seq:
        if tok == SEPARATOR or tok in SPECIALS:
            flush()
            out.append(tok)
        else:
            run.append(tok)
    flush()
    return out


def revert_merges(seq: Sequence[str], table: MergeTable, vocab: SymbolVocab | Vocabulary | None = None) -> list[str]:
    """Replace merged tokens by their base expansion.

    With a vocabulary, any remaining token outside it raises
    UnknownSymbolError.
    """
    base = vocab.base if isinstance(vocab, SymbolVocab) else vocab
    known = set(base.tokens) if base is not None else None
    out: list[str] = []
    for tok in seq:
        expansion = table.expansions.get(tok)
        if expansion is None:
            if isinstance(vocab, SymbolVocab) and tok in vocab.merged:
                expansion = vocab.merged[tok]
            elif tok == SEPARATOR or tok in SPECIALS:
                expansion = (tok,)
            elif known is not None and tok not in known:
                raise UnknownSymbolError(tok)
            elif known is None and JOIN in tok:
                raise UnknownSymbolError(tok)
            else:
                expansion = (tok,)
        out.extend(expansion)
    return out


def save_merges(table: MergeTable, path: str | Path, header: Sequence[str] = ()) -> None:
    lines = [FORMAT_HEADER]
    lines += [f"# {h}" for h in header]
    lines.append(f"exhaustive {str(table.exhaustive).lower()}")
    lines.append("[rules]")
    lines += [f"{l} {r} {m}" for l, r, m in table.rules]
    lines.append("[expansions]")
    lines += [f"{m} {' '.join(e)}" for m, e in table.expansions.items()]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_merges(path: str | Path) -> MergeTable:
    text = Path(path).read_text(encoding="utf-8").splitlines()
    if not text or text[0].strip() != FORMAT_HEADER:
        raise ValueError(f"{path}:1: missing header {FORMAT_HEADER!r}")
    table = MergeTable()
    section = None
    for lineno, line in enumerate(text[1:], start=2):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if line in ("[rules]", "[expansions]"):
            section = line
            continue
        parts = line.split()
        if section is None and parts[0] == "exhaustive":
            table.exhaustive = parts[1] == "true"
        elif section == "[rules]" and len(parts) == 3:
            table.rules.append((parts[0], parts[1], parts[2]))
            table.frequencies.append(0)
        elif section == "[expansions]" and len(parts) >= 2:
            table.expansions[parts[0]] = tuple(parts[1:])
        else:
            raise ValueError(f"{path}:{lineno}: malformed line {line!r}")
    try:
        table.validate()
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None
    return table


class DigramEncoder(TransformerMixin, BaseEstimator):
    """Learn digram merges on type assignments and encode them as tokens.

    ``fit`` takes a list of per-sentence type lists.  With
    ``n_merges="exhaustive"`` each training type becomes a single token and
    the separator is dropped from encoded sequences.
    """

    def __init__(self, n_merges: int | str = 0, vocabulary: Vocabulary | None = None):
        self.n_merges = n_merges
        self.vocabulary = vocabulary

    def fit(self, y: Sequence[Sequence[Type]], X=None):
        vocab = self.vocabulary or _infer_vocabulary(y)
        flat = [flatten_assignment(types, vocab) for types in y]
        self.table_ = learn_merges(flat, self.n_merges)
        self.vocabulary_ = vocab
        if self.closed_:
            observed = sorted({tok for seq in flat for tok in apply_merges(seq, self.table_) if tok != SEPARATOR})
            self.symbols_ = SymbolVocab(vocab, self.table_.expansions, separator=None, restrict_to=observed)
        else:
            self.symbols_ = SymbolVocab(vocab, self.table_.expansions)
        return self

    @property
    def closed_(self) -> bool:
        return self.n_merges == EXHAUSTIVE

    def transform(self, y: Sequence[Sequence[Type]]) -> list[list[str]]:
        check_is_fitted(self, "table_")
        out = []
        for types in y:
            seq = apply_merges(flatten_assignment(types), self.table_)
            if self.closed_:
                seq = [t for t in seq if t != SEPARATOR]
            out.append(seq)
        return out

    def inverse_transform(self, tokens: Sequence[Sequence[str]]) -> list[list[str]]:
        """Revert encoded token sequences to base symbols with separators."""
        check_is_fitted(self, "table_")
        out = []
        for seq in tokens:
            if self.closed_:
                seq = [x for tok in seq for x in (tok, SEPARATOR)]
            out.append(revert_merges(seq, self.table_))
        return out

    def segment(self, tokens: Sequence[Sequence[str]]):
        return [segment_assignment(seq, self.vocabulary_) for seq in self.inverse_transform(tokens)]


def _infer_vocabulary(y: Sequence[Sequence[Type]]) -> Vocabulary:
    from .types import Atom, _walk

    atoms, labels, stars = {}, {}, {}
    for types in y:
        for t in types:
            for node in _walk(t):
                if isinstance(node, Atom):
                    atoms[node.name] = None
                    if node.star:
                        stars[node.name] = None
                else:
                    labels[node.label] = None
    return Vocabulary(tuple(sorted(atoms)), tuple(sorted(labels)), tuple(sorted(stars)))
