"""The type-forming grammar over output tokens.

Recognition of polish-notation types token by token, whole-sentence
flattening with the separator symbol, and the next-token mask used by the
optional grammar-constrained decoding mode.
"""

from __future__ import annotations

import enum
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field

from .types import (
    ARROW,
    SEPARATOR,
    PolishParseError,
    Type,
    UnknownSymbolError,
    Vocabulary,
    parse_polish,
    serialize_polish,
)

PAD = "<pad>"
BOS = "<s>"
EOS = "</s>"
SPECIALS = (PAD, BOS, EOS)


@dataclass(frozen=True)
class SymbolVocab:
    """Output token inventory of the supertagger.

    Token order is fixed: specials, separator, atoms, connectives, merged
    tokens in learning order.  ``merged`` maps each merged token to its
    expansion over atoms and connectives.
    """

    base: Vocabulary
    merged: Mapping[str, tuple[str, ...]] = field(default_factory=dict)
    separator: str | None = SEPARATOR
    specials: tuple[str, ...] = SPECIALS
    restrict_to: tuple[str, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "merged", dict(self.merged))
        base_tokens = set(self.base.tokens)
        for tok, expansion in self.merged.items():
            if tok in base_tokens:
                raise ValueError(f"merged token {tok!r} shadows a base symbol")
            if not expansion or any(e not in base_tokens for e in expansion):
                raise ValueError(f"merged token {tok!r} has an invalid expansion {expansion!r}")
        if self.restrict_to is not None:
            object.__setattr__(self, "restrict_to", tuple(self.restrict_to))
        toks = self.tokens
        if len(set(toks)) != len(toks):
            raise ValueError("token names are not pairwise distinct")
        object.__setattr__(self, "_index", {t: i for i, t in enumerate(toks)})

    @classmethod
    def from_vocabulary(cls, vocab: Vocabulary, merged: Mapping[str, Sequence[str]] | None = None, **kw) -> SymbolVocab:
        return cls(vocab, {k: tuple(v) for k, v in (merged or {}).items()}, **kw)

    @property
    def atoms(self) -> list[str]:
        return self.base.atom_tokens

    @property
    def connectives(self) -> list[str]:
        return self.base.connective_tokens

    @property
    def tokens(self) -> list[str]:
        if self.restrict_to is not None:
            content = list(self.restrict_to)
        else:
            content = self.atoms + self.connectives + list(self.merged)
        sep = [self.separator] if self.separator else []
        return list(self.specials) + sep + content

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._index

    def index(self, token: str) -> int:
        try:
            return self._index[token]
        except KeyError:
            raise UnknownSymbolError(token) from None

    def encode(self, tokens: Iterable[str]) -> list[int]:
        return [self.index(t) for t in tokens]

    def decode(self, ids: Iterable[int]) -> list[str]:
        toks = self.tokens
        return [toks[i] for i in ids]

    def expand(self, token: str) -> tuple[str, ...]:
        if token in self.merged:
            return self.merged[token]
        if token.startswith(ARROW) or token in self.base.atom_tokens:
            self.base.read_token(token)
            return (token,)
        raise UnknownSymbolError(token)

    def deficit_change(self, token: str) -> int:
        return sum(1 if t.startswith(ARROW) else -1 for t in self.expand(token))


class Status(enum.Enum):
    VALID_COMPLETE = "valid-complete"
    VALID_PREFIX = "valid-prefix"
    INVALID = "invalid"


@dataclass(frozen=True)
class PrefixStatus:
    status: Status
    pending: int

    @property
    def complete(self) -> bool:
        return self.status is Status.VALID_COMPLETE

    @property
    def invalid(self) -> bool:
        return self.status is Status.INVALID


def prefix_status(tokens: Sequence[str], v: SymbolVocab | Vocabulary) -> PrefixStatus:
    """Classify a token run as a complete type, a viable prefix, or invalid.

    Tracks the number of operands still owed: one at the start, one more
    per connective, one fewer per atom (star-decorated atoms included).
    Merged tokens count through their expansion.
    """
    sv = v if isinstance(v, SymbolVocab) else SymbolVocab(v)
    pending = 1
    for tok in tokens:
        for sym in sv.expand(tok):
            if pending == 0:
                return PrefixStatus(Status.INVALID, 0)
            pending += 1 if sym.startswith(ARROW) else -1
    if pending == 0:
        return PrefixStatus(Status.VALID_COMPLETE, 0)
    return PrefixStatus(Status.VALID_PREFIX, pending)


def flatten_assignment(types: Iterable[Type], v: SymbolVocab | Vocabulary | None = None, separator: str = SEPARATOR) -> list[str]:
    out: list[str] = []
    base = v.base if isinstance(v, SymbolVocab) else v
    for t in types:
        if base is not None:
            base.check(t)
        out.extend(serialize_polish(t))
        out.append(separator)
    return out


@dataclass(frozen=True)
class Segment:
    """One separator-delimited run of a decoded sequence."""

    tokens: tuple[str, ...]
    type: Type | None
    error: str | None = None
    terminated: bool = True

    @property
    def ok(self) -> bool:
        return self.type is not None


def split_segments(tokens: Sequence[str], separator: str = SEPARATOR) -> list[tuple[tuple[str, ...], bool]]:
    runs, cur = [], []
    for tok in tokens:
        if tok == separator:
            runs.append((tuple(cur), True))
            cur = []
        else:
            cur.append(tok)
    if cur:
        runs.append((tuple(cur), False))
    return runs


def segment_assignment(tokens: Sequence[str], v: SymbolVocab | Vocabulary | None = None, separator: str = SEPARATOR) -> list[Segment]:
    """Split on the separator and parse every run independently.

    A run that fails to parse is kept with its error; a trailing run with
    no closing separator is kept and flagged as unterminated.
    """
    sv = v if isinstance(v, SymbolVocab) else None
    base = v.base if isinstance(v, SymbolVocab) else v
    out = []
    for run, terminated in split_segments(tokens, separator):
        try:
            expanded = [s for tok in run for s in sv.expand(tok)] if sv is not None else list(run)
            t = parse_polish(expanded, base)
        except PolishParseError as exc:
            out.append(Segment(run, None, f"{type(exc).__name__}: {exc}", terminated))
        else:
            out.append(Segment(run, t, None, terminated))
    return out


def allowed_next(prefix: Sequence[str], v: SymbolVocab) -> list[bool]:
    """Per-token mask of continuations that keep the output well-formed.

    ``prefix`` is the output so far for one sentence, without the start
    token.  Separators close a complete type; content tokens must not
    overfill the current type.
    """
    pending = 1
    started = False
    for tok in prefix:
        if tok == v.separator:
            pending, started = 1, False
            continue
        pending += v.deficit_change(tok)
        started = True
    mask = []
    for tok in v.tokens:
        if tok in v.specials:
            mask.append(False)
        elif tok == v.separator:
            mask.append(started and pending == 0)
        else:
            mask.append(pending > 0 and _fits(v.expand(tok), pending))
    return mask


def _fits(expansion: Sequence[str], pending: int) -> bool:
    for i, sym in enumerate(expansion):
        if pending == 0:
            return False
        pending += 1 if sym.startswith(ARROW) else -1
    return True
