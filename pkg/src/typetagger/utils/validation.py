"""Input checks shared by the estimators."""

from __future__ import annotations

from collections.abc import Sequence

from ..types import Arrow, Atom, Type


def check_sentences(X) -> list[list[str]]:
    """A list of non-empty sentences, each a list of whitespace-free words."""
    if isinstance(X, (str, bytes)) or not isinstance(X, Sequence):
        raise TypeError("expected a sequence of sentences (lists of words)")
    out = []
    for i, s in enumerate(X):
        if isinstance(s, str):
            raise TypeError(f"sentence {i} is a string; pass a list of words")
        words = list(s)
        if not words:
            raise ValueError(f"sentence {i} is empty")
        for w in words:
            if not isinstance(w, str) or not w or any(c.isspace() for c in w):
                raise ValueError(f"sentence {i} has an invalid word {w!r}")
        out.append(words)
    return out


def check_assignments(X, y) -> tuple[list[list[str]], list[list[Type]]]:
    """Sentences with one type per word."""
    X = check_sentences(X)
    if isinstance(y, (str, bytes)) or not isinstance(y, Sequence):
        raise TypeError("expected a sequence of type assignments")
    if len(X) != len(y):
        raise ValueError(f"{len(X)} sentences but {len(y)} type assignments")
    out = []
    for i, (words, types) in enumerate(zip(X, y)):
        types = list(types)
        if len(types) != len(words):
            raise ValueError(f"sentence {i} has {len(words)} words but {len(types)} types")
        for t in types:
            if not isinstance(t, (Atom, Arrow)):
                raise TypeError(f"sentence {i} holds a non-type value {t!r}")
        out.append(types)
    return X, out
