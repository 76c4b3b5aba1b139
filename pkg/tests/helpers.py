"""Shared generators and oracles for the test suite."""

from __future__ import annotations

import numpy as np

from typetagger.types import Arrow, Atom, Type, Vocabulary

SMALL = Vocabulary(("np", "s"), ("su",))
WIDE = Vocabulary(("np", "n", "pron", "adj", "s_main", "whq", "sv1"),
                  ("su", "obj1", "det", "mod", "body", "cnj"), ("adj", "np"))


def random_type(rng: np.random.Generator, vocab: Vocabulary = WIDE, depth: int = 8,
                p_arrow: float = 0.45, _argument: bool = False) -> Type:
    """A random type of depth at most ``depth``; stars only in argument position."""
    if depth <= 1 or rng.random() >= p_arrow:
        name = vocab.atoms[rng.integers(len(vocab.atoms))]
        star = _argument and name in vocab.stars and rng.random() < 0.2
        return Atom(name, star)
    label = vocab.labels[rng.integers(len(vocab.labels))]
    return Arrow(label, random_type(rng, vocab, depth - 1, p_arrow, True),
                 random_type(rng, vocab, depth - 1, p_arrow, False))


def random_assignment(rng: np.random.Generator, vocab: Vocabulary = WIDE, max_len: int = 8,
                      depth: int = 5) -> list[Type]:
    return [random_type(rng, vocab, depth) for _ in range(int(rng.integers(0, max_len + 1)))]


def brute_force_parses(tokens: tuple[str, ...], atoms: set[str], connectives: set[str]) -> int:
    """Number of ways to read ``tokens`` as exactly one prefix-notation term (recursive descent)."""

    def terms(i: int) -> list[int]:
        # end positions of every term starting at i
        if i >= len(tokens):
            return []
        if tokens[i] in atoms:
            return [i + 1]
        if tokens[i] in connectives:
            return [k for j in terms(i + 1) for k in terms(j)]
        return []

    return sum(1 for end in terms(0) if end == len(tokens))


def brute_force_is_prefix(tokens: tuple[str, ...], atoms: set[str], connectives: set[str], limit: int) -> bool:
    """True if some completion of ``tokens`` (up to ``limit`` extra symbols) is one complete term."""
    alphabet = sorted(atoms | connectives)
    frontier = [tokens]
    for _ in range(limit + 1):
        nxt = []
        for seq in frontier:
            if brute_force_parses(seq, atoms, connectives):
                return True
            nxt += [seq + (a,) for a in alphabet]
        frontier = nxt
    return False
