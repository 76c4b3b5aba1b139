import itertools
import time

import numpy as np
import pytest

from typetagger.types import (
    Arrow,
    Atom,
    IncompleteTypeError,
    ObliquenessOrder,
    TrailingInputError,
    UnknownLabelError,
    UnknownSymbolError,
    Vocabulary,
    arity,
    atoms,
    check_obliqueness,
    nodes,
    parse_infix,
    parse_polish,
    polish,
    serialize_polish,
    to_infix,
)

from helpers import SMALL, random_type


def test_serialize_examples():
    assert serialize_polish(Arrow("det", Atom("np"), Atom("np"))) == ["→det", "np", "np"]
    assert serialize_polish(Atom("np")) == ["np"]
    welke = Arrow("det", Atom("n"), Arrow("body", Arrow("obj", Atom("n"), Atom("sv1")), Atom("whq")))
    assert serialize_polish(welke) == ["→det", "n", "→body", "→obj", "n", "sv1", "whq"]


def test_parse_examples():
    assert parse_polish(["→su", "np", "s_main"]) == Arrow("su", Atom("np"), Atom("s_main"))
    assert parse_polish(["np"]) == Atom("np")
    with pytest.raises(IncompleteTypeError):
        parse_polish(["→su", "np"])
    with pytest.raises(TrailingInputError):
        parse_polish(["np", "np"])
    with pytest.raises(IncompleteTypeError):
        parse_polish([])


def test_unknown_symbol():
    with pytest.raises(UnknownSymbolError):
        parse_polish(["→zzz", "np", "s"], SMALL)
    with pytest.raises(UnknownSymbolError):
        parse_polish(["vp"], SMALL)


def test_star_token():
    vocab = Vocabulary(("adj", "np"), ("cnj",), ("adj",))
    t = parse_polish(["→cnj", "adj*", "adj"], vocab)
    assert t == Arrow("cnj", Atom("adj", star=True), Atom("adj"))
    with pytest.raises(UnknownSymbolError):
        parse_polish(["→cnj", "np*", "np"], vocab)


def test_arity():
    assert arity(Atom("np")) == 0
    assert arity(polish("→su np s_main")) == 1
    assert arity(polish("→obj np →su pron s_main")) == 2


def test_obliqueness():
    geven = polish("→obj np →su pron s_main")
    order = ObliquenessOrder(("det", "mod", "obj", "su"))
    assert check_obliqueness(geven, order)
    assert not check_obliqueness(geven, order.reversed())
    assert check_obliqueness(Atom("np"), order)
    with pytest.raises(UnknownLabelError):
        check_obliqueness(polish("→pc pp s"), order)


def test_round_trip_and_length_law():
    rng = np.random.default_rng(0)
    start = time.perf_counter()
    for _ in range(10_000):
        t = random_type(rng)
        toks = serialize_polish(t)
        assert parse_polish(toks) == t
        assert len(toks) == nodes(t)
        connectives = sum(1 for x in toks if x.startswith("→"))
        assert connectives == nodes(t) - len(atoms(t)) == len(atoms(t)) - 1
    assert time.perf_counter() - start < 10


def _all_types(n_tokens: int) -> list:
    """Every star-free type over np, s, →su with exactly ``n_tokens`` nodes."""
    if n_tokens == 1:
        return [Atom("np"), Atom("s")]
    out = []
    for left in range(1, n_tokens - 1):
        for a in _all_types(left):
            for b in _all_types(n_tokens - 1 - left):
                out.append(Arrow("su", a, b))
    return out


def test_unambiguity_exhaustive():
    seen = {}
    for n in (1, 3, 5, 7):
        for t in _all_types(n):
            key = tuple(serialize_polish(t))
            assert key not in seen, (t, seen.get(key))
            seen[key] = t
    # every token string of length <= 7 that is a complete term has exactly one reading
    alphabet = ["np", "s", "→su"]
    for n in range(1, 8):
        for seq in itertools.product(alphabet, repeat=n):
            try:
                t = parse_polish(list(seq))
            except (IncompleteTypeError, TrailingInputError):
                assert seq not in seen
                continue
            assert seen[seq] == t


def test_infix_round_trip():
    rng = np.random.default_rng(1)
    for _ in range(500):
        t = random_type(rng)
        assert parse_infix(to_infix(t)) == t
    assert to_infix(polish("→obj np →su pron s_main")) == "np -(obj)-> pron -(su)-> s_main"


def test_vocabulary_rejects_collisions():
    with pytest.raises(ValueError):
        Vocabulary(("np", "#"), ("su",))
    with pytest.raises(ValueError):
        Vocabulary(("np", "np"), ("su",))
