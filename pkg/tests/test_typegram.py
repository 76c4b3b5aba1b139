import itertools

import numpy as np
import pytest

from typetagger.types import Atom, IncompleteTypeError, UnknownSymbolError, Vocabulary, polish
from typetagger.typegram import (
    SymbolVocab,
    Status,
    allowed_next,
    flatten_assignment,
    prefix_status,
    segment_assignment,
)

from helpers import SMALL, WIDE, brute_force_is_prefix, brute_force_parses, random_assignment

FIG2_WORDS = ["is", "er", "een", "toepassing", "voor", "lineaire", "logica"]
FIG2_TYPES = ["→su np s_main", "→mod s_main s_main", "→det np np", "np", "→obj1 np →mod np np",
              "→mod np np", "np"]
FIG2_TOKENS = ("→su np s_main # →mod s_main s_main # →det np np # np # →obj1 np →mod np np # "
               "→mod np np # np #").split()
FIG2_VOCAB = Vocabulary(("np", "s_main"), ("su", "mod", "det", "obj1"))


def test_prefix_status_examples():
    assert prefix_status(["→su"], SMALL) == prefix_status(["→su"], SMALL)
    st = prefix_status(["→su"], SMALL)
    assert st.status is Status.VALID_PREFIX and st.pending == 2
    assert prefix_status(["np"], SMALL).status is Status.VALID_COMPLETE
    assert prefix_status(["np", "np"], SMALL).status is Status.INVALID
    with pytest.raises(UnknownSymbolError):
        prefix_status(["vp"], SMALL)


def test_prefix_status_matches_brute_force():
    atoms, conns = {"np", "s"}, {"→su"}
    mismatches = 0
    for n in range(0, 6):
        for seq in itertools.product(sorted(atoms | conns), repeat=n):
            st = prefix_status(list(seq), SMALL)
            complete = brute_force_parses(seq, atoms, conns) == 1
            viable = brute_force_is_prefix(seq, atoms, conns, limit=6)
            expected = Status.VALID_COMPLETE if complete else Status.VALID_PREFIX if viable else Status.INVALID
            mismatches += st.status is not expected
    assert mismatches == 0


def test_invalid_is_monotone():
    for n in range(1, 6):
        for seq in itertools.product(["np", "s", "→su"], repeat=n):
            if prefix_status(list(seq), SMALL).invalid:
                for extra in ["np", "s", "→su"]:
                    assert prefix_status(list(seq) + [extra], SMALL).invalid


def test_flatten_figure2():
    types = [polish(t) for t in FIG2_TYPES]
    flat = flatten_assignment(types, FIG2_VOCAB)
    assert flat == list(FIG2_TOKENS)
    assert len(flat) == 26 and flat[-1] == "#"
    assert flatten_assignment([]) == []
    assert flatten_assignment([Atom("np"), Atom("n")]) == ["np", "#", "n", "#"]


def test_segment_figure2():
    segs = segment_assignment(FIG2_TOKENS, FIG2_VOCAB)
    assert [s.type for s in segs] == [polish(t) for t in FIG2_TYPES]
    assert len(segs) == len(FIG2_WORDS)


def test_segment_keeps_malformed_runs():
    segs = segment_assignment(["np", "#", "→su", "#"], SMALL)
    assert segs[0].type == Atom("np")
    assert segs[1].type is None and segs[1].tokens == ("→su",) and "Incomplete" in segs[1].error
    assert segment_assignment([]) == []


def test_segment_flatten_round_trip():
    rng = np.random.default_rng(2)
    for _ in range(10_000):
        a = random_assignment(rng)
        assert [s.type for s in segment_assignment(flatten_assignment(a), WIDE)] == a


def test_symbol_vocab_layout():
    sv = SymbolVocab(SMALL, {"→su·np": ("→su", "np")})
    assert sv.tokens[:4] == ["<pad>", "<s>", "</s>", "#"]
    assert sv.tokens[-1] == "→su·np"
    assert prefix_status(["→su·np"], sv).pending == 1
    with pytest.raises(ValueError):
        SymbolVocab(SMALL, {"np": ("np",)})


def test_allowed_next_never_invalid():
    sv = SymbolVocab(SMALL, {"→su·np": ("→su", "np")})
    rng = np.random.default_rng(3)
    for _ in range(200):
        out: list[str] = []
        for _ in range(12):
            mask = allowed_next(out, sv)
            choices = [t for t, ok in zip(sv.tokens, mask) if ok]
            assert choices
            out.append(choices[rng.integers(len(choices))])
        segs = segment_assignment(out, sv)
        assert all(s.ok for s in segs if s.terminated)
        tail = [s for s in segs if not s.terminated]
        for s in tail:
            assert not prefix_status(list(s.tokens), sv).invalid
