from collections import Counter

import numpy as np
import pytest

from typetagger.digram import (
    EXHAUSTIVE,
    DigramEncoder,
    EmptyCorpusError,
    MergeTable,
    apply_merges,
    learn_merges,
    load_merges,
    revert_merges,
    save_merges,
)
from typetagger.types import UnknownSymbolError
from typetagger.typegram import flatten_assignment

from helpers import WIDE, random_assignment

FIXTURE = [["→su", "np", "s", "#"]] * 3 + [["np", "#"]]


def hand_table() -> MergeTable:
    t = MergeTable()
    t.add("→su", "np")
    return t


def test_tie_break_fixture():
    # (→su, np) and (np, s) both occur three times; "n" sorts before "→"
    table = learn_merges(FIXTURE, 1)
    assert table.rules == [("np", "s", "np·s")]
    assert table.frequencies == [3]


def test_zero_merges():
    table = learn_merges(FIXTURE, 0)
    assert len(table) == 0
    assert apply_merges(FIXTURE[0], table) == FIXTURE[0]


def test_empty_corpus():
    with pytest.raises(EmptyCorpusError):
        learn_merges([], 3)


def test_apply_and_revert_hand_table():
    table = hand_table()
    assert apply_merges(["→su", "np", "s", "#"], table) == ["→su·np", "s", "#"]
    assert revert_merges(["→su·np", "s", "#"], table) == ["→su", "np", "s", "#"]
    assert revert_merges(["→su", "np", "s", "#"], table) == ["→su", "np", "s", "#"]
    with pytest.raises(UnknownSymbolError):
        revert_merges(["np·zz"], table)


def test_separator_barrier():
    table = MergeTable()
    table.add("np", "→su")
    out = apply_merges(["np", "#", "→su", "np", "#"], table)
    assert out == ["np", "#", "→su", "np", "#"]
    assert out.count("#") == 2


def _brute_counts(seqs, table_prefix):
    counts = Counter()
    for seq in seqs:
        merged = apply_merges(seq, table_prefix)
        for a, b in zip(merged, merged[1:]):
            if "#" not in (a, b):
                counts[a, b] += 1
    return counts


def test_learned_merges_are_maximal():
    rng = np.random.default_rng(4)
    seqs = [flatten_assignment(random_assignment(rng, max_len=5, depth=4)) for _ in range(300)]
    table = learn_merges(seqs, 25)
    for k, (left, right, _) in enumerate(table.rules):
        prefix = MergeTable()
        for l, r, _ in table.rules[:k]:
            prefix.add(l, r)
        counts = _brute_counts(seqs, prefix)
        best = max(counts.values())
        assert counts[left, right] == best == table.frequencies[k]
        assert (left, right) == min(p for p, c in counts.items() if c == best)


def test_revert_apply_identity():
    rng = np.random.default_rng(5)
    train = [flatten_assignment(random_assignment(rng, max_len=6, depth=4)) for _ in range(500)]
    table = learn_merges(train, 60)
    for _ in range(10_000):
        seq = flatten_assignment(random_assignment(rng, max_len=6, depth=4))
        enc = apply_merges(seq, table)
        assert enc.count("#") == seq.count("#")
        assert revert_merges(enc, table) == seq


def test_exhaustive_single_token_per_type():
    rng = np.random.default_rng(6)
    ys = [random_assignment(rng, max_len=5, depth=4) for _ in range(200)]
    seqs = [flatten_assignment(a) for a in ys]
    table = learn_merges(seqs, EXHAUSTIVE)
    for seq, a in zip(seqs, ys):
        enc = apply_merges(seq, table)
        assert len([t for t in enc if t != "#"]) == len(a)


def test_composed_atoms_revert_the_same():
    table = hand_table()
    assert revert_merges(["→su", "np", "s", "#"], table) == revert_merges(["→su·np", "s", "#"], table)


def test_save_load(tmp_path):
    rng = np.random.default_rng(7)
    seqs = [flatten_assignment(random_assignment(rng, max_len=5, depth=4)) for _ in range(100)]
    table = learn_merges(seqs, 20)
    save_merges(table, tmp_path / "m.txt", header=["test"])
    back = load_merges(tmp_path / "m.txt")
    assert back.rules == table.rules and back.expansions == table.expansions
    (tmp_path / "bad.txt").write_text("# typetagger-merges v1\n[rules]\nnp s zz\n")
    with pytest.raises(ValueError):
        load_merges(tmp_path / "bad.txt")


def test_encoder_closed_mode():
    rng = np.random.default_rng(8)
    ys = [a for a in (random_assignment(rng, max_len=5, depth=4) for _ in range(50)) if a]
    enc = DigramEncoder(EXHAUSTIVE, WIDE).fit(ys)
    assert enc.closed_
    toks = enc.transform(ys)
    assert all(len(t) == len(a) for t, a in zip(toks, ys))
    assert "#" not in enc.symbols_.tokens
    segs = enc.segment(toks)
    assert [[s.type for s in row] for row in segs] == ys
