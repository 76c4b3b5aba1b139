import json
from pathlib import Path

import pytest

from typetagger.cli import EXIT_OK, EXIT_RUNTIME, EXIT_USAGE, EXIT_VALIDATION, main, resolve_config
from typetagger.corpus import frequency_stats, load_treebank

FIXTURES = Path(__file__).parent / "fixtures"

TINY = """d = 16
enc_heads = 2
dec_heads = 2
epochs = 3
batch_size = 16
warmup = 10
max_tokens_per_word = 4
"""
INI = f"[global]\nseed = 4\n[train]\n{TINY}[sweep]\n{TINY}"

PIPELINE = [
    ["gen-synthetic", "--n", "40", "--split", "random", "--out", "bank.txt"],
    ["stats", "--bank", "bank.txt.train", "--out", "stats.txt"],
    ["learn-merges", "--bank", "bank.txt.train", "--n-merges", "5", "--out", "merges.txt"],
    ["encode", "--bank", "bank.txt.test", "--merges", "merges.txt", "--out", "enc.txt"],
    ["train", "--train", "bank.txt.train", "--val", "bank.txt.val", "--out", "m.pt", "--log", "log.jsonl"],
    ["predict", "--model", "m.pt", "--bank", "bank.txt.test", "--out", "pred.jsonl"],
    ["evaluate", "--predictions", "pred.jsonl", "--gold", "bank.txt.test", "--train", "bank.txt.train",
     "--label", "M0", "--out", "report.json"],
    ["export-embeddings", "--model", "m.pt", "--out", "emb.tsv"],
    ["derive", "--types", "np # →su np s", "--goal", "s", "--out", "proof.txt"],
    ["sweep", "--train", "bank.txt.train", "--val", "bank.txt.val", "--test", "bank.txt.test",
     "--levels", "0", "--out", "sweep.json"],
]


def run_pipeline(where: Path, monkeypatch) -> dict[str, bytes]:
    where.mkdir(parents=True)
    monkeypatch.chdir(where)
    Path("run.ini").write_text(INI, encoding="utf-8")
    for argv in PIPELINE:
        assert main(["--config", "run.ini", *argv]) == EXIT_OK, argv
    Path("raw.txt").write_text("".join(l for l in open("enc.txt", encoding="utf-8") if not l.startswith("#")),
                               encoding="utf-8")
    assert main(["decode-corpus", "--input", "raw.txt", "--merges", "merges.txt", "--out", "dec.txt"]) == EXIT_OK
    return {p.name: p.read_bytes() for p in sorted(where.iterdir())}


@pytest.fixture(scope="module")
def two_runs(tmp_path_factory):
    mp = pytest.MonkeyPatch()
    try:
        a = run_pipeline(tmp_path_factory.mktemp("a") / "run", mp)
        b = run_pipeline(tmp_path_factory.mktemp("b") / "run", mp)
    finally:
        mp.undo()
    return a, b


def test_pipeline_is_byte_identical(two_runs):
    a, b = two_runs
    assert set(a) == set(b) and len(a) >= 14
    assert [name for name in a if a[name] != b[name]] == []


def test_every_artifact_embeds_config(two_runs):
    a, _ = two_runs
    for name in ("bank.txt.train", "bank.txt.test", "stats.txt", "merges.txt", "enc.txt", "log.jsonl", "pred.jsonl", "report.json",
                 "emb.tsv", "proof.txt", "sweep.json", "dec.txt"):
        if name.endswith(".json"):
            assert "command" in json.loads(a[name])["config"], name
            continue
        lines = a[name].decode("utf-8").splitlines()
        head = lines[:1] + [l for l in lines[1:12] if l.startswith(("#", ";"))]
        assert any('"command"' in line for line in head), name


def test_seed_layering_reaches_artifacts(two_runs):
    a, _ = two_runs
    header = json.loads(a["pred.jsonl"].decode().splitlines()[0])
    assert header["config"]["seed"] == 4


def test_stats_delegates(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(["gen-synthetic", "--n", "30", "--seed", "2", "--out", "b.txt"]) == EXIT_OK
    assert main(["stats", "--bank", "b.txt", "--out", "s.txt"]) == EXIT_OK
    text = Path("s.txt").read_text(encoding="utf-8")
    stats = frequency_stats(load_treebank("b.txt"))
    assert text.split("\n", 1)[1] == stats.format() + "\n"


def test_check_proof_exit_codes(capsys):
    assert main(["check-proof", "--proof", str(FIXTURES / "fig1a.proof")]) == EXIT_OK
    assert capsys.readouterr().out.strip() == "valid"
    assert main(["check-proof", "--proof", str(FIXTURES / "fig1a_swapped.proof")]) == 1
    assert "invalid at 1" in capsys.readouterr().out


def test_derive_not_derivable(tmp_path):
    assert main(["derive", "--types", "np # np", "--goal", "s", "--out", str(tmp_path / "p")]) == 1


def test_usage_errors_name_the_flag(capsys, tmp_path):
    assert main(["stats"]) == EXIT_USAGE
    assert "--bank" in capsys.readouterr().err
    assert main(["stats", "--bank", str(tmp_path / "missing")]) == EXIT_USAGE
    with pytest.raises(SystemExit) as exc:
        main(["stats", "--no-such-flag", "1"])
    assert exc.value.code == EXIT_USAGE


def test_validation_error_names_file_and_line(capsys, tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("# typetagger-treebank v1\nnp 3\n", encoding="utf-8")
    assert main(["stats", "--bank", str(bad)]) == EXIT_VALIDATION
    err = capsys.readouterr().err
    assert "bad.txt" in err and ":2" in err


def test_runtime_error_code(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(["gen-synthetic", "--n", "10", "--out", "b.txt"]) == EXIT_OK
    argv = ["train", "--train", "b.txt", "--out", str(tmp_path / "no" / "dir" / "m.pt"), "--epochs", "1",
            "--d", "8", "--enc-heads", "2", "--dec-heads", "2"]
    assert main(argv) == EXIT_RUNTIME


def test_config_layering(tmp_path):
    ini = tmp_path / "c.ini"
    ini.write_text("[global]\nseed = 1\n[train]\nepochs = 5\nd = 32\n", encoding="utf-8")
    flags = {"train": "t", "out": "o"}
    cfg = resolve_config("train", flags, str(ini), environ={})
    assert (cfg["seed"], cfg["epochs"], cfg["d"], cfg["warmup"]) == (1, 5, 32, 400)
    cfg = resolve_config("train", flags, str(ini), environ={"TYPETAGGER_EPOCHS": "7", "TYPETAGGER_SEED": "2"})
    assert (cfg["seed"], cfg["epochs"]) == (2, 7)
    cfg = resolve_config("train", {**flags, "epochs": "9"}, str(ini), environ={"TYPETAGGER_EPOCHS": "7"})
    assert cfg["epochs"] == 9 and cfg["command"] == "train"
    cfg = resolve_config("train", {**flags, "n_merges": "exhaustive"}, None, environ={})
    assert cfg["n_merges"] == "exhaustive"


def test_config_rejects_unknown_keys(tmp_path):
    ini = tmp_path / "c.ini"
    ini.write_text("[stats]\nepochs = 5\n", encoding="utf-8")
    assert main(["--config", str(ini), "stats", "--bank", "x"]) == EXIT_VALIDATION


def test_help_per_subcommand(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["derive", "--help"])
    assert exc.value.code == 0
    assert "--budget" in capsys.readouterr().out
