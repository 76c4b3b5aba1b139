"""Command-line entry point.

Options resolve in layers: built-in defaults < config file < environment
(``TYPETAGGER_<OPTION>``) < command-line flags.  The config file is INI
text; keys in ``[global]`` apply to every subcommand and a section named
after the subcommand overrides them.  Every artifact embeds the resolved
configuration.
"""

from __future__ import annotations

import argparse
import configparser
import json
import os
import sys
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from pathlib import Path

ENV_PREFIX = "TYPETAGGER_"

EXIT_OK = 0
EXIT_INVALID = 1  # a checked object (proof) is invalid; the run itself succeeded
EXIT_USAGE = 2
EXIT_VALIDATION = 3
EXIT_RUNTIME = 4


class UsageError(Exception):
    pass


class ValidationError(Exception):
    pass


@dataclass(frozen=True)
class Opt:
    name: str
    type: Callable = str
    default: object = None
    help: str = ""
    required: bool = False

    @property
    def flag(self) -> str:
        return "--" + self.name.replace("_", "-")


def _bool(text: str | bool) -> bool:
    if isinstance(text, bool):
        return text
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _level(text: str | int) -> int | str:
    from .eval import parse_levels

    levels = parse_levels(str(text))
    if len(levels) != 1:
        raise ValueError("expected one merge level")
    return levels[0]


def _opt_int(text: str | int | None) -> int | None:
    if text is None or str(text).strip().lower() in ("", "none"):
        return None
    return int(text)


def _opt_float(text: str | float | None) -> float | None:
    if text is None or str(text).strip().lower() in ("", "none"):
        return None
    return float(text)


GLOBAL = [
    Opt("seed", int, 0, "master seed; all randomness flows from it"),
    Opt("vocabulary", str, None, "vocabulary declaration file"),
]

MODEL = [
    Opt("n_merges", _level, 0, "digram merge level: an integer or 'exhaustive'"),
    Opt("d", int, 128, "model width"),
    Opt("enc_layers", int, 1), Opt("enc_heads", int, 3),
    Opt("dec_layers", int, 2), Opt("dec_heads", int, 8),
    Opt("ffn", _opt_int, None, "feed-forward width (default: d)"),
    Opt("dropout", float, 0.2), Opt("smoothing", float, 0.2),
    Opt("warmup", int, 400), Opt("lr_scale", float, 1.0),
    Opt("max_tokens_per_word", int, 32), Opt("batch_size", int, 128),
    Opt("epochs", int, 300), Opt("eval_every", int, 10),
    Opt("stop_at", _opt_float, None, "stop once validation accuracy reaches this"),
    Opt("grammar_mask", _bool, False, "restrict decoding to well-formed continuations"),
    Opt("word_vectors", str, None, "precomputed word vector file (JSON lines)"),
]

COMMANDS: dict[str, tuple[str, list[Opt]]] = {
    "gen-synthetic": ("generate a synthetic treebank", [
        Opt("n", int, 200, "number of sentences"),
        Opt("recipe", str, None, "recipe JSON file"),
        Opt("split", str, "none", "none, random or holdout; writes OUT.train/.val/.test"),
        Opt("out", str, None, "output treebank", required=True),
    ]),
    "stats": ("type frequency statistics and coverage curves", [
        Opt("bank", str, None, "treebank", required=True),
        Opt("thresholds", str, None, "comma-separated count thresholds"),
        Opt("out", str, None, "output file (default: stdout)"),
    ]),
    "learn-merges": ("learn a digram merge table", [
        Opt("bank", str, None, "treebank", required=True),
        Opt("n_merges", _level, 0, "number of merges or 'exhaustive'"),
        Opt("out", str, None, "output merge table", required=True),
    ]),
    "encode": ("encode a treebank's types into merged symbol sequences", [
        Opt("bank", str, None, "treebank", required=True),
        Opt("merges", str, None, "merge table", required=True),
        Opt("out", str, None, "output file (default: stdout)"),
    ]),
    "decode-corpus": ("revert merged symbol sequences and segment them into types", [
        Opt("input", str, None, "one symbol sequence per line", required=True),
        Opt("merges", str, None, "merge table", required=True),
        Opt("out", str, None, "output file (default: stdout)"),
    ]),
    "train": ("train a supertagger", [
        Opt("train", str, None, "training treebank", required=True),
        Opt("val", str, None, "validation treebank"),
        Opt("out", str, None, "output checkpoint", required=True),
        Opt("log", str, None, "training log (JSON lines)"),
    ] + MODEL),
    "predict": ("tag sentences with a trained model", [
        Opt("model", str, None, "checkpoint", required=True),
        Opt("bank", str, None, "treebank whose sentences are tagged", required=True),
        Opt("grammar_mask", _bool, None, "override the model's decoding mask"),
        Opt("word_vectors", str, None, "precomputed word vector file"),
        Opt("out", str, None, "output predictions", required=True),
    ]),
    "evaluate": ("score predictions against gold types", [
        Opt("predictions", str, None, "prediction file", required=True),
        Opt("gold", str, None, "gold treebank", required=True),
        Opt("train", str, None, "training treebank (frequency reference)", required=True),
        Opt("label", str, "", "row label"),
        Opt("out", str, None, "output report (JSON)"),
    ]),
    "sweep": ("train and evaluate one model per merge level", [
        Opt("train", str, None, "training treebank", required=True),
        Opt("val", str, None, "validation treebank"),
        Opt("test", str, None, "test treebank", required=True),
        Opt("levels", str, "0,50,100,200,exhaustive", "comma-separated merge levels"),
        Opt("repetitions", int, 1),
        Opt("out", str, None, "output report (JSON)"),
    ] + [o for o in MODEL if o.name != "n_merges"]),
    "check-proof": ("check a proof file", [
        Opt("proof", str, None, "proof file", required=True),
        Opt("lexicon_check", _bool, True, "require the leaves to match the root assumptions"),
    ]),
    "derive": ("search for a proof", [
        Opt("bank", str, None, "treebank; derive sample --index with its goal"),
        Opt("index", int, 0),
        Opt("types", str, None, "polish types separated by '#', instead of --bank"),
        Opt("goal", str, None, "goal type in polish notation"),
        Opt("budget", int, 64, "maximum proof size in nodes"),
        Opt("max_steps", int, 1_000_000, "maximum search expansions"),
        Opt("out", str, None, "output proof (default: stdout)"),
    ]),
    "export-embeddings": ("write the learned symbol embeddings", [
        Opt("model", str, None, "checkpoint", required=True),
        Opt("word_vectors", str, None, "precomputed word vector file"),
        Opt("out", str, None, "output file", required=True),
    ]),
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="typetagger", description="Constructive supertagging toolkit.")
    parser.add_argument("--config", help="INI config file")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True
    for name, (help_text, opts) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--config", default=argparse.SUPPRESS, help="INI config file")
        for o in _options(name):
            # defaults are applied after layering, so unset flags stay None
            p.add_argument(o.flag, dest=o.name, default=None, help=_help(o))
    return parser


def _options(command: str) -> list[Opt]:
    own = COMMANDS[command][1]
    names = {o.name for o in own}
    return [o for o in GLOBAL if o.name not in names] + own


def _help(o: Opt) -> str:
    suffix = " (required)" if o.required else (f" (default: {o.default})" if o.default not in (None, "") else "")
    return (o.help or o.name.replace("_", " ")) + suffix


def resolve_config(command: str, flags: dict, config_file: str | None,
                   environ: dict | None = None) -> dict:
    """Layer defaults, config file, environment and flags; convert types."""
    environ = os.environ if environ is None else environ
    layered: dict[str, tuple[object, str]] = {}
    file_values: dict[str, str] = {}
    if config_file:
        path = Path(config_file)
        if not path.is_file():
            raise UsageError(f"--config: no such file: {config_file}")
        ini = configparser.ConfigParser(interpolation=None)
        try:
            ini.read_string(path.read_text(encoding="utf-8"), source=str(path))
        except configparser.Error as exc:
            raise ValidationError(f"{config_file}: {exc}") from None
        for section in ("global", command):
            if ini.has_section(section):
                file_values.update({k.replace("-", "_"): v for k, v in ini.items(section)})
    known = {o.name: o for o in _options(command)}
    unknown = sorted(set(file_values) - set(known))
    if unknown:
        raise ValidationError(f"{config_file}: unknown option(s) for {command}: {', '.join(unknown)}")
    for o in known.values():
        value, source = o.default, "default"
        if o.name in file_values:
            value, source = file_values[o.name], "file"
        env_key = ENV_PREFIX + o.name.upper()
        if env_key in environ:
            value, source = environ[env_key], "env"
        if flags.get(o.name) is not None:
            value, source = flags[o.name], "flag"
        if value is not None and source != "default":
            try:
                value = o.type(value)
            except (TypeError, ValueError) as exc:
                where = {"flag": o.flag, "env": env_key, "file": f"{config_file} [{o.name}]"}[source]
                raise UsageError(f"{where}: {exc}") from None
        if o.required and value is None:
            raise UsageError(f"{o.flag} is required")
        layered[o.name] = (value, source)
    resolved = {k: v for k, (v, _) in layered.items()}
    resolved["command"] = command
    return resolved


def _header(cfg: dict) -> str:
    return json.dumps(cfg, sort_keys=True, ensure_ascii=False)


def _write(out: str | None, text: str) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _need_file(path: str | None, flag: str) -> None:
    if path is not None and not Path(path).is_file():
        raise UsageError(f"{flag}: no such file: {path}")


def _vocab(cfg: dict):
    from .corpus import load_vocabulary

    if not cfg.get("vocabulary"):
        return None
    _need_file(cfg["vocabulary"], "--vocabulary")
    return load_vocabulary(cfg["vocabulary"])[0]


def _bank(path: str, flag: str, cfg: dict):
    from .corpus import load_treebank

    _need_file(path, flag)
    return load_treebank(path, _vocab(cfg))


# -- subcommands ------------------------------------------------------------


def cmd_gen_synthetic(cfg: dict) -> int:
    from .corpus import Recipe, SplitSpec, gen_synthetic, holdout_split, save_treebank, split

    _need_file(cfg["recipe"], "--recipe")
    recipe = Recipe.from_json(cfg["recipe"]) if cfg["recipe"] else Recipe()
    tb = gen_synthetic(recipe, seed=cfg["seed"], n=cfg["n"])
    tb.meta["config"] = _header(cfg)
    if cfg["split"] == "none":
        save_treebank(tb, cfg["out"])
        return EXIT_OK
    spec = SplitSpec(seed=cfg["seed"], max_length=recipe.max_words)
    if cfg["split"] == "random":
        parts = split(tb, spec)
    elif cfg["split"] == "holdout":
        parts = holdout_split(tb, spec)
    else:
        raise UsageError(f"--split: expected none, random or holdout, got {cfg['split']!r}")
    for name, part in zip(("train", "val", "test"), parts):
        save_treebank(part, f"{cfg['out']}.{name}")
    return EXIT_OK


def cmd_stats(cfg: dict) -> int:
    from .corpus import frequency_stats

    tb = _bank(cfg["bank"], "--bank", cfg)
    thresholds = None
    if cfg["thresholds"]:
        try:
            thresholds = [int(x) for x in cfg["thresholds"].split(",")]
        except ValueError:
            raise UsageError(f"--thresholds: expected comma-separated integers, got {cfg['thresholds']!r}") from None
    stats = frequency_stats(tb, thresholds)
    _write(cfg["out"], f"# config {_header(cfg)}\n{stats.format()}\n")
    return EXIT_OK


def cmd_learn_merges(cfg: dict) -> int:
    from .digram import learn_merges, save_merges
    from .typegram import flatten_assignment

    tb = _bank(cfg["bank"], "--bank", cfg)
    table = learn_merges([flatten_assignment(a) for a in tb.assignments], cfg["n_merges"])
    save_merges(table, cfg["out"], header=[f"config {_header(cfg)}"])
    return EXIT_OK


def cmd_encode(cfg: dict) -> int:
    from .digram import apply_merges, load_merges
    from .typegram import flatten_assignment

    tb = _bank(cfg["bank"], "--bank", cfg)
    _need_file(cfg["merges"], "--merges")
    table = load_merges(cfg["merges"])
    lines = [f"# config {_header(cfg)}"]
    lines += [" ".join(apply_merges(flatten_assignment(a), table)) for a in tb.assignments]
    _write(cfg["out"], "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_decode_corpus(cfg: dict) -> int:
    from .digram import load_merges, revert_merges
    from .typegram import segment_assignment

    _need_file(cfg["input"], "--input")
    _need_file(cfg["merges"], "--merges")
    table = load_merges(cfg["merges"])
    vocab = _vocab(cfg)
    lines = [f"# config {_header(cfg)}"]
    for lineno, line in enumerate(Path(cfg["input"]).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        try:
            tokens = revert_merges(line.split(), table, vocab)
        except ValueError as exc:
            raise ValidationError(f"{cfg['input']}:{lineno}: {exc}") from None
        segs = segment_assignment(tokens, vocab)
        lines.append(" # ".join(" ".join(s.tokens) if s.ok else "?" for s in segs))
    _write(cfg["out"], "\n".join(lines) + "\n")
    return EXIT_OK


def _model_params(cfg: dict) -> dict:
    names = [o.name for o in MODEL if o.name != "n_merges"]
    return {k: cfg[k] for k in names if k in cfg}


def cmd_train(cfg: dict) -> int:
    from .estimator import ConstructiveSupertagger

    train = _bank(cfg["train"], "--train", cfg)
    val = _bank(cfg["val"], "--val", cfg) if cfg["val"] else None
    _need_file(cfg["word_vectors"], "--word-vectors")
    est = ConstructiveSupertagger(n_merges=cfg["n_merges"], seed=cfg["seed"], vocabulary=train.vocabulary,
                                  **_model_params(cfg))
    progress = lambda rec: print(json.dumps(rec, sort_keys=True), file=sys.stderr, flush=True)
    if val is not None and len(val):
        est.fit(train.sentences, train.assignments, val.sentences, val.assignments, on_epoch=progress)
    else:
        est.fit(train.sentences, train.assignments, on_epoch=progress)
    est.save(cfg["out"], config=cfg)
    if cfg["log"]:
        with open(cfg["log"], "w", encoding="utf-8") as fh:
            est.log_.write(fh, header=cfg)
    return EXIT_OK


def _load_model(cfg: dict):
    from .estimator import ConstructiveSupertagger

    _need_file(cfg["model"], "--model")
    _need_file(cfg.get("word_vectors"), "--word-vectors")
    return ConstructiveSupertagger.load(cfg["model"], word_vectors=cfg.get("word_vectors"))


def cmd_predict(cfg: dict) -> int:
    from .eval import save_predictions

    est = _load_model(cfg)
    if cfg["grammar_mask"] is not None:
        est.grammar_mask = cfg["grammar_mask"]
    tb = _bank(cfg["bank"], "--bank", cfg)
    records = est.predict_records(tb.sentences)
    save_predictions(cfg["out"], records, est.encoder_.vocabulary_, config=cfg)
    return EXIT_OK


def cmd_evaluate(cfg: dict) -> int:
    from .corpus import FrequencyTable
    from .eval import evaluate, load_predictions

    _need_file(cfg["predictions"], "--predictions")
    _, records = load_predictions(cfg["predictions"])
    gold = _bank(cfg["gold"], "--gold", cfg)
    train = _bank(cfg["train"], "--train", cfg)
    if len(records) != len(gold):
        raise ValidationError(f"{cfg['predictions']}: {len(records)} predictions for {len(gold)} gold sentences")
    for i, (rec, sample) in enumerate(zip(records, gold.samples)):
        if tuple(rec.words) != tuple(sample.words):
            raise ValidationError(f"{cfg['predictions']}:{i + 2}: words differ from gold sentence {i + 1}")
    report = evaluate([r.reverted for r in records], gold.assignments, FrequencyTable.from_treebank(train),
                      gold.vocabulary, [r.cap_exceeded for r in records], label=cfg["label"])
    sys.stdout.write(report.format_table() + "\n")
    if cfg["out"]:
        _write(cfg["out"], report.to_json(cfg))
    return EXIT_OK


def cmd_sweep(cfg: dict) -> int:
    from .eval import parse_levels, run_merge_sweep

    train = _bank(cfg["train"], "--train", cfg)
    val = _bank(cfg["val"], "--val", cfg) if cfg["val"] else None
    test = _bank(cfg["test"], "--test", cfg)
    try:
        levels = parse_levels(cfg["levels"])
    except ValueError as exc:
        raise UsageError(f"--levels: {exc}") from None
    params = _model_params(cfg)
    report = run_merge_sweep(train, val, test, levels, params, master_seed=cfg["seed"],
                             repetitions=cfg["repetitions"], progress=lambda m: print(m, file=sys.stderr, flush=True))
    sys.stdout.write(report.table())
    if cfg["out"]:
        _write(cfg["out"], report.to_json(cfg))
    return EXIT_OK


def cmd_check_proof(cfg: dict) -> int:
    from .deduction import ProofSyntaxError, check_proof, lexicon_of, parse_proof

    _need_file(cfg["proof"], "--proof")
    try:
        proof = parse_proof(Path(cfg["proof"]).read_text(encoding="utf-8"))
    except (ProofSyntaxError, ValueError) as exc:
        raise ValidationError(f"{cfg['proof']}: {exc}") from None
    report = check_proof(proof, lexicon_of(proof) if cfg["lexicon_check"] else None)
    print(str(report))
    return EXIT_OK if report.valid else EXIT_INVALID


def cmd_derive(cfg: dict) -> int:
    from .deduction import DerivationError, derive, format_proof
    from .types import SEPARATOR, parse_polish

    vocab = _vocab(cfg)
    if cfg["bank"]:
        tb = _bank(cfg["bank"], "--bank", cfg)
        if not 0 <= cfg["index"] < len(tb):
            raise UsageError(f"--index: {cfg['index']} is out of range for {len(tb)} samples")
        sample = tb.samples[cfg["index"]]
        lexicon = list(zip(sample.words, sample.types))
        goal = sample.goal
        if cfg["goal"]:
            goal = parse_polish(cfg["goal"].split(), vocab)
        if goal is None:
            raise UsageError("--goal is required: the sample has no goal type")
    elif cfg["types"]:
        if not cfg["goal"]:
            raise UsageError("--goal is required with --types")
        try:
            parts = [p.split() for p in cfg["types"].split(SEPARATOR)]
            types = [parse_polish(p, vocab) for p in parts]
            goal = parse_polish(cfg["goal"].split(), vocab)
        except ValueError as exc:
            raise UsageError(f"--types/--goal: {exc}") from None
        lexicon = [(f"w{i + 1}", t) for i, t in enumerate(types)]
    else:
        raise UsageError("give --bank or --types")
    try:
        proof = derive(lexicon, goal, budget=cfg["budget"], max_steps=cfg["max_steps"])
    except DerivationError as exc:
        print(f"not derived: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    _write(cfg["out"], f"; config {_header(cfg)}\n{format_proof(proof)}\n")
    return EXIT_OK


def cmd_export_embeddings(cfg: dict) -> int:
    est = _load_model(cfg)
    est.export_embeddings(cfg["out"], header=[f"config {_header(cfg)}"])
    return EXIT_OK


HANDLERS = {name: globals()["cmd_" + name.replace("-", "_")] for name in COMMANDS}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    try:
        cfg = resolve_config(args.command, flags, getattr(args, "config", None))
        return HANDLERS[args.command](cfg)
    except UsageError as exc:
        print(f"typetagger {args.command}: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValidationError, ValueError) as exc:
        print(f"typetagger {args.command}: invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:  # anything else is a runtime failure with its own exit code
        print(f"typetagger {args.command}: failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
