"""Treebanks: data model, file formats, splitting, statistics, and a
synthetic generator whose samples are checked by proof search."""

from __future__ import annotations

import json
from collections import Counter
from collections.abc import Iterable, Iterator, Mapping, Sequence
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .deduction import DEFAULT_BUDGET, BudgetExhaustedError, DerivationError, derive
from .types import (
    SEPARATOR,
    Arrow,
    Atom,
    ObliquenessOrder,
    PolishParseError,
    Type,
    Vocabulary,
    VocabularyViolation,
    arity,
    parse_polish,
    serialize_polish,
)

VOCAB_HEADER = "# typetagger-vocab v1"
TREEBANK_HEADER = "# typetagger-treebank v1"


class TreebankParseError(ValueError):
    def __init__(self, path, lineno: int, message: str):
        super().__init__(f"{path}:{lineno}: {message}")
        self.path = path
        self.lineno = lineno


class InvalidRecipe(ValueError):
    pass


@dataclass(frozen=True)
class Sample:
    words: tuple[str, ...]
    types: tuple[Type, ...]
    goal: Type | None = None

    def __post_init__(self):
        object.__setattr__(self, "words", tuple(self.words))
        object.__setattr__(self, "types", tuple(self.types))
        if len(self.words) != len(self.types):
            raise ValueError(f"{len(self.words)} words but {len(self.types)} types")
        if not self.words:
            raise ValueError("a sample needs at least one word")

    def __len__(self) -> int:
        return len(self.words)


@dataclass
class Treebank:
    samples: list[Sample]
    vocabulary: Vocabulary
    order: ObliquenessOrder | None = None
    meta: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        for s in self.samples:
            for t in s.types:
                self.vocabulary.check(t)

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self) -> Iterator[Sample]:
        return iter(self.samples)

    def subset(self, samples: Iterable[Sample], **meta) -> Treebank:
        return Treebank(list(samples), self.vocabulary, self.order, {**self.meta, **meta})

    @property
    def sentences(self) -> list[list[str]]:
        return [list(s.words) for s in self.samples]

    @property
    def assignments(self) -> list[list[Type]]:
        return [list(s.types) for s in self.samples]


# -- vocabulary declaration -------------------------------------------------


def _vocab_lines(vocab: Vocabulary, order: ObliquenessOrder | None, prefix: str = "") -> list[str]:
    lines = [f"{prefix}atoms {' '.join(vocab.atoms)}", f"{prefix}labels {' '.join(vocab.labels)}"]
    if vocab.stars:
        lines.append(f"{prefix}stars {' '.join(vocab.stars)}")
    if order is not None:
        lines.append(f"{prefix}order {' '.join(order.labels)}")
    return lines


def _read_vocab_fields(entries: Mapping[str, list[str]]) -> tuple[Vocabulary, ObliquenessOrder | None]:
    vocab = Vocabulary(tuple(entries.get("atoms", ())), tuple(entries.get("labels", ())), tuple(entries.get("stars", ())))
    order = ObliquenessOrder(tuple(entries["order"])) if "order" in entries else None
    if order is not None:
        missing = [lab for lab in vocab.labels if lab not in order.labels]
        if missing:
            raise ValueError(f"labels without obliqueness rank: {' '.join(missing)}")
    return vocab, order


def save_vocabulary(vocab: Vocabulary, path: str | Path, order: ObliquenessOrder | None = None) -> None:
    Path(path).write_text("\n".join([VOCAB_HEADER] + _vocab_lines(vocab, order)) + "\n", encoding="utf-8")


def load_vocabulary(path: str | Path) -> tuple[Vocabulary, ObliquenessOrder | None]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0].strip() != VOCAB_HEADER:
        raise TreebankParseError(path, 1, f"expected header {VOCAB_HEADER!r}")
    entries: dict[str, list[str]] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, *values = line.split()
        if key not in ("atoms", "labels", "stars", "order"):
            raise TreebankParseError(path, lineno, f"unknown field {key!r}")
        entries[key] = values
    try:
        return _read_vocab_fields(entries)
    except ValueError as exc:
        raise TreebankParseError(path, len(lines), str(exc)) from None


# -- treebank files ---------------------------------------------------------
#
# Header, then `#!` vocabulary lines and `#%` metadata lines, then one
# record per line: words (space separated), a tab, the types in polish
# notation separated by `#`, and optionally a tab and the goal type.


def format_types(types: Sequence[Type]) -> str:
    return f" {SEPARATOR} ".join(" ".join(serialize_polish(t)) for t in types)


def save_treebank(tb: Treebank, path: str | Path) -> None:
    lines = [TREEBANK_HEADER]
    lines += _vocab_lines(tb.vocabulary, tb.order, prefix="#! ")
    lines += [f"#% {k} {v}" for k, v in tb.meta.items()]
    for s in tb.samples:
        rec = f"{' '.join(s.words)}\t{format_types(s.types)}"
        if s.goal is not None:
            rec += "\t" + " ".join(serialize_polish(s.goal))
        lines.append(rec)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_treebank(path: str | Path, vocabulary: Vocabulary | None = None) -> Treebank:
    """Read a treebank file, validating every type against the vocabulary.

    The vocabulary embedded in the file is used unless one is passed.
    """
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0].strip() != TREEBANK_HEADER:
        raise TreebankParseError(path, 1, f"expected header {TREEBANK_HEADER!r}")
    entries: dict[str, list[str]] = {}
    meta: dict[str, str] = {}
    records: list[tuple[int, str]] = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        if line.startswith("#!"):
            key, *values = line[2:].split()
            entries[key] = values
        elif line.startswith("#%"):
            key, _, value = line[2:].strip().partition(" ")
            meta[key] = value
        elif line.startswith("# "):
            continue
        else:
            records.append((lineno, line))
    try:
        embedded, order = _read_vocab_fields(entries)
    except ValueError as exc:
        raise TreebankParseError(path, 1, str(exc)) from None
    vocab = vocabulary or embedded
    samples = []
    for lineno, line in records:
        fields = line.split("\t")
        if len(fields) not in (2, 3):
            raise TreebankParseError(path, lineno, "expected words<TAB>types[<TAB>goal]")
        words = fields[0].split()
        try:
            types = [_read_type(chunk.split(), vocab) for chunk in fields[1].split(SEPARATOR)]
            goal = _read_type(fields[2].split(), vocab) if len(fields) == 3 else None
        except VocabularyViolation as exc:
            raise VocabularyViolation(exc.symbol, f"{path}:{lineno}: symbol {exc.symbol!r} is not in the declared vocabulary") from None
        except (PolishParseError, ValueError) as exc:
            raise TreebankParseError(path, lineno, str(exc)) from None
        if len(words) != len(types):
            raise TreebankParseError(path, lineno, f"{len(words)} words but {len(types)} types")
        if not words:
            raise TreebankParseError(path, lineno, "empty sentence")
        samples.append(Sample(tuple(words), tuple(types), goal))
    return Treebank(samples, vocab, order, meta)


def _read_type(tokens: list[str], vocab: Vocabulary) -> Type:
    for tok in tokens:
        try:
            vocab.read_token(tok)
        except PolishParseError:
            raise VocabularyViolation(tok) from None
    t = parse_polish(tokens, vocab)
    vocab.check(t)
    return t


# -- splitting --------------------------------------------------------------


@dataclass(frozen=True)
class SplitSpec:
    train: float = 0.8
    val: float = 0.1
    test: float = 0.1
    seed: int = 0
    max_length: int = 20

    def __post_init__(self):
        if min(self.train, self.val, self.test) < 0 or abs(self.train + self.val + self.test - 1.0) > 1e-9:
            raise ValueError("split ratios must be non-negative and sum to 1")


def split(tb: Treebank, spec: SplitSpec = SplitSpec()) -> tuple[Treebank, Treebank, Treebank]:
    kept = [s for s in tb.samples if len(s) <= spec.max_length]
    order = np.random.default_rng(spec.seed).permutation(len(kept))
    n_train = round(len(kept) * spec.train)
    n_val = round(len(kept) * spec.val)
    parts = (order[:n_train], order[n_train:n_train + n_val], order[n_train + n_val:])
    return tuple(tb.subset((kept[i] for i in sorted(idx)), split=name) for idx, name in zip(parts, ("train", "val", "test")))


def holdout_split(tb: Treebank, spec: SplitSpec = SplitSpec(), min_arity: int = 2,
                  ) -> tuple[Treebank, Treebank, Treebank]:
    """Split so that the test part holds types never seen in train or val.

    Types of at least ``min_arity`` arguments are withheld one at a time,
    in seeded random order, as long as the samples containing them fit
    in the test share; every sample with a withheld type goes to test.
    The remaining samples are shuffled into train and val.
    """
    kept = [s for s in tb.samples if len(s) <= spec.max_length]
    rng = np.random.default_rng(spec.seed)
    where: dict[Type, set[int]] = {}
    for i, s in enumerate(kept):
        for t in s.types:
            where.setdefault(t, set()).add(i)
    candidates = sorted((t for t in where if arity(t) >= min_arity), key=lambda t: " ".join(serialize_polish(t)))
    target = round(len(kept) * spec.test)
    test: set[int] = set()
    for j in rng.permutation(len(candidates)):
        grown = test | where[candidates[j]]
        if len(grown) <= target:
            test = grown
    rest = [i for i in range(len(kept)) if i not in test]
    rest = [rest[j] for j in rng.permutation(len(rest))]
    n_val = min(round(len(kept) * spec.val), len(rest))
    parts = (rest[n_val:], rest[:n_val], test)
    return tuple(tb.subset((kept[i] for i in sorted(idx)), split=name) for idx, name in zip(parts, ("train", "val", "test")))


# -- frequency statistics -----------------------------------------------------

BINS = ("unseen", "low", "mid", "high")


class FrequencyTable(Mapping):
    """Occurrence counts of types in a reference split; absent types count 0."""

    def __init__(self, counts: Mapping[Type, int] | None = None):
        self._counts = Counter(counts or {})

    @classmethod
    def from_treebank(cls, tb: Treebank | Iterable[Sample]) -> FrequencyTable:
        return cls(Counter(t for s in tb for t in s.types))

    def __getitem__(self, t: Type) -> int:
        return self._counts.get(t, 0)

    def __iter__(self):
        return iter(self._counts)

    def __len__(self) -> int:
        return len(self._counts)

    def total(self) -> int:
        return sum(self._counts.values())

    def bin_of(self, t: Type) -> str:
        return frequency_bin(self[t])


def frequency_bin(count: int) -> str:
    """unseen = 0, low = 1-9, mid = 10-99, high = 100 and above."""
    if count <= 0:
        return "unseen"
    if count < 10:
        return "low"
    if count < 100:
        return "mid"
    return "high"


@dataclass
class FrequencyStats:
    table: FrequencyTable
    thresholds: list[int]
    type_fraction: list[float]
    sentence_fraction: list[float]
    singleton_fraction: float

    def rows(self) -> list[tuple[int, float, float]]:
        return list(zip(self.thresholds, self.type_fraction, self.sentence_fraction))

    def format(self) -> str:
        out = [f"types {len(self.table)}  tokens {self.table.total()}  singletons {self.singleton_fraction:.4f}",
               f"{'count <':>8} {'types':>8} {'sentences':>10}"]
        out += [f"{k:>8} {tf:>8.4f} {sf:>10.4f}" for k, tf, sf in self.rows()]
        return "\n".join(out)


def frequency_stats(train: Treebank | Sequence[Sample], thresholds: Sequence[int] | None = None) -> FrequencyStats:
    """Per-type counts and the cumulative coverage curves.

    For each threshold k: the fraction of unique types seen fewer than k
    times, and the fraction of sentences containing at least one of them.
    Default thresholds are every distinct ``count + 1``.
    """
    samples = list(train)
    table = FrequencyTable.from_treebank(samples)
    if thresholds is None:
        thresholds = sorted({c + 1 for c in table._counts.values()})
    n_types = len(table) or 1
    n_sent = len(samples) or 1
    type_frac, sent_frac = [], []
    for k in thresholds:
        rare = {t for t, c in table._counts.items() if c < k}
        type_frac.append(len(rare) / n_types if len(table) else 0.0)
        hit = sum(1 for s in samples if any(t in rare for t in s.types))
        sent_frac.append(hit / n_sent if samples else 0.0)
    singletons = sum(1 for c in table._counts.values() if c == 1) / n_types if len(table) else 0.0
    return FrequencyStats(table, list(thresholds), type_frac, sent_frac, singletons)


# -- synthetic treebanks ----------------------------------------------------

DEFAULT_ATOMS = ("np", "n", "pron", "adj", "pp", "s_main", "sv1", "ssub", "cp", "whq", "inf")
DEFAULT_LABELS = ("cnj", "det", "obj1", "obj2", "pc", "vc", "body", "mod", "su")
DEFAULT_STARS = ("np", "adj")
# argument slots per verb frame, outermost (first consumed) first
FRAMES = {
    "intransitive": (),
    "transitive": ("obj1",),
    "ditransitive": ("obj1", "obj2"),
    "prepositional": ("pc",),
    "transitive_pc": ("obj1", "pc"),
    "clausal": ("obj1",),
}


@dataclass
class Recipe:
    """Lexicon and template probabilities for :func:`gen_synthetic`.

    Probabilities are per decision point; ``*_depth`` fields are
    distributions over the number of stacked items (index = count).
    """

    names: list[str] = field(default_factory=lambda: ["jan", "marie", "piet", "anna", "amsterdam", "europa"])
    pronouns: list[str] = field(default_factory=lambda: ["hij", "zij", "wij", "ik", "jullie", "iemand"])
    nouns: list[str] = field(default_factory=lambda: ["man", "vrouw", "boek", "idee", "rol", "kind", "brief", "huis", "stad", "hond"])
    determiners: list[str] = field(default_factory=lambda: ["de", "een", "enkele", "elke", "deze"])
    adjectives: list[str] = field(default_factory=lambda: ["groot", "klein", "mooi", "eenvoudig", "degelijk", "oud", "nieuw"])
    intensifiers: list[str] = field(default_factory=lambda: ["zeer", "heel", "erg"])
    adverbs: list[str] = field(default_factory=lambda: ["niet", "vaak", "nu", "dan", "nog", "graag"])
    prepositions: list[str] = field(default_factory=lambda: ["met", "voor", "van", "in", "op", "zonder"])
    intransitive: list[str] = field(default_factory=lambda: ["slaapt", "werkt", "lacht", "wacht"])
    transitive: list[str] = field(default_factory=lambda: ["ziet", "leest", "koopt", "zoekt", "kent", "speelt"])
    ditransitive: list[str] = field(default_factory=lambda: ["geeft", "stuurt", "toont", "vertelt"])
    prepositional: list[str] = field(default_factory=lambda: ["wacht", "rekent", "kijkt", "lijkt"])
    transitive_pc: list[str] = field(default_factory=lambda: ["brengt", "stelt", "haalt"])
    clausal: list[str] = field(default_factory=lambda: ["zegt", "denkt", "weet", "hoopt"])
    infinitives: dict[str, str] = field(default_factory=lambda: {
        "slapen": "intransitive", "werken": "intransitive", "zien": "transitive", "lezen": "transitive",
        "kopen": "transitive", "geven": "ditransitive", "sturen": "ditransitive", "wachten": "prepositional",
        "brengen": "transitive_pc", "zeggen": "clausal", "weten": "clausal"})
    complementizers: list[str] = field(default_factory=lambda: ["dat"])
    auxiliaries: list[str] = field(default_factory=lambda: ["zal", "moet", "kan", "wil"])
    conjunctions: list[str] = field(default_factory=lambda: ["en", "of"])
    wh_determiners: list[str] = field(default_factory=lambda: ["welke"])
    # template choice: declarative clause, verb-initial clause, wh-question
    clause_kind: dict[str, float] = field(default_factory=lambda: {"s_main": 0.6, "sv1": 0.25, "whq": 0.15})
    frame: dict[str, float] = field(default_factory=lambda: {
        "intransitive": 0.2, "transitive": 0.35, "ditransitive": 0.15, "prepositional": 0.1,
        "transitive_pc": 0.08, "clausal": 0.12})
    p_pronoun: float = 0.35
    p_name: float = 0.2
    p_np_conj: float = 0.06
    conjuncts: dict[int, float] = field(default_factory=lambda: {2: 0.8, 3: 0.2})
    p_aux: float = 0.25
    p_adj_conj: float = 0.05
    p_np_pp: float = 0.12
    p_clause_pp: float = 0.15
    p_inf_mod: float = 0.5
    adjective_count: list[float] = field(default_factory=lambda: [0.65, 0.28, 0.07])
    intensifier_depth: list[float] = field(default_factory=lambda: [0.87, 0.1, 0.025, 0.005])
    adverb_count: list[float] = field(default_factory=lambda: [0.6, 0.3, 0.1])
    max_words: int = 24
    budget: int = DEFAULT_BUDGET
    # proof-search expansions allowed per sample before it is redrawn
    max_steps: int = 50_000

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        for name in ("names", "pronouns", "nouns", "determiners", "adjectives", "intensifiers", "adverbs",
                     "prepositions", "intransitive", "transitive", "ditransitive", "prepositional",
                     "transitive_pc", "clausal", "auxiliaries", "conjunctions", "wh_determiners",
                     "complementizers"):
            words = getattr(self, name)
            if not words or any(not w or any(c.isspace() for c in w) for w in words):
                raise InvalidRecipe(f"{name} must be a non-empty list of words without whitespace")
        for name in ("clause_kind", "frame", "conjuncts"):
            _check_dist(name, list(getattr(self, name).values()))
        for name in ("adjective_count", "intensifier_depth", "adverb_count"):
            _check_dist(name, getattr(self, name))
        if set(self.clause_kind) - {"s_main", "sv1", "whq"}:
            raise InvalidRecipe("clause_kind keys must be s_main, sv1, whq")
        if set(self.frame) - set(FRAMES):
            raise InvalidRecipe(f"frame keys must be among {', '.join(FRAMES)}")
        if any(int(k) < 2 for k in self.conjuncts):
            raise InvalidRecipe("conjunctions need at least two conjuncts")
        for name in ("p_pronoun", "p_name", "p_np_conj", "p_aux", "p_adj_conj", "p_np_pp", "p_clause_pp", "p_inf_mod"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise InvalidRecipe(f"{name} must lie in [0, 1]")
        if self.p_pronoun + self.p_name > 1.0:
            raise InvalidRecipe("p_pronoun + p_name exceeds 1")
        if set(self.infinitives.values()) - set(FRAMES):
            raise InvalidRecipe(f"infinitive frames must be among {', '.join(FRAMES)}")
        if self.max_words < 1 or self.budget < 1 or self.max_steps < 1:
            raise InvalidRecipe("max_words and budget must be positive")

    @classmethod
    def from_json(cls, path: str | Path) -> Recipe:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise InvalidRecipe(f"{path}: {exc}") from None
        if not isinstance(data, dict):
            raise InvalidRecipe(f"{path}: expected a JSON object")
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise InvalidRecipe(f"{path}: unknown recipe fields {sorted(unknown)}")
        if "conjuncts" in data:
            data["conjuncts"] = {int(k): v for k, v in data["conjuncts"].items()}
        try:
            return cls(**data)
        except TypeError as exc:
            raise InvalidRecipe(f"{path}: {exc}") from None

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=1, sort_keys=True)

    @property
    def vocabulary(self) -> Vocabulary:
        return Vocabulary(DEFAULT_ATOMS, DEFAULT_LABELS, DEFAULT_STARS)

    @property
    def order(self) -> ObliquenessOrder:
        return ObliquenessOrder(DEFAULT_LABELS)


def _check_dist(name: str, probs: Sequence[float]) -> None:
    if not probs or any(p < 0 for p in probs) or abs(sum(probs) - 1.0) > 1e-6:
        raise InvalidRecipe(f"{name} must be a probability distribution")


def _a(name: str) -> Atom:
    return Atom(name)


def _arrow(label: str, arg: Type, res: Type) -> Arrow:
    return Arrow(label, arg, res)


def _functor(args: Sequence[tuple[str, Type]], result: Type) -> Type:
    t = result
    for label, arg in reversed(args):
        t = Arrow(label, arg, t)
    return t


class _Generator:
    def __init__(self, recipe: Recipe, rng: np.random.Generator):
        self.r = recipe
        self.rng = rng

    def pick(self, words: Sequence[str]) -> str:
        return words[int(self.rng.integers(len(words)))]

    def choice(self, dist: Mapping | Sequence[float]):
        if isinstance(dist, Mapping):
            keys = list(dist)
            return keys[int(self.rng.choice(len(keys), p=np.asarray(list(dist.values())) / sum(dist.values())))]
        probs = np.asarray(dist, dtype=float)
        return int(self.rng.choice(len(probs), p=probs / probs.sum()))

    def coin(self, p: float) -> bool:
        return bool(self.rng.random() < p)

    # noun phrases return (items, category)
    def noun_phrase(self, depth: int = 0, allow_pronoun: bool = True) -> tuple[list, Atom]:
        u = self.rng.random()
        if allow_pronoun and u < self.r.p_pronoun:
            return [(self.pick(self.r.pronouns), _a("pron"))], _a("pron")
        if depth == 0 and self.coin(self.r.p_np_conj):
            k = self.choice(self.r.conjuncts)
            items = []
            for i in range(k):
                if i == k - 1:
                    items.append((self.pick(self.r.conjunctions), _arrow("cnj", Atom("np", star=True), _a("np"))))
                items += self.noun_phrase(depth + 1, allow_pronoun=False)[0]
            return items, _a("np")
        if u < self.r.p_pronoun + self.r.p_name:
            return [(self.pick(self.r.names), _a("np"))], _a("np")
        det = (self.pick(self.r.determiners), _arrow("det", _a("n"), _a("np")))
        return [det] + self.nominal(depth), _a("np")

    def nominal(self, depth: int) -> list:
        n = _a("n")
        n_mod = _arrow("mod", n, n)
        items = []
        if self.coin(self.r.p_adj_conj):
            items += [(self.pick(self.r.adjectives), _a("adj")),
                      (self.pick(self.r.conjunctions), _arrow("cnj", Atom("adj", star=True), n_mod)),
                      (self.pick(self.r.adjectives), _a("adj"))]
        else:
            for _ in range(self.choice(self.r.adjective_count)):
                items += self.intensified(n_mod)
        items.append((self.pick(self.r.nouns), n))
        if depth < 1 and self.coin(self.r.p_np_pp):
            obj, cat = self.noun_phrase(depth + 1)
            items.append((self.pick(self.r.prepositions), _arrow("obj1", cat, n_mod)))
            items += obj
        return items

    def intensified(self, modifier: Type) -> list:
        depth = self.choice(self.r.intensifier_depth)
        layers = [modifier]
        for _ in range(depth):
            layers.append(_arrow("mod", layers[-1], layers[-1]))
        words = [(self.pick(self.r.intensifiers), t) for t in reversed(layers[1:])]
        return words + [(self.pick(self.r.adjectives), modifier)]

    def modifiers(self, target: Atom) -> list:
        mod = _arrow("mod", target, target)
        return [(self.pick(self.r.adverbs), mod) for _ in range(self.choice(self.r.adverb_count))]

    def pp(self, target: Atom) -> list:
        obj, cat = self.noun_phrase(1)
        return [(self.pick(self.r.prepositions), _arrow("obj1", cat, _arrow("mod", target, target)))] + obj

    def finite_verbs(self, frame: str) -> list[str]:
        return getattr(self.r, frame)

    def frame_args(self, frame: str, embedded: bool = False) -> list[tuple[str, list, Atom]]:
        out = []
        for label in FRAMES[frame]:
            if label == "pc":
                obj, cat = self.noun_phrase(1)
                items = [(self.pick(self.r.prepositions), _arrow("obj1", cat, _a("pp")))] + obj
                out.append((label, items, _a("pp")))
            elif frame == "clausal" and not embedded:
                comp = (self.pick(self.r.complementizers), _arrow("body", _a("ssub"), _a("cp")))
                out.append((label, [comp] + self.subordinate(), _a("cp")))
            else:
                items, cat = self.noun_phrase()
                out.append((label, items, cat))
        return out

    def subordinate(self) -> list:
        """A verb-final clause of category ssub."""
        frames = {k: v for k, v in self.r.frame.items() if k != "clausal"}
        frame = self.choice(frames)
        subj, su_cat = self.noun_phrase()
        args = self.frame_args(frame, embedded=True)
        verb = (self.pick(self.finite_verbs(frame)),
                _functor([(lab, cat) for lab, _, cat in args] + [("su", su_cat)], _a("ssub")))
        objects = [item for _, items, _ in reversed(args) for item in items]
        return subj + objects + [verb]

    def clause(self, kind: str) -> tuple[list, Type]:
        result = _a(kind)
        frame = self.choice(self.r.frame)
        subj, su_cat = self.noun_phrase()
        args = self.frame_args(frame)
        aux = self.coin(self.r.p_aux)
        if aux:
            candidates = [w for w, f in self.r.infinitives.items() if f == frame]
            aux = bool(candidates)
        if aux:
            inf_word = self.pick(candidates)
            inf_type = _functor([(lab, cat) for lab, _, cat in args], _a("inf"))
            head = (self.pick(self.r.auxiliaries), _arrow("vc", _a("inf"), _arrow("su", su_cat, result)))
            mod_target = _a("inf") if self.coin(self.r.p_inf_mod) else result
        else:
            head = (self.pick(self.finite_verbs(frame)),
                    _functor([(lab, cat) for lab, _, cat in args] + [("su", su_cat)], result))
            mod_target = result
        mods = self.modifiers(mod_target)
        clausal = [items for lab, items, cat in args if cat == _a("cp")]
        objects = [item for _, items, cat in reversed(args) if cat != _a("cp") for item in items]
        if kind == "sv1":
            words = [head] + subj + mods + objects
        else:
            words = subj + [head] + mods + objects
        if aux:
            words.append((inf_word, inf_type))
        if self.coin(self.r.p_clause_pp):
            words += self.pp(result)
        # complement clauses are extraposed to the end
        for items in clausal:
            words += items
        return words, result

    def wh_question(self) -> tuple[list, Type]:
        n, sv1 = _a("n"), _a("sv1")
        whq = _a("whq")
        nominal = self.nominal(depth=1)
        if self.coin(0.5):
            # object gap: welke N V SU
            subj, su_cat = self.noun_phrase()
            gap = _arrow("obj1", n, sv1)
            verb = (self.pick(self.r.transitive), _functor([("obj1", n), ("su", su_cat)], sv1))
            rest = [verb] + subj
        else:
            # subject gap: welke N V OBJ
            obj, obj_cat = self.noun_phrase()
            gap = _arrow("su", n, sv1)
            verb = (self.pick(self.r.transitive), _functor([("obj1", obj_cat), ("su", n)], sv1))
            rest = [verb] + obj
        wh = (self.pick(self.r.wh_determiners), _arrow("det", n, _arrow("body", gap, whq)))
        rest = rest[:1] + self.modifiers(sv1) + rest[1:]
        return [wh] + nominal + rest, whq

    def sentence(self) -> tuple[list, Type]:
        kind = self.choice(self.r.clause_kind)
        if kind == "whq":
            return self.wh_question()
        return self.clause(kind)


def gen_synthetic(recipe: Recipe | None = None, seed: int = 0, n: int = 100, validate: bool = True) -> Treebank:
    """Generate ``n`` samples whose types provably compose to their goal.

    Sentences longer than ``recipe.max_words`` are redrawn.  With
    ``validate`` every sample is checked by proof search; a sample whose
    search runs past ``recipe.max_steps`` is redrawn too (counted in the
    ``redrawn`` metadata field), one that is refuted raises InvalidRecipe.
    """
    recipe = recipe or Recipe()
    recipe.validate()
    if n < 0:
        raise InvalidRecipe("sample count must be non-negative")
    gen = _Generator(recipe, np.random.default_rng(seed))
    samples = []
    redrawn = 0
    while len(samples) < n:
        items, goal = gen.sentence()
        if len(items) > recipe.max_words:
            continue
        words = tuple(w for w, _ in items)
        types = tuple(t for _, t in items)
        if validate:
            try:
                derive(list(items), goal, recipe.budget, recipe.max_steps)
            except BudgetExhaustedError:
                redrawn += 1
                continue
            except DerivationError as exc:
                raise InvalidRecipe(f"generated sample is not derivable ({exc}): {' '.join(words)}") from None
        samples.append(Sample(words, types, goal))
    meta = {"source": "synthetic", "seed": str(seed), "n": str(n), "redrawn": str(redrawn)}
    return Treebank(samples, recipe.vocabulary, recipe.order, meta)
