"""Type-level metrics, reports and the merge-scale sweep."""

from __future__ import annotations

import json
from collections import Counter
from collections.abc import Callable, Iterable, Mapping, Sequence
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .corpus import BINS, FrequencyTable, Treebank
from .digram import EXHAUSTIVE
from .typegram import SEPARATOR, Segment, Status, prefix_status, segment_assignment
from .types import PolishParseError, Type, Vocabulary, parse_polish, serialize_polish

REPORT_FORMAT = "typetagger-report"
PREDICTIONS_FORMAT = "typetagger-predictions"
FORMAT_VERSION = 1
BIN_HEADINGS = {"unseen": "Unseen", "low": "Freq 1-9", "mid": "Freq 10-99", "high": "Freq >=100"}


@dataclass(frozen=True)
class Verdict:
    position: int
    gold: Type
    predicted: Type | None
    correct: bool
    reason: str | None = None  # missing, malformed, mismatch


@dataclass(frozen=True)
class SentenceVerdicts:
    verdicts: tuple[Verdict, ...]
    surplus: tuple[Segment, ...] = ()

    @property
    def correct(self) -> int:
        return sum(v.correct for v in self.verdicts)

    def __len__(self) -> int:
        return len(self.verdicts)

    def __iter__(self):
        return iter(self.verdicts)


def _segments(pred: Sequence[str] | Sequence[Segment], vocab: Vocabulary | None) -> list[Segment]:
    if pred and isinstance(pred[0], Segment):
        return list(pred)
    return segment_assignment(list(pred), vocab)


def type_accuracy(pred: Sequence[str] | Sequence[Segment], gold: Sequence[Type],
                  vocab: Vocabulary | None = None) -> SentenceVerdicts:
    """Per-position verdicts for one sentence.

    ``pred`` is the reverted output (base symbols and separators) or its
    segments.  Segment i is compared with gold type i; a segment that does
    not parse, or a position with no segment, is wrong.  Segments beyond
    the gold length are returned as surplus.
    """
    segs = _segments(pred, vocab)
    out = []
    for i, g in enumerate(gold):
        if i >= len(segs):
            out.append(Verdict(i, g, None, False, "missing"))
            continue
        seg = segs[i]
        if not seg.ok:
            out.append(Verdict(i, g, None, False, "malformed"))
        elif seg.type == g:
            out.append(Verdict(i, g, seg.type, True))
        else:
            out.append(Verdict(i, g, seg.type, False, "mismatch"))
    return SentenceVerdicts(tuple(out), tuple(segs[len(gold):]))


def overall_accuracy(verdicts: Iterable[Iterable[Verdict]]) -> float | None:
    flat = [v for sent in verdicts for v in sent]
    return sum(v.correct for v in flat) / len(flat) if flat else None


@dataclass(frozen=True)
class BinScore:
    correct: int
    total: int

    @property
    def accuracy(self) -> float:
        return self.correct / self.total


def binned_accuracy(verdicts: Iterable[Verdict] | Iterable[Iterable[Verdict]], freq: FrequencyTable) -> dict[str, BinScore]:
    """Accuracy per training-frequency bin of the gold type; empty bins are left out."""
    counts = {b: [0, 0] for b in BINS}
    for item in verdicts:
        for v in (item if not isinstance(item, Verdict) else (item,)):
            c = counts[freq.bin_of(v.gold)]
            c[0] += v.correct
            c[1] += 1
    return {b: BinScore(c, t) for b, (c, t) in counts.items() if t}


@dataclass(frozen=True)
class NewTypeStats:
    generated: int
    unique: int
    occurrence_precision: float | None
    unique_precision: float | None


def new_type_stats(verdicts: Iterable[Iterable[Verdict]], train_types: Iterable[Type] | Mapping) -> NewTypeStats:
    """Well-formed predicted types absent from training, and how often they are right.

    Only segments aligned with a gold position are counted.
    """
    known = set(train_types)
    occurrences = 0
    right = 0
    seen: set[Type] = set()
    ever_right: set[Type] = set()
    for sent in verdicts:
        for v in sent:
            if v.predicted is None or v.predicted in known:
                continue
            occurrences += 1
            seen.add(v.predicted)
            if v.correct:
                right += 1
                ever_right.add(v.predicted)
    if not occurrences:
        return NewTypeStats(0, 0, None, None)
    return NewTypeStats(occurrences, len(seen), right / occurrences, len(ever_right) / len(seen))


def wellformedness_rate(preds: Iterable[Sequence[str]], vocab: Vocabulary | None = None) -> float | None:
    """Fraction of predicted segments that are complete types.

    A trailing run with no closing separator counts as a segment.
    """
    total = valid = 0
    for tokens in preds:
        run: list[str] = []
        runs = []
        for tok in tokens:
            if tok == SEPARATOR:
                runs.append(run)
                run = []
            else:
                run.append(tok)
        if run:
            runs.append(run)
        for r in runs:
            total += 1
            valid += _complete(r, vocab)
    return valid / total if total else None


def _complete(run: Sequence[str], vocab: Vocabulary | None) -> bool:
    if vocab is None:
        try:
            parse_polish(run)
        except PolishParseError:
            return False
        return True
    try:
        return prefix_status(run, vocab).status is Status.VALID_COMPLETE
    except PolishParseError:
        return False


# -- reports ----------------------------------------------------------------


@dataclass
class EvalReport:
    label: str
    sentences: int
    positions: int
    accuracy: float | None
    bins: dict[str, BinScore]
    new_types: NewTypeStats
    wellformedness: float | None
    cap_exceeded: int = 0
    surplus_segments: int = 0
    errors: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["bins"] = {b: {"correct": s.correct, "total": s.total, "accuracy": s.accuracy} for b, s in self.bins.items()}
        return d

    def to_json(self, config: Mapping | None = None) -> str:
        doc = {"format": REPORT_FORMAT, "version": FORMAT_VERSION, "config": dict(config or {}), "report": self.to_dict()}
        return json.dumps(doc, sort_keys=True, indent=1, ensure_ascii=False) + "\n"

    @classmethod
    def from_dict(cls, d: Mapping) -> EvalReport:
        bins = {b: BinScore(s["correct"], s["total"]) for b, s in d["bins"].items()}
        return cls(d["label"], d["sentences"], d["positions"], d["accuracy"], bins, NewTypeStats(**d["new_types"]),
                   d["wellformedness"], d["cap_exceeded"], d["surplus_segments"], list(d["errors"]))

    def format_table(self) -> str:
        return format_table1([self]) + "\n" + format_table2([self])


def evaluate(preds: Sequence[Sequence[str]], gold: Sequence[Sequence[Type]], freq: FrequencyTable,
             vocab: Vocabulary | None = None, cap_flags: Sequence[bool] | None = None,
             label: str = "") -> EvalReport:
    """Score reverted predictions (base symbols with separators) against gold types."""
    if len(preds) != len(gold):
        raise ValueError(f"{len(preds)} predictions for {len(gold)} sentences")
    verdicts = [type_accuracy(p, g, vocab) for p, g in zip(preds, gold)]
    errors = []
    for i, sv in enumerate(verdicts):
        for v in sv:
            if not v.correct:
                errors.append({"sentence": i, "position": v.position, "reason": v.reason,
                               "gold": " ".join(serialize_polish(v.gold)),
                               "predicted": None if v.predicted is None else " ".join(serialize_polish(v.predicted))})
        for j, seg in enumerate(sv.surplus):
            errors.append({"sentence": i, "position": len(sv) + j, "reason": "surplus", "gold": None,
                           "predicted": " ".join(seg.tokens)})
    return EvalReport(
        label=label,
        sentences=len(gold),
        positions=sum(len(g) for g in gold),
        accuracy=overall_accuracy(verdicts),
        bins=binned_accuracy(verdicts, freq),
        new_types=new_type_stats(verdicts, freq),
        wellformedness=wellformedness_rate(preds, vocab),
        cap_exceeded=sum(bool(c) for c in cap_flags) if cap_flags is not None else 0,
        surplus_segments=sum(len(sv.surplus) for sv in verdicts),
        errors=errors,
    )


def _pct(x: float | None) -> str:
    return "-" if x is None else f"{100 * x:.2f}"


def level_name(level: int | str) -> str:
    return "M∞" if level == EXHAUSTIVE else f"M{level}"


def format_table1(reports: Sequence[EvalReport]) -> str:
    """Accuracy overall and per frequency bin, one row per model."""
    head = ["Model", "Overall"] + [BIN_HEADINGS[b] for b in BINS]
    rows = [[r.label, _pct(r.accuracy)] + [_pct(r.bins[b].accuracy) if b in r.bins else "-" for b in BINS]
            for r in reports]
    return _grid(head, rows)


def format_table2(reports: Sequence[EvalReport]) -> str:
    """Unseen-type generation: occurrences, distinct types, precision of each."""
    head = ["Model", "New Types Generated", "Unique", "Correct % (occurrences)", "Correct % (unique)"]
    rows = [[r.label, str(r.new_types.generated), str(r.new_types.unique),
             _pct(r.new_types.occurrence_precision), _pct(r.new_types.unique_precision)] for r in reports]
    return _grid(head, rows)


def _grid(head: list[str], rows: list[list[str]]) -> str:
    widths = [max(len(x) for x in col) for col in zip(head, *rows)]
    line = lambda cells: "  ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip()
    return "\n".join([line(head), line(["-" * w for w in widths])] + [line(r) for r in rows])


# -- prediction dumps -------------------------------------------------------


@dataclass(frozen=True)
class PredictionRecord:
    words: tuple[str, ...]
    raw: tuple[str, ...]
    reverted: tuple[str, ...]
    cap_exceeded: bool = False

    def segments(self, vocab: Vocabulary | None = None) -> list[Segment]:
        return segment_assignment(list(self.reverted), vocab)


def save_predictions(path: str | Path, records: Sequence[PredictionRecord], vocab: Vocabulary | None = None,
                     config: Mapping | None = None) -> None:
    lines = [json.dumps({"format": PREDICTIONS_FORMAT, "version": FORMAT_VERSION, "config": dict(config or {})},
                        sort_keys=True, ensure_ascii=False)]
    for i, rec in enumerate(records):
        segs = [None if not s.ok else " ".join(s.tokens) for s in rec.segments(vocab)]
        lines.append(json.dumps({"index": i, "words": list(rec.words), "raw": list(rec.raw),
                                 "reverted": list(rec.reverted), "segments": segs,
                                 "cap_exceeded": rec.cap_exceeded}, sort_keys=True, ensure_ascii=False))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_predictions(path: str | Path) -> tuple[dict, list[PredictionRecord]]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise ValueError(f"{path}: empty prediction file")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}:1: {exc}") from None
    if header.get("format") != PREDICTIONS_FORMAT:
        raise ValueError(f"{path}:1: not a {PREDICTIONS_FORMAT} file")
    records = []
    for lineno, line in enumerate(lines[1:], start=2):
        try:
            d = json.loads(line)
            records.append(PredictionRecord(tuple(d["words"]), tuple(d["raw"]), tuple(d["reverted"]),
                                            bool(d.get("cap_exceeded", False))))
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise ValueError(f"{path}:{lineno}: malformed record ({exc})") from None
    return header, records


# -- merge sweep ------------------------------------------------------------

DEFAULT_LEVELS = (0, 50, 100, 200, EXHAUSTIVE)


def level_seed(master_seed: int, level_index: int, repetition: int = 0) -> int:
    """Seed for one sweep cell; cell (0, 0) uses the master seed itself."""
    if level_index == 0 and repetition == 0:
        return int(master_seed)
    return int(np.random.SeedSequence([master_seed, level_index, repetition]).generate_state(1)[0])


@dataclass
class SweepRow:
    level: int | str
    reports: list[EvalReport]
    error: str | None = None

    @property
    def label(self) -> str:
        return level_name(self.level)

    def mean(self) -> EvalReport | None:
        """Repetition average; bins present in any repetition are averaged over those."""
        if not self.reports:
            return None
        if len(self.reports) == 1:
            return self.reports[0]
        avg = lambda xs: None if any(x is None for x in xs) else float(np.mean(xs))
        rs = self.reports
        bins: dict[str, BinScore] = {}
        for b in BINS:
            present = [r.bins[b] for r in rs if b in r.bins]
            if present:
                bins[b] = BinScore(sum(s.correct for s in present), sum(s.total for s in present))
        gen = [r.new_types for r in rs]
        nts = NewTypeStats(
            round(float(np.mean([g.generated for g in gen]))),
            round(float(np.mean([g.unique for g in gen]))),
            avg([g.occurrence_precision for g in gen if g.occurrence_precision is not None] or [None]),
            avg([g.unique_precision for g in gen if g.unique_precision is not None] or [None]),
        )
        return EvalReport(self.label, rs[0].sentences, rs[0].positions, avg([r.accuracy for r in rs]), bins, nts,
                          avg([r.wellformedness for r in rs]), sum(r.cap_exceeded for r in rs),
                          sum(r.surplus_segments for r in rs))


@dataclass
class SweepReport:
    rows: list[SweepRow]
    master_seed: int
    repetitions: int

    def table(self) -> str:
        means = [m for m in (r.mean() for r in self.rows) if m is not None]
        parts = [format_table1(means), "", format_table2(means)]
        failed = [r for r in self.rows if r.error]
        if failed:
            parts += [""] + [f"{r.label}: failed: {r.error}" for r in failed]
        return "\n".join(parts) + "\n"

    def to_json(self, config: Mapping | None = None) -> str:
        doc = {
            "format": REPORT_FORMAT + "-sweep",
            "version": FORMAT_VERSION,
            "config": dict(config or {}),
            "master_seed": self.master_seed,
            "repetitions": self.repetitions,
            "rows": [{"level": r.level, "error": r.error, "runs": [x.to_dict() for x in r.reports]} for r in self.rows],
        }
        return json.dumps(doc, sort_keys=True, indent=1, ensure_ascii=False) + "\n"


def train_and_evaluate(train: Treebank, val: Treebank | None, test: Treebank, level: int | str, seed: int,
                       params: Mapping | None = None) -> EvalReport:
    """Fit one supertagger at merge level ``level`` and score it on ``test``."""
    from .estimator import ConstructiveSupertagger

    est = ConstructiveSupertagger(n_merges=level, seed=seed, vocabulary=train.vocabulary, **dict(params or {}))
    val_args = (val.sentences, val.assignments) if val is not None and len(val) else (None, None)
    est.fit(train.sentences, train.assignments, *val_args)
    return est.evaluate(test.sentences, test.assignments, FrequencyTable.from_treebank(train), label=level_name(level))


def run_merge_sweep(train: Treebank, val: Treebank | None, test: Treebank,
                    levels: Sequence[int | str] = DEFAULT_LEVELS, params: Mapping | None = None,
                    master_seed: int = 0, repetitions: int = 1,
                    progress: Callable[[str], None] | None = None) -> SweepReport:
    """Train and evaluate one model per merge level (and repetition).

    A level that fails is recorded with its error and the sweep goes on.
    """
    if repetitions < 1:
        raise ValueError("repetitions must be at least 1")
    rows = []
    for i, level in enumerate(levels):
        row = SweepRow(level, [])
        try:
            for rep in range(repetitions):
                seed = level_seed(master_seed, i, rep)
                if progress:
                    progress(f"{level_name(level)} run {rep + 1}/{repetitions} (seed {seed})")
                row.reports.append(train_and_evaluate(train, val, test, level, seed, params))
        except Exception as exc:  # one failing level must not abort the sweep
            row.error = f"{type(exc).__name__}: {exc}"
        rows.append(row)
    return SweepReport(rows, master_seed, repetitions)


def parse_levels(text: str) -> list[int | str]:
    out: list[int | str] = []
    for part in text.split(","):
        part = part.strip().lower()
        if part in (EXHAUSTIVE, "inf", "∞"):
            out.append(EXHAUSTIVE)
        elif part.isdigit():
            out.append(int(part))
        else:
            raise ValueError(f"bad merge level {part!r}; use integers or {EXHAUSTIVE!r}")
    if not out:
        raise ValueError("no merge levels given")
    return out
