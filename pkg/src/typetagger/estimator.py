"""Scikit-learn style front end for the constructive supertagger."""

from __future__ import annotations

from collections.abc import Callable, Sequence
from pathlib import Path

import torch
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .corpus import FrequencyTable
from .digram import DigramEncoder, MergeTable
from .eval import EvalReport, PredictionRecord, evaluate, overall_accuracy, type_accuracy
from .model import (
    Decoded,
    ModelConfig,
    Precomputed,
    Supertagger,
    TrainableLookup,
    TrainLog,
    export_symbol_embeddings,
    greedy_decode,
    load_checkpoint,
    save_checkpoint,
    train,
)
from .model.training import BOS_ID, PAD_ID
from .typegram import BOS, PAD, Segment, SymbolVocab
from .types import Type, Vocabulary
from .utils.validation import check_assignments, check_sentences

_CONFIG_PARAMS = ("d", "enc_layers", "enc_heads", "dec_layers", "dec_heads", "ffn", "dropout", "smoothing", "warmup",
                  "lr_scale", "max_tokens_per_word", "batch_size", "epochs", "seed")


class ConstructiveSupertagger(BaseEstimator):
    """Sentences in, type assignments out, built symbol by symbol.

    ``X`` is a list of sentences (lists of words) and ``y`` the matching
    lists of types.  ``n_merges`` selects the digram merge level, an integer
    or ``"exhaustive"`` for the fully merged, closed-vocabulary tagger.
    ``word_vectors`` names a precomputed-vector file; without it a
    trainable word lookup of width ``d`` is used.
    """

    def __init__(self, n_merges: int | str = 0, d: int = 128, enc_layers: int = 1, enc_heads: int = 3,
                 dec_layers: int = 2, dec_heads: int = 8, ffn: int | None = None, dropout: float = 0.2,
                 smoothing: float = 0.2, warmup: int = 400, lr_scale: float = 1.0, max_tokens_per_word: int = 32,
                 batch_size: int = 128, epochs: int = 300, seed: int = 0, grammar_mask: bool = False,
                 vocabulary: Vocabulary | None = None, word_vectors: str | None = None, eval_every: int = 10,
                 stop_at: float | None = None, verbose: bool = False):
        self.n_merges = n_merges
        self.d = d
        self.enc_layers = enc_layers
        self.enc_heads = enc_heads
        self.dec_layers = dec_layers
        self.dec_heads = dec_heads
        self.ffn = ffn
        self.dropout = dropout
        self.smoothing = smoothing
        self.warmup = warmup
        self.lr_scale = lr_scale
        self.max_tokens_per_word = max_tokens_per_word
        self.batch_size = batch_size
        self.epochs = epochs
        self.seed = seed
        self.grammar_mask = grammar_mask
        self.vocabulary = vocabulary
        self.word_vectors = word_vectors
        self.eval_every = eval_every
        self.stop_at = stop_at
        self.verbose = verbose

    def model_config(self) -> ModelConfig:
        return ModelConfig(**{k: getattr(self, k) for k in _CONFIG_PARAMS})

    # -- fitting ------------------------------------------------------------

    def fit(self, X: Sequence[Sequence[str]], y: Sequence[Sequence[Type]], X_val=None, y_val=None,
            on_epoch: Callable[[dict], None] | None = None):
        """Learn merges on ``y``, then train the network.

        With a validation set the weights of the best validation type
        accuracy (checked every ``eval_every`` epochs) are kept.
        """
        X, y = check_assignments(X, y)
        cfg = self.model_config()
        self.encoder_ = DigramEncoder(self.n_merges, self.vocabulary).fit(y)
        self.symbols_ = self.encoder_.symbols_
        if self.symbols_.index(PAD) != PAD_ID or self.symbols_.index(BOS) != BOS_ID:
            raise AssertionError("special symbols must lead the symbol inventory")
        targets = [self.symbols_.encode(seq) for seq in self.encoder_.transform(y)]
        torch.manual_seed(cfg.seed)
        if self.word_vectors:
            provider = Precomputed.from_file(self.word_vectors)
        else:
            provider = TrainableLookup((w for s in X for w in s), cfg.d)
        self.model_ = Supertagger(cfg, provider, len(self.symbols_))
        evaluate_fn = None
        if X_val is not None and y_val is not None:
            X_val, y_val = check_assignments(X_val, y_val)
            evaluate_fn = lambda _: self._accuracy(X_val, y_val)
        log_fn = on_epoch
        if self.verbose and on_epoch is None:
            log_fn = lambda rec: print(" ".join(f"{k}={v:.4g}" if isinstance(v, float) else f"{k}={v}"
                                                for k, v in rec.items()), flush=True)
        self.log_ = train(self.model_, X, targets, cfg, evaluate=evaluate_fn, eval_every=self.eval_every,
                          stop_at=self.stop_at, on_epoch=log_fn)
        return self

    @property
    def closed_(self) -> bool:
        return self.encoder_.closed_

    # -- prediction ---------------------------------------------------------

    def predict_tokens(self, X: Sequence[Sequence[str]]) -> list[Decoded]:
        """Raw decoder output in the (possibly merged) symbol inventory."""
        check_is_fitted(self, "model_")
        X = check_sentences(X)
        return greedy_decode(self.model_, X, self.symbols_, grammar_mask=self.grammar_mask,
                             max_tokens_per_word=self.max_tokens_per_word)

    def revert(self, tokens: Sequence[str]) -> list[str]:
        return self.encoder_.inverse_transform([list(tokens)])[0]

    def predict_records(self, X: Sequence[Sequence[str]]) -> list[PredictionRecord]:
        X = check_sentences(X)
        return [PredictionRecord(tuple(x), dec.tokens, tuple(self.revert(dec.tokens)), dec.cap_exceeded)
                for x, dec in zip(X, self.predict_tokens(X))]

    def predict_segments(self, X: Sequence[Sequence[str]]) -> list[list[Segment]]:
        return [rec.segments(self.encoder_.vocabulary_) for rec in self.predict_records(X)]

    def predict(self, X: Sequence[Sequence[str]]) -> list[list[Type | None]]:
        """One type per word; None where the output is missing or malformed."""
        X = check_sentences(X)
        out = []
        for words, segs in zip(X, self.predict_segments(X)):
            types = [s.type if s.ok else None for s in segs[: len(words)]]
            out.append(types + [None] * (len(words) - len(types)))
        return out

    def _accuracy(self, X, y) -> float:
        recs = self.predict_records(X)
        return overall_accuracy(type_accuracy(r.reverted, g, self.encoder_.vocabulary_) for r, g in zip(recs, y))

    def score(self, X: Sequence[Sequence[str]], y: Sequence[Sequence[Type]]) -> float:
        """Type accuracy over all word positions."""
        X, y = check_assignments(X, y)
        return self._accuracy(X, y)

    def evaluate(self, X, y, freq: FrequencyTable, label: str = "") -> EvalReport:
        X, y = check_assignments(X, y)
        recs = self.predict_records(X)
        return evaluate([r.reverted for r in recs], y, freq, self.encoder_.vocabulary_,
                        [r.cap_exceeded for r in recs], label=label)

    # -- persistence --------------------------------------------------------

    def save(self, path: str | Path, config: dict | None = None) -> None:
        """Write a checkpoint; ``config`` is stored alongside for provenance."""
        check_is_fitted(self, "model_")
        table: MergeTable = self.encoder_.table_
        vocab = self.encoder_.vocabulary_
        params = {k: v for k, v in self.get_params().items() if k != "vocabulary"}
        save_checkpoint(path, {
            "params": params,
            "config": dict(config or {}),
            "vocabulary": {"atoms": list(vocab.atoms), "labels": list(vocab.labels), "stars": list(vocab.stars)},
            "merges": {"rules": [list(r) for r in table.rules],
                       "expansions": {k: list(v) for k, v in table.expansions.items()},
                       "exhaustive": table.exhaustive},
            "symbols": self.symbols_.tokens,
            "restrict_to": None if self.symbols_.restrict_to is None else list(self.symbols_.restrict_to),
            "provider": self.model_.provider.spec(),
            "log": self.log_.records,
            "state": self.model_.state_dict(),
        })

    @classmethod
    def load(cls, path: str | Path, word_vectors: str | None = None) -> ConstructiveSupertagger:
        data = load_checkpoint(path)
        params = dict(data["params"])
        if word_vectors is not None:
            params["word_vectors"] = word_vectors
        voc = data["vocabulary"]
        vocab = Vocabulary(voc["atoms"], voc["labels"], voc["stars"])
        est = cls(vocabulary=vocab, **params)
        merges = data["merges"]
        table = MergeTable([tuple(r) for r in merges["rules"]],
                           {k: tuple(v) for k, v in merges["expansions"].items()}, merges["exhaustive"],
                           [0] * len(merges["rules"]))
        enc = DigramEncoder(est.n_merges, vocab)
        enc.table_, enc.vocabulary_ = table, vocab
        if data["restrict_to"] is not None:
            enc.symbols_ = SymbolVocab(vocab, table.expansions, separator=None, restrict_to=data["restrict_to"])
        else:
            enc.symbols_ = SymbolVocab(vocab, table.expansions)
        if enc.symbols_.tokens != data["symbols"]:
            raise ValueError(f"{path}: symbol inventory does not match the stored merges")
        est.encoder_, est.symbols_ = enc, enc.symbols_
        cfg = est.model_config()
        spec = data["provider"]
        if spec["kind"] == "lookup":
            provider = TrainableLookup(spec["words"], spec["dim"])
        else:
            if not est.word_vectors:
                raise ValueError(f"{path}: model uses precomputed word vectors; pass their file")
            provider = Precomputed.from_file(est.word_vectors)
        est.model_ = Supertagger(cfg, provider, len(est.symbols_))
        est.model_.load_state_dict(data["state"])
        est.model_.eval()
        est.log_ = TrainLog(records=list(data["log"]))
        return est

    def export_embeddings(self, path: str | Path, header: Sequence[str] = ()) -> None:
        check_is_fitted(self, "model_")
        export_symbol_embeddings(path, self.symbols_.tokens, self.model_.network.symbols.weight, header)
