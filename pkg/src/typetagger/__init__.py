"""Constructive supertagging: type grammars, digram merges, proofs and a sequence tagger."""

from .types import Arrow, Atom, Vocabulary, parse_polish, serialize_polish

__version__ = "0.1.0"

__all__ = ["Arrow", "Atom", "Vocabulary", "parse_polish", "serialize_polish", "ConstructiveSupertagger"]


def __getattr__(name):
    # the estimator pulls in torch; import it on first use only
    if name == "ConstructiveSupertagger":
        from .estimator import ConstructiveSupertagger
        return ConstructiveSupertagger
    raise AttributeError(name)
