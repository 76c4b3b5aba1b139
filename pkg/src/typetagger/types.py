"""Type algebra: atoms and dependency-labeled linear implications."""

from __future__ import annotations

from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field

ARROW = "→"
SEPARATOR = "#"
STAR = "*"


class PolishParseError(ValueError):
    """Base class for failures when reading a type from polish notation."""


class IncompleteTypeError(PolishParseError):
    pass


class TrailingInputError(PolishParseError):
    pass


class UnknownSymbolError(PolishParseError):
    def __init__(self, symbol: str, message: str | None = None):
        super().__init__(message or f"unknown symbol {symbol!r}")
        self.symbol = symbol


class UnknownLabelError(ValueError):
    pass


class VocabularyViolation(ValueError):
    def __init__(self, symbol: str, message: str | None = None):
        super().__init__(message or f"symbol {symbol!r} is not in the declared vocabulary")
        self.symbol = symbol


@dataclass(frozen=True)
class Atom:
    name: str
    star: bool = False

    @property
    def token(self) -> str:
        return self.name + STAR if self.star else self.name

    def __str__(self) -> str:
        return self.token


@dataclass(frozen=True)
class Arrow:
    label: str
    argument: Type
    result: Type

    def __str__(self) -> str:
        return to_infix(self)


Type = Atom | Arrow


def connective(label: str) -> str:
    return ARROW + label


@dataclass(frozen=True)
class Vocabulary:
    """Declared atomic types, dependency labels and star-decorated atoms.

    ``stars`` lists the atoms that may appear with the variadic marker,
    each such decoration being a vocabulary symbol of its own (``adj*``).
    """

    atoms: tuple[str, ...]
    labels: tuple[str, ...]
    stars: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "atoms", tuple(self.atoms))
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "stars", tuple(self.stars))
        if len(set(self.atoms)) != len(self.atoms):
            raise ValueError("duplicate atom names")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("duplicate label names")
        for name in self.atoms + self.labels:
            if not name or any(c.isspace() for c in name):
                raise ValueError(f"invalid symbol name {name!r}")
            if name == SEPARATOR or ARROW in name or STAR in name or "·" in name:
                raise ValueError(f"symbol name {name!r} collides with reserved notation")
        for name in self.stars:
            if name not in self.atoms:
                raise ValueError(f"star atom {name!r} is not a declared atom")

    @property
    def atom_tokens(self) -> list[str]:
        return list(self.atoms) + [a + STAR for a in self.stars]

    @property
    def connective_tokens(self) -> list[str]:
        return [connective(label) for label in self.labels]

    @property
    def tokens(self) -> list[str]:
        return self.atom_tokens + self.connective_tokens

    def read_token(self, token: str) -> Atom | str:
        """Return an Atom for atom tokens, the label for connective tokens."""
        if token.startswith(ARROW):
            label = token[len(ARROW):]
            if label in self.labels:
                return label
        elif token.endswith(STAR):
            if token[:-1] in self.stars:
                return Atom(token[:-1], star=True)
        elif token in self.atoms:
            return Atom(token)
        raise UnknownSymbolError(token)

    def check(self, t: Type) -> None:
        """Raise VocabularyViolation if ``t`` uses undeclared symbols."""
        for tok in serialize_polish(t):
            try:
                self.read_token(tok)
            except UnknownSymbolError:
                raise VocabularyViolation(tok) from None
        check_star_positions(t)

    def merged(self, other: Vocabulary) -> Vocabulary:
        return Vocabulary(
            tuple(dict.fromkeys(self.atoms + other.atoms)),
            tuple(dict.fromkeys(self.labels + other.labels)),
            tuple(dict.fromkeys(self.stars + other.stars)),
        )


def _read_free_token(token: str) -> Atom | str:
    if token.startswith(ARROW):
        if len(token) == len(ARROW):
            raise UnknownSymbolError(token, "connective without a label")
        return token[len(ARROW):]
    if token == SEPARATOR or not token:
        raise UnknownSymbolError(token)
    if token.endswith(STAR):
        return Atom(token[:-1], star=True)
    return Atom(token)


def serialize_polish(t: Type) -> list[str]:
    out: list[str] = []
    stack = [t]
    while stack:
        node = stack.pop()
        if isinstance(node, Atom):
            out.append(node.token)
        else:
            out.append(connective(node.label))
            stack.append(node.result)
            stack.append(node.argument)
    return out


def parse_polish(tokens: Sequence[str], vocab: Vocabulary | None = None) -> Type:
    """Read exactly one type from a prefix token sequence.

    Without a vocabulary any token not starting with the arrow is an atom.
    """
    t, end = _parse_prefix(tokens, 0, vocab)
    if end != len(tokens):
        raise TrailingInputError(f"{len(tokens) - end} token(s) after a complete type")
    return t


def _parse_prefix(tokens: Sequence[str], start: int, vocab: Vocabulary | None) -> tuple[Type, int]:
    read = vocab.read_token if vocab is not None else _read_free_token
    # frames of [label, argument-or-None]
    frames: list[list] = []
    i = start
    while True:
        if i >= len(tokens):
            raise IncompleteTypeError(f"sequence exhausted with {len(frames) + 1} operand(s) pending")
        sym = read(tokens[i])
        i += 1
        if isinstance(sym, str):
            frames.append([sym, None])
            continue
        node: Type = sym
        while frames:
            top = frames[-1]
            if top[1] is None:
                top[1] = node
                break
            frames.pop()
            node = Arrow(top[0], top[1], node)
        else:
            return node, i


def nodes(t: Type) -> int:
    return len(serialize_polish(t))


def atoms(t: Type) -> list[Atom]:
    return [a for a in _walk(t) if isinstance(a, Atom)]


def _walk(t: Type):
    stack = [t]
    while stack:
        node = stack.pop()
        yield node
        if isinstance(node, Arrow):
            stack.append(node.result)
            stack.append(node.argument)


def arity(t: Type) -> int:
    n = 0
    while isinstance(t, Arrow):
        n += 1
        t = t.result
    return n


def spine(t: Type) -> tuple[list[tuple[str, Type]], Type]:
    """Split a functor into its (label, argument) list and final head result."""
    args = []
    while isinstance(t, Arrow):
        args.append((t.label, t.argument))
        t = t.result
    return args, t


def check_star_positions(t: Type, _as_argument: bool = False) -> None:
    if isinstance(t, Atom):
        if t.star and not _as_argument:
            raise ValueError(f"star-decorated atom {t.token} outside an argument position")
        return
    check_star_positions(t.argument, True)
    check_star_positions(t.result, False)


def has_star(t: Type) -> bool:
    return any(isinstance(a, Atom) and a.star for a in _walk(t))


@dataclass(frozen=True)
class ObliquenessOrder:
    """Labels listed in consumption order, outermost argument first.

    A functor respects the order when, reading its arguments from the
    outside in, the ranks never decrease.  Equal labels may repeat.
    """

    labels: tuple[str, ...]
    _ranks: Mapping[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("obliqueness order lists a label twice")
        object.__setattr__(self, "_ranks", {lab: i for i, lab in enumerate(self.labels)})

    def rank(self, label: str) -> int:
        try:
            return self._ranks[label]
        except KeyError:
            raise UnknownLabelError(f"label {label!r} has no obliqueness rank") from None

    def reversed(self) -> ObliquenessOrder:
        return ObliquenessOrder(tuple(reversed(self.labels)))


def check_obliqueness(t: Type, order: ObliquenessOrder) -> bool:
    ok = True
    for node in _walk(t):
        if not isinstance(node, Arrow):
            continue
        # every label needs a rank even when an earlier spine already failed
        order.rank(node.label)
        if isinstance(node.result, Arrow) and order.rank(node.label) > order.rank(node.result.label):
            ok = False
    return ok


def to_infix(t: Type) -> str:
    if isinstance(t, Atom):
        return t.token
    arg = to_infix(t.argument)
    if isinstance(t.argument, Arrow):
        arg = f"({arg})"
    return f"{arg} -({t.label})-> {to_infix(t.result)}"


def parse_infix(text: str) -> Type:
    """Inverse of :func:`to_infix`; arrows associate to the right."""
    toks = _infix_tokens(text)
    t, i = _infix_expr(toks, 0)
    if i != len(toks):
        raise TrailingInputError(f"unexpected {toks[i]!r} in {text!r}")
    return t


def _infix_tokens(text: str) -> list[str]:
    out, i = [], 0
    while i < len(text):
        c = text[i]
        if c.isspace():
            i += 1
        elif text.startswith("-(", i):
            j = text.index(")->", i)
            out.append(connective(text[i + 2:j]))
            i = j + 3
        elif c in "()":
            out.append(c)
            i += 1
        else:
            j = i
            while j < len(text) and not text[j].isspace() and text[j] not in "()" and not text.startswith("-(", j):
                j += 1
            out.append(text[i:j])
            i = j
    return out


def _infix_expr(toks: list[str], i: int) -> tuple[Type, int]:
    if i >= len(toks):
        raise IncompleteTypeError("expression ended early")
    if toks[i] == "(":
        left, i = _infix_expr(toks, i + 1)
        if i >= len(toks) or toks[i] != ")":
            raise IncompleteTypeError("unbalanced parenthesis")
        i += 1
    else:
        left = _read_free_token(toks[i])
        if isinstance(left, str):
            raise UnknownSymbolError(toks[i])
        i += 1
    if i < len(toks) and toks[i].startswith(ARROW):
        label = toks[i][len(ARROW):]
        right, i = _infix_expr(toks, i + 1)
        return Arrow(label, left, right), i
    return left, i


def polish(text: str, vocab: Vocabulary | None = None) -> Type:
    """Shorthand: parse a space-separated polish string."""
    return parse_polish(text.split(), vocab)


def as_types(items: Iterable[Type | str]) -> list[Type]:
    return [polish(x) if isinstance(x, str) else x for x in items]
