"""Natural deduction for the labeled linear implication fragment.

Judgements carry a multiset of assumptions, each a lexical word or a
numbered hypothesis.  Proofs are trees over five rules: lexical axiom
``L``, identity ``id`` for hypotheses, elimination ``E``, introduction
``I`` and the variadic conjunction elimination ``E*`` (a functor
``A* -(d)-> B`` applied to two or more proofs of ``A`` at once).
"""

from __future__ import annotations

import enum
import functools
import itertools
from collections import Counter
from collections.abc import Iterable, Sequence
from dataclasses import dataclass

from .types import STAR, Arrow, Atom, Type, _walk, has_star, parse_polish, serialize_polish

DEFAULT_BUDGET = 64


class Rule(str, enum.Enum):
    LEX = "L"
    ID = "id"
    ELIM = "E"
    INTRO = "I"
    ELIM_STAR = "E*"


@dataclass(frozen=True, order=True)
class Hyp:
    index: int

    def __str__(self) -> str:
        return f"?{self.index}"


Origin = str | Hyp


@functools.lru_cache(maxsize=65536)
def _type_key(t: Type) -> str:
    return " ".join(serialize_polish(t))


def _item_key(item: tuple[Origin, Type]):
    origin, t = item
    return (isinstance(origin, Hyp), str(origin), _type_key(t))


@dataclass(frozen=True)
class Judgement:
    """``antecedent ⊢ succedent``; the antecedent is an unordered multiset."""

    antecedent: tuple[tuple[Origin, Type], ...]
    succedent: Type

    def __post_init__(self):
        object.__setattr__(self, "antecedent", tuple(sorted(self.antecedent, key=_item_key)))

    def bag(self) -> Counter:
        return Counter(self.antecedent)

    def __str__(self) -> str:
        items = ", ".join(f"{o}: {' '.join(serialize_polish(t))}" for o, t in self.antecedent)
        return f"[{items}] |- {' '.join(serialize_polish(self.succedent))}"


@dataclass(frozen=True)
class Proof:
    rule: Rule
    judgement: Judgement
    premises: tuple[Proof, ...] = ()
    discharged: int | None = None

    def size(self) -> int:
        return 1 + sum(p.size() for p in self.premises)

    def nodes(self) -> Iterable[tuple[tuple[int, ...], Proof]]:
        """Pre-order walk yielding (path, node); the root's path is ()."""
        stack = [((), self)]
        while stack:
            path, node = stack.pop()
            yield path, node
            for i in reversed(range(len(node.premises))):
                stack.append((path + (i,), node.premises[i]))

    def count(self, rule: Rule) -> int:
        return sum(1 for _, n in self.nodes() if n.rule is rule)

    def leaves(self) -> list[tuple[Origin, Type]]:
        return [n.judgement.antecedent[0] for _, n in self.nodes() if n.rule is Rule.LEX]


@dataclass(frozen=True)
class ProofReport:
    valid: bool
    path: tuple[int, ...] | None = None
    rule: Rule | None = None
    reason: str = ""

    def __bool__(self) -> bool:
        return self.valid

    def __str__(self) -> str:
        if self.valid:
            return "valid"
        where = "root" if not self.path else "/".join(map(str, self.path))
        return f"invalid at {where} ({self.rule.value}): {self.reason}"


def _check_node(node: Proof, lexicon: Counter | None) -> str | None:
    j = node.judgement
    prem = node.premises
    if node.rule is Rule.LEX:
        if prem:
            return "axiom has premises"
        if len(j.antecedent) != 1 or isinstance(j.antecedent[0][0], Hyp):
            return "lexical axiom needs exactly one word assumption"
        word, t = j.antecedent[0]
        if t != j.succedent:
            return "lexical axiom concludes a type different from its assumption"
        if lexicon is not None and lexicon[(word, t)] == 0:
            return f"{word!r} is not assigned {' '.join(serialize_polish(t))} by the lexicon"
        return None
    if node.rule is Rule.ID:
        if prem:
            return "axiom has premises"
        if len(j.antecedent) != 1 or not isinstance(j.antecedent[0][0], Hyp):
            return "identity needs exactly one hypothesis"
        if j.antecedent[0][1] != j.succedent:
            return "identity concludes a type different from its hypothesis"
        return None
    if node.rule is Rule.ELIM:
        if len(prem) != 2:
            return "elimination needs exactly two premises"
        reasons = []
        for f, a in ((prem[0], prem[1]), (prem[1], prem[0])):
            ft = f.judgement.succedent
            if not isinstance(ft, Arrow):
                reasons.append("functor premise is not an implication")
                continue
            if ft.argument != a.judgement.succedent:
                reasons.append(
                    f"argument {' '.join(serialize_polish(a.judgement.succedent))} does not match "
                    f"-({ft.label})-> argument {' '.join(serialize_polish(ft.argument))}"
                )
                continue
            if ft.result != j.succedent:
                reasons.append("conclusion is not the functor's result")
                continue
            if f.judgement.bag() + a.judgement.bag() != j.bag():
                reasons.append("assumptions are not the exact union of the premises'")
                continue
            return None
        return "; ".join(dict.fromkeys(reasons))
    if node.rule is Rule.INTRO:
        if len(prem) != 1:
            return "introduction needs exactly one premise"
        if node.discharged is None:
            return "introduction names no hypothesis"
        t = j.succedent
        if not isinstance(t, Arrow):
            return "introduction does not conclude an implication"
        if t.result != prem[0].judgement.succedent:
            return "conclusion result differs from the premise's succedent"
        item = (Hyp(node.discharged), t.argument)
        bag = prem[0].judgement.bag()
        if bag[item] != 1:
            return f"hypothesis ?{node.discharged} of the argument type is not an assumption of the premise"
        bag[item] -= 1
        if +bag != j.bag():
            return "assumptions are not the premise's minus the discharged hypothesis"
        return None
    if node.rule is Rule.ELIM_STAR:
        if len(prem) < 3:
            return "variadic elimination needs a functor and at least two arguments"
        for i, f in enumerate(prem):
            ft = f.judgement.succedent
            if not (isinstance(ft, Arrow) and isinstance(ft.argument, Atom) and ft.argument.star):
                continue
            args = prem[:i] + prem[i + 1:]
            base = Atom(ft.argument.name)
            if any(a.judgement.succedent != base for a in args):
                continue
            if ft.result != j.succedent:
                return "conclusion is not the functor's result"
            total = f.judgement.bag()
            for a in args:
                total += a.judgement.bag()
            if total != j.bag():
                return "assumptions are not the exact union of the premises'"
            return None
        return "no premise is a star functor whose arguments all match"
    return f"unknown rule {node.rule!r}"


def _postorder(proof: Proof, path: tuple[int, ...] = ()) -> Iterable[tuple[tuple[int, ...], Proof]]:
    for i, p in enumerate(proof.premises):
        yield from _postorder(p, path + (i,))
    yield path, proof


def check_proof(proof: Proof, lexicon: Iterable[tuple[str, Type]] | None = None) -> ProofReport:
    """Validate every node; with a lexicon, the proof must use it exactly."""
    lex = Counter(lexicon) if lexicon is not None else None
    # premises before conclusions, so the deepest broken step is reported
    for path, node in _postorder(proof):
        reason = _check_node(node, lex)
        if reason is not None:
            return ProofReport(False, path, node.rule, reason)
    hyps = Counter(n.judgement.antecedent[0][0] for _, n in proof.nodes() if n.rule is Rule.ID)
    discharged = Counter(n.discharged for _, n in proof.nodes() if n.rule is Rule.INTRO)
    for h, c in hyps.items():
        if c > 1:
            return ProofReport(False, (), proof.rule, f"hypothesis {h} is used by {c} identity leaves")
    for h, c in discharged.items():
        if c > 1:
            return ProofReport(False, (), proof.rule, f"hypothesis ?{h} is discharged {c} times")
    if lex is not None:
        if proof.judgement.bag() != lex:
            return ProofReport(False, (), proof.rule, "root assumptions differ from the lexicon")
        if Counter(proof.leaves()) != lex:
            return ProofReport(False, (), proof.rule, "lexical leaves differ from the lexicon")
    return ProofReport(True)


# -- proof search -----------------------------------------------------------


class DerivationError(Exception):
    pass


class NotDerivableError(DerivationError):
    pass


class BudgetExhaustedError(DerivationError):
    pass


def polarity_counts(t: Type, sign: int = 1) -> Counter:
    counts: Counter = Counter()
    stack = [(t, sign)]
    while stack:
        node, s = stack.pop()
        if isinstance(node, Atom):
            counts[node.token] += s
        else:
            stack.append((node.argument, -s))
            stack.append((node.result, s))
    return counts


def balanced(assumptions: Iterable[Type], goal: Type) -> bool:
    """Atom-count necessary condition for derivability.

    Star-free sequents must balance every atom exactly.  A negative
    occurrence of ``a*`` absorbs two or more positive ``a``.
    """
    total: Counter = Counter()
    for t in assumptions:
        total.update(polarity_counts(t))
    total.subtract(polarity_counts(goal))
    return _balance_ok(total)


def _balance_ok(total: Counter, open_atoms: frozenset[str] = frozenset()) -> bool:
    """``open_atoms`` may have any surplus of positive occurrences."""
    stars = {tok[:-1]: -v for tok, v in total.items() if tok.endswith(STAR) and v}
    if any(v < 0 for v in stars.values()):
        # a positive star occurrence: no cheap bound
        return True
    for tok, v in total.items():
        if tok.endswith(STAR):
            continue
        need = stars.get(tok, 0)
        if tok in open_atoms:
            if v < 2 * need:
                return False
        elif (need == 0 and v != 0) or (need and v < 2 * need):
            return False
    for name, need in stars.items():
        if need and total.get(name, 0) < 2 * need:
            return False
    return True


class _StepLimit(Exception):
    pass


class _Search:
    """Goal-directed search with lazy resource splitting.

    Arguments are proven one after another against the resources still
    available; each attempt yields the proof and the leftover resources.
    Necessary atom-balance conditions prune at every entry, and stacked
    modifiers of one goal are tried in a single canonical order.
    """

    def __init__(self, max_steps: int):
        self.items: list[tuple[Origin, Type]] = []
        self.spines: list[tuple[list[Type], Type]] = []
        self.polarity: list[Counter] = []
        self.next_hyp = 1
        self.truncated = False
        self.steps = 0
        self.max_steps = max_steps

    def add(self, origin: Origin, t: Type) -> int:
        self.items.append((origin, t))
        self.spines.append(_spine(t))
        self.polarity.append(polarity_counts(t))
        return len(self.items) - 1

    def antecedent(self, res: Iterable[int]) -> tuple[tuple[Origin, Type], ...]:
        return tuple(self.items[i] for i in res)

    def entry_ok(self, avail: frozenset[int], goal: Type, need: Counter, open_atoms: frozenset[str]) -> bool:
        total: Counter = Counter()
        for i in avail:
            total.update(self.polarity[i])
        total.subtract(polarity_counts(goal))
        total.subtract(need)
        return _balance_ok(total, open_atoms)

    def prove(self, avail: frozenset[int], goal: Type, budget: int, need: Counter,
              min_mod: int = -1, min_head: int = -1, open_atoms: frozenset[str] = frozenset()):
        """Yield (proof, leftover, head index), one proof per distinct leftover and head.

        Whatever follows a subproof depends only on what it leaves over, so
        alternative proofs with the same leftover are redundant.
        """
        done = set()
        for proof, left, head in self._prove(avail, goal, budget, need, min_mod, min_head, open_atoms):
            if (left, head) not in done:
                done.add((left, head))
                yield proof, left, head

    def _prove(self, avail: frozenset[int], goal: Type, budget: int, need: Counter,
               min_mod: int, min_head: int, open_atoms: frozenset[str]):
        """Yield (proof, leftover, head index) for every way to prove ``goal``.

        ``need`` is the polarity balance the leftover must still account
        for; ``open_atoms`` may be left over in any positive surplus.
        """
        self.steps += 1
        if self.steps > self.max_steps:
            raise _StepLimit
        if budget < 1:
            self.truncated = True
            return
        if not avail or not self.entry_ok(avail, goal, need, open_atoms):
            return
        # heads whose (partially applied) result is the goal itself
        seen = set()
        for r in sorted(avail):
            if r <= min_head:
                continue
            k = self.reach(r, goal)
            if k is None:
                continue
            args = self.spines[r][0][:k]
            origin, t = self.items[r]
            # lexical assumptions of equal type are interchangeable
            key = (origin, t) if isinstance(origin, Hyp) else t
            if key in seen:
                continue
            modifier = bool(args) and args[-1] == goal
            if modifier and r <= min_mod:
                continue
            seen.add(key)
            leaf = Proof(Rule.ID if isinstance(origin, Hyp) else Rule.LEX, Judgement(((origin, t),), t))
            for proof, left in self.apply(leaf, args, avail - {r}, budget, need, r if modifier else -1, open_atoms):
                yield proof, left, r
        if isinstance(goal, Arrow):
            h = Hyp(self.next_hyp)
            self.next_hyp += 1
            hid = self.add(h, goal.argument)
            for sub, left, head in self.prove(avail | {hid}, goal.result, budget - 1, need, open_atoms=open_atoms):
                if hid in left or _eta_redex(sub, h):
                    continue
                j = Judgement(self.antecedent(sorted(avail - left)), goal)
                yield Proof(Rule.INTRO, j, (sub,), h.index), left, head

    def reach(self, r: int, goal: Type) -> int | None:
        """Number of arguments item ``r`` takes before its result is ``goal``."""
        args, head = self.spines[r]
        if not isinstance(goal, Arrow):
            return len(args) if head == goal else None
        t, k = self.items[r][1], 0
        while isinstance(t, Arrow):
            if t == goal:
                return k
            t, k = t.result, k + 1
        return None

    def apply(self, functor: Proof, args: list[Type], avail: frozenset[int], budget: int,
              need: Counter, mod_index: int, open_atoms: frozenset[str]):
        if not args:
            if functor.size() > budget:
                self.truncated = True
                return
            yield functor, avail
            return
        arg, rest = args[0], args[1:]
        rest_need = Counter(need)
        for t in rest:
            rest_need.update(polarity_counts(t))
        sub_budget = budget - functor.size() - len(args)
        ft = functor.judgement.succedent
        if isinstance(arg, Atom) and arg.star:
            for parts, left in self.conjuncts(avail, Atom(arg.name), sub_budget, rest_need, 0, -1, open_atoms):
                ante = functor.judgement.antecedent + sum((p.judgement.antecedent for p in parts), ())
                step = Proof(Rule.ELIM_STAR, Judgement(ante, ft.result), (functor,) + tuple(parts))
                yield from self.apply(step, rest, left, budget, need, mod_index, open_atoms)
            return
        min_mod = mod_index if not rest else -1
        for sub, left, _ in self.prove(avail, arg, sub_budget, rest_need, min_mod=min_mod, open_atoms=open_atoms):
            step = Proof(Rule.ELIM, Judgement(functor.judgement.antecedent + sub.judgement.antecedent, ft.result),
                         (functor, sub))
            yield from self.apply(step, rest, left, budget, need, mod_index, open_atoms)

    def conjuncts(self, avail: frozenset[int], atom: Atom, budget: int, need: Counter, k: int,
                  min_head: int, open_atoms: frozenset[str]):
        """Yield (proofs, leftover) for two or more proofs of ``atom``."""
        more_need = Counter(need)
        if k == 0:
            more_need[atom.token] += 1
        inner_open = open_atoms | {atom.token}
        for sub, left, head in self.prove(avail, atom, budget, more_need, min_head=min_head, open_atoms=inner_open):
            if k + 1 >= 2:
                yield [sub], left
            for more, left2 in self.conjuncts(left, atom, budget - sub.size(), need, k + 1, head, open_atoms):
                yield [sub] + more, left2


def _eta_redex(body: Proof, h: Hyp) -> bool:
    """True when ``body`` applies a proof to ``h`` alone; the head route finds its η-short twin."""
    if body.rule is not Rule.ELIM:
        return False
    arg = body.premises[1]
    return arg.rule is Rule.ID and arg.judgement.antecedent[0][0] == h


def _spine(t: Type) -> tuple[list[Type], Type]:
    args = []
    while isinstance(t, Arrow):
        args.append(t.argument)
        t = t.result
    return args, t


def derive(lexicon: Sequence[tuple[str, Type]], goal: Type, budget: int = DEFAULT_BUDGET,
           max_steps: int = 1_000_000) -> Proof:
    """Search for a proof of ``lexicon ⊢ goal`` with at most ``budget`` nodes.

    Raises NotDerivableError when the whole search space was explored and
    BudgetExhaustedError when some branch was cut by the node budget or
    the search took more than ``max_steps`` expansions.
    """
    if budget < 1:
        raise ValueError("budget must be at least 1")
    lexicon = list(lexicon)
    if not lexicon:
        raise NotDerivableError("empty lexicon")
    if not balanced([t for _, t in lexicon], goal):
        raise NotDerivableError("atom occurrences are unbalanced")
    search = _Search(max_steps)
    for word, t in lexicon:
        search.add(word, t)
    everything = frozenset(range(len(lexicon)))
    try:
        for proof, left, _ in search.prove(everything, goal, budget, Counter()):
            if not left:
                return proof
    except _StepLimit:
        raise BudgetExhaustedError(f"search exceeded {max_steps} steps") from None
    if search.truncated:
        raise BudgetExhaustedError(f"no proof within {budget} nodes")
    raise NotDerivableError("search space exhausted without a proof")


def derivable(lexicon: Sequence[tuple[str, Type]], goal: Type, budget: int = DEFAULT_BUDGET) -> bool:
    try:
        derive(lexicon, goal, budget)
    except DerivationError:
        return False
    return True


# -- text format ------------------------------------------------------------
#
#   (E [we: pron, geven: →obj np →su pron s_main] |- →su pron s_main
#     (L [geven: →obj np →su pron s_main] |- →obj np →su pron s_main)
#     (L [we: pron] |- pron))
#
# Hypotheses are written ?1, ?2 ...; introduction nodes are tagged I:<n>.


class ProofSyntaxError(ValueError):
    pass


def format_proof(proof: Proof, indent: int = 0) -> str:
    tag = proof.rule.value if proof.rule is not Rule.INTRO else f"I:{proof.discharged}"
    pad = "  " * indent
    head = f"{pad}({tag} {proof.judgement}"
    if not proof.premises:
        return head + ")"
    body = "\n".join(format_proof(p, indent + 1) for p in proof.premises)
    return f"{head}\n{body})"


def parse_proof(text: str) -> Proof:
    lines = [ln for ln in text.splitlines() if not ln.lstrip().startswith(";")]
    src = "\n".join(lines)
    node, i = _parse_node(src, _skip(src, 0))
    i = _skip(src, i)
    if i != len(src):
        raise ProofSyntaxError(f"unexpected trailing text at offset {i}")
    return node


def _skip(src: str, i: int) -> int:
    while i < len(src) and src[i].isspace():
        i += 1
    return i


def _parse_node(src: str, i: int) -> tuple[Proof, int]:
    if i >= len(src) or src[i] != "(":
        raise ProofSyntaxError(f"expected '(' at offset {i}")
    j = i + 1
    while j < len(src) and src[j] not in "()":
        j += 1
    head = src[i + 1:j].strip()
    tag, _, rest = head.partition(" ")
    discharged = None
    if tag.startswith("I:"):
        discharged = int(tag[2:])
        tag = "I"
    try:
        rule = Rule(tag)
    except ValueError:
        raise ProofSyntaxError(f"unknown rule tag {tag!r} at offset {i}") from None
    judgement = parse_judgement(rest)
    premises = []
    i = _skip(src, j)
    while i < len(src) and src[i] == "(":
        child, i = _parse_node(src, i)
        premises.append(child)
        i = _skip(src, i)
    if i >= len(src) or src[i] != ")":
        raise ProofSyntaxError(f"expected ')' at offset {i}")
    return Proof(rule, judgement, tuple(premises), discharged), i + 1


def parse_judgement(text: str) -> Judgement:
    text = text.strip().replace("⊢", "|-")
    if not text.startswith("[") or "]" not in text:
        raise ProofSyntaxError(f"malformed judgement {text!r}")
    inner, _, rest = text[1:].partition("]")
    rest = rest.strip()
    if not rest.startswith("|-"):
        raise ProofSyntaxError(f"judgement lacks '|-': {text!r}")
    items = []
    for chunk in filter(None, (c.strip() for c in inner.split(","))):
        origin, sep, type_text = chunk.partition(":")
        if not sep:
            raise ProofSyntaxError(f"assumption without type: {chunk!r}")
        origin = origin.strip()
        o: Origin = Hyp(int(origin[1:])) if origin.startswith("?") else origin
        items.append((o, parse_polish(type_text.split())))
    return Judgement(tuple(items), parse_polish(rest[2:].split()))


def lexicon_of(proof: Proof) -> list[tuple[str, Type]]:
    return [item for item in proof.judgement.antecedent if not isinstance(item[0], Hyp)]


def atoms_of(t: Type) -> list[str]:
    return [n.token for n in _walk(t) if isinstance(n, Atom)]
