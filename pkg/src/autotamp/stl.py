"""STL formulas: syntax tree, pre-order / in-order text formats, validation, NNF.

The pre-order text format is what the language model is asked to produce::

    and finally [0, 10] enter(room_purple) finally [0, 10] enter(room_pink)

Every operator has a fixed arity, so a token stream has at most one parse and
no parentheses are needed.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import reduce
from typing import Iterator, Union

from .diagnostics import Code, Diagnostic, DiagnosticError, error

INF = math.inf
ENTER = "enter"
NOT_ENTER = "not_enter"


def normalize_name(name: str) -> str:
    """Region identifiers are case-insensitive; runs of whitespace become '_'."""
    return re.sub(r"\s+", "_", name.strip()).lower()


@dataclass(frozen=True)
class TimeInterval:
    lower: float = 0.0
    upper: float = INF

    @property
    def bounded(self) -> bool:
        return math.isfinite(self.upper)

    def __str__(self) -> str:
        return f"[{format_number(self.lower)}, {format_number(self.upper)}]"


ALWAYS = TimeInterval(0.0, INF)


class Formula:
    """Base class of the STL syntax tree; nodes are immutable and hashable."""

    def children(self) -> tuple["Formula", ...]:
        return ()

    def __str__(self) -> str:
        return serialize_preorder(self)


@dataclass(frozen=True)
class Predicate(Formula):
    action: str
    region: str

    def __post_init__(self):
        if self.action not in (ENTER, NOT_ENTER):
            raise ValueError(f"unknown action primitive {self.action!r}")
        object.__setattr__(self, "region", normalize_name(self.region))


@dataclass(frozen=True)
class Not(Formula):
    child: Formula

    def children(self):
        return (self.child,)


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula

    def children(self):
        return (self.left, self.right)


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula

    def children(self):
        return (self.left, self.right)


@dataclass(frozen=True)
class Imply(Formula):
    left: Formula
    right: Formula

    def children(self):
        return (self.left, self.right)


@dataclass(frozen=True)
class Equiv(Formula):
    left: Formula
    right: Formula

    def children(self):
        return (self.left, self.right)


@dataclass(frozen=True)
class Finally(Formula):
    interval: TimeInterval
    child: Formula

    def children(self):
        return (self.child,)


@dataclass(frozen=True)
class Globally(Formula):
    interval: TimeInterval
    child: Formula

    def children(self):
        return (self.child,)


@dataclass(frozen=True)
class Until(Formula):
    interval: TimeInterval
    left: Formula
    right: Formula

    def children(self):
        return (self.left, self.right)


StlFormula = Union[Predicate, Not, And, Or, Imply, Equiv, Finally, Globally, Until]


# -- construction helpers -----------------------------------------------------

def enter(region: str) -> Predicate:
    return Predicate(ENTER, region)


def not_enter(region: str) -> Predicate:
    return Predicate(NOT_ENTER, region)


def interval(lower: float = 0.0, upper: float = INF) -> TimeInterval:
    return TimeInterval(float(lower), float(upper))


def eventually(child: Formula, lower: float = 0.0, upper: float = INF) -> Finally:
    return Finally(interval(lower, upper), child)


def always(child: Formula, lower: float = 0.0, upper: float = INF) -> Globally:
    return Globally(interval(lower, upper), child)


def conj(*formulas: Formula) -> Formula:
    """Left-nested And chain; used to expand indexed conjunctions."""
    if not formulas:
        raise ValueError("conj needs at least one formula")
    return reduce(And, formulas)


def disj(*formulas: Formula) -> Formula:
    if not formulas:
        raise ValueError("disj needs at least one formula")
    return reduce(Or, formulas)


def walk(f: Formula) -> Iterator[Formula]:
    stack = [f]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(node.children()))


def predicates(f: Formula) -> list[Predicate]:
    return [n for n in walk(f) if isinstance(n, Predicate)]


def depth(f: Formula) -> int:
    kids = f.children()
    return 1 + (max(depth(k) for k in kids) if kids else 0)


# -- tokens -------------------------------------------------------------------

_NOT = {"not", "negation", "neg", "!", "~", "¬"}
_AND = {"and", "&", "&&", "∧"}
_OR = {"or", "|", "||", "∨"}
_IMPLY = {"imply", "implies", "->", "=>", "⇒"}
_EQUIV = {"equal", "equiv", "iff", "<->", "<=>", "⇔"}
_FINALLY = {"finally", "eventually", "f"}
_GLOBALLY = {"globally", "always", "g"}
_UNTIL = {"until", "u"}
_INF_WORDS = {"inf", "infinite", "infinity", "+inf", "∞"}

_TOKEN_RE = re.compile(
    r"""\s*(?:
        (?P<interval>\[[^\[\]]*\])
      | (?P<pred>(?:not_enter|enter)\s*\([^()]*\))
      | (?P<lparen>\()
      | (?P<rparen>\))
      | (?P<word>[^\s()\[\]]+)
      | (?P<stray>[\[\]])
    )""",
    re.VERBOSE | re.IGNORECASE,
)
_PRED_RE = re.compile(r"(not_enter|enter)\s*\(\s*([^()]*?)\s*\)", re.IGNORECASE)


@dataclass(frozen=True)
class Token:
    kind: str  # op | pred | interval | lparen | rparen | unknown
    text: str
    index: int
    value: object = None


def _keyword(word: str) -> str | None:
    w = word.lower()
    for name, spellings in (
        ("not", _NOT), ("and", _AND), ("or", _OR), ("imply", _IMPLY),
        ("equal", _EQUIV), ("finally", _FINALLY), ("globally", _GLOBALLY),
        ("until", _UNTIL),
    ):
        if w in spellings:
            return name
    return None


def _parse_number(text: str, allow_inf: bool) -> float | None:
    t = text.strip().lower()
    if allow_inf and t in _INF_WORDS:
        return INF
    try:
        value = float(t)
    except ValueError:
        return None
    if math.isnan(value):
        return None
    return value


def tokenize(text: str) -> tuple[list[Token], list[Diagnostic]]:
    tokens: list[Token] = []
    diags: list[Diagnostic] = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            break
        pos = m.end()
        idx = len(tokens)
        kind = m.lastgroup
        raw = m.group(kind)
        if kind == "interval":
            body = raw[1:-1].split(",")
            lo = _parse_number(body[0], False) if len(body) == 2 else None
            hi = _parse_number(body[1], True) if len(body) == 2 else None
            if lo is None or hi is None:
                diags.append(error(Code.MALFORMED_INTERVAL,
                                   f"cannot read interval '{raw}'; expected '[a, b]' with numbers "
                                   f"(b may be 'infinite')", idx))
                tokens.append(Token("interval", raw, idx, None))
            else:
                tokens.append(Token("interval", raw, idx, TimeInterval(lo, hi)))
        elif kind == "pred":
            pm = _PRED_RE.fullmatch(raw.strip())
            name = pm.group(2) if pm else ""
            if not name or not re.fullmatch(r"[\w\s\-.]+", name):
                diags.append(error(Code.UNKNOWN_TOKEN,
                                   f"predicate '{raw}' has no valid region name", idx))
                tokens.append(Token("unknown", raw, idx))
            else:
                tokens.append(Token("pred", raw, idx, Predicate(pm.group(1).lower(), name)))
        elif kind in ("lparen", "rparen"):
            tokens.append(Token(kind, raw, idx))
        elif kind == "word":
            kw = _keyword(raw)
            if kw is None:
                diags.append(error(Code.UNKNOWN_TOKEN,
                                   f"unknown token '{raw}'; expected an operator (and, or, not, imply, "
                                   f"equal, finally, globally, until) or enter(region)/not_enter(region)",
                                   idx))
                tokens.append(Token("unknown", raw, idx))
            else:
                tokens.append(Token("op", raw, idx, kw))
        else:
            diags.append(error(Code.UNBALANCED_STRUCTURE, f"stray bracket '{raw}'", idx))
            tokens.append(Token("unknown", raw, idx))
    return tokens, diags


_ARITY = {"not": 1, "finally": 1, "globally": 1, "and": 2, "or": 2, "imply": 2, "equal": 2, "until": 2}
_TEMPORAL = {"finally", "globally", "until"}
_BINARY = {"and": And, "or": Or, "imply": Imply, "equal": Equiv}


def _build(op: str, iv: TimeInterval | None, args: list[Formula]) -> Formula:
    if op == "not":
        return Not(args[0])
    if op == "finally":
        return Finally(iv or ALWAYS, args[0])
    if op == "globally":
        return Globally(iv or ALWAYS, args[0])
    if op == "until":
        return Until(iv or ALWAYS, args[0], args[1])
    return _BINARY[op](args[0], args[1])


# -- pre-order ----------------------------------------------------------------

def parse_preorder(text: str) -> Formula:
    """Parse root-first STL text. Raises DiagnosticError on failure.

    Parentheses carry no information in this format and are ignored. A temporal
    operator without an interval gets [0, infinite].
    """
    tokens, diags = tokenize(text)
    if diags:
        raise DiagnosticError(diags)
    tokens = [t for t in tokens if t.kind not in ("lparen", "rparen")]
    if not tokens:
        raise DiagnosticError([error(Code.ARITY_MISMATCH, "empty STL text: expected a formula", 0)])
    pos = 0

    def node(parent: Token | None) -> Formula:
        nonlocal pos
        if pos >= len(tokens):
            assert parent is not None
            raise DiagnosticError([error(
                Code.ARITY_MISMATCH,
                f"operator '{parent.text}' at token {parent.index} expects "
                f"{_ARITY[parent.value]} operand(s) but the input ended",
                parent.index)])
        tok = tokens[pos]
        pos += 1
        if tok.kind == "pred":
            return tok.value
        if tok.kind == "interval":
            raise DiagnosticError([error(
                Code.MALFORMED_INTERVAL,
                f"interval '{tok.text}' at token {tok.index} does not follow finally/globally/until",
                tok.index)])
        op = tok.value
        iv = None
        if op in _TEMPORAL and pos < len(tokens) and tokens[pos].kind == "interval":
            iv = tokens[pos].value
            pos += 1
        args = [node(tok) for _ in range(_ARITY[op])]
        return _build(op, iv, args)

    f = node(None)
    if pos < len(tokens):
        rest = " ".join(t.text for t in tokens[pos:])
        raise DiagnosticError([error(
            Code.UNBALANCED_STRUCTURE,
            f"formula is complete at token {tokens[pos].index} but {len(tokens) - pos} token(s) "
            f"remain: '{rest}'",
            tokens[pos].index)])
    return f


def format_number(x: float) -> str:
    if math.isinf(x):
        return "infinite" if x > 0 else "-infinite"
    if float(x).is_integer():
        return str(int(x))
    return repr(float(x))


def _iv(i: TimeInterval) -> str:
    return f"[{format_number(i.lower)}, {format_number(i.upper)}]"


def _pred(p: Predicate) -> str:
    return f"{p.action}({p.region})"


def serialize_preorder(f: Formula) -> str:
    out: list[str] = []

    def emit(n: Formula):
        if isinstance(n, Predicate):
            out.append(_pred(n))
        elif isinstance(n, Not):
            out.append("not")
            emit(n.child)
        elif isinstance(n, (Finally, Globally)):
            out.append("finally" if isinstance(n, Finally) else "globally")
            out.append(_iv(n.interval))
            emit(n.child)
        elif isinstance(n, Until):
            out.extend(["until", _iv(n.interval)])
            emit(n.left)
            emit(n.right)
        else:
            out.append({And: "and", Or: "or", Imply: "imply", Equiv: "equal"}[type(n)])
            emit(n.left)
            emit(n.right)

    emit(f)
    return " ".join(out)


# -- in-order -----------------------------------------------------------------

def serialize_inorder(f: Formula) -> str:
    if isinstance(f, Predicate):
        return _pred(f)
    if isinstance(f, Not):
        return f"not {serialize_inorder(f.child)}"
    if isinstance(f, Finally):
        return f"finally {_iv(f.interval)} {serialize_inorder(f.child)}"
    if isinstance(f, Globally):
        return f"globally {_iv(f.interval)} {serialize_inorder(f.child)}"
    if isinstance(f, Until):
        return f"({serialize_inorder(f.left)} until {_iv(f.interval)} {serialize_inorder(f.right)})"
    word = {And: "and", Or: "or", Imply: "imply", Equiv: "equal"}[type(f)]
    return f"({serialize_inorder(f.left)} {word} {serialize_inorder(f.right)})"


# binding strength, loosest first; imply is right-associative
_INFIX_LEVELS = [("equal",), ("imply",), ("or",), ("and",), ("until",)]


def parse_inorder(text: str) -> Formula:
    """Parse infix STL with parentheses. Raises DiagnosticError on failure.

    Prefix operators (not, finally, globally) bind tighter than any infix one,
    so ``not enter(door) until enter(key)`` is ``(not door) until key``.
    """
    tokens, diags = tokenize(text)
    if diags:
        raise DiagnosticError(diags)
    if not tokens:
        raise DiagnosticError([error(Code.ARITY_MISMATCH, "empty STL text: expected a formula", 0)])
    pos = 0

    def peek() -> Token | None:
        return tokens[pos] if pos < len(tokens) else None

    def fail(code: Code, msg: str, idx: int):
        raise DiagnosticError([error(code, msg, idx)])

    def level(k: int) -> Formula:
        nonlocal pos
        if k == len(_INFIX_LEVELS):
            return unary()
        ops = _INFIX_LEVELS[k]
        left = level(k + 1)
        while True:
            tok = peek()
            if tok is None or tok.kind != "op" or tok.value not in ops:
                return left
            pos += 1
            iv = None
            if tok.value == "until" and peek() is not None and peek().kind == "interval":
                iv = peek().value
                pos += 1
            if peek() is None:
                fail(Code.ARITY_MISMATCH,
                     f"operator '{tok.text}' at token {tok.index} is missing its right operand", tok.index)
            if tok.value == "imply":
                right = level(k)  # right-associative
                return _build("imply", None, [left, right])
            right = level(k + 1)
            left = _build(tok.value, iv, [left, right])

    def unary() -> Formula:
        nonlocal pos
        tok = peek()
        if tok is None:
            last = tokens[-1]
            fail(Code.ARITY_MISMATCH, f"input ended after '{last.text}' where an operand was expected",
                 last.index)
        pos += 1
        if tok.kind == "pred":
            return tok.value
        if tok.kind == "lparen":
            inner = level(0)
            close = peek()
            if close is None or close.kind != "rparen":
                fail(Code.UNBALANCED_STRUCTURE,
                     f"'(' at token {tok.index} is never closed", tok.index)
            pos += 1
            return inner
        if tok.kind == "rparen":
            fail(Code.UNBALANCED_STRUCTURE, f"unexpected ')' at token {tok.index}", tok.index)
        if tok.kind == "interval":
            fail(Code.MALFORMED_INTERVAL,
                 f"interval '{tok.text}' at token {tok.index} does not follow finally/globally/until",
                 tok.index)
        op = tok.value
        if op not in ("not", "finally", "globally"):
            fail(Code.ARITY_MISMATCH,
                 f"operator '{tok.text}' at token {tok.index} is missing its left operand", tok.index)
        iv = None
        if op != "not" and peek() is not None and peek().kind == "interval":
            iv = peek().value
            pos += 1
        if peek() is None:
            fail(Code.ARITY_MISMATCH, f"operator '{tok.text}' at token {tok.index} has no operand",
                 tok.index)
        return _build(op, iv, [unary()])

    f = level(0)
    if pos < len(tokens):
        tok = tokens[pos]
        code = Code.UNBALANCED_STRUCTURE
        fail(code, f"unexpected '{tok.text}' at token {tok.index} after a complete formula", tok.index)
    return f


# -- validation ---------------------------------------------------------------

def _check_interval(iv: TimeInterval, where: str) -> list[Diagnostic]:
    problems = []
    if not math.isfinite(iv.lower):
        problems.append("lower bound must be finite")
    elif iv.lower < 0:
        problems.append("lower bound must be >= 0")
    if iv.lower > iv.upper:
        problems.append("lower bound exceeds upper bound")
    if not problems:
        return []
    return [error(Code.MALFORMED_INTERVAL, f"interval {_iv(iv)} on '{where}': {'; '.join(problems)}")]


def validate(f: Formula, env) -> list[Diagnostic]:
    """Check region names against ``env`` and interval sanity. Empty list means valid."""
    out: list[Diagnostic] = []
    seen: set[str] = set()
    for node in walk(f):
        if isinstance(node, Predicate):
            if node.region not in seen and not env.has_region(node.region):
                seen.add(node.region)
                known = ", ".join(sorted(env.region_names()))
                out.append(error(Code.UNKNOWN_REGION,
                                 f"region '{node.region}' does not exist in the environment "
                                 f"(known regions: {known})"))
        elif isinstance(node, (Finally, Globally, Until)):
            word = {Finally: "finally", Globally: "globally", Until: "until"}[type(node)]
            out.extend(_check_interval(node.interval, word))
    return out


# -- negation normal form -----------------------------------------------------

def to_nnf(f: Formula) -> Formula:
    """Rewrite into negation normal form using only And, Or, F, G, U and predicates.

    Every rewrite is a lattice identity of the min/max robustness semantics, so
    robustness is preserved exactly (for interval bounds on the monitor grid).
    """
    return _nnf(f, False)


def _flip(p: Predicate) -> Predicate:
    return Predicate(NOT_ENTER if p.action == ENTER else ENTER, p.region)


def _nnf(f: Formula, neg: bool) -> Formula:
    if isinstance(f, Predicate):
        return _flip(f) if neg else f
    if isinstance(f, Not):
        return _nnf(f.child, not neg)
    if isinstance(f, And):
        a, b = _nnf(f.left, neg), _nnf(f.right, neg)
        return Or(a, b) if neg else And(a, b)
    if isinstance(f, Or):
        a, b = _nnf(f.left, neg), _nnf(f.right, neg)
        return And(a, b) if neg else Or(a, b)
    if isinstance(f, Imply):
        return _nnf(Or(Not(f.left), f.right), neg)
    if isinstance(f, Equiv):
        return _nnf(And(Imply(f.left, f.right), Imply(f.right, f.left)), neg)
    if isinstance(f, Finally):
        c = _nnf(f.child, neg)
        return Globally(f.interval, c) if neg else Finally(f.interval, c)
    if isinstance(f, Globally):
        c = _nnf(f.child, neg)
        return Finally(f.interval, c) if neg else Globally(f.interval, c)
    if isinstance(f, Until):
        if not neg:
            return Until(f.interval, _nnf(f.left, False), _nnf(f.right, False))
        return _release(f.interval, _nnf(f.left, True), _nnf(f.right, True))
    raise TypeError(f"not an STL formula: {f!r}")


def _release(iv: TimeInterval, nl: Formula, nr: Formula) -> Formula:
    """not(l U[a,b] r) with nl = not l, nr = not r, both already in NNF.

    Either nl happens in [t, t+a] (releasing the whole window), or nr holds on
    the window up to a point where nl happens, or nr holds on the entire window.
    """
    a, b = iv.lower, iv.upper
    rest = b - a if math.isfinite(b) else INF
    inner = Until(TimeInterval(0.0, rest), Or(nr, nl), nl)
    hold_then_release = inner if a == 0 else Finally(TimeInterval(a, a), inner)
    parts = [hold_then_release, Globally(iv, nr)]
    if a > 0:
        parts.insert(0, Finally(TimeInterval(0.0, a), nl))
    return disj(*parts)
