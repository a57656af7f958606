# Formula syntax: AST, parser, printer, and the derived connectives.
#
# Concrete grammar (loosest to tightest binding):
#
#   formula := or_expr (('->' | '-<') formula)?      right-associative, shared level
#   or_expr := and_expr ('|' and_expr)*
#   and_expr := prefixed ('&' prefixed)*
#   prefixed := ('!' | '~' | '[]' | '<>' | 'D' | 'Dn') prefixed | atom
#   atom := variable | '0' | '1' | '(' formula ')'
#
# Variables are [a-z][a-z0-9_]*.  '!' is the involutive (swap) negation and a
# core constructor; '~', 'D' and 'Dn' are sugar expanded at parse time, so the
# AST only ever contains the ten core node kinds below.

from __future__ import annotations

import re
from dataclasses import dataclass


class ParseError(Exception):
    """Raised on ill-formed input; carries the character offset."""

    def __init__(self, position: int, message: str):
        super().__init__(f"parse error at offset {position}: {message}")
        self.position = position
        self.message = message


@dataclass(frozen=True)
class Formula:
    pass


@dataclass(frozen=True)
class Var(Formula):
    name: str


@dataclass(frozen=True)
class Const0(Formula):
    pass


@dataclass(frozen=True)
class Const1(Formula):
    pass


@dataclass(frozen=True)
class Neg(Formula):
    arg: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Imp(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Coimp(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Box(Formula):
    arg: Formula


@dataclass(frozen=True)
class Dia(Formula):
    arg: Formula


CONST0 = Const0()
CONST1 = Const1()

_VAR_RE = re.compile(r"[a-z][a-z0-9_]*")


# ---------------------------------------------------------------------------
# Derived connectives.
#
# gneg(f)  = f -> 0                      (the "everything-or-nothing" negation)
# delta(t) = gneg(1 -< t)                (crisp test for full truth support)
# delta_neg(f) = gneg(1 -< f) & !gneg(gneg(gneg... see below))
#                                        (crisp test for the designated pair)
# leq / gt compare two formulas in the truth order, expressed inside the
# language itself via delta_neg.


def gneg(f: Formula) -> Formula:
    return Imp(f, CONST0)


def delta(t: Formula) -> Formula:
    return gneg(Coimp(CONST1, t))


def delta_neg(f: Formula) -> Formula:
    core = gneg(Coimp(CONST1, f))
    return And(core, Neg(gneg(gneg(Coimp(CONST1, f)))))


def leq(f: Formula, g: Formula) -> Formula:
    return delta_neg(Imp(f, g))


def gt(f: Formula, g: Formula) -> Formula:
    return And(delta_neg(Imp(g, f)), gneg(delta_neg(Imp(f, g))))


_DERIVED = {
    "bot": (0, lambda: CONST0),
    "top": (0, lambda: CONST1),
    "gneg": (1, gneg),
    "delta": (1, delta),
    "delta_neg": (1, delta_neg),
    "leq": (2, leq),
    "gt": (2, gt),
}


def derived(kind: str, *args: Formula) -> Formula:
    """Build a derived-connective formula by name; see the table above."""
    try:
        arity, build = _DERIVED[kind]
    except KeyError:
        raise ValueError(f"unknown derived connective {kind!r}") from None
    if len(args) != arity:
        raise ValueError(f"{kind} takes {arity} argument(s), got {len(args)}")
    return build(*args)


# ---------------------------------------------------------------------------
# Tokenizer.  Each token is (kind, text, offset); offsets are 0-based and
# survive into ParseError so callers can point at the exact spot in the input.

_PUNCT = [
    ("ARROW", "->"),
    ("COARROW", "-<"),
    ("BOX", "[]"),
    ("DIA", "<>"),
    ("AND", "&"),
    ("OR", "|"),
    ("BANG", "!"),
    ("TILDE", "~"),
    ("LPAR", "("),
    ("RPAR", ")"),
    ("ZERO", "0"),
    ("ONE", "1"),
]

_IDENT_RE = re.compile(r"[A-Za-z][A-Za-z0-9_]*")


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        for kind, lit in _PUNCT:
            if text.startswith(lit, i):
                tokens.append((kind, lit, i))
                i += len(lit)
                break
        else:
            m = _IDENT_RE.match(text, i)
            if not m:
                raise ParseError(i, f"unexpected character {ch!r}")
            word = m.group()
            if word == "D":
                tokens.append(("DELTA", word, i))
            elif word == "Dn":
                tokens.append(("DELTANEG", word, i))
            elif _VAR_RE.fullmatch(word):
                tokens.append(("VAR", word, i))
            else:
                raise ParseError(i, f"bad name {word!r} (variables are lowercase)")
            i = m.end()
    tokens.append(("EOF", "", n))
    return tokens


class _Parser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def next(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind):
        tok = self.next()
        if tok[0] != kind:
            raise ParseError(tok[2], f"expected {kind}, found {tok[1] or 'end of input'!r}")
        return tok

    def formula(self) -> Formula:
        left = self.or_expr()
        kind, _, _ = self.peek()
        if kind == "ARROW":
            self.next()
            return Imp(left, self.formula())
        if kind == "COARROW":
            self.next()
            return Coimp(left, self.formula())
        return left

    def or_expr(self) -> Formula:
        f = self.and_expr()
        while self.peek()[0] == "OR":
            self.next()
            f = Or(f, self.and_expr())
        return f

    def and_expr(self) -> Formula:
        f = self.prefixed()
        while self.peek()[0] == "AND":
            self.next()
            f = And(f, self.prefixed())
        return f

    def prefixed(self) -> Formula:
        kind, _, _ = self.peek()
        if kind == "BANG":
            self.next()
            return Neg(self.prefixed())
        if kind == "TILDE":
            self.next()
            return gneg(self.prefixed())
        if kind == "BOX":
            self.next()
            return Box(self.prefixed())
        if kind == "DIA":
            self.next()
            return Dia(self.prefixed())
        if kind == "DELTA":
            self.next()
            return delta(self.prefixed())
        if kind == "DELTANEG":
            self.next()
            return delta_neg(self.prefixed())
        return self.atom()

    def atom(self) -> Formula:
        kind, text, off = self.next()
        if kind == "VAR":
            return Var(text)
        if kind == "ZERO":
            return CONST0
        if kind == "ONE":
            return CONST1
        if kind == "LPAR":
            f = self.formula()
            self.expect("RPAR")
            return f
        raise ParseError(off, f"expected a formula, found {text or 'end of input'!r}")


def parse(text: str) -> Formula:
    parser = _Parser(_tokenize(text))
    f = parser.formula()
    kind, trailing, off = parser.peek()
    if kind != "EOF":
        raise ParseError(off, f"trailing input {trailing!r}")
    return f


# ---------------------------------------------------------------------------
# Printer.  Minimal parentheses, and parse(print_formula(f)) == f: binary
# operators reparse left-associatively (arrows right-associatively), so the
# printer parenthesizes exactly the opposite-association child.

_LEVEL_ARROW, _LEVEL_OR, _LEVEL_AND, _LEVEL_PREFIX, _LEVEL_ATOM = 1, 2, 3, 4, 5


def _level(f: Formula) -> int:
    if isinstance(f, (Imp, Coimp)):
        return _LEVEL_ARROW
    if isinstance(f, Or):
        return _LEVEL_OR
    if isinstance(f, And):
        return _LEVEL_AND
    if isinstance(f, (Neg, Box, Dia)):
        return _LEVEL_PREFIX
    return _LEVEL_ATOM


def _print(f: Formula, minimum: int) -> str:
    lvl = _level(f)
    if isinstance(f, Var):
        s = f.name
    elif isinstance(f, Const0):
        s = "0"
    elif isinstance(f, Const1):
        s = "1"
    elif isinstance(f, Neg):
        s = "!" + _print(f.arg, _LEVEL_PREFIX)
    elif isinstance(f, Box):
        s = "[]" + _print(f.arg, _LEVEL_PREFIX)
    elif isinstance(f, Dia):
        s = "<>" + _print(f.arg, _LEVEL_PREFIX)
    elif isinstance(f, And):
        s = _print(f.left, _LEVEL_AND) + " & " + _print(f.right, _LEVEL_AND + 1)
    elif isinstance(f, Or):
        s = _print(f.left, _LEVEL_OR) + " | " + _print(f.right, _LEVEL_OR + 1)
    elif isinstance(f, Imp):
        s = _print(f.left, _LEVEL_ARROW + 1) + " -> " + _print(f.right, _LEVEL_ARROW)
    elif isinstance(f, Coimp):
        s = _print(f.left, _LEVEL_ARROW + 1) + " -< " + _print(f.right, _LEVEL_ARROW)
    else:  # pragma: no cover
        raise TypeError(f"not a formula: {f!r}")
    if lvl < minimum:
        return "(" + s + ")"
    return s


def print_formula(f: Formula) -> str:
    return _print(f, _LEVEL_ARROW)


# ---------------------------------------------------------------------------
# Structural metrics and the classical embedding.


def subformulas(f: Formula) -> list[Formula]:
    """All subterms in postorder (children before parents), duplicates removed."""
    seen: dict[Formula, None] = {}

    def walk(g: Formula) -> None:
        if isinstance(g, (Neg, Box, Dia)):
            walk(g.arg)
        elif isinstance(g, (And, Or, Imp, Coimp)):
            walk(g.left)
            walk(g.right)
        if g not in seen:
            seen[g] = None

    walk(f)
    return list(seen)


def variables(f: Formula) -> list[str]:
    """Variable names occurring in f, sorted."""
    return sorted({g.name for g in subformulas(f) if isinstance(g, Var)})


def node_count(f: Formula) -> int:
    if isinstance(f, (Neg, Box, Dia)):
        return 1 + node_count(f.arg)
    if isinstance(f, (And, Or, Imp, Coimp)):
        return 1 + node_count(f.left) + node_count(f.right)
    return 1


def modal_depth(f: Formula) -> int:
    if isinstance(f, (Box, Dia)):
        return 1 + modal_depth(f.arg)
    if isinstance(f, Neg):
        return modal_depth(f.arg)
    if isinstance(f, (And, Or, Imp, Coimp)):
        return max(modal_depth(f.left), modal_depth(f.right))
    return 0


def is_neg_free(f: Formula) -> bool:
    return not any(isinstance(g, Neg) for g in subformulas(f))


def embed_classical(f: Formula) -> Formula:
    """Replace every variable p with (p -> 0) -> 0.

    Defined for classical modal syntax only: formulas with '!' or '-<' in
    them are rejected.
    """
    if isinstance(f, Var):
        return gneg(gneg(f))
    if isinstance(f, (Const0, Const1)):
        return f
    if isinstance(f, Box):
        return Box(embed_classical(f.arg))
    if isinstance(f, Dia):
        return Dia(embed_classical(f.arg))
    if isinstance(f, And):
        return And(embed_classical(f.left), embed_classical(f.right))
    if isinstance(f, Or):
        return Or(embed_classical(f.left), embed_classical(f.right))
    if isinstance(f, Imp):
        return Imp(embed_classical(f.left), embed_classical(f.right))
    raise ValueError(f"not a classical modal formula: contains {type(f).__name__}")
