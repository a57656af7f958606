"""Exact arithmetic on the unit interval and the paired two-sided values.

Scalar layer: ``meet``/``join``/``imp``/``coimp`` over any exactly comparable
numeric type (int, Fraction).  ``imp`` is the Goedel residuum (1 if a <= b,
else b) and ``coimp`` its order-dual (0 if a <= b, else a).  Floats are
deliberately not used anywhere in this package: the semantics is purely
order-driven and ties must be decided exactly.

Pair layer: a ``Pair`` carries two independent degrees -- support of truth
(``pos``) and support of falsity (``neg``).  Connectives act componentwise,
with the second component computed through the dual operation, which is what
makes the negation below an involution rather than a complement.
"""

from __future__ import annotations

from fractions import Fraction
from typing import NamedTuple, Union

Value = Union[int, Fraction]


class Pair(NamedTuple):
    """A two-sided truth value: (support of truth, support of falsity)."""

    pos: Value
    neg: Value


PAIR_TRUE = Pair(Fraction(1), Fraction(0))
PAIR_FALSE = Pair(Fraction(0), Fraction(1))


def meet(a: Value, b: Value) -> Value:
    return min(a, b)


def join(a: Value, b: Value) -> Value:
    return max(a, b)


def imp(a: Value, b: Value) -> Value:
    """Goedel implication: 1 if a <= b, else b."""
    return 1 if a <= b else b


def coimp(a: Value, b: Value) -> Value:
    """Dual implication, the "unforgiven excess" of a over b: 0 if a <= b, else a."""
    return 0 if a <= b else a


def dual(a: Value) -> Value:
    return 1 - a


# The four binary operations, selectable by tag.  Kept as a plain dict so the
# tag set doubles as documentation of what exists.
_GODEL_OPS = {
    "meet": meet,
    "join": join,
    "imp": imp,
    "coimp": coimp,
}


def godel_apply(op: str, a: Value, b: Value) -> Value:
    """Apply one of the four scalar operations by tag.

    For ``coimp`` the first argument is the left operand of the connective:
    godel_apply("coimp", b, a) computes b - a in the co-residual sense,
    i.e. 0 when b <= a and b otherwise.
    """
    try:
        fn = _GODEL_OPS[op]
    except KeyError:
        raise ValueError(f"unknown operation tag {op!r}") from None
    return fn(a, b)


def pair_not(v: Pair) -> Pair:
    """Involutive negation: swap the two supports."""
    return Pair(v.neg, v.pos)


def pair_and(u: Pair, v: Pair) -> Pair:
    return Pair(meet(u.pos, v.pos), join(u.neg, v.neg))


def pair_or(u: Pair, v: Pair) -> Pair:
    return Pair(join(u.pos, v.pos), meet(u.neg, v.neg))


def pair_imp(u: Pair, v: Pair) -> Pair:
    # Truth support is the residuum; falsity support is the excess of the
    # consequent's falsity over the antecedent's.
    return Pair(imp(u.pos, v.pos), coimp(v.neg, u.neg))


def pair_coimp(u: Pair, v: Pair) -> Pair:
    return Pair(coimp(u.pos, v.pos), imp(v.neg, u.neg))


_PAIR_OPS = {
    "neg": pair_not,
    "and": pair_and,
    "or": pair_or,
    "imp": pair_imp,
    "coimp": pair_coimp,
}


def pair_apply(connective: str, *args: Pair) -> Pair:
    """Apply a connective ('neg', 'and', 'or', 'imp', 'coimp') to pair values."""
    try:
        fn = _PAIR_OPS[connective]
    except KeyError:
        raise ValueError(f"unknown connective {connective!r}") from None
    want = 1 if connective == "neg" else 2
    if len(args) != want:
        raise ValueError(f"{connective} takes {want} argument(s), got {len(args)}")
    return fn(*args)


def pair_dual(v: Pair) -> Pair:
    """The mirror (1 - neg, 1 - pos); swaps the roles of the two supports."""
    return Pair(1 - v.neg, 1 - v.pos)


def truth_order_leq(a: Pair, b: Pair) -> bool:
    """Partial truth order: more true and less false.

    Incomparable pairs answer False in both directions.
    """
    return a.pos <= b.pos and a.neg >= b.neg
