"""Finite Kripke models and direct evaluation.

A model is a non-empty finite set of named worlds with either a crisp
accessibility relation (a set of ordered pairs) or a fuzzy one (a map from
ordered pairs to rationals in [0, 1]), plus a valuation assigning each
(world, variable) a pair of rationals -- support of truth and support of
falsity.  Unmentioned (world, variable) pairs default to (0, 0).

Two evaluators live here.  ``eval_kg2`` computes both supports on crisp
models, with the paired connective actions from :mod:`paragodel.algebra` and
box/diamond as min/max over successors (1/0 resp. 0/1 at dead ends, applied
componentwise).  ``eval_kbig`` computes the single-valued semantics of the
'!'-free fragment and also covers fuzzy models, where box is
``min over all worlds of imp(weight, value)`` and diamond is
``max over all worlds of min(weight, value)``.
"""

from __future__ import annotations

import json
from fractions import Fraction
from typing import Iterable, Mapping, Union

from .algebra import (
    Pair,
    coimp,
    imp,
    join,
    meet,
    pair_and,
    pair_coimp,
    pair_dual,
    pair_imp,
    pair_not,
    pair_or,
)
from .formula import (
    And,
    Box,
    Coimp,
    Const0,
    Const1,
    Dia,
    Formula,
    Imp,
    Neg,
    Or,
    Var,
    is_neg_free,
)


class ModelError(ValueError):
    """Ill-formed model description (schema violation, bad rational, ...)."""


def _as_value(raw, where: str) -> Fraction:
    """Parse a rational from model JSON: "a/b", "3", or a Python int."""
    if isinstance(raw, bool):
        raise ModelError(f"{where}: expected a rational, got {raw!r}")
    if isinstance(raw, int):
        v = Fraction(raw)
    elif isinstance(raw, str):
        try:
            v = Fraction(raw)
        except (ValueError, ZeroDivisionError):
            raise ModelError(f"{where}: bad rational literal {raw!r}") from None
    elif isinstance(raw, float):
        raise ModelError(f"{where}: floats are not accepted, write a rational string")
    else:
        raise ModelError(f"{where}: expected a rational, got {type(raw).__name__}")
    if not 0 <= v <= 1:
        raise ModelError(f"{where}: value {raw!r} out of [0,1]")
    return v


def format_value(v: Fraction) -> str:
    v = Fraction(v)
    return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


class KripkeModel:
    """Immutable finite model; see module docstring for the shape."""

    def __init__(
        self,
        worlds: Iterable[str],
        *,
        relation: Iterable[tuple[str, str]] = (),
        fuzzy_relation: Mapping[tuple[str, str], Fraction] | None = None,
        valuation: Mapping[tuple[str, str], Pair] | None = None,
    ):
        self.worlds = tuple(sorted(set(worlds)))
        if not self.worlds:
            raise ModelError("empty world set")
        wset = set(self.worlds)
        self.mode = "fuzzy" if fuzzy_relation is not None else "crisp"
        if fuzzy_relation is not None and relation:
            raise ModelError("relation and fuzzy_relation are mutually exclusive")

        if self.mode == "crisp":
            self.edges = frozenset(relation)
            for s, t in self.edges:
                if s not in wset or t not in wset:
                    raise ModelError(f"edge ({s!r}, {t!r}) mentions an undeclared world")
            self.weights = {}
        else:
            self.edges = frozenset()
            self.weights = {}
            for (s, t), wgt in dict(fuzzy_relation).items():
                if s not in wset or t not in wset:
                    raise ModelError(f"edge ({s!r}, {t!r}) mentions an undeclared world")
                wgt = Fraction(wgt)
                if not 0 <= wgt <= 1:
                    raise ModelError(f"weight out of [0,1] on edge ({s!r}, {t!r})")
                self.weights[(s, t)] = wgt

        self.valuation: dict[tuple[str, str], Pair] = {}
        for (w, p), pv in dict(valuation or {}).items():
            if w not in wset:
                raise ModelError(f"valuation mentions undeclared world {w!r}")
            pos, neg = Fraction(pv[0]), Fraction(pv[1])
            if not (0 <= pos <= 1 and 0 <= neg <= 1):
                raise ModelError(f"valuation.{w}.{p}: components out of [0,1]")
            self.valuation[(w, p)] = Pair(pos, neg)

        self._succ = {
            w: tuple(t for t in self.worlds if (w, t) in self.edges) for w in self.worlds
        }

    def successors(self, w: str) -> tuple[str, ...]:
        return self._succ[w]

    def value_of(self, w: str, var: str) -> Pair:
        return self.valuation.get((w, var), Pair(Fraction(0), Fraction(0)))

    def to_json_dict(self) -> dict:
        out: dict = {"worlds": list(self.worlds)}
        if self.mode == "crisp":
            out["relation"] = sorted([s, t] for s, t in self.edges)
        else:
            out["fuzzy_relation"] = sorted(
                [s, t, format_value(wgt)] for (s, t), wgt in self.weights.items()
            )
        val: dict[str, dict[str, list[str]]] = {}
        for (w, p), pv in sorted(self.valuation.items()):
            val.setdefault(w, {})[p] = [format_value(pv.pos), format_value(pv.neg)]
        out["valuation"] = val
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2)

    def __repr__(self):
        return (
            f"KripkeModel(worlds={len(self.worlds)}, mode={self.mode!r}, "
            f"edges={len(self.edges) or len(self.weights)})"
        )


def load_model(source: Union[str, dict]) -> KripkeModel:
    """Build a model from its JSON description (text, parsed dict, or file path).

    Schema::

        {"worlds": ["w0", "w1"],
         "relation": [["w0", "w1"]],
         "valuation": {"w0": {"p": ["7/10", "3/5"]}}}

    Fuzzy models use ``"fuzzy_relation": [["w0", "w1", "1/2"]]`` instead of
    ``"relation"`` (the two keys are mutually exclusive).  A valuation entry
    may also be a single rational string, meaning that support of falsity
    is "0".
    """
    if isinstance(source, dict):
        data = source
    else:
        text = source
        if not text.lstrip().startswith("{"):
            with open(text, "r", encoding="utf-8") as fh:
                text = fh.read()
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ModelError(f"not valid JSON: {e}") from None
    if not isinstance(data, dict):
        raise ModelError("model description must be a JSON object")
    unknown = set(data) - {"worlds", "relation", "fuzzy_relation", "valuation"}
    if unknown:
        raise ModelError(f"unknown keys: {sorted(unknown)}")

    worlds = data.get("worlds")
    if not isinstance(worlds, list) or not all(isinstance(w, str) for w in worlds):
        raise ModelError("worlds: expected a list of world names")

    if "relation" in data and "fuzzy_relation" in data:
        raise ModelError("relation and fuzzy_relation are mutually exclusive")

    relation = []
    for i, pair in enumerate(data.get("relation", [])):
        if not (isinstance(pair, list) and len(pair) == 2):
            raise ModelError(f"relation[{i}]: expected [source, target]")
        relation.append((pair[0], pair[1]))

    fuzzy = None
    if "fuzzy_relation" in data:
        fuzzy = {}
        for i, triple in enumerate(data["fuzzy_relation"]):
            if not (isinstance(triple, list) and len(triple) == 3):
                raise ModelError(f"fuzzy_relation[{i}]: expected [source, target, weight]")
            fuzzy[(triple[0], triple[1])] = _as_value(triple[2], f"fuzzy_relation[{i}]")

    valuation = {}
    raw_val = data.get("valuation", {})
    if not isinstance(raw_val, dict):
        raise ModelError("valuation: expected an object keyed by world")
    for w, entries in raw_val.items():
        if not isinstance(entries, dict):
            raise ModelError(f"valuation.{w}: expected an object keyed by variable")
        for p, raw in entries.items():
            where = f"valuation.{w}.{p}"
            if isinstance(raw, list):
                if len(raw) != 2:
                    raise ModelError(f"{where}: expected [pos, neg]")
                valuation[(w, p)] = Pair(_as_value(raw[0], where), _as_value(raw[1], where))
            else:
                valuation[(w, p)] = Pair(_as_value(raw, where), Fraction(0))

    return KripkeModel(worlds, relation=relation, fuzzy_relation=fuzzy, valuation=valuation)


# ---------------------------------------------------------------------------
# Evaluation.


def eval_kg2(m: KripkeModel, w: str, f: Formula) -> Pair:
    """Both supports of f at world w of a crisp model."""
    if m.mode != "crisp":
        raise ModelError("two-sided evaluation is defined on crisp models only")
    if w not in m._succ:
        raise ModelError(f"unknown world {w!r}")
    cache: dict[tuple[Formula, str], Pair] = {}

    def ev(g: Formula, u: str) -> Pair:
        key = (g, u)
        got = cache.get(key)
        if got is not None:
            return got
        if isinstance(g, Var):
            out = m.value_of(u, g.name)
        elif isinstance(g, Const0):
            out = Pair(Fraction(0), Fraction(1))
        elif isinstance(g, Const1):
            out = Pair(Fraction(1), Fraction(0))
        elif isinstance(g, Neg):
            out = pair_not(ev(g.arg, u))
        elif isinstance(g, And):
            out = pair_and(ev(g.left, u), ev(g.right, u))
        elif isinstance(g, Or):
            out = pair_or(ev(g.left, u), ev(g.right, u))
        elif isinstance(g, Imp):
            out = pair_imp(ev(g.left, u), ev(g.right, u))
        elif isinstance(g, Coimp):
            out = pair_coimp(ev(g.left, u), ev(g.right, u))
        elif isinstance(g, Box):
            vals = [ev(g.arg, t) for t in m.successors(u)]
            # min over an empty successor set is 1 (and dually 0 for the
            # falsity support), so boxes are vacuously true at dead ends.
            out = Pair(
                min((v.pos for v in vals), default=Fraction(1)),
                max((v.neg for v in vals), default=Fraction(0)),
            )
        elif isinstance(g, Dia):
            vals = [ev(g.arg, t) for t in m.successors(u)]
            out = Pair(
                max((v.pos for v in vals), default=Fraction(0)),
                min((v.neg for v in vals), default=Fraction(1)),
            )
        else:  # pragma: no cover
            raise TypeError(f"not a formula: {g!r}")
        cache[key] = out
        return out

    return ev(f, w)


def eval_kbig(m: KripkeModel, w: str, f: Formula) -> Fraction:
    """Single truth value of a '!'-free formula at w; crisp or fuzzy models."""
    if not is_neg_free(f):
        raise ValueError("single-valued evaluation needs a '!'-free formula")
    if w not in m._succ:
        raise ModelError(f"unknown world {w!r}")
    fuzzy = m.mode == "fuzzy"
    cache: dict[tuple[Formula, str], Fraction] = {}

    def ev(g: Formula, u: str) -> Fraction:
        key = (g, u)
        got = cache.get(key)
        if got is not None:
            return got
        if isinstance(g, Var):
            out = m.value_of(u, g.name).pos
        elif isinstance(g, Const0):
            out = Fraction(0)
        elif isinstance(g, Const1):
            out = Fraction(1)
        elif isinstance(g, And):
            out = meet(ev(g.left, u), ev(g.right, u))
        elif isinstance(g, Or):
            out = join(ev(g.left, u), ev(g.right, u))
        elif isinstance(g, Imp):
            out = imp(ev(g.left, u), ev(g.right, u))
        elif isinstance(g, Coimp):
            out = coimp(ev(g.left, u), ev(g.right, u))
        elif isinstance(g, Box):
            if fuzzy:
                out = min(
                    (imp(m.weights.get((u, t), Fraction(0)), ev(g.arg, t)) for t in m.worlds),
                    default=Fraction(1),
                )
            else:
                out = min((ev(g.arg, t) for t in m.successors(u)), default=Fraction(1))
        elif isinstance(g, Dia):
            if fuzzy:
                out = max(
                    (meet(m.weights.get((u, t), Fraction(0)), ev(g.arg, t)) for t in m.worlds),
                    default=Fraction(0),
                )
            else:
                out = max((ev(g.arg, t) for t in m.successors(u)), default=Fraction(0))
        else:
            raise TypeError(f"not a '!'-free formula: {g!r}")
        out = Fraction(out)
        cache[key] = out
        return out

    return ev(f, w)


def is_valid_on_model(m: KripkeModel, f: Formula) -> bool:
    """True iff the truth support of f is 1 at every world.

    Checking the truth support alone is enough: the mirror transform below
    maps any falsity-side failure to a truth-side one.
    """
    return all(eval_kg2(m, w, f).pos == 1 for w in m.worlds)


def dual_transform(m: KripkeModel) -> KripkeModel:
    """Same frame, every variable value (x, y) replaced by (1-y, 1-x)."""
    if m.mode != "crisp":
        raise ModelError("the mirror transform is defined on crisp models only")
    return KripkeModel(
        m.worlds,
        relation=m.edges,
        valuation={k: pair_dual(v) for k, v in m.valuation.items()},
    )


def check_realization(m: KripkeModel, branch) -> bool:
    """Does m satisfy every constraint of a saturation branch?

    Every relational constraint must be an edge of m, and every structural
    constraint must hold under evaluation, reading ``w:1:f`` as the truth
    support and ``w:2:f`` as the falsity support of f at w, with strict and
    non-strict comparisons taken as written.
    """
    from .tableau import Constant, Labeled  # local import; tableau imports us

    wset = set(m.worlds)

    def value(s) -> Fraction:
        if isinstance(s, Constant):
            return Fraction(s.value)
        if not isinstance(s, Labeled):  # pragma: no cover
            raise TypeError(f"not a structure: {s!r}")
        if s.world not in wset:
            raise ModelError(f"unknown world label {s.world!r}")
        pv = eval_kg2(m, s.world, s.formula)
        return Fraction(pv.pos if s.index == 1 else pv.neg)

    for rel in branch.relations:
        if rel.source not in wset or rel.target not in wset:
            raise ModelError(f"unknown world label in {rel}")
        if (rel.source, rel.target) not in m.edges:
            return False
    for c in branch.constraints:
        lhs, rhs = value(c.lhs), value(c.rhs)
        if c.strict:
            if not lhs < rhs:
                return False
        elif not lhs <= rhs:
            return False
    return True
