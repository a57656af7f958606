"""Brute-force cross-checking against the prover.

Enumerates every crisp model over a bounded world count whose variable values
lie on a finite grid {0, 1/d, ..., 1}, in a fixed canonical order, and searches
for countermodels by direct evaluation.  Independent of the tableau machinery
by construction, which is what makes the agreement harness meaningful.
"""

from __future__ import annotations

import itertools
import json
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Optional, Union

from .algebra import Pair
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
    node_count,
    print_formula,
    subformulas,
    variables,
)
from .kripke import KripkeModel, check_realization, eval_kg2
from .tableau import Invalid, ResourceExhausted, Valid, prove


@dataclass(frozen=True)
class GridSpec:
    """Search space: up to `max_worlds` worlds, values with denominator
    `denominator`, over the given variables.  The default denominator is
    2 * len(variables) * max_worlds, which is enough to find a countermodel
    whenever one with that many worlds exists at all."""

    max_worlds: int
    denominator: Optional[int] = None
    variables: tuple[str, ...] = ()

    def __post_init__(self):
        if self.max_worlds < 1:
            raise ValueError("max_worlds must be positive")
        object.__setattr__(self, "variables", tuple(self.variables))
        if self.denominator is None:
            d = max(1, 2 * len(self.variables) * self.max_worlds)
            object.__setattr__(self, "denominator", d)
        elif self.denominator < 1:
            raise ValueError("denominator must be positive")

    @classmethod
    def for_formula(cls, f: Formula, max_worlds: int,
                    denominator: Optional[int] = None) -> "GridSpec":
        return cls(max_worlds, denominator, tuple(variables(f)))


@dataclass(frozen=True)
class Countermodel:
    model: KripkeModel
    world: str


@dataclass(frozen=True)
class ExhaustedNoCountermodel:
    pass


@dataclass(frozen=True)
class BudgetExceeded:
    models_tried: int


SearchOutcome = Union[Countermodel, ExhaustedNoCountermodel, BudgetExceeded]


# --------------------------------------------------------------------------
# Canonical enumeration.
#
# Order: world count k ascending; relation bitmask ascending, where bit i*k+j
# (counting from the least significant) is the edge from world i to world j;
# then the valuation as a mixed-radix number over the digit vector
# [pos digits, then neg digits], each half laid out world-major then
# variable-minor, with the last digit varying fastest.


def model_count(spec: GridSpec) -> int:
    """Total number of models enumerated for this spec."""
    n, d = len(spec.variables), spec.denominator
    return sum(
        (1 << (k * k)) * (d + 1) ** (2 * n * k) for k in range(1, spec.max_worlds + 1)
    )


def _materialize(spec: GridSpec, k: int, rel_bits: int, digits) -> KripkeModel:
    n, d = len(spec.variables), spec.denominator
    worlds = [f"w{i}" for i in range(k)]
    relation = [
        (worlds[i], worlds[j])
        for i in range(k)
        for j in range(k)
        if rel_bits >> (i * k + j) & 1
    ]
    half = n * k
    valuation = {}
    for j in range(k):
        for v, name in enumerate(spec.variables):
            pos = digits[j * n + v]
            neg = digits[half + j * n + v] if len(digits) > half else 0
            if pos or neg:
                valuation[(worlds[j], name)] = Pair(Fraction(pos, d), Fraction(neg, d))
    return KripkeModel(worlds, relation=relation, valuation=valuation)


def _model_at(spec: GridSpec, index: int) -> KripkeModel:
    n, d = len(spec.variables), spec.denominator
    rest = index
    for k in range(1, spec.max_worlds + 1):
        vcount = (d + 1) ** (2 * n * k)
        block = (1 << (k * k)) * vcount
        if rest < block:
            rel_bits, vindex = divmod(rest, vcount)
            m = 2 * n * k
            digits = [0] * m
            for i in range(m - 1, -1, -1):
                vindex, digits[i] = divmod(vindex, d + 1)
            return _materialize(spec, k, rel_bits, digits)
        rest -= block
    raise IndexError(f"model index {index} out of range")


def enumerate_models(spec: GridSpec, start: int = 0,
                     stop: Optional[int] = None) -> Iterator[KripkeModel]:
    """The canonical model stream, restartable and partitionable by index."""
    total = model_count(spec)
    if stop is None or stop > total:
        stop = total
    for index in range(start, stop):
        yield _model_at(spec, index)


def _grid_stream(spec: GridSpec, pos_only: bool):
    """Fast internal stream of (k, successor lists, digit tuple).

    With pos_only (sound for '!'-free formulas, whose truth support never
    reads the falsity digits) only the pos half is enumerated; each item then
    stands for the first model of its pos-slice in the canonical order, i.e.
    the one with all falsity digits 0.
    """
    n, d = len(spec.variables), spec.denominator
    for k in range(1, spec.max_worlds + 1):
        width = (n * k) if pos_only else (2 * n * k)
        for rel_bits in range(1 << (k * k)):
            succ = [
                [j for j in range(k) if rel_bits >> (i * k + j) & 1] for i in range(k)
            ]
            for digits in itertools.product(range(d + 1), repeat=width):
                yield k, rel_bits, succ, digits


# --------------------------------------------------------------------------
# Integer-grid evaluation (values are numerators over the grid denominator).

_OPS = {And: "and", Or: "or", Imp: "imp", Coimp: "coimp",
        Neg: "neg", Box: "box", Dia: "dia"}


def _compile(f: Formula, var_order: tuple[str, ...]):
    """Postorder instruction list: (tag, operand indices...) per subformula."""
    nodes = subformulas(f)
    index = {g: i for i, g in enumerate(nodes)}
    var_pos = {name: v for v, name in enumerate(var_order)}
    prog = []
    for g in nodes:
        if isinstance(g, Var):
            prog.append(("var", var_pos[g.name]))
        elif isinstance(g, Const0):
            prog.append(("c0",))
        elif isinstance(g, Const1):
            prog.append(("c1",))
        elif isinstance(g, (Neg, Box, Dia)):
            prog.append((_OPS[type(g)], index[g.arg]))
        else:
            prog.append((_OPS[type(g)], index[g.left], index[g.right]))
    return prog


def _eval_pos(prog, n: int, d: int, k: int, succ, digits, world: int) -> int:
    """Truth support only; valid for '!'-free programs."""
    cache: dict[tuple[int, int], int] = {}

    def ev(i: int, w: int) -> int:
        got = cache.get((i, w))
        if got is not None:
            return got
        ins = prog[i]
        tag = ins[0]
        if tag == "var":
            out = digits[w * n + ins[1]]
        elif tag == "c0":
            out = 0
        elif tag == "c1":
            out = d
        elif tag == "and":
            out = min(ev(ins[1], w), ev(ins[2], w))
        elif tag == "or":
            out = max(ev(ins[1], w), ev(ins[2], w))
        elif tag == "imp":
            a, b = ev(ins[1], w), ev(ins[2], w)
            out = d if a <= b else b
        elif tag == "coimp":
            a, b = ev(ins[1], w), ev(ins[2], w)
            out = 0 if a <= b else a
        elif tag == "box":
            out = min((ev(ins[1], u) for u in succ[w]), default=d)
        else:  # dia
            out = max((ev(ins[1], u) for u in succ[w]), default=0)
        cache[(i, w)] = out
        return out

    return ev(len(prog) - 1, world)


def _eval_pair(prog, n: int, d: int, k: int, succ, digits, world: int) -> tuple[int, int]:
    """Both supports; `digits` holds the pos half then the neg half."""
    half = n * k
    cache: dict[tuple[int, int], tuple[int, int]] = {}

    def ev(i: int, w: int) -> tuple[int, int]:
        got = cache.get((i, w))
        if got is not None:
            return got
        ins = prog[i]
        tag = ins[0]
        if tag == "var":
            out = (digits[w * n + ins[1]], digits[half + w * n + ins[1]])
        elif tag == "c0":
            out = (0, d)
        elif tag == "c1":
            out = (d, 0)
        elif tag == "neg":
            p, q = ev(ins[1], w)
            out = (q, p)
        elif tag == "and":
            (p1, q1), (p2, q2) = ev(ins[1], w), ev(ins[2], w)
            out = (min(p1, p2), max(q1, q2))
        elif tag == "or":
            (p1, q1), (p2, q2) = ev(ins[1], w), ev(ins[2], w)
            out = (max(p1, p2), min(q1, q2))
        elif tag == "imp":
            (p1, q1), (p2, q2) = ev(ins[1], w), ev(ins[2], w)
            out = (d if p1 <= p2 else p2, 0 if q2 <= q1 else q2)
        elif tag == "coimp":
            (p1, q1), (p2, q2) = ev(ins[1], w), ev(ins[2], w)
            out = (0 if p1 <= p2 else p1, d if q2 <= q1 else q1)
        elif tag == "box":
            vals = [ev(ins[1], u) for u in succ[w]]
            out = (min((p for p, _ in vals), default=d), max((q for _, q in vals), default=0))
        else:  # dia
            vals = [ev(ins[1], u) for u in succ[w]]
            out = (max((p for p, _ in vals), default=0), min((q for _, q in vals), default=d))
        cache[(i, w)] = out
        return out

    return ev(len(prog) - 1, world)


# --------------------------------------------------------------------------
# Search.


def oracle_search(f: Formula, spec: GridSpec, *,
                  budget: Optional[int] = None) -> SearchOutcome:
    """First model in canonical order with a world where the truth support of
    f is below 1; ExhaustedNoCountermodel is conclusive for the given bounds.

    `budget` caps the number of examined candidates.  For '!'-free formulas a
    candidate is one truth-support assignment (falsity digits do not matter
    and are skipped), so one candidate stands for a whole slice of the stream.
    """
    missing = set(variables(f)) - set(spec.variables)
    if missing:
        raise ValueError(f"formula variables not covered by the grid: {sorted(missing)}")
    n, d = len(spec.variables), spec.denominator
    pos_only = is_neg_free(f)
    prog = _compile(f, spec.variables)
    tried = 0
    for k, rel_bits, succ, digits in _grid_stream(spec, pos_only):
        if budget is not None and tried >= budget:
            return BudgetExceeded(models_tried=tried)
        tried += 1
        for w in range(k):
            value = (
                _eval_pos(prog, n, d, k, succ, digits, w)
                if pos_only
                else _eval_pair(prog, n, d, k, succ, digits, w)[0]
            )
            if value < d:
                full = digits if not pos_only else tuple(digits) + (0,) * (n * k)
                model = _materialize(spec, k, rel_bits, full)
                world = f"w{w}"
                if not eval_kg2(model, world, f).pos < 1:
                    raise RuntimeError(
                        "internal error: grid countermodel failed re-verification"
                    )
                return Countermodel(model=model, world=world)
    return ExhaustedNoCountermodel()


def _doubly_negated(f: Formula) -> Formula:
    return Imp(Imp(f, Const0()), Const0())


# Guarded assertions that, at every world, p -> <>p stays above 0 and p
# strictly exceeds <>p: jointly satisfiable on some infinite structures, but
# on no finitely branching one — which the exhaustive check below confirms at
# bounded scale.
FORMULA_LEQ = _doubly_negated(Imp(Var("p"), Dia(Var("p"))))
FORMULA_GT = _doubly_negated(Coimp(Var("p"), Dia(Var("p"))))
FORMULA_BOTH = And(FORMULA_LEQ, FORMULA_GT)


def finite_unsat_check(max_worlds: int, d: int,
                       formula: Optional[Formula] = None) -> bool:
    """True iff no enumerated model gives `formula` truth support 1 at every
    world.  The default formula is the conjunction above; passing
    FORMULA_LEQ alone inverts the answer (a single reflexive world with p = 1
    satisfies it everywhere), which makes a handy sanity check.

    Only truth supports are enumerated; the formula must be '!'-free, and
    then its truth support cannot depend on the falsity digits.
    """
    f = formula if formula is not None else FORMULA_BOTH
    if not is_neg_free(f):
        raise ValueError("finite_unsat_check needs a '!'-free formula")
    spec = GridSpec(max_worlds, d, tuple(variables(f)))
    n = len(spec.variables)
    prog = _compile(f, spec.variables)
    for k, _rel_bits, succ, digits in _grid_stream(spec, pos_only=True):
        if all(_eval_pos(prog, n, d, k, succ, digits, w) == d for w in range(k)):
            return False
    return True


def snap_to_grid(m: KripkeModel, d: int) -> KripkeModel:
    """Order-isomorphic copy of m with all valuation components on the d-grid.

    Evaluation of any formula only compares values and picks among them plus
    the endpoints, so re-mapping the distinct components order-preservingly
    (keeping 0 and 1 fixed) re-maps every evaluated value the same way; in
    particular which worlds give truth support 1 is unchanged.  Raises
    ValueError if m uses more than d - 1 distinct interior values.
    """
    interior = sorted(
        {v for pair in m.valuation.values() for v in pair}
        - {Fraction(0), Fraction(1)}
    )
    if len(interior) > d - 1:
        raise ValueError(f"{len(interior)} interior values do not fit in a /{d} grid")
    remap = {v: Fraction(i + 1, d) for i, v in enumerate(interior)}
    remap[Fraction(0)] = Fraction(0)
    remap[Fraction(1)] = Fraction(1)
    return KripkeModel(
        m.worlds,
        relation=m.edges,
        valuation={
            key: Pair(remap[pair.pos], remap[pair.neg])
            for key, pair in m.valuation.items()
        },
    )


# --------------------------------------------------------------------------
# Random formulas and the agreement harness.


@dataclass(frozen=True)
class SizeBounds:
    max_vars: int = 3
    max_modal_depth: int = 2
    max_nodes: int = 12


_VAR_POOL = ("p", "q", "r")


def random_formula(rng: random.Random, bounds: Optional[SizeBounds] = None, *,
                   allow_neg: bool = True) -> Formula:
    """Random formula within the size bounds.

    Draw weights per node: 40% binary propositional connective, 20% '!',
    20% modal, 20% leaf (mostly variables, occasionally a constant); a class
    that cannot fit the remaining node or modal-depth budget falls through to
    the next, ending at a leaf.
    """
    bounds = bounds if bounds is not None else SizeBounds()
    pool = _VAR_POOL[: bounds.max_vars]

    def gen(budget: int, modal_left: int) -> Formula:
        u = rng.random()
        if u < 0.4 and budget >= 3:
            op = rng.choice((And, Or, Imp, Coimp))
            left_budget = rng.randint(1, budget - 2)
            return op(gen(left_budget, modal_left), gen(budget - 1 - left_budget, modal_left))
        if u < 0.6 and budget >= 2 and allow_neg:
            return Neg(gen(budget - 1, modal_left))
        if u < 0.8 and budget >= 2 and modal_left > 0:
            return rng.choice((Box, Dia))(gen(budget - 1, modal_left - 1))
        if rng.random() < 0.15:
            return rng.choice((Const0(), Const1()))
        return Var(rng.choice(pool))

    return gen(bounds.max_nodes, bounds.max_modal_depth)


@dataclass
class AgreementReport:
    count: int
    seed: int
    bounds: SizeBounds
    totals: dict = field(default_factory=dict)
    discrepancies: list = field(default_factory=list)

    def lines(self) -> list[str]:
        t = self.totals
        out = [
            f"agreement run\t{self.count} formulas\tseed {self.seed}",
            f"bounds\tvars<={self.bounds.max_vars}"
            f"\tmodal-depth<={self.bounds.max_modal_depth}"
            f"\tnodes<={self.bounds.max_nodes}",
            f"prover\tvalid {t['valid']}\tinvalid {t['invalid']}"
            f"\tinconclusive {t['inconclusive']}",
            f"oracle\tfound {t['oracle_found']}\texhausted {t['oracle_exhausted']}"
            f"\tbudget-exceeded {t['oracle_budget_exceeded']}",
            f"discrepancies\t{len(self.discrepancies)}",
        ]
        for entry in self.discrepancies:
            out.append(
                f"DISCREPANCY\t{entry['kind']}\tseed {entry['seed']}\t{entry['formula']}"
            )
        return out

    def to_json_dict(self) -> dict:
        return {
            "count": self.count,
            "seed": self.seed,
            "bounds": {
                "max_vars": self.bounds.max_vars,
                "max_modal_depth": self.bounds.max_modal_depth,
                "max_nodes": self.bounds.max_nodes,
            },
            "totals": dict(self.totals),
            "discrepancies": list(self.discrepancies),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2)


def agreement_run(count: int, bounds: Optional[SizeBounds] = None, seed: int = 0, *,
                  oracle_max_worlds: int = 2,
                  oracle_budget: Optional[int] = 2000) -> AgreementReport:
    """Cross-check prover and oracle on `count` random formulas.

    Formula i is drawn from its own generator seeded with "<seed>:<i>", so any
    discrepancy can be reproduced from the reported seed alone.  Checked per
    formula: an oracle countermodel forbids a Valid verdict, and every Invalid
    verdict's model must satisfy its branch and falsify the formula at w0.
    Discrepancies are report content, not exceptions.
    """
    bounds = bounds if bounds is not None else SizeBounds()
    totals = {
        "valid": 0,
        "invalid": 0,
        "inconclusive": 0,
        "oracle_found": 0,
        "oracle_exhausted": 0,
        "oracle_budget_exceeded": 0,
    }
    report = AgreementReport(count=count, seed=seed, bounds=bounds, totals=totals)

    for i in range(count):
        item_seed = f"{seed}:{i}"
        f = random_formula(random.Random(item_seed), bounds)
        text = print_formula(f)

        def flag(kind: str, detail: str = ""):
            report.discrepancies.append(
                {"kind": kind, "seed": item_seed, "formula": text, "detail": detail}
            )

        try:
            verdict = prove(f, "KG2")
        except ResourceExhausted as e:
            totals["inconclusive"] += 1
            verdict = None
        if isinstance(verdict, Valid):
            totals["valid"] += 1
        elif isinstance(verdict, Invalid):
            totals["invalid"] += 1
            if not check_realization(verdict.model, verdict.branch):
                flag("invalid-model-breaks-branch")
            if not eval_kg2(verdict.model, verdict.world, f).pos < 1:
                flag("invalid-model-does-not-falsify")

        outcome = oracle_search(
            f, GridSpec.for_formula(f, oracle_max_worlds), budget=oracle_budget
        )
        if isinstance(outcome, Countermodel):
            totals["oracle_found"] += 1
            if isinstance(verdict, Valid):
                flag("oracle-found-but-proved-valid", outcome.model.to_json())
        elif isinstance(outcome, ExhaustedNoCountermodel):
            totals["oracle_exhausted"] += 1
        else:
            totals["oracle_budget_exceeded"] += 1

    return report
