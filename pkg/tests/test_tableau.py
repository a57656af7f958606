import random
import re
from fractions import Fraction

import pytest

from conftest import random_crisp_model
from paragodel.algebra import Pair
from paragodel.formula import And, Box, Coimp, Dia, Imp, Neg, Or, Var, parse
from paragodel.kripke import check_realization, eval_kg2
from paragodel.tableau import (
    Branch,
    Closed,
    Constant,
    Constraint,
    Invalid,
    K0,
    K1,
    Labeled,
    OpenBranch,
    RelConstraint,
    ResourceExhausted,
    RULES_KBIG,
    RULES_KG2,
    TableauLimits,
    Valid,
    _conclusions,
    applicable_instances,
    apply_instance,
    closure_check,
    extract_countermodel,
    init_tableau,
    labeled,
    prove,
    saturate,
)

F = Fraction


# ---------------------------------------------------------------------------
# Structures and constraints.


def test_constant_normalization():
    assert labeled("w0", 1, parse("1")) == K1
    assert labeled("w0", 2, parse("1")) == K0
    assert labeled("w0", 1, parse("0")) == K0
    assert labeled("w0", 2, parse("0")) == K1
    assert labeled("w0", 1, parse("p")) == Labeled("w0", 1, Var("p"))


def test_string_forms():
    c = Constraint(labeled("w0", 1, parse("p -> q")), True, K1)
    assert str(c) == "w0:1:(p -> q) < 1"
    weak = Constraint(K0, False, labeled("w1", 2, parse("p")))
    assert str(weak) == "0 <= w1:2:p"
    assert str(RelConstraint("w0", "w1")) == "w0Rw1"
    assert str(labeled("w2", 1, parse("[]p"))) == "w2:1:[]p"


def test_init_tableau():
    b = init_tableau(parse("p -> q"))
    assert b.worlds == ["w0"]
    assert b.constraints == [Constraint(labeled("w0", 1, parse("p -> q")), True, K1)]
    assert b.new_lines == ["0\tinit\tw0:1:(p -> q) < 1"]


# ---------------------------------------------------------------------------
# Rule table shape.


def test_rule_table_sizes():
    assert len(RULES_KG2) == 32
    assert len(RULES_KBIG) == 16
    assert all(r.index == 1 for r in RULES_KBIG.rules.values())


def test_single_relation_rules_keep_their_strictness():
    # Four schemata exist in one strictness only, with a separate companion
    # for the other case; everything else concludes with the premise's own
    # relation.
    strict_only = {"imp1_lt", "imp2_gt", "coimp1_gt", "coimp2_lt"}
    weak_only = {"imp1_leq", "imp2_geq", "coimp1_geq", "coimp2_leq"}
    for rid in strict_only:
        assert RULES_KG2.rules[rid].strictness == "strict"
    for rid in weak_only:
        assert RULES_KG2.rules[rid].strictness == "weak"
    others = set(RULES_KG2.rules) - strict_only - weak_only
    assert all(RULES_KG2.rules[rid].strictness == "both" for rid in others)


def test_match_respects_strictness_gate():
    assert RULES_KG2.match("imp", 1, "lhs", True).rule_id == "imp1_lt"
    assert RULES_KG2.match("imp", 1, "lhs", False).rule_id == "imp1_leq"
    assert RULES_KG2.match("and", 1, "lhs", True).rule_id == "and1_le"
    assert RULES_KG2.match("and", 1, "lhs", False).rule_id == "and1_le"
    assert RULES_KBIG.match("imp", 2, "lhs", True) is None


# ---------------------------------------------------------------------------
# Instance selection and application.


def test_instance_example_splits_on_the_strict_bound():
    b = init_tableau(parse("1 -< <>((p -< q) & q)"))
    insts = applicable_instances(b)
    assert [i.rule_id for i in insts] == ["coimp1_le"]
    children = apply_instance(b, insts[0])
    assert [c.branch_id for c in children] == ["0.1", "0.2"]
    assert str(children[0].constraints[-1]) == "1 <= w0:1:<>((p -< q) & q)"
    assert str(children[1].constraints[-1]) == "1 < 1"


def test_applied_instances_do_not_refire():
    b = init_tableau(parse("1 -< <>((p -< q) & q)"))
    child = apply_instance(b, applicable_instances(b)[0])[0]
    assert all(i.rule_id != "coimp1_le" or i.constraint != b.constraints[0]
               for i in applicable_instances(child))
    with pytest.raises(ValueError):
        apply_instance(child, applicable_instances(b)[0])


def test_modal_witness_is_shared_per_bound_formula():
    b = Branch("0")
    dia = parse("<>p")
    b.add_constraint(Constraint(labeled("w0", 1, parse("q")), False, labeled("w0", 1, dia)), "t")
    b.add_constraint(Constraint(labeled("w0", 1, parse("r")), False, labeled("w0", 1, dia)), "t")
    insts = applicable_instances(b)
    assert [i.rule_id for i in insts] == ["dia1_ge", "dia1_ge"]
    (b1,) = apply_instance(b, insts[0])
    assert b1.worlds == ["w0", "w1"]
    (b2,) = apply_instance(b1, applicable_instances(b1)[0])
    # second lower bound reuses the same witness world instead of minting w2
    assert b2.worlds == ["w0", "w1"]
    assert str(b2.constraints[-1]) == "w0:1:r <= w1:1:p"
    assert b2.relations == [RelConstraint("w0", "w1")]


def test_propagation_covers_every_known_successor():
    b = Branch("0")
    box = parse("[]p")
    b.add_constraint(Constraint(labeled("w0", 1, parse("q")), False, labeled("w0", 1, box)), "t")
    b.add_relation(RelConstraint("w0", "w1"), "t")
    b.worlds.append("w1")
    b.add_relation(RelConstraint("w0", "w2"), "t")
    b.worlds.append("w2")
    insts = [i for i in applicable_instances(b) if i.rule_id == "box1_ge"]
    assert [i.relation.target for i in insts] == ["w1", "w2"]
    (after,) = apply_instance(b, insts[0])
    assert str(after.constraints[-1]) == "w0:1:q <= w1:1:p"
    # the second successor's instance survives independently
    remaining = [i for i in applicable_instances(after) if i.rule_id == "box1_ge"]
    assert [i.relation.target for i in remaining] == ["w2"]


def test_sharper_strict_bound_suppresses_the_generic_one():
    a = labeled("w0", 1, parse("p -> q"))
    b = Branch("0")
    b.add_constraint(Constraint(a, True, K1), "t")
    b.add_constraint(Constraint(a, True, labeled("w0", 1, parse("r"))), "t")
    insts = [i for i in applicable_instances(b) if i.rule_id == "imp1_lt"]
    assert len(insts) == 1
    assert str(insts[0].constraint) == "w0:1:(p -> q) < w0:1:r"


# ---------------------------------------------------------------------------
# Closure.


def closing(*constraints):
    b = Branch("0")
    for c in constraints:
        b.add_constraint(c, "t")
    return closure_check(b)


def test_closure_cases():
    X = labeled("w0", 1, parse("p"))
    Y = labeled("w0", 1, parse("q"))
    assert closing(Constraint(X, True, X))
    assert not closing(Constraint(X, False, Y), Constraint(Y, False, X))
    assert closing(Constraint(X, False, Y), Constraint(Y, True, X))
    assert not closing(Constraint(K1, False, X))
    assert closing(Constraint(K1, True, X))
    assert not closing(Constraint(X, False, K0))
    assert closing(Constraint(X, True, K0))
    assert closing(Constraint(K1, False, K0))
    assert not closing(Constraint(K0, True, K1))


# ---------------------------------------------------------------------------
# Whole-procedure behavior.


GOLDEN_VALID = [
    "1 -< <>((p -< q) & q)",
    "~~[](p | ~p)",
    "p -> p",
    "D(p->q) | D(q->p)",
]
GOLDEN_INVALID = [
    "(p & !p) -> q",
    "[](p & !p) -> []q",
    "<>(p & !p) -> <>q",
    "[]p -> [][]p",
    "Dn(p->q) | Dn(q->p)",
]


@pytest.mark.parametrize("text", GOLDEN_VALID)
def test_golden_valid(text):
    assert prove(parse(text), "KG2").valid
    assert prove(parse(text), "KbiG").valid


@pytest.mark.parametrize("text", GOLDEN_INVALID)
def test_golden_invalid(text):
    verdict = prove(parse(text), "KG2")
    assert not verdict.valid
    assert verdict.world == "w0"
    assert eval_kg2(verdict.model, "w0", parse(text)).pos < 1
    assert check_realization(verdict.model, verdict.branch)


def test_transitivity_counterexample_shape():
    f = parse("[]p -> [][]p")
    outcome = saturate(f)
    assert isinstance(outcome, OpenBranch)
    b = outcome.branch
    assert RelConstraint("w0", "w1") in b.relations
    assert RelConstraint("w1", "w2") in b.relations
    p = Var("p")
    assert Constraint(labeled("w2", 1, p), True, labeled("w1", 1, p)) in b
    model = extract_countermodel(b, f)
    assert model.value_of("w1", "p") == Pair(F(1, 6), F(0))
    assert eval_kg2(model, "w0", f).pos == 0


def test_dead_end_forced_zero_modal_bounds():
    # At a dead end the truth support of a diamond (and the falsity support
    # of a box) is 0 whatever the valuation, so a residual strict bound with
    # it under a variable must push that variable's value above 0.
    v = prove(parse("q -> <>p"))
    assert not v.valid
    assert v.model.value_of("w0", "q").pos > 0
    v2 = prove(parse("!([]<>p -< r)"))
    assert not v2.valid
    assert v2.model.value_of("w0", "r").neg > 0


def test_atom_and_constants():
    assert prove(parse("1")).valid
    assert not prove(parse("0")).valid
    v = prove(parse("p"))
    assert not v.valid
    assert eval_kg2(v.model, "w0", parse("p")).pos == 0


def test_trace_line_format():
    verdict = prove(parse("[]p -> [][]p"))
    pattern = re.compile(r"^\d+(\.\d+)*\t[a-z0-9_]+\t.+$")
    for line in verdict.trace:
        assert pattern.match(line), line
    assert verdict.trace[0] == "0\tinit\tw0:1:([]p -> [][]p) < 1"
    assert any(line.endswith("\tsaturated") for line in verdict.trace)


def test_closed_traces_mark_every_branch():
    verdict = prove(parse("p -> p"))
    assert isinstance(verdict, Valid)
    assert [l for l in verdict.trace if l.endswith("\tclosed")]
    assert not [l for l in verdict.trace if l.endswith("\tsaturated")]


def test_determinism():
    f = parse("Dn(p->q) | Dn(q->p)")
    first, second = prove(f), prove(f)
    assert first.trace == second.trace
    assert first.model.to_json() == second.model.to_json()
    g = parse("~~[](p | ~p)")
    assert saturate(g).trace == saturate(g).trace


def test_kbig_gate_and_logic_names():
    with pytest.raises(ValueError, match="'!'-free"):
        prove(parse("!p -> !p"), "KbiG")
    with pytest.raises(ValueError, match="unknown logic"):
        prove(parse("p"), "S5")


def test_resource_limits():
    f = parse("[]p -> [][]p")
    with pytest.raises(ResourceExhausted) as exc:
        prove(f, limits=TableauLimits(max_constraints=3))
    assert exc.value.constraints > 3
    with pytest.raises(ResourceExhausted) as exc:
        prove(f, limits=TableauLimits(max_worlds=1))
    assert exc.value.worlds > 1


def test_extraction_preconditions():
    b = Branch("0")
    b.add_constraint(Constraint(K1, True, K1), "t")
    with pytest.raises(ValueError, match="closed"):
        extract_countermodel(b, parse("p"))
    unsaturated = init_tableau(parse("p & q"))
    with pytest.raises(ValueError, match="saturated"):
        extract_countermodel(unsaturated, parse("p & q"))


# ---------------------------------------------------------------------------
# Per-rule semantic soundness: whenever a premise constraint holds in a
# model, some conclusion branch must hold too (for all successors for
# propagation schemata, for some successor for witness schemata -- witness
# trials are skipped at dead ends, where the calculus is allowed to extend
# the frame instead).


def _struct_value(m, s):
    if isinstance(s, Constant):
        return F(s.value)
    v = eval_kg2(m, s.world, s.formula)
    return v.pos if s.index == 1 else v.neg


def _holds(m, c):
    lhs, rhs = _struct_value(m, c.lhs), _struct_value(m, c.rhs)
    return lhs < rhs if c.strict else lhs <= rhs


_ARG_POOL = [parse(t) for t in ("p", "q", "r", "0", "1", "p & q", "p -> r")]


def _active_formula(rng, family):
    if family == "neg":
        return Neg(rng.choice(_ARG_POOL))
    if family == "box":
        return Box(rng.choice(_ARG_POOL))
    if family == "dia":
        return Dia(rng.choice(_ARG_POOL))
    op = {"and": And, "or": Or, "imp": Imp, "coimp": Coimp}[family]
    return op(rng.choice(_ARG_POOL), rng.choice(_ARG_POOL))


@pytest.mark.parametrize("rule_id", sorted(RULES_KG2.rules))
def test_rule_is_semantically_sound(rule_id):
    rule = RULES_KG2.rules[rule_id]
    rng = random.Random(f"soundness:{rule_id}")
    hits = 0
    for _ in range(400):
        m = random_crisp_model(rng, max_worlds=3, denominator=4)
        w = rng.choice(m.worlds)
        active = Labeled(w, rule.index, _active_formula(rng, rule.family))
        other = rng.choice(
            [K0, K1, Labeled(rng.choice(m.worlds), rng.randint(1, 2), rng.choice(_ARG_POOL))]
        )
        strict = {"both": rng.random() < 0.5, "weak": False, "strict": True}[rule.strictness]
        premise = (
            Constraint(active, strict, other)
            if rule.side == "lhs"
            else Constraint(other, strict, active)
        )
        if not _holds(m, premise):
            continue
        succ = m.successors(w)
        if rule.fresh:
            if not succ:
                continue
            hits += 1
            assert any(
                all(_holds(m, c) for c in _conclusions(rule, active, other, strict, u)[0])
                for u in succ
            ), f"{rule_id}: no successor realizes the witness conclusion of {premise}"
        elif rule.propagation:
            hits += 1
            for u in succ:
                (branch,) = _conclusions(rule, active, other, strict, u)
                assert all(_holds(m, c) for c in branch), (
                    f"{rule_id}: propagation to {u} fails under {premise}"
                )
        else:
            hits += 1
            branches = _conclusions(rule, active, other, strict)
            assert any(
                all(_holds(m, c) for c in branch) for branch in branches
            ), f"{rule_id}: no conclusion branch holds under {premise}"
    assert hits >= 5, f"{rule_id}: premise almost never satisfiable in random trials"
