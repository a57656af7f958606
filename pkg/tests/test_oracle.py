import random
from fractions import Fraction

import pytest

from conftest import random_crisp_model
from paragodel.algebra import Pair
from paragodel.formula import modal_depth, node_count, parse, variables
from paragodel.kripke import eval_kg2
from paragodel.oracle import (
    BudgetExceeded,
    Countermodel,
    ExhaustedNoCountermodel,
    FORMULA_BOTH,
    FORMULA_LEQ,
    GridSpec,
    SizeBounds,
    _compile,
    _eval_pair,
    _grid_stream,
    _model_at,
    agreement_run,
    enumerate_models,
    finite_unsat_check,
    model_count,
    oracle_search,
    random_formula,
    snap_to_grid,
)

F = Fraction


class TestEnumeration:
    def test_documented_counts(self):
        assert model_count(GridSpec(1, 2, ("p",))) == 18
        assert len(list(enumerate_models(GridSpec(1, 2, ("p",))))) == 18
        assert model_count(GridSpec(1, 2, ())) == 2
        assert len(list(enumerate_models(GridSpec(1, 2, ())))) == 2

    def test_default_denominator(self):
        assert GridSpec(3, variables=("p", "q")).denominator == 12
        assert GridSpec(2, variables=("p",)).denominator == 4
        assert GridSpec(1, variables=()).denominator == 1
        assert GridSpec.for_formula(parse("q -> p"), 3).denominator == 12

    def test_order_is_stable_and_index_addressable(self):
        spec = GridSpec(2, 1, ("p",))
        streamed = [m.to_json() for m in enumerate_models(spec)]
        assert streamed == [m.to_json() for m in enumerate_models(spec)]
        assert streamed == [
            _model_at(spec, i).to_json() for i in range(model_count(spec))
        ]

    def test_partition_by_index_range(self):
        spec = GridSpec(2, 1, ("p",))
        whole = [m.to_json() for m in enumerate_models(spec)]
        parts = []
        for lo in range(0, len(whole), 50):
            parts.extend(m.to_json() for m in enumerate_models(spec, lo, lo + 50))
        assert parts == whole

    def test_first_models_and_world_growth(self):
        spec = GridSpec(2, 1, ("p",))
        first = next(enumerate_models(spec))
        assert first.worlds == ("w0",)
        assert first.edges == frozenset()
        assert first.value_of("w0", "p") == Pair(F(0), F(0))
        sizes = [len(m.worlds) for m in enumerate_models(spec)]
        assert sizes == sorted(sizes)

    def test_grid_evaluator_matches_reference(self):
        spec = GridSpec(2, 3, ("p", "q"))
        fs = [parse(t) for t in ("!p -> <>q", "[](p & !q) -< p", "Dn p | D q")]
        progs = [_compile(f, spec.variables) for f in fs]
        n, d = 2, 3
        checked = 0
        for k, rel_bits, succ, digits in _grid_stream(spec, pos_only=False):
            checked += 1
            if checked % 971:
                continue
            m = _model_at_stream(spec, k, rel_bits, digits)
            for f, prog in zip(fs, progs):
                for w in range(k):
                    got = _eval_pair(prog, n, d, k, succ, digits, w)
                    want = eval_kg2(m, f"w{w}", f)
                    assert (F(got[0], d), F(got[1], d)) == want
        assert checked > 100_000


def _model_at_stream(spec, k, rel_bits, digits):
    from paragodel.oracle import _materialize

    return _materialize(spec, k, rel_bits, digits)


class TestSearch:
    def test_first_countermodel_in_canonical_order(self):
        out = oracle_search(parse("(p & !p) -> q"), GridSpec(1, 4, ("p", "q")))
        assert isinstance(out, Countermodel)
        assert out.world == "w0"
        assert out.model.value_of("w0", "p") == Pair(F(1, 4), F(1, 4))
        assert out.model.value_of("w0", "q") == Pair(F(0), F(0))

    def test_neg_free_search_stays_on_the_truth_side(self):
        out = oracle_search(parse("p -> q"), GridSpec(1, 2, ("p", "q")))
        assert isinstance(out, Countermodel)
        assert out.model.value_of("w0", "p") == Pair(F(1, 2), F(0))
        assert out.model.value_of("w0", "q") == Pair(F(0), F(0))

    def test_tautology_exhausts(self):
        assert isinstance(
            oracle_search(parse("p -> p"), GridSpec(1, 2, ("p",))),
            ExhaustedNoCountermodel,
        )

    def test_modal_validity_exhausts(self):
        # exhaustive over every 1- and 2-world crisp model on the {0..1/4..1}
        # grid (about ten thousand truth assignments)
        f = parse("1 -< <>((p -< q) & q)")
        out = oracle_search(f, GridSpec(2, 4, ("p", "q")))
        assert isinstance(out, ExhaustedNoCountermodel)

    def test_budget(self):
        out = oracle_search(parse("p -> p"), GridSpec(3, 12, ("p",)), budget=10)
        assert out == BudgetExceeded(models_tried=10)

    def test_modal_example_needs_a_second_world(self):
        f = parse("[]p -> [][]p")
        # one world cannot refute it: with a loop all three values coincide,
        # without one both boxes are vacuous
        assert isinstance(
            oracle_search(f, GridSpec(1, 2, ("p",))), ExhaustedNoCountermodel
        )
        # a two-world cycle w0 <-> w1 with p smaller at w0 already does
        out = oracle_search(f, GridSpec(2, 2, ("p",)))
        assert isinstance(out, Countermodel)
        assert eval_kg2(out.model, out.world, f).pos < 1
        assert len(out.model.worlds) == 2

    def test_variables_must_be_covered(self):
        with pytest.raises(ValueError, match="not covered"):
            oracle_search(parse("p -> q"), GridSpec(1, 2, ("p",)))


class TestFiniteUnsat:
    def test_small_scales(self):
        assert finite_unsat_check(1, 2)
        assert finite_unsat_check(2, 4)

    def test_single_guard_is_satisfiable(self):
        # a reflexive world with p = 1 satisfies the weak guard everywhere
        assert not finite_unsat_check(2, 4, FORMULA_LEQ)

    def test_rejects_involutive_negation(self):
        with pytest.raises(ValueError, match="'!'-free"):
            finite_unsat_check(1, 2, parse("!p"))

    def test_default_formula_shape(self):
        assert variables(FORMULA_BOTH) == ["p"]
        assert modal_depth(FORMULA_BOTH) == 1


class TestSnapToGrid:
    def test_preserves_failure_worlds(self):
        rng = random.Random(17)
        for _ in range(100):
            m = random_crisp_model(rng, denominator=7)
            f = random_formula(rng)
            snapped = snap_to_grid(m, 12)
            for w in m.worlds:
                assert (eval_kg2(m, w, f).pos == 1) == (
                    eval_kg2(snapped, w, f).pos == 1
                )

    def test_keeps_endpoints_and_order(self):
        m = random_crisp_model(random.Random(5), denominator=6)
        snapped = snap_to_grid(m, 6)
        for key, pair in m.valuation.items():
            for original, moved in zip(pair, snapped.valuation[key]):
                assert (original == 0) == (moved == 0)
                assert (original == 1) == (moved == 1)
                assert moved.denominator <= 6

    def test_too_many_distinct_values(self):
        from paragodel.kripke import load_model

        m = load_model(
            {
                "worlds": ["w0"],
                "relation": [],
                "valuation": {"w0": {"p": ["1/3", "2/5"], "q": ["3/7", "0"]}},
            }
        )
        with pytest.raises(ValueError, match="interior"):
            snap_to_grid(m, 2)
        snapped = snap_to_grid(m, 4)
        assert snapped.value_of("w0", "p") == Pair(F(1, 4), F(1, 2))
        assert snapped.value_of("w0", "q") == Pair(F(3, 4), F(0))


class TestRandomFormulas:
    def test_bounds_hold(self):
        bounds = SizeBounds(max_vars=2, max_modal_depth=1, max_nodes=9)
        for i in range(300):
            f = random_formula(random.Random(f"b:{i}"), bounds)
            assert node_count(f) <= 9
            assert modal_depth(f) <= 1
            assert set(variables(f)) <= {"p", "q"}

    def test_deterministic(self):
        fs = [random_formula(random.Random(f"s:{i}")) for i in range(50)]
        gs = [random_formula(random.Random(f"s:{i}")) for i in range(50)]
        assert fs == gs
        assert len({str(f) for f in fs}) > 30

    def test_allow_neg_off(self):
        from paragodel.formula import is_neg_free

        for i in range(100):
            assert is_neg_free(random_formula(random.Random(i), allow_neg=False))


class TestAgreementRun:
    def test_clean_run(self):
        report = agreement_run(60, seed=5)
        assert report.discrepancies == []
        t = report.totals
        assert t["valid"] + t["invalid"] + t["inconclusive"] == 60
        assert (
            t["oracle_found"] + t["oracle_exhausted"] + t["oracle_budget_exceeded"]
            == 60
        )

    def test_reproducible(self):
        a = agreement_run(40, seed=9).to_json_dict()
        b = agreement_run(40, seed=9).to_json_dict()
        assert a == b

    def test_report_text_and_json(self):
        report = agreement_run(15, SizeBounds(), 3)
        lines = report.lines()
        assert lines[0] == "agreement run\t15 formulas\tseed 3"
        assert any(line.startswith("discrepancies\t0") for line in lines)
        loaded = __import__("json").loads(report.to_json())
        assert loaded["totals"] == report.totals
        assert loaded["bounds"]["max_nodes"] == 12

    def test_formulas_reproducible_from_item_seed(self):
        # the contract that makes reported discrepancies actionable
        f1 = random_formula(random.Random("5:17"), SizeBounds())
        f2 = random_formula(random.Random("5:17"), SizeBounds())
        assert f1 == f2


def test_grid_default_suffices_for_small_countermodels():
    """Whenever the prover refutes with a small model, a full search over the
    matching default grid must find a countermodel too."""
    from paragodel.tableau import prove

    exercised = 0
    for i in range(120):
        f = random_formula(random.Random(f"grid:{i}"))
        verdict = prove(f)
        if verdict.valid:
            continue
        worlds = len(verdict.model.worlds)
        spec = GridSpec.for_formula(f, worlds)
        if model_count(spec) > 20_000:
            continue
        exercised += 1
        assert isinstance(oracle_search(f, spec), Countermodel), str(f)
    assert exercised >= 8
