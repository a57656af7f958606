"""Command line front end.

Subcommands:

  prove         decide a formula; countermodel JSON on stdout when it fails
  check         evaluate a formula on a model file at every world
  countermodel  like prove, but always emits either a model or VALID
  oracle        brute-force countermodel search over a bounded grid
  fuzz          randomized prover/oracle agreement run

Exit codes follow one convention throughout: 0 for the affirmative outcome
(valid, satisfiable, value everywhere 1, no countermodel, no discrepancies),
1 for the refuting outcome, 2 for errors, unparseable input, or giving up.
Plain `prove` output is a countermodel in the same JSON schema `check`
consumes, so the two compose through a pipe with `--model -`.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional

from .formula import CONST0, Coimp, ParseError, derived, parse
from .kripke import (
    ModelError,
    eval_kbig,
    eval_kg2,
    format_value,
    is_valid_on_model,
    load_model,
)
from .oracle import (
    BudgetExceeded,
    Countermodel,
    GridSpec,
    SizeBounds,
    agreement_run,
    oracle_search,
)
from .tableau import Invalid, ResourceExhausted, Valid, prove

_LOGIC = {"kg2": "KG2", "kbig": "KbiG"}


def _build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="paragodel",
        description="Prover, model checker and brute-force oracle for a "
        "paraconsistent Goedel modal logic.",
    )
    sub = top.add_subparsers(dest="command", required=True)

    def add_logic(p):
        p.add_argument("--logic", choices=("kg2", "kbig"), default="kg2",
                       help="kg2: pairs with a de Morgan negation (default); "
                       "kbig: single-component, '!'-free fragment")

    p = sub.add_parser("prove", help="decide validity (or satisfiability)")
    p.add_argument("formula", metavar="FORMULA")
    add_logic(p)
    p.add_argument("--trace", action="store_true",
                   help="print the derivation, one line per added constraint")
    p.add_argument("--satisfiable", action="store_true",
                   help="decide satisfiability instead, by refuting the "
                   "double-guard of FORMULA -< 0")

    p = sub.add_parser("check", help="evaluate a formula on a model")
    p.add_argument("--model", required=True, metavar="PATH",
                   help="model JSON file, or - for stdin")
    p.add_argument("--formula", required=True, metavar="FORMULA")
    p.add_argument("--world", metavar="W", help="print only this world")
    add_logic(p)

    p = sub.add_parser("countermodel", help="always print a model or VALID")
    p.add_argument("formula", metavar="FORMULA")
    add_logic(p)

    p = sub.add_parser("oracle", help="exhaustive grid search")
    p.add_argument("formula", metavar="FORMULA")
    p.add_argument("--max-worlds", type=int, required=True, metavar="K")
    p.add_argument("--den", type=int, default=None, metavar="D",
                   help="grid denominator (default: 2 * vars * K)")
    p.add_argument("--budget", type=int, default=None, metavar="N",
                   help="stop after examining N candidates")

    p = sub.add_parser("fuzz", help="random prover/oracle agreement run")
    p.add_argument("--n", type=int, default=100, metavar="N")
    p.add_argument("--seed", type=int, default=0, metavar="S")
    p.add_argument("--oracle-worlds", type=int, default=2, metavar="K")
    p.add_argument("--budget", type=int, default=2000, metavar="N")
    p.add_argument("--json-out", metavar="PATH", help="also write a JSON report")
    p.add_argument("--plot", metavar="PATH",
                   help="also render an outcome bar chart to this file")

    return top


def _cmd_prove(args) -> int:
    f = parse(args.formula)
    if args.satisfiable:
        # FORMULA is satisfiable exactly when ~~(FORMULA -< 0) is refutable.
        f = derived("gneg", derived("gneg", Coimp(f, CONST0)))
    verdict = prove(f, _LOGIC[args.logic])
    if args.trace:
        for line in verdict.trace:
            print(line)
    if args.satisfiable:
        if isinstance(verdict, Invalid):
            print(verdict.model.to_json())
            return 0
        print("UNSATISFIABLE")
        return 1
    if isinstance(verdict, Valid):
        print("VALID")
        return 0
    print(verdict.model.to_json())
    return 1


def _cmd_check(args) -> int:
    text = sys.stdin.read() if args.model == "-" else args.model
    m = load_model(text)
    f = parse(args.formula)
    if args.world is not None and args.world not in m.worlds:
        raise ModelError(f"unknown world {args.world!r}")
    show = m.worlds if args.world is None else (args.world,)
    if args.logic == "kbig":
        values = {w: eval_kbig(m, w, f) for w in m.worlds}
        for w in show:
            print(f"{w}\t{format_value(values[w])}")
        return 0 if all(v == 1 for v in values.values()) else 1
    for w in show:
        v = eval_kg2(m, w, f)
        print(f"{w}\t{format_value(v.pos)}\t{format_value(v.neg)}")
    return 0 if is_valid_on_model(m, f) else 1


def _cmd_countermodel(args) -> int:
    verdict = prove(parse(args.formula), _LOGIC[args.logic])
    if isinstance(verdict, Valid):
        print("VALID")
        return 0
    print(verdict.model.to_json())
    return 1


def _cmd_oracle(args) -> int:
    f = parse(args.formula)
    spec = GridSpec.for_formula(f, args.max_worlds, args.den)
    outcome = oracle_search(f, spec, budget=args.budget)
    if isinstance(outcome, Countermodel):
        print(outcome.model.to_json())
        print(f"countermodel at {outcome.world}", file=sys.stderr)
        return 1
    if isinstance(outcome, BudgetExceeded):
        print(f"budget exceeded after {outcome.models_tried} candidates",
              file=sys.stderr)
        return 2
    print("NO COUNTERMODEL")
    return 0


def _cmd_fuzz(args) -> int:
    report = agreement_run(
        args.n,
        SizeBounds(),
        args.seed,
        oracle_max_worlds=args.oracle_worlds,
        oracle_budget=args.budget,
    )
    for line in report.lines():
        print(line)
    if args.json_out:
        with open(args.json_out, "w", encoding="utf-8") as fh:
            fh.write(report.to_json() + "\n")
    if args.plot:
        _render_plot(report, args.plot)
    return 0 if not report.discrepancies else 1


def _render_plot(report, path: str) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    t = report.totals
    labels = ["valid", "invalid", "inconcl.", "found", "exhausted",
              "budget", "discrep."]
    counts = [t["valid"], t["invalid"], t["inconclusive"], t["oracle_found"],
              t["oracle_exhausted"], t["oracle_budget_exceeded"],
              len(report.discrepancies)]
    fig, ax = plt.subplots(figsize=(7, 4))
    bars = ax.bar(labels, counts, color=["#4c72b0"] * 3 + ["#55a868"] * 3 + ["#c44e52"])
    ax.bar_label(bars)
    ax.set_ylabel("formulas")
    ax.set_title(f"agreement run: n={report.count}, seed={report.seed}")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def run(argv) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        if args.command == "prove":
            return _cmd_prove(args)
        if args.command == "check":
            return _cmd_check(args)
        if args.command == "countermodel":
            return _cmd_countermodel(args)
        if args.command == "oracle":
            return _cmd_oracle(args)
        return _cmd_fuzz(args)
    except ParseError as e:
        print(f"parse error at position {e.position}: {e.message}", file=sys.stderr)
        return 2
    except ModelError as e:
        print(f"model error: {e}", file=sys.stderr)
        return 2
    except ResourceExhausted as e:
        print(f"gave up: {e}", file=sys.stderr)
        return 2
    except RuntimeError as e:
        print(str(e), file=sys.stderr)
        return 2
    except (ValueError, OSError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


def main(argv: Optional[list[str]] = None) -> int:
    return run(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
