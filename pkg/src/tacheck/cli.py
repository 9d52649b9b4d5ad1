"""Command-line interface: ``tacheck check|simulate|timing|models``."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from .bufferlab import corpus, timing_table
from .core import ModelError
from .formulas import QueryError
from .modelspec import ModelSyntaxError, load_network, parse_queries
from .verifier import LEADSTO_NOTE, BudgetExceeded, check, simulate


class CliError(Exception):
    pass


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror or exc}") from None


def _load(path: str):
    try:
        return load_network(_read(path))
    except ModelSyntaxError as exc:
        raise CliError("\n".join(f"{path}:{d}" for d in exc.diagnostics)) from None


def _non_negative(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be non-negative: {value}")
    return value


def _positive(text: str) -> int:
    value = _non_negative(text)
    if value == 0:
        raise argparse.ArgumentTypeError("must be at least 1")
    return value


def _alpha_range(text: str) -> range:
    if not text.strip():
        return range(0)
    lo, sep, hi = text.partition("..")
    if not sep:
        lo = hi = lo
    a, b = _non_negative(lo.strip()), _non_negative(hi.strip())
    return range(a, b + 1)


def cmd_check(args) -> int:
    net = _load(args.model)
    try:
        queries = parse_queries(_read(args.queries))
    except ModelSyntaxError as exc:
        raise CliError("\n".join(f"{args.queries}:{d}" for d in exc.diagnostics)) from None
    verdicts = []
    footnote = False
    for q in queries:
        v = check(net, q, budget=args.budget, jobs=args.jobs)
        verdicts.append(v)
        st = v.stats
        mark = " *" if v.notes else ""
        footnote |= bool(v.notes)
        word = "SATISFIED" if v.satisfied else "NOT SATISFIED"
        print(
            f"{word}: {q.render()} "
            f"(explored={st.explored} stored={st.stored} max_waiting={st.max_waiting}){mark}"
        )
    if footnote:
        print(f"* {LEADSTO_NOTE}")
    if args.trace:
        doc = [v.to_json() for v in verdicts]
        Path(args.trace).write_text(json.dumps(doc, indent=2) + "\n")
    return 0 if all(v.satisfied for v in verdicts) else 1


def cmd_simulate(args) -> int:
    net = _load(args.model)
    trace = simulate(net, args.seed, args.steps)
    steps = trace.to_json()
    doc = {
        "seed": args.seed,
        "initial": steps[0],
        "trace": steps[1:],
        "deadlock": trace.deadlock,
    }
    print(json.dumps(doc, indent=2))
    return 0


def cmd_timing(args) -> int:
    rows = timing_table(args.alphas, args.zeta, args.theta)
    out = csv.writer(sys.stdout, lineterminator="\n")
    out.writerow(["point", "alpha", "closed_form", "measured"])
    for r in rows:
        out.writerow([r.point.value, r.alpha, r.closed_form, r.measured])
    if args.plot:
        from .plots import plot_timing

        plot_timing(rows, args.plot, title=f"ζ={args.zeta}, θ={args.theta}")
    return 0


def cmd_models(args) -> int:
    entries = corpus()
    if args.action == "list":
        for e in entries.values():
            print(f"{e.name}\t{e.description}")
        return 0
    if args.name not in entries:
        raise CliError(f"unknown model {args.name!r}; try 'models list'")
    e = entries[args.name]
    target = Path(args.dir)
    target.mkdir(parents=True, exist_ok=True)
    for suffix, text in ((".tam", e.model), (".tq", e.queries)):
        path = target / f"{e.name}{suffix}"
        path.write_text(text)
        print(path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tacheck", description="Timed-automata model checker.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="verify queries against a model")
    p.add_argument("model")
    p.add_argument("queries")
    p.add_argument("--trace", metavar="PATH", help="write verdicts and witness traces as JSON")
    p.add_argument("--budget", type=_non_negative, default=1_000_000, metavar="N")
    p.add_argument("--jobs", type=_positive, default=1, metavar="N")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("simulate", help="print a random concrete run as JSON")
    p.add_argument("model")
    p.add_argument("--seed", type=_non_negative, default=0)
    p.add_argument("--steps", type=_non_negative, default=20)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("timing", help="closed-form vs simulated arrival times as CSV")
    p.add_argument("--zeta", type=_non_negative, required=True)
    p.add_argument("--theta", type=_non_negative, required=True)
    p.add_argument("--alphas", type=_alpha_range, default=range(0, 4), metavar="A..B")
    p.add_argument("--plot", metavar="PATH", help="also render the table as a PNG figure")
    p.set_defaults(func=cmd_timing)

    p = sub.add_parser("models", help="list or write the bundled corpus")
    msub = p.add_subparsers(dest="action", required=True)
    msub.add_parser("list")
    emit = msub.add_parser("emit")
    emit.add_argument("name")
    emit.add_argument("dir")
    p.set_defaults(func=cmd_models)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    try:
        return args.func(args)
    except (CliError, ModelError, QueryError, BudgetExceeded, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
