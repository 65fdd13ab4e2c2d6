"""Command line: ``run``, ``report growth`` and ``verify theorems``.

Exit codes: 0 success, 1 invalid configuration or arguments, 2 runtime
failure, 3 invariant violation.
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
from pathlib import Path

from .core import ContractViolation, InvariantViolation
from .harness import (
    ConfigError,
    config_from_dict,
    emit_csv,
    growth_report_from_rounds,
    load_config,
    read_rounds_csv,
    run_experiment,
    verify_theorems,
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2
EXIT_INVARIANT = 3

log = logging.getLogger("metamax")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="metamax", description="Multi-start local search experiments.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run an experiment and write CSV results")
    run.add_argument("--config", help="JSON or key = value configuration file")
    run.add_argument("--strategy", help="comma-separated strategy kinds (replaces the configured list)")
    run.add_argument("--benchmark", help="benchmark kind")
    run.add_argument("--budget", type=int, help="evaluation budget T per run")
    run.add_argument("--runs", type=int, help="runs per strategy")
    run.add_argument("--seed", type=int, help="base seed")
    run.add_argument("--k", type=int, help="instance count K for fixed-pool strategies")
    run.add_argument("--out", help="output directory for the CSV files")
    run.add_argument("--no-check", action="store_true", help="skip the per-round invariant checks")

    report = sub.add_parser("report", help="summaries of earlier results")
    rsub = report.add_subparsers(dest="what", required=True, parser_class=_Parser)
    growth = rsub.add_parser("growth", help="instance-count growth r ln t / t from rounds.csv")
    growth.add_argument("--in", dest="path", required=True, help="rounds.csv written by run")
    growth.add_argument("--tail", type=int, default=1000, help="least t_r counted in the tail band")
    growth.add_argument("--strategy", help="only this strategy")
    growth.add_argument("--out", help="write the per-round ratio rows to this CSV file")

    verify = sub.add_parser("verify", help="self checks")
    vsub = verify.add_subparsers(dest="what", required=True, parser_class=_Parser)
    theorems = vsub.add_parser("theorems", help="synthetic theory-probe suite")
    theorems.add_argument("--quick", action="store_true", help="smaller probes")
    return p


def _load(args):
    overrides = {
        "benchmark": args.benchmark,
        "budget": args.budget,
        "runs": args.runs,
        "seed": args.seed,
        "k": args.k,
        "out": args.out,
    }
    if args.strategy:
        overrides["strategies"] = [s.strip() for s in args.strategy.split(",") if s.strip()]
    if args.config:
        return load_config(args.config, overrides)
    if not args.benchmark:
        raise ConfigError("give --config or at least --benchmark")
    return config_from_dict({}, overrides)


def cmd_run(args) -> int:
    try:
        config = _load(args)
    except ConfigError as exc:
        print(f"metamax: invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        result = run_experiment(
            config,
            check_invariants=not args.no_check,
            progress=lambda name, j: log.info("%s run %d done", name, j),
        )
    except (InvariantViolation, ContractViolation) as exc:
        print(f"metamax: invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except ConfigError as exc:
        print(f"metamax: invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"metamax: run failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    label = "mean error" if result.known_max is not None else "mean best"
    print(f"{'strategy':<16} {'runs':>5} {'invalid':>7} {label:>14} {'ci99':>10}")
    for s in config.strategies:
        c = result.curves.get(s.name)
        bad = result.invalid[s.name]
        if c is None:
            print(f"{s.name:<16} {0:>5} {bad:>7} {'-':>14} {'-':>10}")
            continue
        half = c.halfwidth[-1]
        half_s = "-" if math.isnan(half) else f"{half:.3e}"
        print(f"{s.name:<16} {int(c.runs[-1]):>5} {bad:>7} {c.mean[-1]:>14.6e} {half_s:>10}")
    if config.out:
        try:
            files = emit_csv(result.curves, result.traces, config.out)
        except OSError as exc:
            print(f"metamax: {exc}", file=sys.stderr)
            return EXIT_RUNTIME
        print("wrote " + ", ".join(str(f) for f in files))
    if any(result.invalid[s.name] == config.runs for s in config.strategies):
        print("metamax: every run of some strategy failed", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def cmd_growth(args) -> int:
    try:
        rounds = read_rounds_csv(args.path)
    except OSError as exc:
        print(f"metamax: cannot read {args.path}: {exc.strerror}", file=sys.stderr)
        return EXIT_RUNTIME
    except ValueError as exc:
        print(f"metamax: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.strategy:
        rounds = {k: v for k, v in rounds.items() if k[0] == args.strategy}
    if not rounds:
        print("metamax: no rounds to report", file=sys.stderr)
        return EXIT_CONFIG
    try:
        report = growth_report_from_rounds(rounds, args.tail)
    except ValueError as exc:
        print(f"metamax: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"{'strategy':<16} {'run':>4} {'rounds':>7} {'tail min':>9} {'tail max':>9}")
    for (name, run), pairs in sorted(rounds.items()):
        lo = report.tail_min.get((name, run), math.nan)
        hi = report.tail_max.get((name, run), math.nan)
        print(f"{name:<16} {run:>4} {len(pairs):>7} {lo:>9.4f} {hi:>9.4f}")
    lo, hi = report.band
    print(f"tail band (t_r >= {args.tail}): {lo:.4f} .. {hi:.4f}")
    if args.out:
        try:
            with Path(args.out).open("w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["strategy", "run", "total_steps", "round", "ratio"])
                for name, run, t, r, ratio in report.rows:
                    w.writerow([name, run, t, r, format(ratio, ".17g")])
        except OSError as exc:
            print(f"metamax: cannot write {args.out}: {exc.strerror}", file=sys.stderr)
            return EXIT_RUNTIME
    return EXIT_OK


def cmd_verify(args) -> int:
    try:
        results = verify_theorems(quick=args.quick)
    except (InvariantViolation, ContractViolation) as exc:
        print(f"FAIL invariant violation: {exc}")
        return EXIT_INVARIANT
    failed = False
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.detail}")
        failed |= not r.passed
    return EXIT_INVARIANT if failed else EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.command == "run":
        return cmd_run(args)
    if args.command == "report":
        return cmd_growth(args)
    return cmd_verify(args)


if __name__ == "__main__":
    sys.exit(main())
