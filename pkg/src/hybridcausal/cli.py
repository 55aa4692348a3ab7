"""Command-line entry point.

Exit codes: 0 ok, 1 causal violation, 2 liveness failure (tick limit hit
with work outstanding), 64 configuration error.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import oracle, scenarios
from .metrics import MESSAGE_COLUMNS, SUMMARY_COLUMNS, RunMetrics, analyze, write_csv
from .netsim import ENGINES, ConfigError, RunResult, run

OUT_ENV = "HYBRIDCAUSAL_OUT"

EXIT_OK, EXIT_VIOLATION, EXIT_LIVENESS, EXIT_CONFIG = 0, 1, 2, 64


def _exit_code(result: RunResult, verdict: oracle.Verdict) -> int:
    if not verdict.causal_ok:
        return EXIT_VIOLATION
    if not result.quiescent or verdict.undelivered:
        return EXIT_LIVENESS
    return EXIT_OK


def _out_dir(arg: Optional[str]) -> Path:
    out = arg or os.environ.get(OUT_ENV)
    if not out:
        raise ConfigError(f"no output directory: pass --out or set {OUT_ENV}")
    path = Path(out)
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise ConfigError(f"cannot create output directory {path}: {e.strerror}") from None
    return path


def _execute(sc: scenarios.Scenario, engine: str) -> tuple[RunResult, oracle.Verdict, RunMetrics]:
    result = run(sc.config, sc.processes, engine, sc.script)
    verdict = oracle.check(result.trace)
    return result, verdict, analyze(result.trace, result)


def _residency_report(sc: scenarios.Scenario, runs: dict[str, RunMetrics]) -> str:
    src, mid = sc.focus
    lines = ["engine\tmessage\tc_tick\ts_tick\tresidency"]
    for engine, rm in runs.items():
        c, s = rm.residency_interval(src, mid)
        res = "" if s is None else s - c
        lines.append(f"{engine}\t{src}:{mid}\t{c}\t{'' if s is None else s}\t{res}")
    return "\n".join(lines) + "\n"


def cmd_run(args: argparse.Namespace) -> int:
    sc = scenarios.load(args.scenario).with_overrides(args.seed, args.tick_limit, args.engine)
    out = _out_dir(args.out)
    result, verdict, rm = _execute(sc, sc.engine)
    (out / "trace.tsv").write_text(result.trace.to_text())
    (out / "verdict.txt").write_text(verdict.to_text())
    (out / "metrics.csv").write_text(write_csv(rm.message_rows(sc.engine), MESSAGE_COLUMNS))
    (out / "summary.csv").write_text(write_csv([rm.summary_row(sc.engine)], SUMMARY_COLUMNS))
    if sc.focus:
        (out / "residency.tsv").write_text(_residency_report(sc, {sc.engine: rm}))
    code = _exit_code(result, verdict)
    print(f"{sc.name}\t{sc.engine}\t{'quiescent' if result.quiescent else 'not quiescent'}"
          f"\tviolations={len(verdict.violations)}\texit={code}")
    for v in verdict.violations[:10]:
        print(f"violation\t{v.describe()}")
    return code


def cmd_compare(args: argparse.Namespace) -> int:
    engines = [e.strip() for e in args.engines.split(",") if e.strip()]
    unknown = [e for e in engines if e not in ENGINES]
    if not engines or unknown:
        raise ConfigError(f"unknown engines {unknown}; choose from {sorted(ENGINES)}")
    sc = scenarios.load(args.scenario).with_overrides(args.seed, args.tick_limit)
    out = _out_dir(args.out)
    runs: dict[str, RunMetrics] = {}
    message_rows: list[list] = []
    summary_rows: list[list] = []
    codes = []
    for engine in engines:
        result, verdict, rm = _execute(sc, engine)
        (out / f"trace_{engine}.tsv").write_text(result.trace.to_text())
        (out / f"verdict_{engine}.txt").write_text(verdict.to_text())
        runs[engine] = rm
        message_rows += rm.message_rows(engine)
        summary_rows.append(rm.summary_row(engine))
        code = _exit_code(result, verdict)
        codes.append(code)
        print(f"{sc.name}\t{engine}\tthroughput={rm.throughput():.6f}"
              f"\tviolations={len(verdict.violations)}\texit={code}")
    (out / "metrics.csv").write_text(write_csv(message_rows, MESSAGE_COLUMNS))
    (out / "summary.csv").write_text(write_csv(summary_rows, SUMMARY_COLUMNS))
    if sc.focus:
        report = _residency_report(sc, runs)
        (out / "residency.tsv").write_text(report)
        sys.stdout.write(report)
    from .plotting import plot_comparison
    plot_comparison(runs, out / "compare.png", title=sc.name)
    if EXIT_VIOLATION in codes:
        return EXIT_VIOLATION
    return max(codes)


def cmd_list(args: argparse.Namespace) -> int:
    for name, factory in scenarios.BUILTINS.items():
        if name == "random":
            desc = "random sends; parameters " + ",".join(scenarios.RANDOM_PARAMS)
        else:
            sc = factory()
            desc = f"{sc.description} (default engine {sc.engine})"
        print(f"{name}\t{desc}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hybridcausal",
                                description="Simulate causal-delivery engines and check their traces.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one scenario through one engine")
    r.add_argument("scenario", help="built-in name, random:key=val,..., or a JSON file")
    r.add_argument("--out", help=f"output directory (default: ${OUT_ENV})")
    r.add_argument("--seed", type=int)
    r.add_argument("--tick-limit", type=int)
    r.add_argument("--engine", choices=sorted(ENGINES))
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("compare", help="run one scenario through several engines")
    c.add_argument("scenario")
    c.add_argument("--engines", required=True, help="comma-separated engine names")
    c.add_argument("--out", help=f"output directory (default: ${OUT_ENV})")
    c.add_argument("--seed", type=int)
    c.add_argument("--tick-limit", type=int)
    c.set_defaults(func=cmd_compare)

    ls = sub.add_parser("list-scenarios", help="list built-in scenarios")
    ls.set_defaults(func=cmd_list)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_CONFIG
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
