"""Command-line runner: ``geoflow <scenario> [--config PATH] [--out DIR] ...``.

Exit status is 0 when every check passes, 1 when some check fails, 2 for
usage or configuration errors and 3 for other runtime failures.
"""
from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from .config import SCENARIOS, load_config
from .errors import ConfigurationError, GeoflowError, UsageError
from .report import emit_report
from .scenarios import resolve_jobs, run_scenario


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="geoflow", description="Run geodesic-flow cone and deformation experiments.")
    p.add_argument("scenario", help="one of: " + ", ".join(SCENARIOS + ("all",)))
    p.add_argument("--config", help="flat key = value configuration file")
    p.add_argument("--out", help="output directory (default from config, else '.')")
    p.add_argument("--format", choices=("csv", "json"), help="report format")
    p.add_argument("--seed", type=int, help="64-bit seed overriding the config")
    p.add_argument("--jobs", type=int, help="worker processes (fallback: GEOFLOW_JOBS, then config)")
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.scenario not in SCENARIOS + ("all",):
            raise UsageError(f"unknown scenario {args.scenario!r}; choose one of {', '.join(SCENARIOS + ('all',))}")
        if args.jobs is not None and args.jobs < 1:
            raise UsageError("--jobs must be at least 1")
        cfg = load_config(args.config, seed=args.seed, out_dir=args.out, format=args.format)
    except (UsageError, ConfigurationError) as exc:
        print(f"geoflow: {exc}", file=sys.stderr)
        return 2
    jobs = resolve_jobs(args.jobs, cfg)
    names = SCENARIOS if args.scenario == "all" else (args.scenario,)
    failed = []
    try:
        for name in names:
            rep = run_scenario(cfg, name, jobs)
            paths = emit_report(rep, cfg.out_dir, cfg.format)
            status = "PASS" if rep.verdict else "FAIL"
            print(f"{status} {name} -> {paths[0]}")
            for rec in rep.failures:
                failed.append((name, rec))
    except GeoflowError as exc:
        print(f"geoflow: {exc.kind} error: {exc}", file=sys.stderr)
        return 3
    for name, rec in failed:
        print(
            f"failed: {name}/{rec.name} measured={rec.measured!r} expected={rec.expected!r} "
            f"relation={rec.relation} tolerance={rec.tolerance!r}",
            file=sys.stderr,
        )
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
