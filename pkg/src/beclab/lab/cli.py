"""Command-line interface.

Subcommands: run, sweep, report, validate.  Exit codes: 0 ok, 1 config
error, 2 runtime failure, 3 experiment FAIL status.  Flags override
BECLAB_* environment variables, which override the config file.
"""

from __future__ import annotations

import argparse
import os
import sys

from .config import ConfigError, ExperimentConfig, parse_file
from .experiments import report, run, run_sweep

ENV_PREFIX = "BECLAB_"

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2
EXIT_FAIL = 3


def _env(name, cast=str):
    raw = os.environ.get(ENV_PREFIX + name.upper())
    if raw is None:
        return None
    try:
        if cast is bool:
            return raw.lower() in ("1", "true", "yes")
        return cast(raw)
    except ValueError as exc:
        raise ConfigError(f"environment {ENV_PREFIX}{name.upper()}: {exc}") from exc


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="beclab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("run", "sweep", "validate"):
        p = sub.add_parser(name)
        p.add_argument("--config", help="path to the experiment config file")
        p.add_argument("--out", help="output directory (overrides config)")
        p.add_argument("--seed", type=int, help="deterministic seed (u64)")
        p.add_argument("--threads", type=int, help="parallel runs for sweep")
        p.add_argument("--emit-plots", choices=("true", "false"), help="emit plots after the run")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a [params] entry")
    p = sub.add_parser("report")
    p.add_argument("--out", required=True, help="directory holding run outputs")
    return parser


def _load_config(args) -> ExperimentConfig:
    path = args.config or _env("config")
    if not path:
        raise ConfigError("run: --config (or BECLAB_CONFIG) is required")
    config = parse_file(path)
    overrides = {}
    out = args.out or _env("out")
    if out:
        overrides["out_dir"] = out
    seed = args.seed if args.seed is not None else _env("seed", int)
    if seed is not None:
        overrides["seed"] = seed
    threads = args.threads if args.threads is not None else _env("threads", int)
    if threads is not None:
        overrides["threads"] = threads
    emit = args.emit_plots
    emit = (emit == "true") if emit is not None else _env("emit_plots", bool)
    if emit is not None:
        overrides["emit_plots"] = emit
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set {item!r}: expected KEY=VALUE")
        key, value = item.split("=", 1)
        overrides[key.strip()] = value.strip()
    return config.with_overrides(**overrides)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "report":
            summary = report(args.out)
            print(f"aggregated {len(summary['runs'])} runs, {summary['failures']} failures")
            return EXIT_FAIL if summary["failures"] else EXIT_OK
        config = _load_config(args)
        if args.command == "validate":
            print(f"config ok: kind={config.kind} out={config.out_dir}")
            return EXIT_OK
        if args.command == "sweep":
            results = run_sweep(config)
            failures = sum(1 for r in results if r["status"] == "FAIL")
            print(f"sweep finished: {len(results)} runs, {failures} FAIL")
            return EXIT_FAIL if failures else EXIT_OK
        result = run(config)
        status = result["status"] or "OK"
        print(f"{config.kind}: {status}; artifacts in {result['out_dir']}")
        return EXIT_FAIL if result["status"] == "FAIL" else EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # runtime failure, including refusals
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
