"""Command-line entry point: run, sweep, and verify subcommands.

Exit codes: 0 success, 1 property failure, 2 usage/config error,
3 numerical error.  Default output is machine-parseable; --progress adds
human-readable logging on stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace

import numpy as np

from . import verify as verify_mod
from .adapter import VARIANTS
from .config import (
    SUBSPACE_MODES,
    SWEEP_AXES,
    build_cycle,
    build_seeds,
    build_stream,
    load_config,
    output_directory,
)
from .continual import (
    run_experiment,
    write_ledger_csv,
    write_metrics_csv,
    write_spectra_csv,
)
from .errors import ConfigError, NusaError

EXIT_OK = 0
EXIT_PROPERTY = 1
EXIT_USAGE = 2
EXIT_NUMERICAL = 3


def _progress(enabled: bool, message: str) -> None:
    if enabled:
        print(message, file=sys.stderr)


def _worker_cap() -> int:
    raw = os.environ.get("NUSA_THREADS", "1")
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"NUSA_THREADS must be an integer, got {raw!r}")
    if value < 1:
        raise ConfigError(f"NUSA_THREADS must be >= 1, got {value}")
    return value


def _write_run_artifacts(out_dir, reports, progress: bool) -> None:
    os.makedirs(out_dir, exist_ok=True)
    for report in reports:
        path = os.path.join(out_dir, f"report_seed{report.seed}.json")
        with open(path, "w") as fh:
            json.dump(report.to_json_dict(), fh, indent=2, sort_keys=True)
    write_metrics_csv(os.path.join(out_dir, "metrics.csv"), reports)
    write_ledger_csv(os.path.join(out_dir, "ledger.csv"), reports)
    write_spectra_csv(os.path.join(out_dir, "spectra.csv"), reports)
    _progress(progress, f"wrote artifacts for {len(reports)} run(s) to {out_dir}")


def _execute_runs(stream, cycle, seeds, progress: bool):
    workers = min(_worker_cap(), len(seeds))
    if workers == 1:
        return [run_experiment(stream, cycle, seed) for seed in seeds]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda s: run_experiment(stream, cycle, s), seeds))


def cmd_run(args) -> int:
    document = load_config(args.config)
    stream = build_stream(document)
    cycle = build_cycle(document)
    seeds = list(args.seeds) if args.seeds else build_seeds(document)
    out_dir = output_directory(document, args.out)
    _progress(args.progress, f"run: {len(seeds)} seed(s) -> {out_dir}")
    reports = _execute_runs(stream, cycle, seeds, args.progress)
    _write_run_artifacts(out_dir, reports, args.progress)
    return EXIT_OK


def _axis_overrides(axis: str, raw: str):
    if axis == "mode":
        if raw not in SUBSPACE_MODES:
            raise ConfigError(f"invalid mode {raw!r}; choose from {SUBSPACE_MODES}")
        return {"mode": raw}
    if axis == "variant":
        if raw not in VARIANTS:
            raise ConfigError(f"invalid variant {raw!r}; choose from {VARIANTS}")
        return {"variant": raw}
    try:
        if axis == "r":
            return {"r_max": int(raw)}
        if axis == "rho":
            return {"rho": float(raw)}
    except ValueError:
        raise ConfigError(f"invalid value {raw!r} for sweep axis {axis!r}")
    raise ConfigError(f"unknown sweep axis {axis!r}")


def cmd_sweep(args) -> int:
    document = load_config(args.config)
    stream = build_stream(document)
    cycle = build_cycle(document)
    seeds = list(args.seeds) if args.seeds else build_seeds(document)
    out_dir = output_directory(document, args.out)
    os.makedirs(out_dir, exist_ok=True)
    if not args.values:
        raise ConfigError("sweep requires --values")

    rows = []
    partial = False
    try:
        for raw in args.values:
            overrides = _axis_overrides(args.axis, raw)
            swept = replace(cycle, **overrides)
            _progress(args.progress, f"sweep {args.axis}={raw}")
            reports = _execute_runs(stream, swept, seeds, args.progress)
            _write_run_artifacts(
                os.path.join(out_dir, f"{args.axis}_{raw}"), reports, args.progress
            )
            n = len(reports)
            row = {"axis": args.axis, "value": raw, "seeds": n}
            for name in ("transfer", "avg", "last", "forgetting"):
                values = np.array([getattr(r, name) for r in reports])
                row[f"{name}_mean"] = repr(float(values.mean()))
                row[f"{name}_se"] = repr(
                    float(values.std() / np.sqrt(n)) if n > 1 else 0.0
                )
            rows.append(row)
    except NusaError:
        partial = True
        raise
    finally:
        if rows:
            path = os.path.join(out_dir, "sweep.csv")
            with open(path, "w", newline="") as fh:
                writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
                writer.writeheader()
                writer.writerows(rows)
            if partial:
                with open(os.path.join(out_dir, "PARTIAL"), "w") as fh:
                    fh.write("sweep aborted before completing all values\n")
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.trials < 1:
        print(f"error: --trials must be >= 1, got {args.trials}", file=sys.stderr)
        return EXIT_USAGE
    results = verify_mod.run_battery(args.trials, args.seed)
    width = max(len(r.name) for r in results)
    failed = [r for r in results if not r.passed]
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        line = f"{r.name:<{width}}  {status}  trials={r.trials}"
        if r.detail:
            line += f"  {r.detail}"
        print(line)
    for r in failed:
        print(
            f"failure: {r.name} (seed {args.seed}): {r.detail} "
            f"witness={json.dumps(r.witness, default=str)}",
            file=sys.stderr,
        )
    return EXIT_PROPERTY if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nusacl",
        description=(
            "Null-space constrained low-rank adaptation: experiment runner, "
            "ablation sweeps, and numerical property verification."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run an experiment from a JSON config")
    run_p.add_argument("--config", required=True, help="path to the JSON config")
    run_p.add_argument("--out", help="output directory (overrides config)")
    run_p.add_argument(
        "--seeds", type=int, nargs="+", help="seed list (overrides config)"
    )
    run_p.add_argument("--progress", action="store_true", help="log progress")
    run_p.set_defaults(func=cmd_run)

    sweep_p = sub.add_parser("sweep", help="sweep one axis over several values")
    sweep_p.add_argument("--config", required=True)
    sweep_p.add_argument("--out", help="output directory (overrides config)")
    sweep_p.add_argument("--axis", required=True, choices=SWEEP_AXES)
    sweep_p.add_argument(
        "--values", nargs="+", required=True, help="axis values to sweep"
    )
    sweep_p.add_argument("--seeds", type=int, nargs="+")
    sweep_p.add_argument("--progress", action="store_true")
    sweep_p.set_defaults(func=cmd_sweep)

    verify_p = sub.add_parser("verify", help="run the numerical property battery")
    verify_p.add_argument("--trials", type=int, default=1000)
    verify_p.add_argument("--seed", type=int, default=0)
    verify_p.add_argument("--progress", action="store_true")
    verify_p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except ConfigError as exc:
        location = f" at {exc.field_path}" if exc.field_path else ""
        print(f"config error{location}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NusaError as exc:
        print(f"numerical error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
