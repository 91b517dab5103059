"""Command line front end.

Exit codes: 0 success, 2 argument or input parsing problems, 3 config
invariant violations, 4 output write failures.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import statistics
import sys
import time
from fractions import Fraction
from pathlib import Path

from .archspec import SystemConfig, data_dir, load_config
from .costmodel import evaluate
from .workload import Suite, load_suite, synthetic_sweep

SCHEMA = "cimdse-v1"

EVAL_COLUMNS = (
    "suite", "gemm_m", "gemm_n", "gemm_k", "config", "tops_per_w", "gflops",
    "utilization", "total_pJ", "total_cycles", "compute_cycles", "bound",
)
COMPARE_COLUMNS = (
    "kind", "suite", "gemm_m", "gemm_n", "gemm_k", "config", "reference",
    "tops_per_w_ratio", "gflops_ratio", "utilization_ratio",
)


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _render(value):
    if isinstance(value, Fraction):
        return float(value)
    return value


def _resolve(kind: str, token: str) -> Path:
    """A --config or --suite value is a bundled name or a file path."""
    path = Path(token)
    if path.suffix == ".json" or path.exists():
        if not path.is_file():
            raise CliError(f"{kind} file not found: {token}", 2)
        return path
    bundled = data_dir() / f"{kind}s" / f"{token}.json"
    if bundled.is_file():
        return bundled
    raise CliError(f"unknown {kind} {token!r} and no such file", 2)


def _load_configs(tokens) -> list[SystemConfig]:
    configs = []
    for token in tokens:
        path = _resolve("config", token)
        try:
            configs.append(load_config(path))
        except (FileNotFoundError, ValueError) as exc:
            # malformed JSON is a parse problem; bad values are invariants
            if "invalid JSON" in str(exc) or isinstance(exc, FileNotFoundError):
                raise CliError(str(exc), 2) from exc
            raise CliError(f"{path}: {exc}", 3) from exc
    return configs


def _load_workload(args) -> tuple[str, list]:
    """Returns (suite name, [(GemmShape, count), ...])."""
    if getattr(args, "suite", None):
        path = _resolve("suite", args.suite)
        try:
            suite = load_suite(path)
        except ValueError as exc:
            raise CliError(str(exc), 2) from exc
        return suite.name, list(suite.entries)
    spec = args.sweep
    try:
        lo, hi, count = (int(x) for x in spec.split(","))
        shapes = synthetic_sweep(lo, hi, count, args.seed)
    except ValueError as exc:
        raise CliError(f"bad --sweep {spec!r}: {exc}", 2) from exc
    return "sweep", [(shape, 1) for shape in shapes]


def _emit(args, header_columns, rows) -> None:
    if args.format == "csv":
        buffer = io.StringIO()
        buffer.write(f"# {SCHEMA} seed={args.seed}\n")
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(header_columns)
        for row in rows:
            writer.writerow(["" if v is None else _render(v) for v in row])
        text = buffer.getvalue()
    else:
        payload = {
            "schema": SCHEMA,
            "seed": args.seed,
            "rows": [
                {col: _render(v) for col, v in zip(header_columns, row)}
                for row in rows
            ],
        }
        text = json.dumps(payload, indent=2) + "\n"
    if args.out:
        try:
            Path(args.out).write_text(text)
        except OSError as exc:
            raise CliError(f"cannot write {args.out}: {exc}", 4) from exc
    else:
        sys.stdout.write(text)


def _evaluate_rows(args, configs, suite_name, entries):
    rows = []
    for shape, _count in entries:
        for cfg in configs:
            res = evaluate(shape, cfg, mapper=args.mapper, seed=args.seed,
                           invalid_limit=args.invalid_limit)
            rows.append((
                suite_name, shape.m, shape.n, shape.k, cfg.name,
                res.tops_per_w, res.gflops, res.utilization, res.total_pj,
                res.total_cycles, res.compute_cycles, res.bound,
            ))
    return rows


def _cmd_evaluate(args) -> None:
    configs = _load_configs(args.config)
    suite_name, entries = _load_workload(args)
    _emit(args, EVAL_COLUMNS, _evaluate_rows(args, configs, suite_name, entries))


def _cmd_compare(args) -> None:
    configs = _load_configs(args.config)
    if len(configs) < 2:
        raise CliError("compare needs at least two --config values", 2)
    suite_name, entries = _load_workload(args)
    reference, others = configs[0], configs[1:]

    ref_results = [
        evaluate(shape, reference, mapper=args.mapper, seed=args.seed,
                 invalid_limit=args.invalid_limit)
        for shape, _ in entries
    ]
    rows = []
    for cfg in others:
        ratios = []  # (tops, gflops, util, count)
        for (shape, count), ref in zip(entries, ref_results):
            res = evaluate(shape, cfg, mapper=args.mapper, seed=args.seed,
                           invalid_limit=args.invalid_limit)
            triple = (
                res.tops_per_w / ref.tops_per_w,
                res.gflops / ref.gflops,
                res.utilization / ref.utilization,
            )
            ratios.append((triple, count))
            rows.append(("gemm", suite_name, shape.m, shape.n, shape.k,
                         cfg.name, reference.name) + triple)
        # aggregates weight each entry by its occurrence count
        for kind, agg in (
            ("mean", statistics.fmean),
            ("stddev", statistics.pstdev),
            ("geomean", statistics.geometric_mean),
        ):
            stats = []
            for slot in range(3):
                expanded = [float(t[slot]) for t, c in ratios for _ in range(c)]
                stats.append(agg(expanded))
            rows.append((kind, suite_name, None, None, None,
                         cfg.name, reference.name) + tuple(stats))
    _emit(args, COMPARE_COLUMNS, rows)


def _cmd_suites(args) -> None:
    if args.action != "list":
        raise CliError(f"unknown suites action {args.action!r}", 2)
    root = data_dir() / "suites"
    lines = []
    for path in sorted(root.glob("*.json")):
        suite = load_suite(path)
        lines.append(f"{suite.name}\t{len(suite.entries)}\t{suite.total_count}")
    sys.stdout.write("\n".join(lines) + ("\n" if lines else ""))


def _add_common(parser: argparse.ArgumentParser, needs_config=True) -> None:
    if needs_config:
        parser.add_argument("--config", action="append", required=True,
                            help="bundled config name or JSON path (repeatable)")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--mapper", choices=("priority", "heuristic"), default="priority")
    parser.add_argument("--invalid-limit", type=int, default=100000,
                        help="heuristic search budget")
    parser.add_argument("--format", choices=("csv", "json"), default="csv")
    parser.add_argument("--out", help="write output here instead of stdout")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cimdse",
        description="Analytical design-space exploration for CiM GEMM accelerators",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_eval = sub.add_parser("evaluate", help="cost GEMMs on one or more configs")
    _add_common(p_eval)
    group = p_eval.add_mutually_exclusive_group(required=True)
    group.add_argument("--suite", help="bundled suite name or JSON path")
    group.add_argument("--sweep", help="MIN,MAX,COUNT synthetic power-of-two sweep")
    p_eval.set_defaults(func=_cmd_evaluate)

    p_sweep = sub.add_parser("sweep", help="evaluate a synthetic sweep")
    _add_common(p_sweep)
    p_sweep.add_argument("--sweep", required=True, help="MIN,MAX,COUNT")
    p_sweep.set_defaults(func=_cmd_evaluate, suite=None)

    p_cmp = sub.add_parser("compare", help="ratios of configs against the first one")
    _add_common(p_cmp)
    group = p_cmp.add_mutually_exclusive_group(required=True)
    group.add_argument("--suite")
    group.add_argument("--sweep")
    p_cmp.set_defaults(func=_cmd_compare)

    p_suites = sub.add_parser("suites", help="inspect bundled suites")
    p_suites.add_argument("action", choices=("list",))
    p_suites.set_defaults(func=_cmd_suites, format="csv", out=None, seed=0)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    started = time.perf_counter()
    try:
        args.func(args)
    except CliError as exc:
        print(f"cimdse: {exc}", file=sys.stderr)
        return exc.code
    except ValueError as exc:
        print(f"cimdse: {exc}", file=sys.stderr)
        return 3
    finally:
        elapsed = time.perf_counter() - started
        print(f"# wall_clock_s={elapsed:.3f}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
