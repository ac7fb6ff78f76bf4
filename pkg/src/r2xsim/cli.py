"""Command line front end.

Subcommands:
  run       execute a scenario's (method, seed) grid, writing results.jsonl
            (one run per line, ordered by method then seed) and summary.csv
  compare   rank methods by the median of a metric across result directories
  validate  check a scenario file against the schema

Seed precedence for ``run``: ``--seeds`` beats the ``R2X_SEED`` environment
variable, which beats the seeds listed in the scenario file.

Exit codes: 0 success, 1 runtime failure, 2 validation failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

from .metrics import run_summary
from .scenarios import ScenarioError, load_scenario, run_one

RESULTS_NAME = "results.jsonl"
SUMMARY_NAME = "summary.csv"


def _parse_seed_list(text: str, source: str) -> List[int]:
    try:
        seeds = [int(part) for part in text.split(",") if part.strip() != ""]
    except ValueError:
        raise ScenarioError([f"{source}: {text!r} is not a comma-separated integer list"])
    if not seeds:
        raise ScenarioError([f"{source}: no seeds given"])
    if any(s < 0 for s in seeds):
        raise ScenarioError([f"{source}: seeds must be nonnegative"])
    return seeds


def _run_job(args: Tuple[str, str, int]) -> dict:
    path, method, seed = args
    scn = load_scenario(path)
    return run_one(scn, method, seed)


def _cmd_run(args: argparse.Namespace) -> int:
    try:
        scn = load_scenario(args.scenario)
    except ScenarioError as exc:
        for err in exc.errors:
            print(err, file=sys.stderr)
        return 2

    try:
        seeds: Optional[Sequence[int]] = None
        if args.seeds is not None:
            seeds = _parse_seed_list(args.seeds, "--seeds")
        elif os.environ.get("R2X_SEED"):
            seeds = _parse_seed_list(os.environ["R2X_SEED"], "R2X_SEED")
        methods = args.methods.split(",") if args.methods is not None else None
        scn = scn.with_overrides(seeds=seeds, methods=methods)
    except ScenarioError as exc:
        for err in exc.errors:
            print(err, file=sys.stderr)
        return 2

    jobs = [
        (str(scn.path), method, seed)
        for method, seed in sorted(
            (m, s) for m in scn.methods for s in scn.seeds
        )
    ]
    try:
        if args.parallel > 1:
            with ProcessPoolExecutor(max_workers=args.parallel) as pool:
                records = list(pool.map(_run_job, jobs, chunksize=1))
        else:
            records = [run_one(scn, method, seed) for _, method, seed in jobs]
    except ScenarioError as exc:
        for err in exc.errors:
            print(err, file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return 1

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    results_path = out_dir / RESULTS_NAME
    with results_path.open("w") as fh:
        for record in records:
            fh.write(json.dumps(record, sort_keys=True) + "\n")
    summary_path = out_dir / SUMMARY_NAME
    rows = run_summary(records)
    with summary_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["scenario_id", "method", "metric", "median", "iqr", "n"])
        for row in rows:
            writer.writerow(
                [row["scenario_id"], row["method"], row["metric"],
                 repr(row["median"]), repr(row["iqr"]), row["n"]]
            )
    print(f"wrote {len(records)} runs to {results_path} and {summary_path}")
    return 0


def _load_records(dirs: Sequence[str]) -> List[dict]:
    records = []
    for d in dirs:
        path = Path(d) / RESULTS_NAME
        if not path.exists():
            raise ScenarioError([f"{path}: no such results file"])
        with path.open() as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.strip()
                if not line:
                    continue
                try:
                    records.append(json.loads(line))
                except json.JSONDecodeError as exc:
                    raise ScenarioError([f"{path}:{lineno}: invalid JSON: {exc.msg}"])
    if not records:
        raise ScenarioError(["no result records found"])
    return records


def _cmd_compare(args: argparse.Namespace) -> int:
    try:
        records = _load_records(args.dirs)
        ids = {rec.get("scenario_id") for rec in records}
        if len(ids) != 1:
            raise ScenarioError(
                [f"scenario_id: result dirs mix different scenarios {sorted(ids)}"]
            )
        values: dict = {}
        for rec in records:
            metric = rec.get("metrics", {}).get(args.metric)
            if metric is None:
                continue
            values.setdefault(rec["method"], []).append(float(metric))
        if not values:
            raise ScenarioError(
                [f"--metric: {args.metric!r} not present in any record"]
            )
    except ScenarioError as exc:
        for err in exc.errors:
            print(err, file=sys.stderr)
        return 2

    import statistics

    ranked = sorted(
        ((statistics.median(vals), method, len(vals)) for method, vals in values.items()),
        key=lambda item: (item[0], item[1]),
    )
    sid = next(iter(ids))
    print(f"scenario {sid}, metric {args.metric} (median over runs, best first)")
    for rank, (median, method, n) in enumerate(ranked, 1):
        print(f"{rank:2d}. {method:<14s} {median:.6g}  (n={n})")
    return 0


def _cmd_validate(args: argparse.Namespace) -> int:
    try:
        scn = load_scenario(args.scenario)
    except ScenarioError as exc:
        for err in exc.errors:
            print(err, file=sys.stderr)
        return 2
    print(
        f"{args.scenario}: OK "
        f"(kind {scn.kind}, {len(scn.methods)} methods, {len(scn.seeds)} seeds)"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="r2xsim",
        description="Deterministic R2X orchestration scenarios: run, compare, validate.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario's (method, seed) grid")
    p_run.add_argument("scenario", help="scenario JSON file")
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.add_argument("--seeds", help="comma-separated seed override")
    p_run.add_argument("--methods", help="comma-separated method subset")
    p_run.add_argument("--parallel", type=int, default=1, help="worker processes")
    p_run.set_defaults(func=_cmd_run)

    p_cmp = sub.add_parser("compare", help="rank methods by a metric median")
    p_cmp.add_argument("dirs", nargs="+", help="result directories from `run`")
    p_cmp.add_argument("--metric", required=True, help="metric name to rank by")
    p_cmp.set_defaults(func=_cmd_compare)

    p_val = sub.add_parser("validate", help="check a scenario file")
    p_val.add_argument("scenario", help="scenario JSON file")
    p_val.set_defaults(func=_cmd_validate)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
