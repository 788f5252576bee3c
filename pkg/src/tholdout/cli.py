"""Command-line front end: single-sample selection and benchmark campaigns.

Exit codes: 0 success, 2 usage/validation error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys

import numpy as np

from .bench import ExperimentConfig, refit_on_full, run_experiment
from .estimators import build_family, split_sample
from .robust_tests import TestKind
from .selection import approx_select, brute_force_select, exact_select

__all__ = ["main"]

_FAMILY_CHOICES = ("SR", "SI", "SK", "SP", "SC", "S1", "S2")


class UsageError(Exception):
    pass


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tholdout",
        description="Hold-out density estimator selection via robust pairwise tests",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sel = sub.add_parser("select", help="select an estimator for one sample")
    sel.add_argument("input", help="sample file: newline-delimited reals, '#' comments")
    sel.add_argument("--test", choices=("birge", "baraud"), default="birge")
    sel.add_argument("--p", type=float, default=0.5, help="training proportion (default 0.5)")
    sel.add_argument("--theta", type=float, default=0.25, help="robustness parameter (default 0.25)")
    sel.add_argument(
        "--csqrt",
        type=float,
        default=1.0,
        help="threshold scale: delta = csqrt/sqrt(|validation|); 0 only with exact/brute",
    )
    sel.add_argument("--last", choices=("training", "full"), default="full")
    sel.add_argument("--family", choices=_FAMILY_CHOICES, default="S2")
    sel.add_argument("--algorithm", choices=("exact", "approx", "brute"), default="exact")
    sel.add_argument("--start", default="ls", help="'ls' or a 1-based candidate index")
    sel.add_argument("--seed", type=int, default=0)
    sel.add_argument("--output", choices=("json", "csv"), default="json")
    sel.add_argument("--out", default=None, help="write the report here instead of stdout")
    sel.add_argument("--threads", type=int, default=0, help="unused for select; kept for symmetry")

    for name, help_text in (
        ("bench", "run a Monte-Carlo campaign from a config file"),
        ("complexity", "measure test-count complexity over growing families"),
    ):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("config", help="campaign config (JSON)")
        cmd.add_argument("--out-dir", default=f"{name}_out")
        cmd.add_argument("--threads", type=int, default=0, help="0 = machine parallelism")
    return parser


def _read_sample(path: str) -> np.ndarray:
    try:
        values = np.loadtxt(path, comments="#", ndmin=1, dtype=np.float64)
    except Exception as exc:
        raise UsageError(f"cannot parse sample file {path!r}: {exc}") from exc
    if values.ndim != 1 or values.size < 4 or not np.all(np.isfinite(values)):
        raise UsageError("input must contain at least 4 finite reals, one per line")
    return values


def _validate_select(args) -> None:
    if args.test == "birge" and not 0.0 < args.theta < 0.5:
        raise UsageError("--theta must lie in (0, 1/2) with --test birge")
    if args.csqrt < 0:
        raise UsageError("--csqrt must be nonnegative")
    if args.csqrt == 0 and args.algorithm == "approx":
        raise UsageError("--csqrt 0 disables approx; use --algorithm exact or brute")
    if not 0.0 < args.p < 1.0:
        raise UsageError("--p must lie in (0, 1)")


def _cmd_select(args) -> dict:
    _validate_select(args)
    x = _read_sample(args.input)
    try:
        split = split_sample(x, args.p, seed=args.seed)
        family = build_family(args.family, split.training)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc

    kind = TestKind.birge(args.theta) if args.test == "birge" else TestKind.baraud()
    if args.start == "ls":
        start = None
    else:
        try:
            start = int(args.start) - 1
        except ValueError as exc:
            raise UsageError("--start must be 'ls' or a 1-based index") from exc
        if not 0 <= start < len(family):
            raise UsageError(f"--start index out of range 1..{len(family)}")

    if args.algorithm == "exact":
        outcome = exact_select(family, split.validation, kind, start=start)
    elif args.algorithm == "approx":
        outcome = approx_select(family, split.validation, kind, start=start, c=args.csqrt)
    else:
        outcome = brute_force_select(family, split.validation, kind)

    refit = None
    if args.last == "full":
        recipe = family.recipes[outcome.chosen]
        _, ok = refit_on_full(recipe, split.full, family.members[outcome.chosen])
        refit = {"recipe": list(recipe), "refit_ok": ok}
    return {
        "chosen_label": family.labels[outcome.chosen],
        "chosen_index": outcome.chosen + 1,
        "D": outcome.criterion,
        "N": outcome.tests_used,
        "complexity": outcome.complexity,
        "method": outcome.method,
        "test": args.test,
        "theta": args.theta,
        "p": args.p,
        "last": args.last,
        "family": args.family,
        "n": split.n,
        "n_train": split.n1,
        "n_valid": split.n - split.n1,
        "seed": args.seed,
        "delta": outcome.delta,
        "refit": refit,
        "flags": list(outcome.flags),
    }


def _emit_select(report: dict, args) -> None:
    out = open(args.out, "w") if args.out else sys.stdout
    try:
        if args.output == "json":
            json.dump(report, out, indent=2, sort_keys=True)
            out.write("\n")
        else:
            flat = dict(report)
            flat["refit"] = "" if flat["refit"] is None else json.dumps(flat["refit"])
            flat["flags"] = ";".join(report["flags"])
            flat["delta"] = "" if flat["delta"] is None else repr(flat["delta"])
            writer = csv.writer(out)
            writer.writerow(list(flat))
            writer.writerow([flat[k] for k in flat])
    finally:
        if args.out:
            out.close()


def _load_config(path: str, threads: int) -> ExperimentConfig:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path!r} is not valid JSON: {exc}") from exc
    if threads == 0:
        threads = os.cpu_count() or 1
    data["threads"] = threads
    try:
        return ExperimentConfig.from_json(data)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid config: {exc}") from exc


def _progress(done: int, total: int) -> None:
    if done == total or done % max(1, total // 20) == 0:
        print(f"  {done}/{total} replicates", file=sys.stderr)


def _cmd_bench(args) -> None:
    cfg = _load_config(args.config, args.threads)
    os.makedirs(args.out_dir, exist_ok=True)
    report = run_experiment(cfg, progress=_progress)
    csv_path = os.path.join(args.out_dir, "results.csv")
    json_path = os.path.join(args.out_dir, "summary.json")
    report.to_csv(csv_path)
    report.write_summary(json_path)
    summary = report.summary()
    print(f"wrote {csv_path} ({len(report.rows)} rows) and {json_path}")
    for key, quantiles in summary["complexity_quantiles"].items():
        print(f"  complexity {key}: " + ", ".join(f"q{q}={v:.3f}" for q, v in quantiles.items()))
    if summary["oracle_check"] is not None:
        print(f"  oracle check: {summary['oracle_check']}")
    if report.failures:
        print(f"  {len(report.failures)} replicate failures recorded", file=sys.stderr)


def _cmd_complexity(args) -> None:
    cfg = _load_config(args.config, args.threads)
    growing = {"SR", "SK"}
    tags = {f.replace("_", "").upper() for f in cfg.families}
    if not tags <= growing:
        raise UsageError("complexity campaigns need families with M growing in n (SR, SK)")
    if len(cfg.n) < 2:
        raise UsageError("complexity campaigns need at least two sample sizes")
    os.makedirs(args.out_dir, exist_ok=True)
    report = run_experiment(cfg, progress=_progress)
    summary = report.summary()

    csv_path = os.path.join(args.out_dir, "complexity.csv")
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["density", "family", "n", "method", "replicate", "tests_used", "complexity_ratio", "seed"]
        )
        seen = set()
        for row in report.rows:
            key = (row["density"], row["family"], row["n"], row["method"], row["replicate"])
            if key in seen or row["method"] in ("ls", "kl"):
                continue
            seen.add(key)
            writer.writerow(
                [*key, row["tests_used"], repr(row["complexity_ratio"]), row["seed"]]
            )
    json_path = os.path.join(args.out_dir, "complexity.json")
    payload = {
        "config": cfg.to_json(),
        "cdf_quantiles": summary["complexity_quantiles"],
        "beta_slopes": summary["beta_slopes"],
    }
    with open(json_path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {csv_path} and {json_path}")
    for slope in summary["beta_slopes"]:
        print(f"  beta[{slope['density']},{slope['family']},{slope['method']}] = {slope['beta']:.3f}")


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "select":
            _emit_select(_cmd_select(args), args)
        elif args.command == "bench":
            _cmd_bench(args)
        else:
            _cmd_complexity(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure
        print(f"failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
