"""Command-line entry points: run, sweep, certify, regret-report.

Exit code 0 means every pass flag in the produced summaries is true.
Outputs are plain CSV/JSON under ``--out``; there is no interactive mode.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import InvalidConfigError
from .harness import (
    ExperimentConfig,
    config_hash,
    recompute_regret,
    run_experiment,
    sweep_points,
)

__all__ = ["main"]


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="experiment config JSON")
    parser.add_argument("--out", default="out", help="output root directory")
    parser.add_argument("--seeds", default=None,
                        help="comma-separated seed override, e.g. 0,1,2")
    parser.add_argument("--jobs", type=int, default=1,
                        help="concurrent seeds / sweep points")


def _load(args) -> ExperimentConfig:
    cfg = ExperimentConfig.from_file(args.config)
    if args.seeds:
        raw = dict(cfg.raw)
        raw["seeds"] = [int(s) for s in args.seeds.split(",") if s]
        cfg = ExperimentConfig.from_dict(raw)
    return cfg


def _cmd_run(args) -> int:
    summary = run_experiment(_load(args), args.out, jobs=args.jobs)
    print(json.dumps({
        "config_hash": summary["config_hash"],
        "mean_regret": summary["mean_regret"],
        "all_pass": summary["all_pass"],
    }))
    return 0 if summary["all_pass"] else 1


def _cmd_sweep(args) -> int:
    cfg = _load(args)
    points = sweep_points(cfg)
    ok = True
    if args.jobs > 1 and len(points) > 1:
        from concurrent.futures import ProcessPoolExecutor

        from .harness import _sweep_worker

        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            summaries = list(pool.map(
                _sweep_worker, [(p.raw, args.out) for p in points]
            ))
    else:
        summaries = [run_experiment(p, args.out, jobs=args.jobs) for p in points]
    for summary in summaries:
        print(json.dumps({
            "config_hash": summary["config_hash"],
            "mean_regret": summary["mean_regret"],
            "all_pass": summary["all_pass"],
        }))
        ok = ok and summary["all_pass"]
    return 0 if ok else 1


def _cmd_certify(args) -> int:
    summary = run_experiment(_load(args), args.out, jobs=args.jobs, certify_only=True)
    certs = [r for r in summary["per_seed"] if r["cert"] is not None]
    ok = all(r["cert"]["all_pass"] for r in certs) if certs else True
    print(json.dumps({"config_hash": summary["config_hash"], "cert_pass": ok}))
    return 0 if ok else 1


def _cmd_regret_report(args) -> int:
    """Recompute regret from stored traces and check it against the stored reports."""
    cfg = _load(args)
    base = Path(args.out) / config_hash(cfg)
    seed_dirs = sorted((p for p in base.glob("*") if (p / "trace.csv").exists()),
                       key=lambda p: p.name)
    if not seed_dirs:
        print(f"no stored traces under {base}", file=sys.stderr)
        return 1
    ok = True
    for seed_dir in seed_dirs:
        result = recompute_regret(cfg, args.out, int(seed_dir.name))
        print(json.dumps(result))
        ok = ok and result["matches"]
    return 0 if ok else 1


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="online-unlearning",
        description="Streamed learning with deletion requests: run, certify, report.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in (
        ("run", _cmd_run),
        ("sweep", _cmd_sweep),
        ("certify", _cmd_certify),
        ("regret-report", _cmd_regret_report),
    ):
        p = sub.add_parser(name)
        _add_common(p)
        p.set_defaults(fn=fn)
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (InvalidConfigError, FileNotFoundError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
