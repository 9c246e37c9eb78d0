"""Command-line interface.

Subcommands: generate (stream CSVs), run (experiments), sweep (criterion
hyperparameter sensitivity), verify (summary consistency), report (figures).
Exit codes: 0 success, 1 configuration error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from ..errors import CaliperError, ConfigError
from .config import ExperimentConfig
from .io import verify_run
from .runner import SWEEP_PARAMS, generate_streams, run_experiment, run_sweep


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="caliper",
        description="Post-drift retraining window sizing: experiments and reports.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, config_required=True):
        p.add_argument("--config", required=config_required, help="YAML experiment config")
        p.add_argument("--out", default=None, help="output directory (overrides config out_dir)")
        p.add_argument("--workers", type=int, default=None, help="parallel (strategy x seed) runs")
        p.add_argument("--seed-offset", type=int, default=0, help="added to every configured seed")

    add_common(sub.add_parser("generate", help="write one stream CSV per seed"))
    add_common(sub.add_parser("run", help="run every (strategy x seed) pair"))
    sweep = sub.add_parser("sweep", help="re-run the experiment over one hyperparameter")
    add_common(sweep)
    sweep.add_argument("--param", required=True, choices=sorted(SWEEP_PARAMS), help="hyperparameter")
    sweep.add_argument("--values", required=True, help="comma-separated values, e.g. 2,3,4")

    verify = sub.add_parser("verify", help="recompute summaries from per-step CSVs")
    verify.add_argument("--out", required=True, help="experiment output directory")

    report = sub.add_parser("report", help="render figures for an output directory")
    report.add_argument("--out", required=True, help="experiment output directory")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except CaliperError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


def _dispatch(args) -> int:
    if args.command == "generate":
        config = ExperimentConfig.from_file(args.config)
        out = Path(args.out if args.out else config.out_dir)
        paths = generate_streams(config, out, seed_offset=args.seed_offset)
        for p in paths:
            print(p)
        return 0

    if args.command == "run":
        config = ExperimentConfig.from_file(args.config)
        out = run_experiment(config, out_dir=args.out, workers=args.workers, seed_offset=args.seed_offset)
        print(out)
        return 0

    if args.command == "sweep":
        config = ExperimentConfig.from_file(args.config)
        try:
            values = [float(v) for v in args.values.split(",") if v.strip() != ""]
        except ValueError as exc:
            raise ConfigError(f"bad sweep values {args.values!r}: {exc}") from exc
        rows = run_sweep(
            config, args.param, values, out_dir=args.out, workers=args.workers, seed_offset=args.seed_offset
        )
        print(f"{'param':<10}{'value':>10}{'mae':>16}{'runs':>6}")
        for row in rows:
            print(f"{row['param']:<10}{row['value']:>10g}{row['mae']:>16.6g}{row['runs']:>6d}")
        return 0

    if args.command == "verify":
        out = Path(args.out)
        if not (out / "manifest.json").exists():
            raise ConfigError(f"no manifest.json under {out}")
        problems = []
        checked = 0
        for summary in sorted(out.glob("*/*/summary.json")):
            problems.extend(verify_run(summary.parent))
            checked += 1
        if problems:
            for p in problems:
                print(p, file=sys.stderr)
            print(f"verify: {len(problems)} mismatches in {checked} runs", file=sys.stderr)
            return 2
        print(f"verify: {checked} runs consistent")
        return 0

    if args.command == "report":
        from .plots import render_all

        out = Path(args.out)
        if not (out / "manifest.json").exists():
            raise ConfigError(f"no manifest.json under {out}")
        for path in render_all(out):
            print(path)
        return 0

    raise ConfigError(f"unknown command {args.command!r}")


if __name__ == "__main__":
    sys.exit(main())
