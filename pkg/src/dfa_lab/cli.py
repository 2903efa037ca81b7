"""Command-line entry point: ``dfa-lab {verify,gridworld,plot,synth-demo}``.

Exit codes: 0 success, 1 a check failed, 2 configuration or input error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .harness.config import ConfigError, ExperimentConfig, format_config, load_config
from .harness.experiment import run_experiment
from .harness.plot import plot_curves
from .harness.verify import CHECK_NAMES, DEFAULT_TOLERANCES, verify_suite

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _seed_list(text: str) -> tuple[int, ...]:
    try:
        seeds = tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad seed list {text!r}") from None
    if not seeds or any(s < 0 for s in seeds):
        raise argparse.ArgumentTypeError("seed list must hold non-negative integers")
    return seeds


def _tolerance(text: str) -> tuple[str, float]:
    name, sep, value = text.partition("=")
    if not sep or name not in DEFAULT_TOLERANCES:
        raise argparse.ArgumentTypeError(
            f"expected NAME=VALUE with NAME in {', '.join(DEFAULT_TOLERANCES)}")
    try:
        return name, float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad tolerance value {value!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dfa-lab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="run the numerical verification suite")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tolerance", type=_tolerance, action="append", default=[],
                   metavar="NAME=VALUE", help="override one check's tolerance")
    p.add_argument("--only", action="append", choices=CHECK_NAMES,
                   help="run only this check (repeatable)")
    p.add_argument("--out", type=Path, help="directory for verify.json")

    for name, text in (("gridworld", "run the GridWorld comparison"),
                       ("synth-demo", "off-policy DFA with synthesized preferences vs SAC")):
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", type=Path, help="flat key = value config file")
        p.add_argument("--out", type=Path, help="output directory (overrides config)")
        p.add_argument("--seed-list", type=_seed_list, help="comma-separated run seeds")
        p.add_argument("--quiet", action="store_true")

    p = sub.add_parser("plot", help="plot learning-curve CSVs to SVG")
    p.add_argument("csv", nargs="+", type=Path)
    p.add_argument("--out", type=Path, required=True, help="output SVG path")
    p.add_argument("--title", default="")
    return parser


def _experiment_config(args, synth: bool) -> ExperimentConfig:
    config = load_config(args.config) if args.config else ExperimentConfig()
    changes = {}
    if synth and not args.config:
        changes.update(algorithms=("dfa-offpolicy", "sac"), budget=40_000,
                       eval_interval=2000)
    if args.seed_list:
        changes["seeds"] = args.seed_list
    if args.out:
        changes["out_dir"] = str(args.out)
    return config.with_overrides(**changes) if changes else config


def _run_experiment_command(args, synth: bool) -> int:
    config = _experiment_config(args, synth)
    out = Path(config.out_dir)

    def progress(name, seed, record):
        if not args.quiet:
            print(f"{name:>16}  seed {seed:>4}  final return {record.final_return: .4f}",
                  flush=True)

    results = run_experiment(config, out, progress)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.txt").write_text(format_config(config), encoding="utf-8")
    csvs = [out / f"{name}.csv" for name in results]
    plot_curves(csvs, out / ("synth-demo.svg" if synth else "gridworld.svg"))
    for name, records in results.items():
        finals = np.array([r.final_return for r in records])
        sem = finals.std(ddof=1) / np.sqrt(len(finals)) if len(finals) > 1 else 0.0
        print(f"{name:>16}  mean final return {finals.mean(): .4f} +- {sem:.4f} (SE)")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    # argparse exits with 2 on bad usage, which matches the config-error code
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "verify":
            report = verify_suite(dict(args.tolerance), seed=args.seed, only=args.only)
            text = report.to_json()
            print(text)
            if args.out:
                args.out.mkdir(parents=True, exist_ok=True)
                (args.out / "verify.json").write_text(text + "\n", encoding="utf-8")
            return EXIT_OK if report.passed else EXIT_FAIL
        if args.command in ("gridworld", "synth-demo"):
            return _run_experiment_command(args, synth=args.command == "synth-demo")
        if args.command == "plot":
            missing = [str(p) for p in args.csv if not p.is_file()]
            if missing:
                raise ConfigError(f"missing CSV file(s): {', '.join(missing)}")
            try:
                plot_curves(args.csv, args.out, args.title)
            except ValueError as exc:  # unreadable CSV or mismatched step grids
                raise ConfigError(str(exc)) from None
            return EXIT_OK
    except ConfigError as exc:
        print(f"dfa-lab: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
