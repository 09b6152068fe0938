#!/usr/bin/env python3
"""
stellar-qkl CLI - quantum-kernel SVM for stellar classification

Subcommands: prep, train, eval, curve, baseline, bench

Usage:
    python stellar_qkl.py prep --config experiment.json
    python stellar_qkl.py train --config experiment.json --seed 7 --workers 4
    python stellar_qkl.py eval --config experiment.json --model outputs/model.json
"""
import argparse
import sys
from typing import List, Optional

from qkl.core.errors import QKLError
from qkl.core.logging import configure_logging, logger
from qkl.services.experiment_service import ExperimentRunner, load_config

COMMANDS = ("prep", "train", "eval", "curve", "baseline", "bench")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="stellar-qkl - quantum kernel learning for dwarf/giant and spectral classification",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Clean the catalogue and write a cleaning report
  python stellar_qkl.py prep --config experiment.json

  # Train and evaluate the binary QKL model
  python stellar_qkl.py train --config experiment.json
  python stellar_qkl.py eval --config experiment.json --split test

  # Learning curve, classical baselines and kernel scaling benchmark
  python stellar_qkl.py curve --config experiment.json
  python stellar_qkl.py baseline --config experiment.json
  python stellar_qkl.py bench --config experiment.json --out outputs/bench
        """,
    )
    parser.add_argument("--log-level", default=None, help="Override QKL_LOG_LEVEL for this run (e.g. DEBUG)")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, help=f"Run the {name} step")
        p.add_argument("--config", "-c", default=None, help="Experiment config JSON (defaults apply when omitted)")
        p.add_argument("--seed", type=int, default=None, help="Override the config seed")
        p.add_argument("--workers", "-w", type=int, default=None, help="Override the worker count")
        p.add_argument("--out", "-o", default=None, help="Override the output directory")
        if name == "eval":
            p.add_argument("--model", "-m", default=None, help="Model JSON (default: <out>/model.json)")
            p.add_argument("--split", choices=["train", "test"], default="test", help="Split to score (default: test)")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.log_level:
        configure_logging(args.log_level)
    try:
        config = load_config(args.config, seed=args.seed, workers=args.workers, output_dir=args.out)
        runner = ExperimentRunner(config)
        if args.command == "eval":
            artifacts = runner.eval(model_path=args.model, split=args.split)
        else:
            artifacts = getattr(runner, args.command)()
    except QKLError as e:
        logger.error(f"{args.command} failed: {e}")
        print(f"Error: {e}", file=sys.stderr)
        return e.exit_code
    except Exception as e:
        logger.exception(f"{args.command} failed unexpectedly")
        print(f"Error: {e}", file=sys.stderr)
        return 1

    print(f"{args.command} complete. Generated files:")
    for name, path in artifacts.items():
        print(f"  -{name}: {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
