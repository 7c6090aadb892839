"""Command-line entry point: train, eval, compare and sweep."""
from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from .commands import cmd_compare, cmd_eval, cmd_sweep, cmd_train
from .config import ConfigError, load_config

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cellfree-drl",
                                     description="Clustered cell-free networking experiments")
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="-v for progress, -vv for per-episode logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train the DDPG agent for every configured seed")
    p.add_argument("--config", required=True)
    p.add_argument("--resume", action="store_true",
                   help="continue from the latest checkpoint in each seed directory")

    p = sub.add_parser("eval", help="evaluate a checkpoint on fresh evaluation episodes")
    p.add_argument("--config", required=True)
    p.add_argument("--checkpoint", required=True)

    p = sub.add_parser("compare", help="policy versus baselines on identical episodes")
    p.add_argument("--config", required=True)

    p = sub.add_parser("sweep", help="train and evaluate over a parameter grid")
    p.add_argument("--config", required=True)
    p.add_argument("--grid", required=True, help="JSON object: key -> list of values")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = {0: logging.WARNING, 1: logging.INFO}.get(args.verbose, logging.DEBUG)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        if args.command == "train":
            for d in cmd_train(cfg, resume=args.resume):
                print(d)
        elif args.command == "eval":
            print(cmd_eval(cfg, args.checkpoint))
        elif args.command == "compare":
            print(cmd_compare(cfg))
        else:
            print(cmd_sweep(cfg, args.grid))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FloatingPointError, OverflowError, np.linalg.LinAlgError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
