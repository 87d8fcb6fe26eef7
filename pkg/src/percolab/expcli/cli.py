"""``percolab`` command line.

    percolab <experiment> [--config FILE] [--out PATH] [--seeds N] [--base-seed S]
                          [--threads T] [--set key=value ...]
    percolab run --experiment <experiment> ...

Exit codes: 0 success, 2 configuration error, 3 resource guard tripped.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time

from ..graphgen import GenerationError, GraphSizeError
from ..gwtree import TreeSizeError
from .config import EXPERIMENTS, ConfigError, load
from .experiments import RUNNERS
from .output import render, write_edge_list, write_result

log = logging.getLogger("percolab")

EXIT_CONFIG = 2
EXIT_RESOURCE = 3


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="TOML experiment config")
    p.add_argument("--out", help="output CSV path (stdout when omitted)")
    p.add_argument("--seeds", type=int, help="number of seeds per parameter point")
    p.add_argument("--base-seed", type=int, dest="base_seed")
    p.add_argument("--threads", type=int, help="worker processes (env PERCOLAB_THREADS wins)")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config key, e.g. --set host.d=[8,10] --set c=1.5")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="percolab", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run the experiment named by --experiment")
    run.add_argument("--experiment", choices=EXPERIMENTS)
    _common(run)
    for name in EXPERIMENTS:
        _common(sub.add_parser(name, help=f"run the {name} experiment"))
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    experiment = args.experiment if args.command == "run" else args.command
    sets = list(args.set)
    if args.seeds is not None:
        sets.append(f"seeds={args.seeds}")
    overrides = {"experiment": experiment, "out": args.out, "base_seed": args.base_seed,
                 "threads": args.threads}
    try:
        cfg = load(args.config, overrides, sets)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    t0 = time.perf_counter()
    try:
        result = RUNNERS[cfg.experiment](cfg)
    except (GraphSizeError, TreeSizeError, GenerationError) as exc:
        print(f"resource guard: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (ValueError, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    elapsed = time.perf_counter() - t0
    log.info("%s finished in %.2fs", cfg.experiment, elapsed)

    if cfg.experiment == "percolate" and cfg.out:
        write_edge_list(cfg, result.rows, cfg.out)
    elif cfg.out:
        for path in write_result(cfg, result, cfg.out, elapsed):
            log.info("wrote %s", path)
    else:
        sys.stdout.write(render(cfg, result.columns, result.rows, elapsed))
        if result.summary_columns:
            sys.stdout.write(render(cfg, result.summary_columns, result.summary_rows, None, "summary"))
    return 0
