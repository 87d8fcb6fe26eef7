#!/usr/bin/env python3
"""Run every shipped config (or the ones named) and write results/*.csv.

    python3 scripts/reproduce.py                 # all configs
    python3 scripts/reproduce.py theory binpo    # a subset, by file stem
"""

import argparse
import sys
import time
from pathlib import Path

from percolab.expcli import cli

ROOT = Path(__file__).resolve().parents[1]


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("names", nargs="*", help="config stems under configs/ (default: all)")
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args(argv)

    configs = sorted((ROOT / "configs").glob("*.toml"))
    if args.names:
        wanted = set(args.names)
        configs = [p for p in configs if p.stem in wanted]
        missing = wanted - {p.stem for p in configs}
        if missing:
            ap.error(f"no such config: {', '.join(sorted(missing))}")

    status = 0
    for path in configs:
        out = ROOT / "results" / f"{path.stem}.csv"
        t0 = time.perf_counter()
        code = cli.main(["run", "--config", str(path), "--out", str(out),
                         "--threads", str(args.threads)])
        print(f"{path.stem:<28} exit {code}  {time.perf_counter() - t0:7.1f}s  -> {out.relative_to(ROOT)}")
        status = status or code
    return status


if __name__ == "__main__":
    sys.exit(main())
