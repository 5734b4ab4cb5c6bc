#!/usr/bin/env python3
"""Run the complete modelling study on a real daily maximum-demand export.

Three stages, all under one output directory:

  1. ingest    - parse the raw CSV, report calendar gaps, write the five
                 imputation datasets
  2. diagnose  - ADF unit-root profile and ACF/PACF correlograms per dataset
  3. report    - fit both benchmark candidate grids (plain ARIMA table and
                 weekly-seasonal SARIMA table) on every dataset and rank them
                 on holdout MAPE

The input CSV comes from --input or the DEMANDCAST_DATA environment
variable.  A full run covers 125 model fits; expect minutes, not seconds,
and use --jobs to spread the grid across cores.
"""

from __future__ import annotations

import argparse
import os
import sys

from demandcast.cli import main


def run() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument(
        "--input",
        default=os.environ.get("DEMANDCAST_DATA"),
        help="raw daily export CSV (default: $DEMANDCAST_DATA)",
    )
    parser.add_argument("--out-dir", default="study_out", help="output directory")
    parser.add_argument("--split", default="count:365", help="holdout split (default last year)")
    parser.add_argument("--season", type=int, default=7, help="seasonal period in days")
    parser.add_argument("--jobs", type=int, default=os.cpu_count() or 1, help="parallel workers")
    parser.add_argument("--seed", type=int, default=0, help="optimizer seed")
    args = parser.parse_args()
    if not args.input:
        parser.error("give --input or set DEMANDCAST_DATA")

    common = [
        "--input", args.input,
        "--out-dir", args.out_dir,
        "--season", str(args.season),
        "--seed", str(args.seed),
    ]
    stages = [
        ["ingest", *common],
        ["diagnose", *common],
        ["report", *common, "--split", args.split, "--jobs", str(args.jobs)],
    ]
    for argv in stages:
        print(f"$ demandcast {' '.join(argv)}", flush=True)
        code = main(argv)
        if code != 0:
            return code
    return 0


if __name__ == "__main__":
    sys.exit(run())
