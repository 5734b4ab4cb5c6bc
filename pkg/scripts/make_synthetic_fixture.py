#!/usr/bin/env python3
"""Generate the committed synthetic daily-demand fixture.

The fixture mimics the raw export format: eight columns, DD/MM/YYYY dates, a
weekly-seasonal demand process around 4000 MW, a handful of empty demand
cells and a couple of days with no row at all.  Regenerating with the same
seed reproduces the committed file byte for byte.
"""

from __future__ import annotations

import argparse
import csv
import datetime as dt
from pathlib import Path

import numpy as np

from demandcast import SarimaParams, SarimaSpec, simulate

HEADER = [
    "Date",
    "Max.Demand met during the day(MW)",
    "Shortage during maximum Demand(MW)",
    "Energy Met (MU)",
    "Drawal Schedule (MU)",
    "OD(+)/UD(-)(MU)",
    "Max OD(MW)",
    "Energy Shortage (MU)",
]


def build_rows(n_days: int, seed: int) -> list[list[str]]:
    spec = SarimaSpec(1, 0, 0, P=1, D=0, Q=0, s=7)
    params = SarimaParams(mean=4000.0, ar=(0.55,), seasonal_ar=(0.5,), sigma2=150.0**2)
    start = dt.date(2019, 1, 1)
    series = simulate(spec, params, n_days, seed=seed, start_date=start)
    rng = np.random.default_rng(seed + 1)
    demand = np.round(series.values, 1)

    # days whose demand cell is left empty, and days with no row at all
    empty_cells = set(rng.choice(np.arange(10, n_days - 10), size=12, replace=False).tolist())
    dropped_rows = set(rng.choice(sorted(set(range(15, n_days - 15)) - empty_cells),
                                  size=2, replace=False).tolist())

    rows = []
    for i in range(n_days):
        if i in dropped_rows:
            continue
        date = start + dt.timedelta(days=i)
        d = demand[i]
        energy_met = round(d * 0.0205 + rng.normal(0, 0.4), 2)
        drawal = round(energy_met + rng.normal(0, 0.8), 2)
        od_ud = round(energy_met - drawal + rng.normal(0, 0.2), 2)
        max_od = round(d * 0.012 + rng.normal(0, 2.0), 1)
        shortage = round(abs(rng.normal(0, 6.0)), 1)
        energy_short = round(abs(rng.normal(0, 0.15)), 2)
        demand_cell = "" if i in empty_cells else f"{d:.1f}"
        rows.append([
            date.strftime("%d/%m/%Y"),
            demand_cell,
            f"{shortage:.1f}",
            f"{energy_met:.2f}",
            f"{drawal:.2f}",
            f"{od_ud:.2f}",
            f"{max_od:.1f}",
            f"{energy_short:.2f}",
        ])
    return rows


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="tests/data/synthetic_demand.csv")
    parser.add_argument("--n-days", type=int, default=420)
    parser.add_argument("--seed", type=int, default=20240901)
    args = parser.parse_args()
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(HEADER)
        writer.writerows(build_rows(args.n_days, args.seed))
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
