"""Map one world at a range of path spacings and report cost against plan size.

Run from the repository root::

    python3 scripts/alpha_sweep.py worlds/square.json --alphas 2 1 0.5 0.25

Prints a CSV row per spacing and the R^2 of a straight-line fit of ticks on
plan entries. Mapping time should grow in proportion to the number of paths.
"""
from __future__ import annotations

import argparse
import csv
import sys

import numpy as np

from pathmap.pipeline import RunConfig, run_pipeline
from pathmap.world import load_world


def r_squared(x, y) -> float:
    x, y = np.asarray(x, float), np.asarray(y, float)
    slope, icept = np.polyfit(x, y, 1)
    resid = y - (slope * x + icept)
    return 1.0 - float(resid @ resid) / float(((y - y.mean()) ** 2).sum())


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("world")
    ap.add_argument("--alphas", type=float, nargs="+", default=[2.0, 1.0, 0.5, 0.25])
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    with open(args.world) as fh:
        world = load_world(fh.read())
    out = csv.writer(sys.stdout)
    out.writerow(["alpha", "entries", "ticks", "distance", "objects"])
    entries, ticks = [], []
    for alpha in args.alphas:
        run = run_pipeline(world, RunConfig(alpha=alpha, seed=args.seed))
        s = run.result.stats
        entries.append(len(run.plan))
        ticks.append(s["ticks"])
        out.writerow([alpha, len(run.plan), s["ticks"], f"{s['distance']:.3f}", len(run.result.objects)])
    if len(entries) > 2:
        print(f"# R^2 ticks vs entries: {r_squared(entries, ticks):.4f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
