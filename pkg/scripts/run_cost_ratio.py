#!/usr/bin/env python3
"""Half-space vs free-space direct-sum cost ratio per kernel.

Times the O(N^2) direct sums in both geometries over a range of N and
reports the ratio (expected in the 2.5x-5x band, ordered
rotlet < stokeslet < stresslet).
"""

import argparse
import pathlib

import numpy as np

from hsewald import bench


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--outdir", default="results", type=pathlib.Path)
    ap.add_argument("--N", type=int, nargs="+", default=[1000, 2000, 4000])
    ap.add_argument("--L", type=float, default=2.0)
    ap.add_argument("--reps", type=int, default=3)
    ap.add_argument("--seed", type=int, default=2)
    args = ap.parse_args()
    args.outdir.mkdir(parents=True, exist_ok=True)

    recs = bench.direct_cost_ratio(N_values=tuple(args.N), L=args.L,
                                   reps=args.reps, seed=args.seed)
    path = args.outdir / "direct_cost_ratio.csv"
    bench.write_records(recs, path)
    print(f"wrote {path} ({len(recs)} rows)")
    for kernel in ("stokeslet", "stresslet", "rotlet"):
        ratios = [r.times["ratio"] for r in recs if r.kernel == kernel]
        print(f"{kernel:10s} median HS/FS ratio {np.median(ratios):.2f}")


if __name__ == "__main__":
    main()
