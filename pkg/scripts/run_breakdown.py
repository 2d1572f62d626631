#!/usr/bin/env python3
"""Per-phase runtime breakdown of the Ewald evaluator.

Splits the wall time into real-space sum, spreading, FFT scaling,
gathering and wall-correction phases over a range of N at constant
density. Table precompute is reported separately (it is cached per
parameter set, not per evaluation).
"""

import argparse
import pathlib

from hsewald import bench


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--outdir", default="results", type=pathlib.Path)
    ap.add_argument("--kernel", default="stokeslet")
    ap.add_argument("--geometry", default="half", choices=["half", "free"])
    ap.add_argument("--N", type=int, nargs="+", default=[4000, 16000, 50000])
    ap.add_argument("--reps", type=int, default=3)
    ap.add_argument("--seed", type=int, default=4)
    args = ap.parse_args()
    args.outdir.mkdir(parents=True, exist_ok=True)

    recs = bench.runtime_breakdown(args.kernel, args.geometry,
                                   N_values=tuple(args.N), reps=args.reps,
                                   seed=args.seed)
    path = args.outdir / f"breakdown_{args.kernel}_{args.geometry}.csv"
    bench.write_records(recs, path)
    print(f"wrote {path} ({len(recs)} rows)")
    for r in recs:
        phases = ", ".join(f"{k}={v:.3f}s" for k, v in sorted(
            r.times.items()))
        print(f"N={r.N:6d}: {phases}")


if __name__ == "__main__":
    main()
