#!/usr/bin/env python3
"""Ewald vs direct-sum break-even points at constant source density.

For each kernel and geometry, times both evaluators over a range of N
with xi*rc and the grid resolution held fixed, verifies the Ewald result
against the direct sum at the smallest sizes, and interpolates the
crossover N where the fast method starts to win.
"""

import argparse
import pathlib

from hsewald import bench


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--outdir", default="results", type=pathlib.Path)
    ap.add_argument("--kernels", nargs="+",
                    default=["stokeslet", "stresslet", "rotlet"])
    ap.add_argument("--geometries", nargs="+", default=["free", "half"])
    ap.add_argument("--N", type=int, nargs="+",
                    default=[1000, 4000, 16000, 50000])
    ap.add_argument("--density", type=float, default=2500.0)
    ap.add_argument("--reps", type=int, default=3)
    ap.add_argument("--seed", type=int, default=3)
    args = ap.parse_args()
    args.outdir.mkdir(parents=True, exist_ok=True)

    for kernel in args.kernels:
        for geometry in args.geometries:
            recs, crossover = bench.break_even(
                kernel, geometry, density=args.density,
                N_values=tuple(args.N), reps=args.reps, seed=args.seed)
            path = args.outdir / f"break_even_{kernel}_{geometry}.csv"
            bench.write_records(recs, path)
            print(f"{kernel:10s} {geometry:5s} crossover N ~ "
                  f"{crossover:.0f}  -> {path}")


if __name__ == "__main__":
    main()
