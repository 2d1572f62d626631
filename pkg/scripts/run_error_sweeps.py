#!/usr/bin/env python3
"""Measured vs estimated truncation errors over grid size and cutoff.

Reproduces the error-decay experiments: the Fourier-space error as the
grid is refined at fixed xi, and the real-space error as the cutoff rc
grows. One CSV (plus JSON manifest) per sweep in --outdir.
"""

import argparse
import pathlib

from hsewald import bench


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--outdir", default="results", type=pathlib.Path)
    ap.add_argument("--kernels", nargs="+",
                    default=["stokeslet", "stresslet", "rotlet"])
    ap.add_argument("--geometry", default="half", choices=["half", "free"])
    ap.add_argument("--N", type=int, default=10_000)
    ap.add_argument("--L", type=float, default=3.0)
    ap.add_argument("--xi-fourier", type=float, default=3.49)
    ap.add_argument("--xi-real", type=float, default=4.67)
    ap.add_argument("--N-real", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()
    args.outdir.mkdir(parents=True, exist_ok=True)

    M_values = tuple(range(10, 51, 4))
    rc_values = tuple(0.30 + 0.15 * i for i in range(9))
    for kernel in args.kernels:
        recs = bench.sweep_fourier_error(
            kernel, args.N, args.L, args.xi_fourier, M_values,
            geometry=args.geometry, seed=args.seed)
        path = args.outdir / f"fourier_sweep_{kernel}_{args.geometry}.csv"
        bench.write_records(recs, path)
        print(f"wrote {path} ({len(recs)} rows)")

        recs = bench.sweep_real_error(
            kernel, args.N_real, args.L, args.xi_real, rc_values,
            geometry=args.geometry, seed=args.seed)
        path = args.outdir / f"real_sweep_{kernel}_{args.geometry}.csv"
        bench.write_records(recs, path)
        print(f"wrote {path} ({len(recs)} rows)")


if __name__ == "__main__":
    main()
