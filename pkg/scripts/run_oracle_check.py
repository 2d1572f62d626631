#!/usr/bin/env python3
"""Ewald vs O(N^2) direct-sum oracle for every kernel and geometry.

Selects (rc, M) from the error estimates at the requested tolerance,
evaluates both methods on the same system and prints the relative RMS
difference and wall times.
"""

import argparse
import time

import numpy as np

from hsewald import generate_system
from hsewald.estimates import measure_error, select_parameters
from hsewald.ewald import EwaldParams, ewald_sum
from hsewald.ewald_fourier import get_tables
from hsewald.kernels_direct import direct_sum_free, direct_sum_half


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--N", type=int, default=2000)
    ap.add_argument("--L", type=float, default=3.0)
    ap.add_argument("--xi", type=float, default=4.67)
    ap.add_argument("--tol", type=float, default=1e-8)
    ap.add_argument("--seed", type=int, default=11)
    args = ap.parse_args()

    for kernel in ("stokeslet", "stresslet", "rotlet"):
        for geometry in ("free", "half"):
            system = generate_system(args.N, args.L, kernel, geometry,
                                     seed=args.seed)
            rc, M = select_parameters(kernel, args.tol, args.xi, args.L,
                                      system)
            params = EwaldParams(xi=args.xi, rc=rc, M=M, P=16)
            tables = get_tables(kernel, params.grid(args.L, geometry))
            t0 = time.perf_counter()
            res = ewald_sum(system, params, tables=tables,
                            target_indices=np.arange(args.N))
            t_ewald = time.perf_counter() - t0
            t0 = time.perf_counter()
            exact = (direct_sum_half if geometry == "half"
                     else direct_sum_free)(system)
            t_direct = time.perf_counter() - t0
            rel = measure_error(res.velocities, exact.velocities).relative
            print(f"{kernel:10s} {geometry:5s} rc={rc:.3f} M={M:3d} "
                  f"rel={rel:.3e} ewald={t_ewald:6.1f}s "
                  f"direct={t_direct:6.1f}s")


if __name__ == "__main__":
    main()
