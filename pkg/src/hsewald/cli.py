"""Command-line interface: system generation, sums, and benchmarks."""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time

import numpy as np

from . import bench as bench_mod
from .errors import HsewaldError
from .estimates import select_parameters
from .ewald import EwaldParams, ewald_sum
from .ewald_fourier import (GridSpec, get_tables, load_table,
                            precompute_greens, save_table, table_kinds_for)
from .ewald_real import RealSpaceParams, real_space_sum
from .kernels_direct import direct_sum_free, direct_sum_half
from .system import (FREE_SPACE, HALF_SPACE, KINDS, PointSystem,
                     generate_system)

GEOMETRIES = (FREE_SPACE, HALF_SPACE)


def _write_velocities(path, positions, velocities):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "x", "y", "z", "u1", "u2", "u3"])
        for i, (p, u) in enumerate(zip(positions, velocities)):
            writer.writerow([i, *(f"{v:.17g}" for p_u in (p, u)
                                  for v in p_u)])


def _summary(path, system, seconds, extra=None):
    data = {"N": system.n, "seconds": seconds, "kind": system.kind,
            "geometry": system.geometry}
    if extra:
        data.update(extra)
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2)


def cmd_gen(args):
    system = generate_system(args.N, args.L, args.kernel, args.geometry,
                             seed=args.seed)
    system.save(args.out)
    print(f"wrote {args.out}: N={system.n} kind={system.kind} "
          f"geometry={system.geometry}")


def cmd_direct(args):
    system = PointSystem.load(args.system)
    fn = direct_sum_half if system.geometry == HALF_SPACE else direct_sum_free
    t0 = time.perf_counter()
    result = fn(system)
    seconds = time.perf_counter() - t0
    _write_velocities(args.out, system.positions, result.velocities)
    _summary(args.out + ".json", system, seconds)
    print(f"direct sum: N={system.n} in {seconds:.3f}s -> {args.out}")


def cmd_ewald(args):
    system = PointSystem.load(args.system)
    params = EwaldParams(xi=args.xi, rc=args.rc, M=args.M, P=args.P)
    if args.real_only:
        t0 = time.perf_counter()
        result = real_space_sum(system, params.real(),
                                target_indices=np.arange(system.n))
        seconds = time.perf_counter() - t0
        extra = {"component": "real", "xi": args.xi, "rc": args.rc}
    else:
        t0 = time.perf_counter()
        result = ewald_sum(system, params, cache_dir=args.cache_dir,
                           threads=args.threads)
        seconds = time.perf_counter() - t0
        extra = {"component": "total", "xi": args.xi, "rc": args.rc,
                 "M": args.M, "P": args.P,
                 "times": result.meta.get("times", {})}
    _write_velocities(args.out, system.positions, result.velocities)
    _summary(args.out + ".json", system, seconds, extra)
    print(f"ewald sum: N={system.n} in {seconds:.3f}s -> {args.out}")


def cmd_precompute(args):
    if args.inspect:
        table = load_table(args.inspect)
        print(json.dumps({"kind": table.kind, "R": table.R,
                          "L_tilde": table.Ltilde,
                          "dims": list(table.dims)}, indent=2))
        return
    grid = GridSpec(L=args.L, M=args.M, P=args.P, xi=args.xi,
                    geometry=args.geometry)
    for kind in table_kinds_for(args.kernel, args.geometry):
        t0 = time.perf_counter()
        table = precompute_greens(kind, grid)
        seconds = time.perf_counter() - t0
        path = f"{args.out_prefix}_{kind}.segt"
        save_table(table, path)
        print(f"{kind}: dims={table.dims} R={table.R:.4g} "
              f"({seconds:.2f}s) -> {path}")


def cmd_params(args):
    system = generate_system(args.N, args.L, args.kernel, args.geometry,
                             seed=args.seed)
    rc, M = select_parameters(args.kernel, args.eps, args.xi, args.L,
                              system, P=args.P)
    info = EwaldParams(xi=args.xi, rc=rc, M=M, P=args.P).describe(
        args.L, args.geometry)
    print(json.dumps(info, indent=2))


def cmd_bench(args):
    records = []
    cross = None
    if args.bench_cmd == "sweep-fourier":
        M_values = range(args.M_min, args.M_max + 1, args.M_step)
        records = bench_mod.sweep_fourier_error(
            args.kernel, args.N, args.L, args.xi, M_values,
            geometry=args.geometry, P=args.P, seed=args.seed,
            threads=args.threads)
    elif args.bench_cmd == "sweep-real":
        rc_values = np.linspace(args.rc_min, args.rc_max, args.rc_num)
        records = bench_mod.sweep_real_error(
            args.kernel, args.N, args.L, args.xi, rc_values,
            geometry=args.geometry, seed=args.seed)
    elif args.bench_cmd == "ratio":
        records = bench_mod.direct_cost_ratio(reps=args.reps, seed=args.seed)
    elif args.bench_cmd == "break-even":
        records, cross = bench_mod.break_even(
            args.kernel, args.geometry, reps=args.reps, seed=args.seed,
            threads=args.threads,
            N_values=tuple(int(n) for n in args.N_values.split(",")))
    elif args.bench_cmd == "breakdown":
        records = bench_mod.runtime_breakdown(
            args.kernel, args.geometry, reps=args.reps, seed=args.seed,
            threads=args.threads,
            N_values=tuple(int(n) for n in args.N_values.split(",")))
    bench_mod.write_records(records, args.out)
    print(f"wrote {len(records)} records -> {args.out}")
    if cross is not None:
        print(f"break-even N ~ {cross:.0f}")


def _add_system_args(p):
    p.add_argument("--kernel", choices=KINDS, required=True)
    p.add_argument("--geometry", choices=GEOMETRIES, default=FREE_SPACE)
    p.add_argument("-N", type=int, default=1000)
    p.add_argument("-L", type=float, default=2.0)
    p.add_argument("--seed", type=int, default=0)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="hsewald",
        description="Fast Ewald summation for Stokes point singularities "
                    "in free space and above a no-slip wall.")
    sub = parser.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("gen", help="generate a random system file")
    _add_system_args(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("direct", help="O(N^2) direct sum")
    p.add_argument("system")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_direct)

    p = sub.add_parser("ewald", help="fast Ewald sum")
    p.add_argument("system")
    p.add_argument("--xi", type=float, required=True)
    p.add_argument("--rc", type=float, required=True)
    p.add_argument("--M", type=int, required=True)
    p.add_argument("--P", type=int, default=16)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--cache-dir", default=None)
    p.add_argument("--real-only", action="store_true",
                   help="emit only the truncated real-space component")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ewald)

    p = sub.add_parser("precompute", help="build or inspect Green's tables")
    p.add_argument("--inspect", default=None, metavar="FILE")
    p.add_argument("--kernel", choices=KINDS, default="stokeslet")
    p.add_argument("--geometry", choices=GEOMETRIES, default=FREE_SPACE)
    p.add_argument("-L", type=float, default=2.0)
    p.add_argument("--M", type=int, default=32)
    p.add_argument("--P", type=int, default=16)
    p.add_argument("--xi", type=float, default=4.0)
    p.add_argument("--out-prefix", default="greens")
    p.set_defaults(func=cmd_precompute)

    p = sub.add_parser("params", help="select (rc, M) for a tolerance")
    _add_system_args(p)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--xi", type=float, required=True)
    p.add_argument("--P", type=int, default=16)
    p.set_defaults(func=cmd_params)

    p = sub.add_parser("bench", help="benchmark experiments")
    bsub = p.add_subparsers(dest="bench_cmd", required=True)
    for name in ("sweep-fourier", "sweep-real", "ratio", "break-even",
                 "breakdown"):
        bp = bsub.add_parser(name)
        bp.add_argument("--kernel", choices=KINDS, default="stokeslet")
        bp.add_argument("--geometry", choices=GEOMETRIES, default=HALF_SPACE)
        bp.add_argument("-N", type=int, default=2000)
        bp.add_argument("-L", type=float, default=3.0)
        bp.add_argument("--xi", type=float, default=4.0)
        bp.add_argument("--P", type=int, default=16)
        bp.add_argument("--seed", type=int, default=1)
        bp.add_argument("--reps", type=int, default=3)
        bp.add_argument("--threads", type=int, default=1)
        bp.add_argument("--out", required=True)
        if name == "sweep-fourier":
            bp.add_argument("--M-min", type=int, default=10)
            bp.add_argument("--M-max", type=int, default=50)
            bp.add_argument("--M-step", type=int, default=4)
        if name == "sweep-real":
            bp.add_argument("--rc-min", type=float, default=0.2)
            bp.add_argument("--rc-max", type=float, default=1.2)
            bp.add_argument("--rc-num", type=int, default=11)
        if name in ("break-even", "breakdown"):
            bp.add_argument("--N-values", default="1000,4000,16000,50000")
        bp.set_defaults(func=cmd_bench)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except HsewaldError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
