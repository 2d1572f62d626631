"""Acceptance suite: every criterion prints one PASS/FAIL line.

These tests exercise the full pipeline at the reference configuration
(N = 2000, L = 3, xi = 4.67 for the oracle identities) and the scaling /
ordering properties at desk scale.  They are slower than the unit tests;
run them with ``pytest tests/test_acceptance.py -s`` to see the lines.
"""

import math
import time
from functools import lru_cache

import numpy as np
import pytest
import scipy.fft as sfft

from hsewald import bench, generate_system
from hsewald.estimates import measure_error, select_parameters
from hsewald.ewald import EwaldParams, ewald_sum
from hsewald.ewald_fourier import (BIHARMONIC, HARMONIC, GridSpec,
                                   fourier_space_sum, get_tables,
                                   precompute_greens, truncated_greens_hat)
from hsewald.ewald_real import f_derivs, harmonic_real_derivs
from hsewald.kernels_direct import (direct_sum_free, direct_sum_half,
                                    gfam_coeffs, harmonic_derivs,
                                    phi_and_grad, phi_channels)

KERNELS = ("stokeslet", "stresslet", "rotlet")
XI_REF = 4.67
L_REF = 3.0
N_REF = 2000
TOL_REF = 0.5e-8


def report(num, label, ok, detail):
    print(f"criterion {num:2d} [{label}]: {'PASS' if ok else 'FAIL'} "
          f"({detail})")
    assert ok, f"criterion {num} [{label}] failed: {detail}"


@lru_cache(maxsize=None)
def oracle_run(kernel, geometry):
    """Ewald vs direct at the reference configuration."""
    system = generate_system(N_REF, L_REF, kernel, geometry, seed=11)
    rc, M = select_parameters(kernel, 1e-8, XI_REF, L_REF, system)
    params = EwaldParams(xi=XI_REF, rc=rc, M=M, P=16)
    tables = get_tables(kernel, params.grid(L_REF, geometry))
    t0 = time.perf_counter()
    res = ewald_sum(system, params, tables=tables,
                    target_indices=np.arange(N_REF))
    seconds = time.perf_counter() - t0
    exact = (direct_sum_half if geometry == "half"
             else direct_sum_free)(system)
    rel = measure_error(res.velocities, exact.velocities).relative
    return rel, seconds


@pytest.mark.parametrize("kernel", KERNELS)
def test_criterion_1_oracle_identity_free(kernel):
    rel, seconds = oracle_run(kernel, "free")
    ok = rel <= TOL_REF and seconds <= 60.0
    report(1, f"oracle free {kernel}", ok,
           f"rel={rel:.2e} t={seconds:.1f}s")


@pytest.mark.parametrize("kernel", KERNELS)
def test_criterion_2_oracle_identity_half(kernel):
    rel, seconds = oracle_run(kernel, "half")
    ok = rel <= TOL_REF and seconds <= 60.0
    report(2, f"oracle half {kernel}", ok,
           f"rel={rel:.2e} t={seconds:.1f}s")


@pytest.mark.parametrize("kernel", KERNELS)
def test_criterion_3_no_slip(kernel):
    system = generate_system(50, 2.0, kernel, "half", seed=21)
    rng = np.random.default_rng(22)
    wall = np.column_stack([rng.uniform(0, 2, (20, 2)), np.zeros(20)])
    u_wall = direct_sum_half(system, targets=wall).velocities
    interior = direct_sum_half(system).velocities
    scale = np.sqrt(np.mean(np.sum(interior**2, axis=1)))
    ratio = np.abs(u_wall).max() / scale
    report(3, f"no-slip {kernel}", ratio <= 1e-12, f"|u|/rms={ratio:.2e}")


def test_criterion_4_xi_invariance():
    system = generate_system(500, L_REF, "stokeslet", "half", seed=31)
    results = []
    for xi in (3.0, 5.0, 7.0):
        rc, M = select_parameters("stokeslet", 1e-9, xi, L_REF, system)
        res = ewald_sum(system, EwaldParams(xi=xi, rc=rc, M=M, P=16),
                        target_indices=np.arange(500))
        results.append(res.velocities)
    uref = np.sqrt(np.mean(np.sum(results[0] ** 2, axis=1)))
    worst = 0.0
    for i in range(3):
        for j in range(i + 1, 3):
            d = np.sqrt(np.mean(np.sum((results[i] - results[j]) ** 2,
                                       axis=1)))
            worst = max(worst, d / uref)
    report(4, "xi invariance", worst <= 1e-8, f"max pairwise={worst:.2e}")


@lru_cache(maxsize=None)
def fourier_sweep(kernel):
    return tuple(bench.sweep_fourier_error(
        kernel, 10_000, L_REF, 3.49, tuple(range(10, 51, 4)),
        geometry="half", P=16, seed=7))


def _slope(points):
    x = np.array([p[0] for p in points])
    y = np.log([p[1] for p in points])
    return np.polyfit(x, y, 1)[0]


@pytest.mark.parametrize("kernel", KERNELS)
def test_criterion_5_fourier_error_decay(kernel):
    xi = 3.49
    records = fourier_sweep(kernel)
    window = [r for r in records
              if 1e-7 <= r.errors["estimate_relative"] <= 1e-1]
    assert len(window) >= 2, "estimate window is empty"
    if kernel == "rotlet":
        bound_ok = all(r.errors["delta_u"] <= 10.0 * r.errors["estimate"]
                       for r in window)
        detail = "measured within 10x of estimate"
    else:
        bound_ok = all(r.errors["delta_u"] <= r.errors["estimate"]
                       for r in window)
        detail = "measured <= estimate"
    pts = [(r.errors["k_inf"] ** 2, r.errors["delta_u"]) for r in window
           if r.errors["relative"] >= 1e-9]
    slope = _slope(pts)
    target = -1.0 / (4.0 * xi**2)
    slope_ok = abs(slope / target - 1.0) <= 0.15
    report(5, f"fourier decay {kernel}", bound_ok and slope_ok,
           f"{detail} on {len(window)} pts; slope ratio="
           f"{slope / target:.3f}")


@lru_cache(maxsize=None)
def real_sweep(kernel):
    rcs = tuple(np.arange(0.30, 1.51, 0.15))
    return tuple(bench.sweep_real_error(kernel, N_REF, L_REF, XI_REF, rcs,
                                        geometry="half", seed=7))


@pytest.mark.parametrize("kernel", ("stokeslet", "stresslet"))
def test_criterion_6_real_error_decay(kernel):
    records = real_sweep(kernel)
    window = [r for r in records
              if 1e-11 <= r.errors["estimate_relative"] <= 1e-1]
    assert len(window) >= 3
    bound_ok = all(r.errors["delta_u"] <= r.errors["estimate"]
                   for r in window)
    pts = [(r.rc ** 2, r.errors["delta_u"]) for r in window
           if r.errors["relative"] >= 1e-12]
    slope = _slope(pts)
    target = -XI_REF**2
    slope_ok = abs(slope / target - 1.0) <= 0.15
    report(6, f"real decay {kernel}", bound_ok and slope_ok,
           f"measured<=estimate on {len(window)} pts; slope ratio="
           f"{slope / target:.3f}")


def test_criterion_7_greens_tables():
    # (a) harmonic table vs the analytic potential of a Gaussian source
    sigma = 0.1
    grid = GridSpec(L=2.0, M=80, P=8, xi=10.0, geometry="free")
    h = grid.h
    table = precompute_greens(HARMONIC, grid)
    nx, ny, nz = grid.dims
    ax = grid.origin[0] + h * np.arange(nx)
    X, Y, Z = np.meshgrid(ax, ax, ax, indexing="ij")
    center = 1.0
    r2 = (X - center) ** 2 + (Y - center) ** 2 + (Z - center) ** 2
    rho = np.exp(-r2 / (2 * sigma**2)) / (sigma**3 * (2 * np.pi) ** 1.5)
    buf = np.zeros(grid.padded_dims)
    buf[:nx, :ny, :nz] = rho
    phi = sfft.ifftn(sfft.fftn(buf)
                     * table.samples)[:nx, :ny, :nz].real / (4 * np.pi)
    r = np.sqrt(r2)
    from scipy.special import erf
    exact = erf(r / (sigma * math.sqrt(2.0))) / (4 * np.pi * r)
    interior = (r > 2 * h) & (r < 0.6)
    rel = np.abs(phi[interior] - exact[interior]) / np.abs(exact[interior])
    ok_a = rel.max() <= 1e-10
    # (b) biharmonic k->0 limit equals pi R^4
    R = 1.9
    vals = [truncated_greens_hat(BIHARMONIC, R, np.array([k]))[0]
            for k in (1e-3, 1e-4, 1e-5)]
    lim_err = abs(vals[-1] - math.pi * R**4) / (math.pi * R**4)
    ok_b = lim_err <= 1e-6
    report(7, "greens tables", ok_a and ok_b,
           f"erf oracle max rel={rel.max():.2e}; "
           f"biharmonic k->0 rel={lim_err:.2e}")


def test_criterion_8_fft_counts():
    expected = {("stokeslet", "half"): (7, 6), ("stresslet", "half"): (21, 6),
                ("rotlet", "half"): (6, 6), ("stokeslet", "free"): (3, 3),
                ("stresslet", "free"): (9, 3), ("rotlet", "free"): (3, 3)}
    got = {}
    for (kernel, geom), exp in expected.items():
        s = generate_system(15, 2.0, kernel, geom, seed=1)
        g = GridSpec(L=2.0, M=12, P=8, xi=3.0, geometry=geom)
        res = fourier_space_sum(s, g)
        got[(kernel, geom)] = (res.meta["fft_count"], res.meta["ifft_count"])
    ok = got == expected
    report(8, "fft accounting", ok, f"counts={sorted(got.values())}")


@lru_cache(maxsize=None)
def ratio_records():
    return tuple(bench.direct_cost_ratio(
        N_values=(1000, 2000, 4000, 8000), L=2.0, reps=5, seed=2))


@lru_cache(maxsize=None)
def break_even_run(kernel, geometry):
    records, crossover = bench.break_even(
        kernel, geometry, N_values=(1000, 4000, 16000, 50000),
        reps=2, seed=3)
    return tuple(records), crossover


def test_criterion_9_complexity_and_ordering():
    details = []
    ok = True
    # direct sums follow O(N^2)
    for kernel in KERNELS:
        recs = [r for r in ratio_records() if r.kernel == kernel]
        slope = _slope([(math.log(r.N), r.times["direct_free"])
                        for r in recs])
        ok &= abs(slope - 2.0) <= 0.1
        details.append(f"{kernel} N^2 slope={slope:.2f}")
    # HS/FS cost ratio window and kernel ordering
    ratios = {}
    for kernel in KERNELS:
        recs = [r for r in ratio_records() if r.kernel == kernel]
        ratios[kernel] = float(np.median([r.times["ratio"] for r in recs]))
        ok &= 2.5 <= ratios[kernel] <= 5.0
    ok &= ratios["rotlet"] < ratios["stokeslet"] < ratios["stresslet"]
    details.append("HS/FS " + ",".join(f"{k}={v:.2f}"
                                       for k, v in ratios.items()))
    crossovers = {}
    for kernel in KERNELS:
        for geom in ("free", "half"):
            records, crossover = break_even_run(kernel, geom)
            # Ewald scaling over N in [1e4, 1e5]
            slope = _slope([(math.log(r.N), r.times["total"])
                            for r in records if r.N >= 4000])
            ok &= slope <= 1.3
            # Ewald beats direct at N = 5e4
            big = [r for r in records if r.N == 50_000][0]
            ok &= big.times["total"] < big.times["direct"]
            ok &= crossover is not None
            crossovers[(kernel, geom)] = crossover
            details.append(f"{kernel}/{geom} slope={slope:.2f} "
                           f"cross={crossover:.0f}" if crossover is not None
                           else f"{kernel}/{geom} slope={slope:.2f} no cross")
    for kernel in KERNELS:
        lo, hi = crossovers[(kernel, "half")], crossovers[(kernel, "free")]
        ok &= lo is not None and hi is not None and lo <= hi
    report(9, "complexity/ordering", ok, "; ".join(details))


def test_criterion_10_derivative_suite():
    rng = np.random.default_rng(55)
    xi = 2.7
    eps = 1e-5
    worst = 0.0

    def relerr(a, b):
        denom = max(abs(np.asarray(b)).max(), 1e-30)
        return np.abs(np.asarray(a) - np.asarray(b)).max() / denom

    for _ in range(100):
        r = rng.uniform(0.2, 2.0)
        # screened radial derivatives against FD of the analytic previous
        f0, f1, f2, f3 = f_derivs(r, xi)
        fd1 = (f_derivs(r + eps, xi)[0] - f_derivs(r - eps, xi)[0]) / (2 * eps)
        fd2 = (f_derivs(r + eps, xi)[1] - f_derivs(r - eps, xi)[1]) / (2 * eps)
        fd3 = (f_derivs(r + eps, xi)[2] - f_derivs(r - eps, xi)[2]) / (2 * eps)
        worst = max(worst, relerr(f1, fd1), relerr(f2, fd2), relerr(f3, fd3))

        # harmonic family: gradient chains via directional FD
        x = rng.uniform(-1.0, 1.0, 3)
        x += np.sign(x) * 0.3
        hd = harmonic_derivs(x)
        for j in range(3):
            e = np.zeros(3)
            e[j] = eps
            gfd = (harmonic_derivs(x + e).G - harmonic_derivs(x - e).G) \
                / (2 * eps)
            worst = max(worst, relerr(hd.gradG[j], gfd))
            hfd = (harmonic_derivs(x + e).gradG
                   - harmonic_derivs(x - e).gradG) / (2 * eps)
            worst = max(worst, relerr(hd.hessG[:, j], hfd))
            tfd = (harmonic_derivs(x + e).hessG
                   - harmonic_derivs(x - e).hessG) / (2 * eps)
            worst = max(worst, relerr(hd.thirdG[:, :, j], tfd))

        # screened harmonic family; keep xi*r moderate so the FD probe of
        # the erfc-complement tail is not dominated by float cancellation
        x = x / np.linalg.norm(x) * rng.uniform(0.25, 0.9)
        sd = harmonic_real_derivs(x, xi)
        for j in range(3):
            e = np.zeros(3)
            e[j] = eps
            gfd = (harmonic_real_derivs(x + e, xi).G
                   - harmonic_real_derivs(x - e, xi).G) / (2 * eps)
            worst = max(worst, relerr(sd.gradG[j], gfd))
            hfd = (harmonic_real_derivs(x + e, xi).gradG
                   - harmonic_real_derivs(x - e, xi).gradG) / (2 * eps)
            worst = max(worst, relerr(sd.hessG[:, j], hfd))
            tfd = (harmonic_real_derivs(x + e, xi).hessG
                   - harmonic_real_derivs(x - e, xi).hessG) / (2 * eps)
            worst = max(worst, relerr(sd.thirdG[:, :, j], tfd))

    # grad phi for each kernel
    for kind in KERNELS:
        y = np.array([[0.4, 0.6, 0.5]])
        vecs = rng.uniform(-1, 1, (3, 3))
        s, v, M = phi_channels(kind, y, f=vecs[:1], g=vecs[1:2], q=vecs[2:])
        for _ in range(10):
            d = rng.uniform(0.3, 1.5, 3)
            _, grad = phi_and_grad(d, gfam_coeffs(np.linalg.norm(d)), s, v, M)
            for j in range(3):
                e = np.zeros(3)
                e[j] = eps
                pp = phi_and_grad(d + e, gfam_coeffs(np.linalg.norm(d + e)),
                                  s, v, M)[0][0]
                pm = phi_and_grad(d - e, gfam_coeffs(np.linalg.norm(d - e)),
                                  s, v, M)[0][0]
                worst = max(worst, relerr(grad[0, j], (pp - pm) / (2 * eps)))

    report(10, "derivative suite", worst <= 1e-6, f"max rel={worst:.2e}")
