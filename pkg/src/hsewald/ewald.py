"""Assembled fast summation: real-space plus Fourier-space components."""

from __future__ import annotations

import math
from dataclasses import dataclass
from time import perf_counter

import numpy as np

from .errors import ParameterError
from .ewald_fourier import GridSpec, fourier_space_sum, get_tables
from .ewald_real import RealSpaceParams, real_space_sum
from .system import FREE_SPACE, HALF_SPACE, PointSystem, VelocityResult


@dataclass
class EwaldParams:
    """Full parameter set of the split: xi, rc, M, P (plus derived values)."""

    xi: float
    rc: float
    M: int
    P: int = 16

    def __post_init__(self):
        if self.xi <= 0 or self.rc < 0:
            raise ParameterError("EwaldParams requires xi > 0 and rc >= 0")
        if self.M < 2 or self.P < 2:
            raise ParameterError("EwaldParams requires M >= 2 and P >= 2")

    def grid(self, L, geometry) -> GridSpec:
        return GridSpec(L=L, M=self.M, P=self.P, xi=self.xi,
                        geometry=geometry)

    def real(self) -> RealSpaceParams:
        return RealSpaceParams(xi=self.xi, rc=self.rc)

    def describe(self, L, geometry) -> dict:
        g = self.grid(L, geometry)
        return {"xi": self.xi, "rc": self.rc, "M": g.M, "P": g.P,
                "h": g.h, "eta": g.eta, "L_tilde": g.Ltilde,
                "M_tilde": g.Mtilde, "k_inf": g.k_inf}


def ewald_sum(system: PointSystem, params: EwaldParams, tables=None,
              cache_dir=None, threads=1, targets=None,
              target_indices=None) -> VelocityResult:
    """Fast evaluation of the velocity sum via the Ewald split.

    Equals the direct sum up to the truncation errors controlled by
    (rc, M); the stokeslet self term is included in the real-space part.
    """
    grid = params.grid(system.box_length, system.geometry)
    t0 = perf_counter()
    if tables is None:
        tables = get_tables(system.kind, grid, cache_dir=cache_dir)
    t_pre = perf_counter() - t0

    t0 = perf_counter()
    real = real_space_sum(system, params.real(), targets=targets,
                          target_indices=target_indices)
    t_real = perf_counter() - t0

    t0 = perf_counter()
    fourier = fourier_space_sum(system, grid, tables=tables,
                                threads=threads, targets=targets)
    t_fourier = perf_counter() - t0

    times = dict(fourier.meta["times"])
    times.update(real=t_real, fourier=t_fourier, precompute=t_pre,
                 total=t_real + t_fourier)
    return VelocityResult(
        velocities=real.velocities + fourier.velocities,
        parts={"real": real.velocities, "fourier": fourier.velocities},
        meta={"kind": system.kind, "geometry": system.geometry,
              "params": params.describe(system.box_length, system.geometry),
              "fft_count": fourier.meta["fft_count"],
              "ifft_count": fourier.meta["ifft_count"],
              "times": times})
