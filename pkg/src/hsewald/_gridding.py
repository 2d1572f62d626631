"""Compiled Gaussian spreading and gathering on the extended grid.

The window is the normalized truncated Gaussian

    w(x) = (2 xi^2 / (pi eta))^(3/2) exp(-2 xi^2 |x - z|^2 / eta),

separable per dimension, supported on the P nearest grid points per
dimension.  Spreading scatter-adds ``weight * w`` onto channel grids;
gathering is the adjoint, a trapezoidal-rule integral (the h^3 factor is
applied by the caller).  Both loops are serial and deterministic.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit


@njit(cache=True)
def _window_1d(pos, origin, h, P, alpha):
    """Support start index and the P per-dimension window values."""
    i0 = int(math.floor((pos - origin) / h))
    lo = i0 - P // 2 + 1
    vals = np.empty(P)
    for a in range(P):
        d = pos - (origin + (lo + a) * h)
        vals[a] = math.exp(-alpha * d * d)
    return lo, vals


@njit(cache=True)
def spread_points(points, weights, origin, h, dims, P, xi, eta):
    """Scatter weighted truncated Gaussians onto channel grids.

    ``weights`` is (n_points, n_channels); the result has shape
    (*dims, n_channels).  Supports must lie inside the grid (guaranteed by
    the extended-domain margins); out-of-range supports raise.
    """
    n, nch = weights.shape
    # channel-last layout keeps the nch updates per cell in one cache line
    grids = np.zeros((dims[0], dims[1], dims[2], nch))
    alpha = 2.0 * xi * xi / eta
    pref = (2.0 * xi * xi / (math.pi * eta)) ** 1.5
    for m in range(n):
        lx, wx = _window_1d(points[m, 0], origin[0], h, P, alpha)
        ly, wy = _window_1d(points[m, 1], origin[1], h, P, alpha)
        lz, wz = _window_1d(points[m, 2], origin[2], h, P, alpha)
        if (lx < 0 or ly < 0 or lz < 0 or lx + P > dims[0]
                or ly + P > dims[1] or lz + P > dims[2]):
            raise ValueError("window support leaves the grid")
        for a in range(P):
            for b in range(P):
                wxy = pref * wx[a] * wy[b]
                for c in range(P):
                    w = wxy * wz[c]
                    for ch in range(nch):
                        grids[lx + a, ly + b, lz + c, ch] += weights[m, ch] * w
    return grids


@njit(cache=True)
def gather_points(grids, points, origin, h, dims, P, xi, eta):
    """Adjoint of ``spread_points``: window-weighted sums per channel.

    Returns (n_points, n_channels); the caller multiplies by h^3 to turn
    the sums into trapezoidal integrals.
    """
    nch = grids.shape[3]
    n = points.shape[0]
    out = np.zeros((n, nch))
    alpha = 2.0 * xi * xi / eta
    pref = (2.0 * xi * xi / (math.pi * eta)) ** 1.5
    for m in range(n):
        lx, wx = _window_1d(points[m, 0], origin[0], h, P, alpha)
        ly, wy = _window_1d(points[m, 1], origin[1], h, P, alpha)
        lz, wz = _window_1d(points[m, 2], origin[2], h, P, alpha)
        if (lx < 0 or ly < 0 or lz < 0 or lx + P > dims[0]
                or ly + P > dims[1] or lz + P > dims[2]):
            raise ValueError("window support leaves the grid")
        for a in range(P):
            for b in range(P):
                wxy = pref * wx[a] * wy[b]
                for c in range(P):
                    w = wxy * wz[c]
                    for ch in range(nch):
                        out[m, ch] += grids[lx + a, ly + b, lz + c, ch] * w
    return out
