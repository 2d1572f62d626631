"""Short-range (real-space) component of the Ewald-split sums.

All screened interactions decay like erfc(xi r) / Gaussians and are
truncated at the cutoff radius ``r_c`` (closed ball: pairs at exactly
``r_c`` are included).  Neighbor search uses a non-periodic cell list
covering sources and, in the half-space, their images.

Kernel values follow the same prefactor-free internal convention as
:mod:`hsewald.kernels_direct`; physical prefactors are applied once when
the sum is assembled.  The rotlet real part carries the factor 2 of the
velocity sum, consistent with its unscreened counterpart.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit
from scipy.special import erf, erfc

from .errors import GeometryError, ParameterError, SingularityError
from .kernels_direct import (FOUR_PI, EIGHT_PI, HarmonicDerivs, _norm_factor,
                             gfam_coeffs, phi_and_grad, phi_channels,
                             phi_channels_from_system)
from .system import (HALF_SPACE, ROTLET, STOKESLET, STRESSLET,
                     PointSystem, VelocityResult, reflect)

_KIND_ID = {STOKESLET: 0, STRESSLET: 1, ROTLET: 2}
_SQRT_PI = math.sqrt(math.pi)

# erfc lookup for the pair loop: cubic Hermite interpolation on an
# equispaced grid.  libm erfc costs ~25 ns per call and dominates the
# in-cutoff pair work; the table evaluates in a few ns with interpolation
# error below 4e-13 (h^4/384 * max|erfc''''|), and falls back to libm
# beyond the table range.
_ERFC_H = 0.002
_ERFC_XMAX = 6.0
_ERFC_X = np.arange(0.0, _ERFC_XMAX + 2.0 * _ERFC_H, _ERFC_H)
_ERFC_F = erfc(_ERFC_X)
_ERFC_D = (-2.0 / _SQRT_PI) * np.exp(-_ERFC_X**2) * _ERFC_H
_ERFC_INVH = 1.0 / _ERFC_H


@njit(inline="always")
def _erfc_fast(x):
    if x >= _ERFC_XMAX:
        return math.erfc(x)
    u = x * _ERFC_INVH
    i = int(u)
    t = u - i
    t2 = t * t
    t3 = t2 * t
    return (_ERFC_F[i] * (2.0 * t3 - 3.0 * t2 + 1.0)
            + _ERFC_D[i] * (t3 - 2.0 * t2 + t)
            + _ERFC_F[i + 1] * (3.0 * t2 - 2.0 * t3)
            + _ERFC_D[i + 1] * (t3 - t2))


@dataclass
class RealSpaceParams:
    """Screening parameter and cutoff for the real-space sum."""

    xi: float
    rc: float

    def __post_init__(self):
        if self.xi <= 0:
            raise ParameterError(f"xi must be positive, got {self.xi}")
        if self.rc < 0:
            raise ParameterError(f"rc must be nonnegative, got {self.rc}")


# ---------------------------------------------------------------------------
# screened scalar functions
# ---------------------------------------------------------------------------

def f_derivs(r, xi):
    """f(r) = erf(xi r)/r and its first three derivatives.

    Uses the stable recurrences f' = (e - f)/r, f'' = (e' - 2f')/r,
    f''' = (e'' - 3 f'')/r with e(r) = (2 xi/sqrt(pi)) exp(-xi^2 r^2).
    Accepts scalars or arrays of positive r.
    """
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ParameterError("f_derivs requires r > 0")
    if xi <= 0:
        raise ParameterError("f_derivs requires xi > 0")
    e = (2.0 * xi / _SQRT_PI) * np.exp(-(xi * r) ** 2)
    f = erf(xi * r) / r
    f1 = (e - f) / r
    e1 = -2.0 * xi**2 * r * e
    f2 = (e1 - 2.0 * f1) / r
    e2 = -2.0 * xi**2 * e * (1.0 - 2.0 * xi**2 * r**2)
    f3 = (e2 - 3.0 * f2) / r
    return f, f1, f2, f3


def self_interaction(kind, xi):
    """Zero-displacement limit of the real-space kernel (raw convention).

    Nonzero only for the stokeslet, where it is -(4 xi / sqrt(pi)) I.
    """
    if xi <= 0:
        raise ParameterError("self_interaction requires xi > 0")
    if kind == STOKESLET:
        return -(4.0 * xi / _SQRT_PI) * np.eye(3)
    if kind in (STRESSLET, ROTLET):
        return np.zeros((3, 3))
    raise ValueError(f"unknown kind {kind!r}")


def kernel_real(kind, r, xi):
    """Screened kernel tensor at displacement r (raw convention).

    Returns the 3x3 stokeslet/rotlet tensor or the 3x3x3 stresslet tensor.
    """
    r = np.asarray(r, dtype=float)
    rn = np.linalg.norm(r)
    if rn == 0.0:
        raise SingularityError("kernel_real evaluated at zero displacement")
    rhat = r / rn
    E = math.exp(-(xi * rn) ** 2)
    C = float(erfc(xi * rn))
    if kind == STOKESLET:
        a = 2.0 * (xi * E / _SQRT_PI + C / (2.0 * rn))
        b = 4.0 * xi * E / _SQRT_PI
        return a * (np.eye(3) + np.outer(rhat, rhat)) - b * np.eye(3)
    if kind == STRESSLET:
        c1 = -(2.0 / rn) * (3.0 * C / rn
                            + (2.0 * xi / _SQRT_PI) * (3.0 + 2.0 * (xi * rn) ** 2) * E)
        c2 = 4.0 * xi**3 * E / _SQRT_PI
        eye = np.eye(3)
        T = c1 * np.einsum("j,l,m->jlm", rhat, rhat, rhat)
        # symmetric term uses the unnormalized displacement r, which makes
        # the xi -> 0 limit vanish and the pair sum match the full kernel
        T += c2 * (np.einsum("jl,m->jlm", eye, r)
                   + np.einsum("lm,j->jlm", eye, r)
                   + np.einsum("mj,l->jlm", eye, r))
        return T
    if kind == ROTLET:
        d = C / rn**2 + (2.0 * xi / _SQRT_PI) * E / rn
        eps = np.zeros((3, 3, 3))
        eps[0, 1, 2] = eps[1, 2, 0] = eps[2, 0, 1] = 1.0
        eps[0, 2, 1] = eps[2, 1, 0] = eps[1, 0, 2] = -1.0
        return 2.0 * np.einsum("jlm,m->jl", eps, rhat) * d
    raise ValueError(f"unknown kind {kind!r}")


def harmonic_real_derivs(r, xi) -> HarmonicDerivs:
    """Screened harmonic derivative family (raw 4 pi G = 1/r convention)."""
    r = np.asarray(r, dtype=float)
    rn = np.linalg.norm(r)
    if rn == 0.0:
        raise SingularityError("harmonic_real_derivs at zero displacement")
    c0, c1, c2, c3 = gfam_coeffs(np.array([rn]),
                                 screen=f_derivs(np.array([rn]), xi))
    c0, c1, c2, c3 = float(c0[0]), float(c1[0]), float(c2[0]), float(c3[0])
    eye = np.eye(3)
    grad = -c1 * r
    hess = -c1 * eye + c2 * np.outer(r, r)
    third = (c2 * (np.einsum("ij,k->ijk", eye, r)
                   + np.einsum("ik,j->ijk", eye, r)
                   + np.einsum("jk,i->ijk", eye, r))
             + c3 * np.einsum("i,j,k->ijk", r, r, r))
    return HarmonicDerivs(G=c0, gradG=grad, hessG=hess, thirdG=third)


def correction_phi_real(kind, y, x, xi, f=None, g=None, q=None):
    """Screened wall correction (phi_R, grad phi_R), raw 4 pi convention."""
    y = np.asarray(y, float)
    x = np.asarray(x, float)
    d = x - y * np.array([1.0, 1.0, -1.0])
    rn = np.linalg.norm(d)
    if rn == 0.0:
        raise SingularityError("evaluation point coincides with an image")
    s, v, M = phi_channels(kind, y[None, :],
                           f=None if f is None else np.asarray(f, float)[None, :],
                           g=None if g is None else np.asarray(g, float)[None, :],
                           q=None if q is None else np.asarray(q, float)[None, :])
    coeffs = gfam_coeffs(np.array([rn]), screen=f_derivs(np.array([rn]), xi))
    phi, grad = phi_and_grad(d[None, :], coeffs, s, v, M)
    return phi[0], grad[0]


# ---------------------------------------------------------------------------
# cell list
# ---------------------------------------------------------------------------

@dataclass
class CellList:
    """Non-periodic cell list with edge length >= rc per dimension."""

    positions: np.ndarray
    rc: float
    origin: np.ndarray
    edge: np.ndarray           # (3,) per-dimension cell edge
    dims: np.ndarray           # (3,) int cell counts
    order: np.ndarray          # point indices sorted by cell
    start: np.ndarray          # flat-cell -> slice start into order

    def cell_of(self, x):
        """Integer cell coordinates of a point (clamped into the grid)."""
        c = np.floor((np.asarray(x, float) - self.origin) / self.edge).astype(np.int64)
        return np.clip(c, 0, self.dims - 1)

    def query(self, x):
        """Indices of all points in the 27 cells around x (superset of rc ball)."""
        cx, cy, cz = self.cell_of(x)
        out = []
        nx, ny, nz = self.dims
        for ix in range(max(cx - 1, 0), min(cx + 2, nx)):
            for iy in range(max(cy - 1, 0), min(cy + 2, ny)):
                for iz in range(max(cz - 1, 0), min(cz + 2, nz)):
                    flat = (ix * ny + iy) * nz + iz
                    out.append(self.order[self.start[flat]:self.start[flat + 1]])
        return np.concatenate(out) if out else np.empty(0, dtype=np.int64)

    def neighbors_within(self, x):
        """Indices of all points with |p - x| <= rc (closed ball)."""
        cand = self.query(x)
        d = self.positions[cand] - np.asarray(x, float)
        return cand[np.sum(d * d, axis=1) <= self.rc**2]


def build_cell_list(points, rc, bounds) -> CellList:
    """Bin points into cells of edge >= rc inside the given bounds.

    ``bounds`` is a (lo, hi) pair of 3-vectors enclosing all points.  A
    cutoff larger than the box degenerates to a single cell (all-pairs).
    """
    points = np.atleast_2d(np.asarray(points, float))
    lo = np.asarray(bounds[0], float)
    hi = np.asarray(bounds[1], float)
    if rc <= 0:
        raise ParameterError("build_cell_list requires rc > 0")
    if np.any(points < lo - 1e-12) or np.any(points > hi + 1e-12):
        raise GeometryError("cell-list bounds do not enclose all points")
    extent = hi - lo
    dims = np.maximum(1, (extent / rc).astype(np.int64))
    edge = extent / dims
    cells = np.clip(((points - lo) / edge).astype(np.int64), 0, dims - 1)
    flat = (cells[:, 0] * dims[1] + cells[:, 1]) * dims[2] + cells[:, 2]
    order = np.argsort(flat, kind="stable")
    ncell = int(np.prod(dims))
    start = np.zeros(ncell + 1, dtype=np.int64)
    np.cumsum(np.bincount(flat, minlength=ncell), out=start[1:])
    return CellList(positions=points, rc=rc, origin=lo, edge=edge,
                    dims=dims, order=order, start=start)


# ---------------------------------------------------------------------------
# compiled pair loop
# ---------------------------------------------------------------------------

@njit(cache=True)
def _real_pair_sums(kind, xi, rc, targets, tcols, src, sa, sb, sign,
                    n_real, s_ch, v_ch, M_ch,
                    origin, edge, dims, ids, start, reach):
    """Accumulate screened kernel and correction sums per target.

    ``src``/``sa``/``sb``/``sign`` are pre-permuted into cell order so the
    candidate scan reads rows sequentially; ``ids`` maps each row back to
    its original source index.  Sources with ``ids >= n_real`` are
    half-space images and additionally contribute the screened wall
    correction through the channel arrays (s, v, M), indexed by
    ``ids - n_real``.
    """
    nt = targets.shape[0]
    uk = np.zeros((nt, 3))
    uc = np.zeros((nt, 3))
    rc2 = rc * rc
    sqpi = math.sqrt(math.pi)
    nx, ny, nz = dims[0], dims[1], dims[2]
    for t in range(nt):
        x0, x1, x2 = targets[t, 0], targets[t, 1], targets[t, 2]
        cx = int((x0 - origin[0]) / edge[0])
        cy = int((x1 - origin[1]) / edge[1])
        cz = int((x2 - origin[2]) / edge[2])
        cx = min(max(cx, 0), nx - 1)
        cy = min(max(cy, 0), ny - 1)
        cz = min(max(cz, 0), nz - 1)
        for ix in range(max(cx - reach, 0), min(cx + reach + 1, nx)):
            for iy in range(max(cy - reach, 0), min(cy + reach + 1, ny)):
                for iz in range(max(cz - reach, 0), min(cz + reach + 1, nz)):
                    flat = (ix * ny + iy) * nz + iz
                    for p in range(start[flat], start[flat + 1]):
                        if ids[p] == tcols[t]:
                            continue
                        d0 = x0 - src[p, 0]
                        d1 = x1 - src[p, 1]
                        d2 = x2 - src[p, 2]
                        r2 = d0 * d0 + d1 * d1 + d2 * d2
                        if r2 > rc2:
                            continue
                        if r2 == 0.0:
                            raise ValueError("coincident target and source")
                        rn = math.sqrt(r2)
                        E = math.exp(-xi * xi * r2)
                        C = _erfc_fast(xi * rn)
                        if kind == 0:
                            a = 2.0 * (xi * E / sqpi + C / (2.0 * rn))
                            b = 4.0 * xi * E / sqpi
                            fd = (d0 * sa[p, 0] + d1 * sa[p, 1] + d2 * sa[p, 2]) / r2
                            uk[t, 0] += (a - b) * sa[p, 0] + a * fd * d0
                            uk[t, 1] += (a - b) * sa[p, 1] + a * fd * d1
                            uk[t, 2] += (a - b) * sa[p, 2] + a * fd * d2
                        elif kind == 1:
                            dg = d0 * sa[p, 0] + d1 * sa[p, 1] + d2 * sa[p, 2]
                            dq = d0 * sb[p, 0] + d1 * sb[p, 1] + d2 * sb[p, 2]
                            gq = (sa[p, 0] * sb[p, 0] + sa[p, 1] * sb[p, 1]
                                  + sa[p, 2] * sb[p, 2])
                            c1 = -(2.0 / rn) * (3.0 * C / rn
                                                + (2.0 * xi / sqpi)
                                                * (3.0 + 2.0 * xi * xi * r2) * E)
                            c2 = 4.0 * xi**3 * E / sqpi
                            w1 = sign[p] * c1 * dg * dq / (r2 * rn)
                            w2 = sign[p] * c2
                            uk[t, 0] += w1 * d0 + w2 * (gq * d0 + dq * sa[p, 0] + dg * sb[p, 0])
                            uk[t, 1] += w1 * d1 + w2 * (gq * d1 + dq * sa[p, 1] + dg * sb[p, 1])
                            uk[t, 2] += w1 * d2 + w2 * (gq * d2 + dq * sa[p, 2] + dg * sb[p, 2])
                        else:
                            o0 = sa[p, 1] * sb[p, 2] - sa[p, 2] * sb[p, 1]
                            o1 = sa[p, 2] * sb[p, 0] - sa[p, 0] * sb[p, 2]
                            o2 = sa[p, 0] * sb[p, 1] - sa[p, 1] * sb[p, 0]
                            w = sign[p] * 2.0 * (C / r2 + (2.0 * xi / sqpi) * E / rn) / rn
                            uk[t, 0] += w * (o1 * d2 - o2 * d1)
                            uk[t, 1] += w * (o2 * d0 - o0 * d2)
                            uk[t, 2] += w * (o0 * d1 - o1 * d0)
                        if ids[p] >= n_real:
                            j = ids[p] - n_real
                            # screened harmonic coefficients via the
                            # recurrences on f = erf(xi r)/r
                            e = (2.0 * xi / sqpi) * E
                            fv = (1.0 - C) / rn
                            f1 = (e - fv) / rn
                            e1 = -2.0 * xi * xi * rn * e
                            f2 = (e1 - 2.0 * f1) / rn
                            e2 = -2.0 * xi * xi * e * (1.0 - 2.0 * xi * xi * r2)
                            f3 = (e2 - 3.0 * f2) / rn
                            inv = 1.0 / rn
                            inv2 = inv * inv
                            inv3 = inv2 * inv
                            inv5 = inv3 * inv2
                            inv7 = inv5 * inv2
                            c0 = inv - fv
                            c1 = inv3 + f1 * inv
                            c2 = 3.0 * inv5 + f1 * inv3 - f2 * inv2
                            c3 = (-15.0 * inv7 - 3.0 * f1 * inv5
                                  + 3.0 * f2 * inv2 * inv2 - f3 * inv3)
                            v0, v1, v2 = v_ch[j, 0], v_ch[j, 1], v_ch[j, 2]
                            dv = d0 * v0 + d1 * v1 + d2 * v2
                            trM = M_ch[j, 0, 0] + M_ch[j, 1, 1] + M_ch[j, 2, 2]
                            Md0 = M_ch[j, 0, 0] * d0 + M_ch[j, 0, 1] * d1 + M_ch[j, 0, 2] * d2
                            Md1 = M_ch[j, 1, 0] * d0 + M_ch[j, 1, 1] * d1 + M_ch[j, 1, 2] * d2
                            Md2 = M_ch[j, 2, 0] * d0 + M_ch[j, 2, 1] * d1 + M_ch[j, 2, 2] * d2
                            Mt0 = M_ch[j, 0, 0] * d0 + M_ch[j, 1, 0] * d1 + M_ch[j, 2, 0] * d2
                            Mt1 = M_ch[j, 0, 1] * d0 + M_ch[j, 1, 1] * d1 + M_ch[j, 2, 1] * d2
                            Mt2 = M_ch[j, 0, 2] * d0 + M_ch[j, 1, 2] * d1 + M_ch[j, 2, 2] * d2
                            q2 = Md0 * d0 + Md1 * d1 + Md2 * d2
                            sc = s_ch[j]
                            phi = sc * c0 - c1 * (dv + trM) + c2 * q2
                            g0 = (-c1 * sc * d0 - c1 * v0 + c2 * dv * d0
                                  + c2 * (Md0 + Mt0) + c2 * trM * d0 + c3 * q2 * d0)
                            g1 = (-c1 * sc * d1 - c1 * v1 + c2 * dv * d1
                                  + c2 * (Md1 + Mt1) + c2 * trM * d1 + c3 * q2 * d1)
                            g2 = (-c1 * sc * d2 - c1 * v2 + c2 * dv * d2
                                  + c2 * (Md2 + Mt2) + c2 * trM * d2 + c3 * q2 * d2)
                            uc[t, 0] += -x2 * g0
                            uc[t, 1] += -x2 * g1
                            uc[t, 2] += -x2 * g2 + phi
    return uk, uc


# ---------------------------------------------------------------------------
# assembled real-space sum
# ---------------------------------------------------------------------------

def real_space_sum(system: PointSystem, params: RealSpaceParams,
                   targets=None, target_indices=None) -> VelocityResult:
    """Truncated screened sum plus self term, physically normalized.

    For half-space systems the source set includes the images, whose
    kernel contributions carry the image sign and whose screened wall
    corrections are accumulated in the same neighbor pass.
    """
    if targets is None:
        targets = system.positions
        target_indices = np.arange(system.n)
    targets = np.atleast_2d(np.asarray(targets, float))
    nt = targets.shape[0]
    tcols = np.full(nt, -1, dtype=np.int64)
    if target_indices is not None:
        tcols = np.asarray(target_indices, dtype=np.int64)

    L = system.box_length
    half = system.geometry == HALF_SPACE
    if half:
        img = reflect(system)
        src = img.combined_positions
        sign = img.combined_sign if img.combined_sign is not None \
            else np.ones(src.shape[0])
        if system.kind == STOKESLET:
            sa, sb = img.combined_f, np.zeros_like(img.combined_f)
        else:
            sa, sb = img.combined_g, img.combined_q
        s_ch, v_ch, M_ch = phi_channels_from_system(system)
        lo = np.array([0.0, 0.0, -L])
        hi = np.array([L, L, L])
    else:
        src = system.positions
        sign = np.ones(src.shape[0])
        if system.kind == STOKESLET:
            sa, sb = system.f, np.zeros_like(system.f)
        else:
            sa, sb = system.g, system.q
        s_ch = np.zeros(0)
        v_ch = np.zeros((0, 3))
        M_ch = np.zeros((0, 3, 3))
        lo = np.zeros(3)
        hi = np.full(3, L)

    uk = np.zeros((nt, 3))
    uc = np.zeros((nt, 3))
    if params.rc > 0:
        # half-edge cells with a two-cell reach cover the same rc ball with
        # a tighter candidate volume (about 0.58x) than rc cells at reach 1
        cl = build_cell_list(src, 0.5 * params.rc, (lo, hi))
        perm = cl.order
        try:
            uk, uc = _real_pair_sums(
                _KIND_ID[system.kind], params.xi, params.rc, targets, tcols,
                np.ascontiguousarray(src[perm]), np.ascontiguousarray(sa[perm]),
                np.ascontiguousarray(sb[perm]),
                np.ascontiguousarray(sign[perm].astype(float)), system.n,
                s_ch, v_ch, M_ch,
                cl.origin, cl.edge, cl.dims, perm, cl.start, 2)
        except ValueError as exc:
            raise SingularityError(str(exc)) from exc

    u = uk / _norm_factor(system.kind) + uc / FOUR_PI
    # self interaction: zero-distance limit of the screened kernel, only
    # nonzero for the stokeslet
    if system.kind == STOKESLET:
        sel = np.nonzero((tcols >= 0) & (tcols < system.n))[0]
        u[sel] += (-(4.0 * params.xi / _SQRT_PI)
                   * system.f[tcols[sel]]) / EIGHT_PI
    return VelocityResult(velocities=u,
                          parts={"kernel": uk / _norm_factor(system.kind),
                                 "correction": uc / FOUR_PI},
                          meta={"kind": system.kind,
                                "geometry": system.geometry,
                                "xi": params.xi, "rc": params.rc})
