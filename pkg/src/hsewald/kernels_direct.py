"""Exact kernel evaluation and O(N^2) direct sums.

Public single-point evaluators (``stokeslet``, ``stresslet_apply``,
``rotlet_apply``, ``harmonic_derivs``, ``correction_phi``) return
physically normalized values, i.e. they include the 1/(8 pi) prefactor on
the stokeslet/stresslet and 1/(4 pi) on the rotlet and harmonic potential.

Internal vectorized helpers (suffix ``_raw``) work in the prefactor-free
convention (8 pi S, 4 pi G, ...); normalization is applied exactly once
when sums are assembled.  The rotlet raw kernel additionally absorbs the
factor 2 of the velocity sum, matching its Ewald-split counterparts.

The direct sums here are the correctness oracle for the fast method.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import GeometryError, SingularityError
from .system import (HALF_SPACE, ROTLET, STOKESLET, STRESSLET,
                     PointSystem, VelocityResult, reflect)

FOUR_PI = 4.0 * np.pi
EIGHT_PI = 8.0 * np.pi


# ---------------------------------------------------------------------------
# single-point kernel tensors
# ---------------------------------------------------------------------------

def _check_r(r):
    r = np.asarray(r, dtype=float)
    rn = np.linalg.norm(r)
    if rn == 0.0:
        raise SingularityError("kernel evaluated at zero displacement")
    return r, rn


def stokeslet(r) -> np.ndarray:
    """Stokeslet tensor S(r), including the 1/(8 pi) prefactor."""
    r, rn = _check_r(r)
    return (np.eye(3) / rn + np.outer(r, r) / rn**3) / EIGHT_PI


def stresslet_apply(r, g, q) -> np.ndarray:
    """T(r) : (g x q) with the 1/(8 pi) prefactor."""
    r, rn = _check_r(r)
    g = np.asarray(g, float)
    q = np.asarray(q, float)
    return -6.0 * r * (r @ g) * (r @ q) / rn**5 / EIGHT_PI


def rotlet_apply(r, g, q) -> np.ndarray:
    """2 W(r) (g x q) with the 1/(4 pi) prefactor on W."""
    r, rn = _check_r(r)
    omega = np.cross(np.asarray(g, float), np.asarray(q, float))
    return 2.0 * np.cross(omega, r) / rn**3 / FOUR_PI


@dataclass
class HarmonicDerivs:
    """G = 1/(4 pi r) and its first three derivative tensors."""

    G: float
    gradG: np.ndarray      # (3,)
    hessG: np.ndarray      # (3, 3)
    thirdG: np.ndarray     # (3, 3, 3)


def harmonic_derivs(r) -> HarmonicDerivs:
    """Derivatives of the harmonic potential of a unit charge at``-r``."""
    r, rn = _check_r(r)
    G = 1.0 / (FOUR_PI * rn)
    grad = -r / (FOUR_PI * rn**3)
    hess = (-np.eye(3) / rn**3 + 3.0 * np.outer(r, r) / rn**5) / FOUR_PI
    eye = np.eye(3)
    third = (3.0 * (np.einsum("ij,k->ijk", eye, r)
                    + np.einsum("ik,j->ijk", eye, r)
                    + np.einsum("jk,i->ijk", eye, r)) / rn**5
             - 15.0 * np.einsum("i,j,k->ijk", r, r, r) / rn**7) / FOUR_PI
    return HarmonicDerivs(G=G, gradG=grad, hessG=hess, thirdG=third)


# ---------------------------------------------------------------------------
# harmonic-correction machinery (shared with the screened real-space path)
# ---------------------------------------------------------------------------

def phi_channels(kind, y, f=None, g=None, q=None):
    """Per-source coefficients (s, v, M) of the wall correction potential.

    The correction for each source is phi = s G + v . grad G + M : hess G,
    with G centered at the image point y^I.  All inputs are (n, 3); outputs
    are s (n,), v (n, 3) and M (n, 3, 3) with zeros where a channel is
    absent.
    """
    y = np.atleast_2d(np.asarray(y, float))
    n = y.shape[0]
    y3 = y[:, 2]
    s = np.zeros(n)
    v = np.zeros((n, 3))
    M = np.zeros((n, 3, 3))
    mir = np.array([1.0, 1.0, -1.0])
    if kind == STOKESLET:
        f = np.atleast_2d(np.asarray(f, float))
        fI = f * mir
        s = -f[:, 2]
        v = -y3[:, None] * fI
    elif kind == STRESSLET:
        gI = np.atleast_2d(np.asarray(g, float)) * mir
        qI = np.atleast_2d(np.asarray(q, float)) * mir
        v[:, 2] = 2.0 * np.sum(gI * qI, axis=1)
        outer = np.einsum("mi,mj->mij", gI, qI)
        M = -y3[:, None, None] * (outer + outer.transpose(0, 2, 1))
    elif kind == ROTLET:
        g = np.atleast_2d(np.asarray(g, float))
        q = np.atleast_2d(np.asarray(q, float))
        gI = g * mir
        qI = q * mir
        v = 4.0 * (q[:, 2][:, None] * gI - g[:, 2][:, None] * qI)
    else:
        raise ValueError(f"unknown kind {kind!r}")
    return s, v, M


def gfam_coeffs(r, screen=None):
    """Radial coefficients (c0..c3) of the harmonic derivative family.

    In the prefactor-free convention: G = c0, grad G = -c1 r,
    hess G = -c1 I + c2 r x r, third G = c2 sym(I x r) + c3 r x r x r.
    With ``screen=(f, f1, f2, f3)`` (values of erf(xi r)/r and its
    derivatives) the screened real-space family is produced instead.
    """
    r = np.asarray(r, float)
    inv = 1.0 / r
    inv2 = inv * inv
    inv3 = inv2 * inv
    inv5 = inv3 * inv2
    inv7 = inv5 * inv2
    if screen is None:
        return inv, inv3, 3.0 * inv5, -15.0 * inv7
    f, f1, f2, f3 = screen
    c0 = inv - f
    c1 = inv3 + f1 * inv
    c2 = 3.0 * inv5 + f1 * inv3 - f2 * inv2
    c3 = -15.0 * inv7 - 3.0 * f1 * inv5 + 3.0 * f2 * inv2 * inv2 - f3 * inv3
    return c0, c1, c2, c3


def phi_and_grad(d, coeffs, s, v, M):
    """Correction potential and gradient from channel coefficients.

    ``d`` is the target-minus-image displacement array (..., 3); ``coeffs``
    are broadcastable radial coefficients; (s, v, M) come from
    ``phi_channels``.  Returns (phi, grad_phi) in the 4 pi G convention.
    """
    c0, c1, c2, c3 = coeffs
    dv = np.sum(d * v, axis=-1)
    trM = np.trace(M, axis1=-2, axis2=-1)
    Md = np.einsum("...ij,...j->...i", M, d)
    MTd = np.einsum("...ji,...j->...i", M, d)
    q2 = np.sum(Md * d, axis=-1)
    phi = s * c0 - c1 * (dv + trM) + c2 * q2
    grad = (-(c1 * s)[..., None] * d
            - c1[..., None] * v + (c2 * dv)[..., None] * d
            + c2[..., None] * (Md + MTd) + (c2 * trM)[..., None] * d
            + (c3 * q2)[..., None] * d)
    return phi, grad


def correction_phi(kind, y, x, f=None, g=None, q=None):
    """Wall correction (phi, grad phi) of one source, normalized by 1/(4 pi).

    ``y`` is the source location, ``x`` the evaluation point; x must not
    coincide with the image y^I.
    """
    y = np.asarray(y, float)
    x = np.asarray(x, float)
    yI = y * np.array([1.0, 1.0, -1.0])
    d = x - yI
    rn = np.linalg.norm(d)
    if rn == 0.0:
        raise SingularityError("evaluation point coincides with an image")
    s, v, M = phi_channels(kind, y[None, :], f=None if f is None else np.asarray(f, float)[None, :],
                           g=None if g is None else np.asarray(g, float)[None, :],
                           q=None if q is None else np.asarray(q, float)[None, :])
    coeffs = gfam_coeffs(np.array([rn]))
    phi, grad = phi_and_grad(d[None, :], coeffs, s, v, M)
    return phi[0] / FOUR_PI, grad[0] / FOUR_PI


# ---------------------------------------------------------------------------
# vectorized kernel applications (raw convention)
# ---------------------------------------------------------------------------

def phi_channels_from_system(system: PointSystem):
    """(s, v, M) channels for every source of a half-space system."""
    if system.kind == STOKESLET:
        return phi_channels(system.kind, system.positions, f=system.f)
    return phi_channels(system.kind, system.positions, g=system.g, q=system.q)


# ---------------------------------------------------------------------------
# direct sums (compiled all-pairs loop)
# ---------------------------------------------------------------------------

@njit(cache=True)
def _direct_pair_sums(kind, targets, tcols, src, sa, sb, sign, n_real,
                      s_ch, v_ch, M_ch):
    """All-pairs raw kernel and unscreened correction sums per target.

    ``src`` holds all sources (originals followed by images in the
    half-space); ``sa``/``sb`` are the strength arrays (f/unused, or g/q)
    and ``sign`` flips image contributions for the odd kernels.  Sources
    with index >= ``n_real`` are images and additionally contribute the
    wall correction through the channel arrays (s, v, M).  A scalar pair
    loop keeps the per-pair cost independent of N, unlike vectorized
    variants whose (targets x sources) temporaries fall out of cache.
    """
    nt = targets.shape[0]
    uk = np.zeros((nt, 3))
    uc = np.zeros((nt, 3))
    for t in range(nt):
        x0, x1, x2 = targets[t, 0], targets[t, 1], targets[t, 2]
        for m in range(src.shape[0]):
            if m == tcols[t]:
                continue
            d0 = x0 - src[m, 0]
            d1 = x1 - src[m, 1]
            d2 = x2 - src[m, 2]
            r2 = d0 * d0 + d1 * d1 + d2 * d2
            if r2 == 0.0:
                raise ValueError("coincident target and source")
            rn = math.sqrt(r2)
            inv = 1.0 / rn
            inv3 = inv / r2
            if kind == 0:
                fd = (d0 * sa[m, 0] + d1 * sa[m, 1] + d2 * sa[m, 2]) * inv3
                uk[t, 0] += sa[m, 0] * inv + fd * d0
                uk[t, 1] += sa[m, 1] * inv + fd * d1
                uk[t, 2] += sa[m, 2] * inv + fd * d2
            elif kind == 1:
                dg = d0 * sa[m, 0] + d1 * sa[m, 1] + d2 * sa[m, 2]
                dq = d0 * sb[m, 0] + d1 * sb[m, 1] + d2 * sb[m, 2]
                w = -6.0 * sign[m] * dg * dq * inv3 / r2
                uk[t, 0] += w * d0
                uk[t, 1] += w * d1
                uk[t, 2] += w * d2
            else:
                o0 = sa[m, 1] * sb[m, 2] - sa[m, 2] * sb[m, 1]
                o1 = sa[m, 2] * sb[m, 0] - sa[m, 0] * sb[m, 2]
                o2 = sa[m, 0] * sb[m, 1] - sa[m, 1] * sb[m, 0]
                w = 2.0 * sign[m] * inv3
                uk[t, 0] += w * (o1 * d2 - o2 * d1)
                uk[t, 1] += w * (o2 * d0 - o0 * d2)
                uk[t, 2] += w * (o0 * d1 - o1 * d0)
            if m >= n_real:
                # per-kind specializations of phi = s c0 + v.grad G
                # + M:hess G keep the correction cost near the kernel's
                j = m - n_real
                inv2 = inv * inv
                c1 = inv3
                c2 = 3.0 * inv3 * inv2
                v0, v1, v2 = v_ch[j, 0], v_ch[j, 1], v_ch[j, 2]
                dv = d0 * v0 + d1 * v1 + d2 * v2
                if kind == 0:
                    sc = s_ch[j]
                    phi = sc * inv - c1 * dv
                    w = c2 * dv - c1 * sc
                elif kind == 1:
                    c3 = -5.0 * c2 * inv2
                    trM = M_ch[j, 0, 0] + M_ch[j, 1, 1] + M_ch[j, 2, 2]
                    # M is symmetric for the stresslet channel
                    Md0 = M_ch[j, 0, 0] * d0 + M_ch[j, 0, 1] * d1 + M_ch[j, 0, 2] * d2
                    Md1 = M_ch[j, 1, 0] * d0 + M_ch[j, 1, 1] * d1 + M_ch[j, 1, 2] * d2
                    Md2 = M_ch[j, 2, 0] * d0 + M_ch[j, 2, 1] * d1 + M_ch[j, 2, 2] * d2
                    q2 = Md0 * d0 + Md1 * d1 + Md2 * d2
                    phi = -c1 * (dv + trM) + c2 * q2
                    w = c2 * (dv + trM) + c3 * q2
                    tc2 = 2.0 * c2
                    uc[t, 0] += -x2 * tc2 * Md0
                    uc[t, 1] += -x2 * tc2 * Md1
                    uc[t, 2] += -x2 * tc2 * Md2
                else:
                    phi = -c1 * dv
                    w = c2 * dv
                uc[t, 0] += -x2 * (w * d0 - c1 * v0)
                uc[t, 1] += -x2 * (w * d1 - c1 * v1)
                uc[t, 2] += -x2 * (w * d2 - c1 * v2) + phi
    return uk, uc


_KIND_ID = {STOKESLET: 0, STRESSLET: 1, ROTLET: 2}


def _direct_pair_args(kind, system_f, system_g, system_q, sign, m):
    """Strength/sign arrays in the layout the compiled loop expects."""
    if kind == STOKESLET:
        sa, sb = system_f, np.zeros_like(system_f)
    else:
        sa, sb = system_g, system_q
    if sign is None:
        sign = np.ones(m)
    return (np.ascontiguousarray(sa), np.ascontiguousarray(sb),
            np.asarray(sign, float))


def _norm_factor(kind):
    return EIGHT_PI if kind in (STOKESLET, STRESSLET) else FOUR_PI


def _target_cols(targets, target_indices):
    if target_indices is None:
        return np.full(targets.shape[0], -1, dtype=np.int64)
    return np.asarray(target_indices, dtype=np.int64)


def direct_sum_free(system: PointSystem, targets=None, target_indices=None) -> VelocityResult:
    """Exact free-space velocity sum; the oracle for the fast method."""
    if targets is None:
        targets = system.positions
        target_indices = np.arange(system.n)
    targets = np.atleast_2d(np.asarray(targets, float))
    src = system.positions
    sa, sb, sign = _direct_pair_args(system.kind, system.f, system.g,
                                     system.q, None, src.shape[0])
    try:
        uk, _ = _direct_pair_sums(
            _KIND_ID[system.kind], targets, _target_cols(targets, target_indices),
            src, sa, sb, sign, src.shape[0],
            np.zeros(0), np.zeros((0, 3)), np.zeros((0, 3, 3)))
    except ValueError as exc:
        raise SingularityError(str(exc)) from exc
    u = uk / _norm_factor(system.kind)
    return VelocityResult(velocities=u,
                          meta={"kind": system.kind, "geometry": "free",
                                "n": system.n})


def direct_sum_half(system: PointSystem, targets=None, target_indices=None) -> VelocityResult:
    """Exact half-space velocity sum: kernel, image and wall corrections."""
    if system.geometry != HALF_SPACE:
        raise GeometryError("direct_sum_half requires a half-space system")
    if targets is None:
        targets = system.positions
        target_indices = np.arange(system.n)
    targets = np.atleast_2d(np.asarray(targets, float))
    if np.any(targets[:, 2] < 0):
        raise GeometryError("half-space targets must have x3 >= 0")
    img = reflect(system)
    src = img.combined_positions
    sa, sb, sign = _direct_pair_args(system.kind, img.combined_f,
                                     img.combined_g, img.combined_q,
                                     img.combined_sign, src.shape[0])
    s_ch, v_ch, M_ch = phi_channels_from_system(system)
    try:
        uk, uc = _direct_pair_sums(
            _KIND_ID[system.kind], targets, _target_cols(targets, target_indices),
            src, sa, sb, sign, system.n, s_ch, v_ch, M_ch)
    except ValueError as exc:
        raise SingularityError(str(exc)) from exc
    corr = uc / FOUR_PI
    u = uk / _norm_factor(system.kind) + corr
    return VelocityResult(velocities=u,
                          parts={"correction": corr},
                          meta={"kind": system.kind, "geometry": "half",
                                "n": system.n})
