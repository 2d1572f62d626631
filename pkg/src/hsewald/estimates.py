"""Truncation-error measurement, statistical estimates, and parameter selection.

The estimates are Kolafa–Perram-style RMS bounds for randomly distributed
sources.  For the half-space the same free-space expressions are used with
``Q`` summed over sources and images (the harmonic wall corrections decay
at least as fast as the rotlet kernel and are neglected in the estimate).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InfeasibleToleranceError, ParameterError
from .system import (HALF_SPACE, ROTLET, STOKESLET, STRESSLET, PointSystem)


@dataclass
class ErrorMetrics:
    """RMS truncation error of one component against a reference."""

    delta_u: float
    relative: float
    component: str = "total"
    params: dict = field(default_factory=dict)


def rms(values) -> float:
    """Root mean square of per-row vector norms."""
    values = np.atleast_2d(np.asarray(values, float))
    return math.sqrt(float(np.mean(np.sum(values**2, axis=1))))


def measure_error(u, u_ref, component="total", params=None) -> ErrorMetrics:
    """RMS error of ``u`` against ``u_ref`` and its relative counterpart."""
    delta = rms(np.asarray(u) - np.asarray(u_ref))
    ref = rms(u_ref)
    return ErrorMetrics(delta_u=delta,
                        relative=delta / ref if ref > 0 else math.inf,
                        component=component, params=params or {})


def kernel_Q(system: PointSystem) -> float:
    """Strength magnitude entering the estimates.

    Sum of squared strength norms per kernel; doubled for half-space
    systems because the images act as additional sources.
    """
    if system.kind == STOKESLET:
        q = float(np.sum(system.f**2))
    elif system.kind == STRESSLET:
        # Frobenius norm of g x q factorizes into |g|^2 |q|^2
        q = float(np.sum(np.sum(system.g**2, axis=1)
                         * np.sum(system.q**2, axis=1)))
    elif system.kind == ROTLET:
        q = float(np.sum(np.cross(system.g, system.q)**2))
    else:
        raise ValueError(f"unknown kind {system.kind!r}")
    if system.geometry == HALF_SPACE:
        q *= 2.0
    return q


def fourier_truncation_estimate(kind, Q, xi, k_inf, L, R) -> float:
    """RMS Fourier-space truncation error estimate at wavenumber cutoff."""
    if Q < 0 or xi <= 0 or k_inf <= 0 or L <= 0 or R <= 0:
        raise ParameterError("estimate arguments must be positive")
    decay = math.exp(-k_inf**2 / (4.0 * xi**2))
    if kind == STOKESLET:
        return math.sqrt(Q) * R * k_inf**3 / (xi**2 * math.pi * L) * decay
    if kind == STRESSLET:
        return math.sqrt(7.0 * Q / 6.0) * R * k_inf**4 \
            / (xi**2 * math.pi * L) * decay
    if kind == ROTLET:
        return math.sqrt(8.0 * xi**2 * Q / (3.0 * math.pi * L**3 * k_inf)) \
            * decay
    raise ValueError(f"unknown kind {kind!r}")


def real_truncation_estimate(kind, Q, xi, rc, L) -> float:
    """RMS real-space truncation error estimate at cutoff radius rc."""
    if Q < 0 or xi <= 0 or rc <= 0 or L <= 0:
        raise ParameterError("estimate arguments must be positive")
    decay = math.exp(-(xi * rc)**2)
    if kind == STOKESLET:
        return math.sqrt(4.0 * Q * rc / L**3) * decay
    if kind == STRESSLET:
        return math.sqrt(112.0 * Q * xi**4 * rc**3 / (9.0 * L**3)) * decay
    if kind == ROTLET:
        return math.sqrt(8.0 * Q / (3.0 * L**3 * rc)) * decay
    raise ValueError(f"unknown kind {kind!r}")


def _round_up_3sig(x: float) -> float:
    """Round up to 3 significant digits (conservative for a cutoff)."""
    if x <= 0:
        return x
    e = math.floor(math.log10(x))
    scale = 10.0**(e - 2)
    return math.ceil(x / scale - 1e-12) * scale


def select_rc(kind, tol, xi, L, Q) -> float:
    """Smallest cutoff with real-space estimate <= tol (3 significant digits).

    Bisection on the decreasing branch of the estimate, bounded above by
    the box diagonal.
    """
    rc_max = math.sqrt(3.0) * L
    # stay beyond the stationary point of the rc-power prefactor
    rc_lo = max(1e-3 * L, math.sqrt(1.5) / (2.0 * xi))
    if real_truncation_estimate(kind, Q, xi, rc_max, L) > tol:
        raise InfeasibleToleranceError(
            f"real-space tolerance {tol:g} unreachable within the box; "
            "decrease xi")
    if real_truncation_estimate(kind, Q, xi, rc_lo, L) <= tol:
        return _round_up_3sig(rc_lo)
    lo, hi = rc_lo, rc_max
    while (hi - lo) > 5e-4 * hi:
        mid = 0.5 * (lo + hi)
        if real_truncation_estimate(kind, Q, xi, mid, L) <= tol:
            hi = mid
        else:
            lo = mid
    return _round_up_3sig(hi)


def select_M(kind, tol, xi, L, Q, geometry, P=16, M_max=2000) -> int:
    """Smallest even grid count with Fourier estimate <= tol.

    Uses k_inf = pi (M+P) / (L + P L / M) and the truncation radius of the
    matching extended domain.
    """
    sqrt_dim = math.sqrt(6.0) if geometry == HALF_SPACE else math.sqrt(3.0)
    prev = math.inf
    for M in range(4, M_max + 1, 2):
        h = L / M
        Ltilde = L + P * h
        k_inf = math.pi * (M + P) / Ltilde
        est = fourier_truncation_estimate(kind, Q, xi, k_inf, L,
                                          sqrt_dim * Ltilde)
        if est <= tol and est < prev:
            return M
        prev = min(prev, est)
    raise InfeasibleToleranceError(
        f"Fourier tolerance {tol:g} unreachable below M={M_max}; "
        "increase xi")


def select_parameters(kind, tol, xi, L, system: PointSystem, P=16):
    """Near-optimal (rc, M) meeting an RMS tolerance, per the estimates."""
    Q = kernel_Q(system)
    rc = select_rc(kind, tol, xi, L, Q)
    M = select_M(kind, tol, xi, L, Q, system.geometry, P=P)
    return rc, M
