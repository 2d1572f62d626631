"""Fast summation of Stokes-flow point singularities.

Velocity fields of N stokeslets, stresslets or rotlets, in free space or
in the half-space above a plane no-slip wall (handled with images and
harmonic wall corrections), evaluated either by O(N^2) direct summation
or by an Ewald split with an FFT-based spectrally accurate Fourier part.
"""

from .errors import (ConfigError, GeometryError, HsewaldError,
                     InfeasibleToleranceError, ParameterError, ResourceError,
                     SingularityError)
from .system import (FREE_SPACE, HALF_SPACE, ROTLET, STOKESLET, STRESSLET,
                     PointSystem, VelocityResult, generate_system, reflect)
from .kernels_direct import (direct_sum_free, direct_sum_half, stokeslet,
                             stresslet_apply, rotlet_apply, harmonic_derivs,
                             correction_phi)
from .ewald_real import (CellList, RealSpaceParams, build_cell_list, f_derivs,
                         kernel_real, real_space_sum, self_interaction)

__all__ = [
    "ConfigError", "GeometryError", "HsewaldError",
    "InfeasibleToleranceError", "ParameterError", "ResourceError",
    "SingularityError",
    "FREE_SPACE", "HALF_SPACE", "ROTLET", "STOKESLET", "STRESSLET",
    "PointSystem", "VelocityResult", "generate_system", "reflect",
    "direct_sum_free", "direct_sum_half", "stokeslet", "stresslet_apply",
    "rotlet_apply", "harmonic_derivs", "correction_phi",
    "CellList", "RealSpaceParams", "build_cell_list", "f_derivs",
    "kernel_real", "real_space_sum", "self_interaction",
]

__version__ = "0.1.0"
