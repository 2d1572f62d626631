"""Exception types shared across the package."""


class HsewaldError(Exception):
    """Base class for all package-specific errors."""


class ParameterError(HsewaldError, ValueError):
    """Invalid user-supplied parameter (counts, lengths, grid sizes)."""


class GeometryError(HsewaldError, ValueError):
    """Operation applied to a system with the wrong geometry."""


class SingularityError(HsewaldError, ZeroDivisionError):
    """Kernel evaluated at zero displacement or a coincident image point."""


class ConfigError(HsewaldError, ValueError):
    """Mismatched grid/table configuration."""


class ResourceError(HsewaldError, MemoryError):
    """Estimated memory use exceeds the configured budget."""


class InfeasibleToleranceError(HsewaldError, ValueError):
    """Requested tolerance cannot be met within the search bounds."""
