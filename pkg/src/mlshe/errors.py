"""Exception hierarchy shared by all modules."""


class MlsheError(Exception):
    """Base class for every error raised by this package."""


class GridError(MlsheError, ValueError):
    """Invalid grid, off-grid time or incompatible grids."""


class StabilityError(GridError):
    """The explicit scheme would be unstable on this grid."""


class QuadratureError(MlsheError, RuntimeError):
    """A quadrature or extrapolation did not reach its tolerance."""


class DomainError(MlsheError, ValueError):
    """An argument lies outside the domain of a formula (e.g. log of a non-positive value)."""


class CostGuardError(MlsheError, ValueError):
    """The requested computation exceeds the supported problem size."""


class ConfigError(MlsheError, ValueError):
    """Unknown experiment or invalid configuration."""
