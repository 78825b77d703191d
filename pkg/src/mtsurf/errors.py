"""Exception hierarchy shared by all modules."""


class SurfaceError(Exception):
    """Base class for every error raised by the package."""


class DomainError(SurfaceError, ValueError):
    pass


class OrientationError(SurfaceError, ValueError):
    """A vector that should be future pointing is not."""


class ValidationError(SurfaceError, ValueError):
    pass


class SpacelikeError(ValidationError):
    pass


class GeometryError(SurfaceError):
    pass


class StateError(SurfaceError, RuntimeError):
    pass


class IntegrabilityError(SurfaceError):
    pass


class IsotropyError(SurfaceError):
    """The Hopf differential vanishes, so the null Gauss map is not an immersion."""


class DegeneracyError(SurfaceError):
    pass


class ParameterError(SurfaceError, ValueError):
    pass


class ManifestError(SurfaceError, ValueError):
    pass


class IntegrationError(SurfaceError):
    pass


class ConsistencyError(SurfaceError):
    pass


class NormalizationError(ParameterError):
    """The Hopf differential cannot be brought to a real constant on the grid."""
