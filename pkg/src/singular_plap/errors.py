"""Exception types shared across the package."""


class SingularPlapError(Exception):
    """Base class for all package errors."""


class InvalidMesh(SingularPlapError):
    """Mesh construction arguments are unusable."""


class MeshMismatch(SingularPlapError):
    """A grid function does not live on the expected mesh."""


class NumericError(SingularPlapError):
    """Non-finite data reached a numerical kernel."""


class NewtonDiverged(SingularPlapError):
    """Damped Newton ran out of iterations or the step underflowed."""


class SingularJacobian(SingularPlapError):
    """The tridiagonal linearization could not be factorized."""


class NoConvergence(SingularPlapError):
    """An iterative procedure failed to stabilize."""


class PicardStalled(SingularPlapError):
    """The outer fixed-point iteration hit its iteration cap."""


class InvalidSubdomain(SingularPlapError):
    """Interior margin does not leave a nonempty subdomain."""


class DomainError(SingularPlapError):
    """Input outside the mathematical domain of an operation."""


class InteriorZero(SingularPlapError):
    """A negative-power integral was requested for a function vanishing inside the domain."""


class OutOfRegime(SingularPlapError):
    """Parameters violate the preconditions of an exponent formula."""


class ConfigError(SingularPlapError):
    """Base class for experiment-config parsing problems."""


class MissingField(ConfigError):
    """A required config key is absent."""


class UnknownKey(ConfigError):
    """A config key is not part of the schema."""


class DuplicateKey(ConfigError):
    """A config key appears more than once."""


class FieldTypeError(ConfigError, TypeError):
    """A config value could not be converted to its declared type."""
