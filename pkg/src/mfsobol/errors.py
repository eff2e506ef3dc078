"""Exception and warning types raised by mfsobol."""


class MFSobolError(Exception):
    """Base class for all errors raised by this package."""


class DegenerateSample(MFSobolError, ValueError):
    """Pooled sample variance is zero (or numerically non-positive)."""


class LengthMismatch(MFSobolError, ValueError):
    pass


class MissingCoarse(MFSobolError, ValueError):
    """Coarse-model arrays were required but not supplied."""


class DomainError(MFSobolError, ValueError):
    """An argument lies outside the domain of the operation."""


class OutOfSupport(MFSobolError, ValueError):
    """Model inputs fall outside the declared input distributions."""


class InvalidParams(MFSobolError, ValueError):
    pass


class Unsupported(MFSobolError):
    """Operation not available for this model (e.g. no closed-form index)."""


class ConfigError(MFSobolError, ValueError):
    """Invalid run configuration or input document."""


class DegeneratePilotWarning(UserWarning):
    """Pilot variance estimates make the planning cost flat."""
