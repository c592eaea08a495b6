"""Exception types shared across the toolkit."""


class FpifError(Exception):
    """Base class for all toolkit errors."""


class DimensionMismatchError(FpifError, ValueError):
    """Operands live in incompatible spaces."""


class ConfigurationError(FpifError, ValueError):
    """A solver parameter violates its admissible range."""


class ScheduleError(ConfigurationError):
    """A step-size or relaxation schedule violates its bounds."""


class UnsupportedConfigurationError(ConfigurationError):
    """The requested operator/parameter combination has no implemented path."""


class NoClosedFormError(FpifError, ValueError):
    """The requested resolvent has no closed form for these operators."""


class DegenerateCertificateError(FpifError, RuntimeError):
    """An inner iteration failed to converge under the supplied certificates."""
