"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument is outside the mathematical domain of an operation."""


class ConfigError(DomainError):
    """A configuration file is malformed or contains an invalid value."""


class NumericalError(RuntimeError):
    """A numerical procedure failed to converge to the requested tolerance."""


class SamplingError(NumericalError):
    """Exact Gaussian sampling is impossible for the requested model/size."""
