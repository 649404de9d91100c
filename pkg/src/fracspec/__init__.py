"""Fractional spectral-derivative estimation for stationary Gaussian series."""

__version__ = "0.1.0"

from .errors import ConfigError, DomainError, NumericalError, SamplingError
from .grid import TWO_PI, GridFunction

__all__ = [
    "ConfigError",
    "DomainError",
    "GridFunction",
    "NumericalError",
    "SamplingError",
    "TWO_PI",
    "__version__",
]
