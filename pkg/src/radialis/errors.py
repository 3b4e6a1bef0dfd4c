"""Exception hierarchy shared across the package.

The CLI maps these onto distinct exit codes, so library code should raise
the most specific class that applies.
"""


class RadialisError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(RadialisError, ValueError):
    """Invalid configuration, request, or argument (CLI exit code 2)."""


class NumericalError(RadialisError, RuntimeError):
    """A computation could not be completed reliably (CLI exit code 3)."""


class RegimeRefusal(RadialisError, RuntimeError):
    """The requested problem is refused on physical grounds, e.g. an
    unbounded-below spectrum without a short-range cutoff (CLI exit code 4)."""


class StateNotFound(RadialisError, LookupError):
    """No bound state with the requested node count exists in the window."""
