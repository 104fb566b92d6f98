"""Exception types shared across the package.

Every error that should surface as a distinct CLI exit code gets its own
class here; library code raises these rather than bare ValueError so the
command layer can map them without string matching.
"""


class DsextraError(Exception):
    """Base class for all package errors."""


class DomainError(DsextraError):
    """An argument is outside the domain a function is defined on."""


class ConfigError(DsextraError):
    """A config file or CLI invocation is malformed or inconsistent."""


class PrecisionGuardError(DsextraError):
    """An interval enclosure is too wide to certify the requested result.

    Raised instead of silently returning a value whose error bound is not
    met, e.g. when a floor cannot be read off an enclosure or a quadrature
    error exceeds the contracted tolerance.  Retry with more bits.
    """


class UndefinedRatioError(DsextraError):
    """A ratio whose denominator is exactly zero was requested."""


class CapExceededError(DsextraError):
    """A request is beyond the desk-scale caps this package enforces.

    The message says which cap and how to override it (when an override
    exists); caps keep exact arithmetic runs within sane time and memory.
    """
