"""Exception hierarchy.

Every error raised deliberately by the package derives from :class:`QDMDError`,
and most also derive from :class:`ValueError` so they compose with code that
already catches bad-argument errors.
"""


class QDMDError(Exception):
    """Base class for all package errors."""


class InvalidDimensionError(QDMDError, ValueError):
    pass


class UnsupportedConventionError(QDMDError, ValueError):
    pass


class InvalidHamiltonianError(QDMDError, ValueError):
    pass


class InvalidDissipatorError(QDMDError, ValueError):
    pass


class InvalidStateError(QDMDError, ValueError):
    pass


class ShapeError(QDMDError, ValueError):
    pass


class InvalidStepError(QDMDError, ValueError):
    pass


class SamplingGridError(QDMDError, ValueError):
    pass


class InsufficientDataError(QDMDError, ValueError):
    pass


class RankError(QDMDError, ValueError):
    pass


class DegenerateDataError(QDMDError, ValueError):
    pass


class IdentifiabilityError(QDMDError, ValueError):
    pass


class InvalidHarmonicError(QDMDError, ValueError):
    pass


class AccuracyError(QDMDError, ArithmeticError):
    """A numerical procedure failed its own convergence check."""


class ConfigError(QDMDError, ValueError):
    """Malformed experiment configuration.

    ``location`` carries a human readable pointer (``line 3, column 7`` or a
    dotted field path) used by the CLI diagnostics.
    """

    def __init__(self, message, location=None):
        super().__init__(message if location is None else f"{location}: {message}")
        self.location = location
