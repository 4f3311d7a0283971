"""Exception and warning types shared across the package.

The three error classes map onto the CLI exit codes: validation failures
exit with 1, insufficient data with 2 and numerical failures with 3.
"""


class ComoveError(Exception):
    """Base class for all package errors."""


class ValidationError(ComoveError, ValueError):
    """Malformed input: bad file, inconsistent shapes, invalid config."""


class InsufficientDataError(ComoveError):
    """Structurally valid input that does not carry enough observations."""


class NumericalError(ComoveError):
    """A numerical routine left its documented operating range."""


class EstimationWarning(UserWarning):
    """Non-fatal estimation events: dropped cells, undefined entries."""
