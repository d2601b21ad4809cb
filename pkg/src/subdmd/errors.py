"""Exception hierarchy shared by every module.

The command-line front end maps ``ParameterError`` (and its subclasses) to
exit code 2 and ``NumericalError`` to exit code 3.
"""


class DmdError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(DmdError, ValueError):
    """An argument is out of its admissible range."""


class DimensionError(ParameterError):
    """Array shapes are incompatible."""


class NumericalError(DmdError, ArithmeticError):
    """A computation has no meaningful result for the given data."""
