"""Exception hierarchy. CLI exit codes are keyed off these classes."""


class SaunaError(Exception):
    """Base class for package errors."""


class InputError(SaunaError, ValueError):
    """Invalid input data or configuration (CLI exit code 2)."""


class DegenerateMaskError(InputError):
    """Mask lacks one of the two classes where both are required."""


class FieldFormatError(InputError):
    """Malformed SAUNA field file."""


class DivergenceError(SaunaError, ArithmeticError):
    """Training produced a non-finite loss."""
