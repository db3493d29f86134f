"""Exception hierarchy shared by all modules.

The CLI maps these onto exit codes: validation errors -> 2,
I/O and file-format errors -> 3, numerical assertions -> 4.
"""


class FreqvidError(Exception):
    """Base class for all package errors."""


class InvalidInputError(FreqvidError, ValueError):
    """Malformed or inconsistent input values (bad shapes, non-finite data)."""


class InvalidStateError(FreqvidError, RuntimeError):
    """Operation applied to a value in the wrong state (e.g. re-shifting a spectrum)."""


class FormatError(FreqvidError, IOError):
    """Corrupt or truncated binary file; carries the byte offset of the problem."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


class NumericalError(FreqvidError, ArithmeticError):
    """An internal numerical invariant failed."""
