"""Exception types shared across the package."""


class DataError(ValueError):
    """Input data violates a precondition (empty class, bad dimension, ...)."""


class ParseError(DataError):
    """Malformed LIBSVM input."""

    def __init__(self, message, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class NumericalError(ArithmeticError):
    """Objective produced a non-finite value or gradient.

    ``last_w`` holds the last iterate at which everything was finite.
    """

    def __init__(self, message, last_w=None):
        super().__init__(message)
        self.last_w = last_w
