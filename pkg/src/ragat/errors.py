"""Exception types raised across the package."""


class RagatError(Exception):
    """Base class for all package errors."""


class DimensionError(RagatError, ValueError):
    pass


class ContractError(RagatError, ValueError):
    """A precondition of an operation was violated."""


class StateError(RagatError, RuntimeError):
    pass


class NumericError(RagatError, ArithmeticError):
    pass


class ConfigError(RagatError, ValueError):
    pass


class EmptyInputError(RagatError, ValueError):
    pass


class ParseError(RagatError, ValueError):
    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line
