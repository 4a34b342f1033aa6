"""Exception types shared across the package."""


class DomainError(ValueError):
    """An iterated-log chain was requested outside its domain of definition."""


class ValidationError(ValueError):
    """A surface, profile or config failed validation."""


class QuadratureError(ArithmeticError):
    """An adaptive rule could not reach the requested tolerance."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result
