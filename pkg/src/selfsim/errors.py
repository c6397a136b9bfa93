class DomainError(ValueError):
    """Argument, parameter or point outside the region where a quantity is defined."""


class ConvergenceError(ArithmeticError):
    """A series ran out of its term budget; ``result`` holds the best value."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result
