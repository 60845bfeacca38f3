"""Exception types shared across the package."""


class InvalidArgument(ValueError):
    pass


class InvalidMatrix(ValueError):
    pass


class InvalidWindow(ValueError):
    pass


class DegenerateSignal(ValueError):
    pass


class InsufficientSignal(ValueError):
    pass


class NumericFailure(RuntimeError):
    pass


class ConvergenceFailure(RuntimeError):
    """Raised when an iteration stops without meeting its tolerance.

    ``last`` carries the final iterate (or fit result) and ``residual`` the
    residual at that point.
    """

    def __init__(self, message, residual=float("nan"), last=None):
        super().__init__(message)
        self.residual = residual
        self.last = last
