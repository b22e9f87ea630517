"""Exception types shared across the package."""


class DataFormatError(ValueError):
    """Malformed input data (edge lists, config files, outcome tables)."""


class NonConvergenceError(RuntimeError):
    """An iterative routine exhausted its budget before reaching tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual
