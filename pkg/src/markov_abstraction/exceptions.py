"""Exception types raised across the package."""


class DimensionError(ValueError):
    """Matrix or vector shapes are empty or do not conform."""


class ParameterError(ValueError):
    """A scalar argument or configuration value is out of range."""


class FormatError(ValueError):
    """A matrix file could not be parsed."""


class DivergenceError(RuntimeError):
    """The solver produced non-finite or exploding values.

    Parameters
    ----------
    iteration : int
        Index of the iteration during which divergence was detected.
    """

    def __init__(self, iteration, message=None):
        self.iteration = iteration
        # partial SolverTrace, attached by the solver loop
        self.trace = None
        super().__init__(message or f"solver diverged at iteration {iteration}")
