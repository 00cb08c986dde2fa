"""Exception hierarchy shared across the package."""


class MlsmError(Exception):
    """Base class for all package-specific errors."""


class DimensionError(MlsmError):
    """Shapes or dims of inputs do not conform."""


class SupportError(MlsmError):
    """Observation outside the support of the edge distribution."""


class RankDeficiencyError(MlsmError):
    """Requested rank exceeds the numerical rank of the data."""


class ConvergenceError(MlsmError):
    """Solver diverged or produced non-finite likelihood."""

    def __init__(self, message: str, iteration: int | None = None):
        super().__init__(message)
        self.iteration = iteration


class ConditioningError(MlsmError):
    """A matrix that must be inverted is numerically singular."""

    def __init__(self, message: str, min_eigenvalue: float | None = None):
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue


class ParseError(MlsmError):
    """Malformed input file."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message)
        self.line = line


class SelectionTieWarning(UserWarning):
    """Projection norms tied during latent-column selection."""


class BoundaryWarning(UserWarning):
    """Fitted linear predictor hit the clamp boundary."""
