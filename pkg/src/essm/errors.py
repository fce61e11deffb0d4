"""Exception types shared across the package."""


class CausalityError(ValueError):
    """AR(2) parameters whose characteristic roots are not outside the unit circle."""


class NoOscillationError(ValueError):
    """AR(2) coefficients with real characteristic roots: no polar representation."""


class ConditioningError(RuntimeError):
    """A covariance solve failed (matrix not positive definite at some step)."""

    def __init__(self, message: str, t: int | None = None):
        super().__init__(message)
        self.t = t


class CollinearityError(RuntimeError):
    """Rank-deficient regressors in the mixing least-squares step."""


class InitializationError(RuntimeError):
    """Objective not finite at the optimizer's starting point."""


class OptimizationError(RuntimeError):
    """Optimizer failed to produce a finite objective."""


class IngestionError(ValueError):
    """Malformed dataset on disk: bad manifest, missing file, bad cell, shape mismatch."""
