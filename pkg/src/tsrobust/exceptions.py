"""Exception hierarchy."""


class TSRobustError(Exception):
    """Base class for all package errors."""


class InvalidModelError(TSRobustError, ValueError):
    """Model matrices violate a structural requirement (shape, unit diagonal, acyclicity)."""


class DimensionError(TSRobustError, ValueError):
    pass


class StationarityError(TSRobustError, ValueError):
    """Operation requires a stationary model."""


class InsufficientDataError(TSRobustError, ValueError):
    pass


class DegenerateAutocovarianceError(TSRobustError, ArithmeticError):
    """Block-Toeplitz autocovariance is singular or badly conditioned."""


class DegenerateConditionalError(TSRobustError, ArithmeticError):
    """Conditional covariance is not positive definite."""


class GenerationFailedError(TSRobustError, RuntimeError):
    def __init__(self, attempts):
        super().__init__(f"no stationary model found after {attempts} attempts")
        self.attempts = attempts


class IngestionError(TSRobustError, ValueError):
    pass
