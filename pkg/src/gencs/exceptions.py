"""Exception types shared across the package."""


class ShapeError(ValueError):
    """An array argument has the wrong rank or an incompatible dimension."""


class NonFiniteError(ArithmeticError):
    """A computation produced NaN or infinity where a finite value is required."""


class PowerIterationError(RuntimeError):
    """Power iteration failed to converge within its iteration cap.

    Carries the last singular-value estimate in ``last_estimate`` so callers
    can inspect how far the iteration got.
    """

    def __init__(self, message, last_estimate):
        super().__init__(message)
        self.last_estimate = last_estimate


class RejectionCapError(RuntimeError):
    """Rejection sampling exhausted its attempt budget."""


class WeightFileError(ValueError):
    """A serialized network file is malformed; message includes the location."""


class UnsupportedDimensionError(ValueError):
    """Grid diagnostics are only implemented for latent dimension 1 or 2."""


class ConfigError(ValueError):
    """An experiment config is invalid; ``field`` names the offending entry."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field
