"""Exception types callers are expected to branch on."""


class ConfigError(ValueError):
    """Invalid configuration value (unsupported modulation, bad dimensions, ...)."""


class SingularMatrixError(ArithmeticError):
    """Numerically rank-deficient matrix where full rank is required.

    The Monte Carlo harness treats this as "redraw the channel"; everyone
    else should let it propagate.
    """


class NotPositiveDefiniteError(ArithmeticError):
    """Cholesky factorization hit a non-positive pivot."""
