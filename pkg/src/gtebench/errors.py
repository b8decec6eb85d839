"""Exception taxonomy shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2,
IncompatibilityError -> 3, NumericFailure -> 4.
"""


class ConfigError(ValueError):
    """Invalid configuration value or file."""


class IncompatibilityError(ValueError):
    """Two artifacts that must match (shapes, dataset hashes) do not."""


class NumericFailure(ArithmeticError):
    """A numeric procedure failed (singular system, divergence, ...)."""


class SingularSystemError(NumericFailure):
    """Unpenalized normal equations are singular."""


class DegenerateSampleError(NumericFailure):
    """A statistic is undefined for the given sample (e.g. zero variance)."""


class DivergenceError(NumericFailure):
    """Training produced a non-finite loss."""


class ZeroVectorError(ValueError):
    """Cosine similarity requested for an all-zero vector."""
