"""Exception types shared across the package."""


class NoisyVqoError(Exception):
    """Base class for all package-specific errors."""


class QubitCapError(NoisyVqoError):
    """Dense realization would exceed the configured qubit cap."""


class DimensionMismatchError(NoisyVqoError):
    """Operands live on registers of different sizes."""


class ConfigError(NoisyVqoError):
    """Invalid experiment configuration or input file (CLI exit code 2)."""


class NumericalInvariantError(NoisyVqoError):
    """A runtime numerical invariant was violated beyond tolerance (CLI exit code 3)."""


class EstimatorUnsupportedError(NoisyVqoError):
    """The requested gradient estimator cannot be used with this circuit."""


class DivergenceError(NoisyVqoError):
    """Optimization iterates left the trust region (norm guard tripped)."""
