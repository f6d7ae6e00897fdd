"""Exception types shared across the package."""


class GarmaGarchError(Exception):
    """Base class for all package errors."""


class DomainError(GarmaGarchError, ValueError):
    """Input outside the mathematical domain of an operation.

    Raised for observations outside a family's support, non-positive
    arguments to special functions, invalid orders and the like.
    """


class NumericalError(GarmaGarchError, ArithmeticError):
    """A numerical routine failed to converge or overflowed.

    Carries enough context (family, offending values, time index) to
    reproduce the failure.
    """


class SimulationError(GarmaGarchError, RuntimeError):
    """Path generation became explosive or otherwise unusable."""


class EstimationError(GarmaGarchError, RuntimeError):
    """An estimation routine could not produce a usable result."""


class StudyError(GarmaGarchError, RuntimeError):
    """A Monte Carlo study failed its robustness thresholds."""


class DataError(GarmaGarchError, ValueError):
    """Input data could not be ingested (bad CSV cell, missing column, ...)."""


class ConfigError(GarmaGarchError, ValueError):
    """Invalid run configuration (unknown family, bad orders, bad flags)."""
