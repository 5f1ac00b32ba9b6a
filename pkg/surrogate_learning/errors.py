"""Exceptions raised by the surrogate learning toolkit."""


class SurrogateLearningError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(SurrogateLearningError, ValueError):
    """A probability or other input lies outside its permitted domain."""


class DegenerateConditionals(SurrogateLearningError, ValueError):
    """P(x1|y=0) and P(x1|y=1) are too close for the surrogate identity."""


class InsufficientLabels(SurrogateLearningError, ValueError):
    """A labelled sample is missing one of the classes."""


class InvalidSimplex(SurrogateLearningError, ValueError):
    """A probability vector or table is negative or does not sum to one."""


class ZeroMarginal(SurrogateLearningError, ValueError):
    """A conditional was requested on an event of probability zero."""


class SingleClassData(SurrogateLearningError, ValueError):
    """Training data for a binary predictor contains only one label."""


class NonFiniteLoss(SurrogateLearningError, ArithmeticError):
    """Gradient descent diverged."""


class DimensionMismatch(SurrogateLearningError, ValueError):
    """A feature vector does not match the dimension of a fitted model."""


class EmptyData(SurrogateLearningError, ValueError):
    """No data was supplied to an estimator."""


class InvalidSpec(SurrogateLearningError, ValueError):
    """A generator specification violates its invariants."""


class InsufficientData(SurrogateLearningError, ValueError):
    """Too few observations to form an estimate."""


class MalformedInput(SurrogateLearningError, ValueError):
    """An input file could not be parsed."""


class ConfigError(SurrogateLearningError):
    """The experiment configuration is missing or invalid."""


class AcceptanceFailure(SurrogateLearningError):
    """An experiment finished but one of its checked properties failed."""
