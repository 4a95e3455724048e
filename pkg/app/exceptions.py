"""Errors and warnings raised by the distribution learning services."""


class DistributionLearningError(Exception):
    """Base class for all domain errors."""


class SingularCovariance(DistributionLearningError):
    """Training covariance could not be factorized even at the largest nugget."""


class DimensionMismatch(DistributionLearningError):
    """Points do not have the dimension expected by a model or surrogate."""


class DomainError(DistributionLearningError):
    """An argument lies outside the domain of a function."""


class EmptyPool(DistributionLearningError):
    """A candidate pool or prediction set holds no points."""


class DegenerateSample(DistributionLearningError):
    """Sample statistics requested for a constant sample."""


class DuplicatePoint(DistributionLearningError):
    """A training input coincides with an existing one."""


class NonFiniteState(DistributionLearningError):
    """Time integration produced NaN or Inf."""


class ReferenceUnavailable(DistributionLearningError):
    """No reference CDF could be loaded or generated."""


class UnknownBenchmark(DistributionLearningError):
    """Benchmark name is not registered."""


class DegenerateOutputsWarning(UserWarning):
    """All design outputs are equal; the surrogate is the constant function."""


class RangeTooNarrowWarning(UserWarning):
    """Moment integration range does not cover effectively all probability mass."""
