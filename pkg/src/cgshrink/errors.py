"""Exception types raised across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain where a quantity is defined."""


class DivergentIntegralError(DomainError):
    """The requested improper integral does not converge."""


class SingularObservationError(ValueError):
    """An observation with zero Euclidean norm was passed to a shrinkage rule."""


class NonStationaryError(DomainError):
    """AR(1) coefficient with |a| >= 1 has no stationary covariance."""


class DimensionTooSmallError(DomainError):
    """The dimension p does not satisfy a result's hypothesis."""


class NotPSDError(ValueError):
    """A covariance matrix could not be factorized as L @ L.T."""


class SingularRateError(RuntimeError):
    """Too many singular observations occurred during a Monte Carlo run."""
