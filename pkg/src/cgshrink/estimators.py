"""Point estimators of the mean vector from a single observation ``Y``.

All functions act on the last axis, so a stack of observations with shape
``(..., p)`` is processed row by row.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .constants import ShrinkageConstant
from .errors import DomainError, SingularObservationError

__all__ = [
    "Estimate",
    "EstimatorId",
    "apply_estimator",
    "as_observation",
    "estimate_james_stein",
    "estimate_mle",
    "estimate_shrink",
    "shrink_factor",
]


class EstimatorId(str, Enum):
    MLE = "mle"
    JAMES_STEIN = "james_stein"
    SHRINK = "shrink"
    # extension, not part of the original estimator family: factor clipped at 0
    SHRINK_POSITIVE_PART = "shrink_positive_part"


@dataclass(frozen=True)
class Estimate:
    theta_hat: np.ndarray
    estimator_id: EstimatorId


def as_observation(y) -> np.ndarray:
    """Validate and convert ``y`` to a float array with last axis ``p >= 2``."""
    arr = np.asarray(y, dtype=float)
    if arr.ndim == 0 or arr.shape[-1] < 2:
        raise DomainError(f"observation dimension must be >= 2, got shape {arr.shape}")
    return arr


def _norms(y: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(y, axis=-1, keepdims=True)
    if np.any(norms == 0):
        raise SingularObservationError("observation has zero norm; the shrinkage rule is undefined")
    return norms


def estimate_mle(y) -> Estimate:
    """The maximum likelihood estimate, which is ``Y`` itself."""
    return Estimate(as_observation(y).copy(), EstimatorId.MLE)


def estimate_james_stein(y) -> Estimate:
    """``(1 - (p - 2) / ||Y||^2) Y``.

    Raises:
        SingularObservationError: if any row has zero norm.
    """
    y = as_observation(y)
    p = y.shape[-1]
    norms = _norms(y)
    return Estimate((1.0 - (p - 2) / norms**2) * y, EstimatorId.JAMES_STEIN)


def shrink_factor(norms: np.ndarray, c: float, positive_part: bool = False) -> np.ndarray:
    factor = 1.0 - c / norms
    if positive_part:
        factor = np.maximum(factor, 0.0)
    return factor


def estimate_shrink(y, c: ShrinkageConstant | float, positive_part: bool = False) -> Estimate:
    """``(1 - c / ||Y||) Y``.

    The factor is not truncated at zero, so the estimate passes through the
    origin when ``||Y|| < c``.  ``positive_part=True`` clips the factor at
    zero; that variant is an extension and carries a different id.

    Raises:
        SingularObservationError: if any row has zero norm.
    """
    y = as_observation(y)
    c_value = float(c)
    if c_value < 0:
        raise DomainError(f"shrinkage constant must be >= 0, got {c_value}")
    norms = _norms(y)
    if c_value == 0.0 and not positive_part:
        return Estimate(y.copy(), EstimatorId.SHRINK)
    theta = shrink_factor(norms, c_value, positive_part) * y
    est_id = EstimatorId.SHRINK_POSITIVE_PART if positive_part else EstimatorId.SHRINK
    return Estimate(theta, est_id)


def apply_estimator(estimator_id: EstimatorId | str, y, c: float = 0.0) -> np.ndarray:
    """Dispatch by id and return only the estimate array."""
    est = EstimatorId(estimator_id)
    if est is EstimatorId.MLE:
        return estimate_mle(y).theta_hat
    if est is EstimatorId.JAMES_STEIN:
        return estimate_james_stein(y).theta_hat
    if est is EstimatorId.SHRINK:
        return estimate_shrink(y, c).theta_hat
    return estimate_shrink(y, c, positive_part=True).theta_hat
