"""Finite-dimensional (conditionally) Gaussian noise models.

Covariances are plain ``(p, p)`` numpy arrays.  A covariance *source* draws a
random covariance per replicate and declares the eigenvalue bounds it
promises: an almost-sure lower bound ``lambda_star`` on the smallest
eigenvalue and a bound ``a_star`` on the mean of the largest one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np
from scipy.linalg import toeplitz

from .constants import CompactSetSpec, ShrinkageConstant, ShrinkSource
from .errors import DimensionTooSmallError, DomainError, NonStationaryError, NotPSDError

__all__ = [
    "Ar1Spec",
    "CovarianceSource",
    "FixedCovariance",
    "ScaledIdentity",
    "ar1_covariance",
    "ar1_lambda_max_bound",
    "ar1_shrink_constant",
    "ar1_risk_bound",
    "audit_source",
    "check_covariance",
    "factorize",
    "sample_conditionally_gaussian",
    "sample_mvn",
    "simulate_ar1_recursion",
]

PSD_TOL = 1e-10
EIG_CLAMP = 1e-12


def check_covariance(cov) -> np.ndarray:
    """Return ``cov`` as a float array after checking shape, symmetry and PSD-ness."""
    cov = np.asarray(cov, dtype=float)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise DomainError(f"covariance must be square, got shape {cov.shape}")
    scale = max(1.0, float(np.max(np.abs(cov))) if cov.size else 1.0)
    if not np.allclose(cov, cov.T, rtol=0.0, atol=1e-12 * scale):
        raise NotPSDError("covariance is not symmetric")
    if cov.size and np.linalg.eigvalsh(cov)[0] < -PSD_TOL * scale:
        raise NotPSDError("covariance has a negative eigenvalue")
    return cov


@dataclass(frozen=True)
class Ar1Spec:
    """Stationary AR(1) noise ``xi_k = a xi_{k-1} + eps_k`` with ``|a| <= alpha < 1``."""

    a: float
    alpha: float
    p: int

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha < 1.0:
            raise DomainError(f"alpha must lie in (0, 1), got {self.alpha}")
        if abs(self.a) >= 1.0:
            raise NonStationaryError(f"|a| must be < 1, got {self.a}")
        if abs(self.a) > self.alpha:
            raise DomainError(f"|a| = {abs(self.a)} exceeds the envelope alpha = {self.alpha}")
        if int(self.p) != self.p or self.p < 2:
            raise DomainError(f"p must be an integer >= 2, got {self.p!r}")


def ar1_covariance(a: float, p: int) -> np.ndarray:
    """Stationary covariance ``a^|i-j| / (1 - a^2)`` of AR(1) noise.

    Raises:
        NonStationaryError: if ``|a| >= 1``.
    """
    if not abs(a) < 1.0:
        raise NonStationaryError(f"|a| must be < 1 for a stationary covariance, got {a}")
    lags = np.arange(p, dtype=float)
    column = np.where(lags == 0, 1.0, a**lags) / (1.0 - a * a)
    return toeplitz(column)


def ar1_lambda_max_bound(alpha: float) -> float:
    """Upper bound ``1/(1 - alpha)^2`` on the largest eigenvalue of the AR(1) covariance."""
    if not 0.0 <= alpha < 1.0:
        raise DomainError(f"alpha must lie in [0, 1), got {alpha}")
    return 1.0 / (1.0 - alpha) ** 2


def _ar1_effective_dim(p: int, alpha: float) -> float:
    # lower bound on tr D(a) - lambda_max(D(a)) over |a| <= alpha
    return p - ar1_lambda_max_bound(alpha)


def ar1_shrink_constant(spec: Ar1Spec, gamma_p: float) -> ShrinkageConstant:
    """``c = (p - 1/(1 - alpha)^2) * gamma_p``.

    Raises:
        DimensionTooSmallError: unless ``p > 1/(1 - alpha)^2``.
    """
    if not gamma_p > 0:
        raise DomainError(f"gamma_p must be > 0, got {gamma_p}")
    eff = _ar1_effective_dim(spec.p, spec.alpha)
    if eff <= 0:
        raise DimensionTooSmallError(
            f"p = {spec.p} must exceed 1/(1-alpha)^2 = {ar1_lambda_max_bound(spec.alpha):g}"
        )
    return ShrinkageConstant(eff * gamma_p, ShrinkSource.AR1_PROPOSITION)


def ar1_risk_bound(spec: Ar1Spec, gamma_p: float) -> float:
    """Guaranteed risk difference ``-(p - 1/(1 - alpha)^2)^2 gamma_p^2``."""
    c = ar1_shrink_constant(spec, gamma_p).c
    return -(c * c)


def simulate_ar1_recursion(a: float, p: int, rng: np.random.Generator, size: int) -> np.ndarray:
    """Run the AR(1) recursion from a stationary start; used to cross-check :func:`ar1_covariance`."""
    if not abs(a) < 1.0:
        raise NonStationaryError(f"|a| must be < 1, got {a}")
    xi_prev = rng.standard_normal(size) / math.sqrt(1.0 - a * a)
    out = np.empty((size, p))
    for k in range(p):
        xi_prev = a * xi_prev + rng.standard_normal(size)
        out[:, k] = xi_prev
    return out


def factorize(cov) -> np.ndarray:
    """Return ``L`` with ``L @ L.T == cov``.

    Cholesky first; near-singular matrices fall back to an eigen-factorization
    with eigenvalues below ``1e-12`` clamped to zero.

    Raises:
        NotPSDError: if the smallest eigenvalue is below ``-1e-10`` (relative).
    """
    cov = np.asarray(cov, dtype=float)
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        pass
    cov = check_covariance(cov)
    w, v = np.linalg.eigh(cov)
    w = np.where(w < EIG_CLAMP, 0.0, w)
    return v * np.sqrt(w)


def sample_mvn(mean, cov, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Draw ``mean + L z`` with ``L L' = cov`` and ``z`` standard normal.

    With ``size=None`` a single vector is returned, otherwise ``(size, p)``.
    """
    mean = np.asarray(mean, dtype=float)
    chol = factorize(cov)
    p = chol.shape[0]
    if mean.shape[-1] != p:
        raise DomainError(f"mean has dimension {mean.shape[-1]}, covariance has {p}")
    z = rng.standard_normal(p if size is None else (size, p))
    return mean + z @ chol.T


class CovarianceSource(Protocol):
    """Random covariance generator with declared eigenvalue bounds."""

    p: int
    lambda_star: float
    a_star: float

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Return ``size`` covariance draws with shape ``(size, p, p)``."""
        ...

    def sample_noise(self, rng: np.random.Generator, size: int) -> tuple[np.ndarray, np.ndarray]:
        """Return noise ``(size, p)`` and the traces ``(size,)`` of the drawn covariances."""
        ...


@dataclass(frozen=True, eq=False)
class FixedCovariance:
    """Deterministic covariance; the bounds default to its extreme eigenvalues."""

    matrix: np.ndarray
    lambda_star: float = field(default=float("nan"))
    a_star: float = field(default=float("nan"))

    def __post_init__(self) -> None:
        matrix = check_covariance(self.matrix)
        object.__setattr__(self, "matrix", matrix)
        eig = np.linalg.eigvalsh(matrix)
        if math.isnan(self.lambda_star):
            object.__setattr__(self, "lambda_star", float(eig[0]))
        if math.isnan(self.a_star):
            object.__setattr__(self, "a_star", float(eig[-1]))
        object.__setattr__(self, "_chol", factorize(matrix))

    @property
    def p(self) -> int:
        return self.matrix.shape[0]

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return np.broadcast_to(self.matrix, (size, self.p, self.p))

    def sample_noise(self, rng: np.random.Generator, size: int) -> tuple[np.ndarray, np.ndarray]:
        z = rng.standard_normal((size, self.p))
        return z @ self._chol.T, np.full(size, np.trace(self.matrix))


@dataclass(frozen=True)
class ScaledIdentity:
    """``sigma^2 I_p`` with ``sigma^2`` uniform on ``[low, high]`` per draw.

    Declares ``lambda_star = low`` and ``a_star = high``.
    """

    p: int
    low: float = 1.0
    high: float = 1.0

    def __post_init__(self) -> None:
        if not 0.0 < self.low <= self.high:
            raise DomainError(f"need 0 < low <= high, got ({self.low}, {self.high})")

    @property
    def lambda_star(self) -> float:
        return self.low

    @property
    def a_star(self) -> float:
        return self.high

    def _variances(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.low == self.high:
            return np.full(size, self.low)
        return rng.uniform(self.low, self.high, size)

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        var = self._variances(rng, size)
        return var[:, None, None] * np.eye(self.p)

    def sample_noise(self, rng: np.random.Generator, size: int) -> tuple[np.ndarray, np.ndarray]:
        var = self._variances(rng, size)
        z = rng.standard_normal((size, self.p))
        return np.sqrt(var)[:, None] * z, self.p * var


def sample_conditionally_gaussian(
    theta, source: CovarianceSource, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Draw ``D(G)`` from ``source``, then ``Y = theta + xi`` with ``xi ~ N(0, D(G))``.

    Returns ``(Y, D(G))`` so that the caller can audit the declared bounds.
    """
    theta = np.asarray(theta, dtype=float)
    cov = np.array(source.draw(rng, 1)[0])
    return sample_mvn(theta, cov, rng), cov


@dataclass(frozen=True)
class SourceAudit:
    lambda_min: float
    mean_lambda_max: float
    se_lambda_max: float
    lambda_star_ok: bool
    a_star_ok: bool


def audit_source(source: CovarianceSource, rng: np.random.Generator, draws: int) -> SourceAudit:
    """Check the declared bounds on ``draws`` covariance samples.

    ``lambda_star`` must hold on every draw (up to ``1e-10``); the mean of the
    largest eigenvalue must not exceed ``a_star`` by more than three standard
    errors.
    """
    covs = source.draw(rng, draws)
    eig = np.linalg.eigvalsh(covs)
    lmin = float(eig[:, 0].min())
    lmax = eig[:, -1]
    mean = float(lmax.mean())
    se = float(lmax.std(ddof=1) / math.sqrt(draws)) if draws > 1 else 0.0
    return SourceAudit(
        lambda_min=lmin,
        mean_lambda_max=mean,
        se_lambda_max=se,
        lambda_star_ok=lmin >= source.lambda_star - 1e-10,
        a_star_ok=mean <= source.a_star + 3.0 * se,
    )


def default_spec_for_source(source: CovarianceSource, d: float) -> CompactSetSpec:
    return CompactSetSpec(d=d, lambda_star=source.lambda_star, a_star=source.a_star)
