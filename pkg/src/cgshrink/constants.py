"""Special constants behind the improved shrinkage estimator.

The central quantity is ``gamma_p``, a lower bound on ``inf_theta E 1/||Y||``
over a compact parameter set of radius ``d`` when the largest eigenvalue of
the (random) noise covariance is bounded by ``a_star`` on average.  Writing
``R`` for a chi-distributed variable with ``p`` degrees of freedom, the
integral representation reads ``gamma_p = E[1 / (d + sqrt(a_star) * R)]``.

Two evaluation routes are provided:

* :func:`gamma_p_quadrature` integrates the radial representation directly and
  is treated as ground truth;
* :func:`gamma_p_closed` evaluates the finite alternating sum in terms of
  ``Gamma`` values and the auxiliary integral :func:`integral_I`.

The zero-point risk :func:`risk_at_zero` uses the shrinkage constant
``c = (p - 1) * gamma_p`` with ``d -> 0`` and ``a_star = 1``, which equals the
mean of the chi_p distribution.  With that choice
``E||Y - c Y/||Y||||^2 = p - (E||Y||)^2`` at ``theta = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from scipy import integrate

from .errors import DivergentIntegralError, DomainError

__all__ = [
    "CompactSetSpec",
    "GammaMethod",
    "GammaPValue",
    "ShrinkSource",
    "ShrinkageConstant",
    "chi_mean",
    "eq6_constant",
    "gamma_p",
    "gamma_p_closed",
    "gamma_p_quadrature",
    "integral_I",
    "risk_at_zero",
    "risk_improvement_bound",
    "shrink_constant_theorem21",
]

SQRT_HALF_PI = math.sqrt(math.pi / 2.0)

# e^{-r^2/2} < 1e-300 beyond this radius
_R_TAIL = 40.0
_QUAD_EPSABS = 0.0
_QUAD_EPSREL = 1e-13
_QUAD_LIMIT = 500


@dataclass(frozen=True)
class CompactSetSpec:
    """Radius of the parameter set and the covariance eigenvalue bounds.

    Attributes:
        d: ``sup{||theta|| : theta in Theta}``.
        lambda_star: almost-sure lower bound on the smallest covariance eigenvalue.
        a_star: upper bound on the expected largest covariance eigenvalue.
    """

    d: float
    lambda_star: float = 1.0
    a_star: float = 1.0

    def __post_init__(self) -> None:
        for name in ("d", "lambda_star", "a_star"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise DomainError(f"{name} must be finite, got {value!r}")
        if self.d < 0:
            raise DomainError(f"d must be >= 0, got {self.d}")
        if self.lambda_star <= 0:
            raise DomainError(f"lambda_star must be > 0, got {self.lambda_star}")
        if self.a_star <= 0:
            raise DomainError(f"a_star must be > 0, got {self.a_star}")

    @property
    def mu(self) -> float:
        return self.d / math.sqrt(self.a_star)


class GammaMethod(str, Enum):
    CLOSED_FORM = "closed_form"
    QUADRATURE = "quadrature"


@dataclass(frozen=True)
class GammaPValue:
    value: float
    method: GammaMethod
    p: int
    spec: CompactSetSpec

    def __float__(self) -> float:
        return self.value


class ShrinkSource(str, Enum):
    THEOREM_2_1 = "theorem_2_1"
    THEOREM_3_1 = "theorem_3_1"
    AR1_PROPOSITION = "ar1_proposition"
    MANUAL = "manual"


@dataclass(frozen=True)
class ShrinkageConstant:
    """A shrinkage constant ``c`` and the rule that produced it."""

    c: float
    source: ShrinkSource = ShrinkSource.MANUAL

    def __post_init__(self) -> None:
        if not (self.c >= 0 and math.isfinite(self.c)):
            raise DomainError(f"shrinkage constant must be finite and >= 0, got {self.c}")

    def __float__(self) -> float:
        return self.c


def _check_p(p: int) -> None:
    if int(p) != p or p < 2:
        raise DomainError(f"dimension p must be an integer >= 2, got {p!r}")


def _quad(f, lo: float, hi: float, points=None) -> float:
    value, _ = integrate.quad(
        f, lo, hi, epsabs=_QUAD_EPSABS, epsrel=_QUAD_EPSREL, limit=_QUAD_LIMIT, points=points
    )
    return value


def integral_I(a: float) -> float:
    """Evaluate ``I(a) = int_0^inf exp(-r^2/2) / (a + r) dr`` for ``a > 0``.

    The range is truncated at ``r = 40``; the dropped tail is below
    ``exp(-800) / a`` whatever the value of ``a``.  The integrand has a ``1/(a + r)`` spike of width ``a``
    near the origin, so a breakpoint is placed there for small ``a``.
    """
    if not math.isfinite(a):
        raise DomainError(f"a must be finite, got {a!r}")
    if a < 0:
        raise DomainError(f"I(a) is undefined for a < 0 (pole inside the range), got {a}")
    if a == 0:
        raise DivergentIntegralError("I(0) diverges logarithmically at r = 0; pass a > 0")
    r_max = _R_TAIL
    points = [min(a, 1.0)]
    return _quad(lambda r: math.exp(-0.5 * r * r) / (a + r), 0.0, r_max, points=points)


# B_{2k} / (2k (2k - 1)) for the Stirling series of log Gamma
_STIRLING = (1 / 12, -1 / 360, 1 / 1260, -1 / 1680, 1 / 1188, -691 / 360360)
_STIRLING_MIN_X = 8.0


def _half_step_excess(x: float) -> float:
    """``log Gamma(x + 1/2) - log Gamma(x) - log(x)/2`` without cancellation.

    Differencing two ``lgamma`` values loses about ``eps * x log x`` in
    absolute terms, which is fatal for ``r_p`` at large ``p``.  For large
    ``x`` the Stirling series is differenced term by term instead.
    """
    if x < _STIRLING_MIN_X:
        return math.lgamma(x + 0.5) - math.lgamma(x) - 0.5 * math.log(x)
    h = 0.5 / x
    log_ratio = math.log1p(h)
    if h < 1e-3:
        # x log(1 + h) - 1/2 = (1/2) sum_{k>=2} (-1)^{k+1} h^{k-1} / k, summed smallest first
        excess = 0.5 * math.fsum((-1) ** (k + 1) * h ** (k - 1) / k for k in range(7, 1, -1))
    else:
        excess = x * log_ratio - 0.5
    for k, coef in enumerate(_STIRLING):
        power = 2 * k + 1
        # (x + 1/2)^{-power} - x^{-power} without cancellation
        excess += coef * x**-power * math.expm1(-power * log_ratio)
    return excess


def _gamma_half_ratio(x: float) -> float:
    """``Gamma(x + 1/2) / Gamma(x)``."""
    return math.sqrt(x) * math.exp(_half_step_excess(x))


def _log_chi_norm(p: int) -> float:
    # log(2^{p/2-1} Gamma(p/2)) = log of int_0^inf r^{p-1} e^{-r^2/2} dr
    return (0.5 * p - 1.0) * math.log(2.0) + math.lgamma(0.5 * p)


def gamma_p_quadrature(p: int, spec: CompactSetSpec) -> GammaPValue:
    """``gamma_p`` from its radial integral representation.

    For ``d = 0`` the analytic limit
    ``Gamma((p-1)/2) / (sqrt(2 a_star) Gamma(p/2))`` is returned.
    """
    _check_p(p)
    if spec.d == 0:
        # Gamma((p-1)/2) / Gamma(p/2) = 1 / ratio at x = (p-1)/2
        value = 1.0 / (_gamma_half_ratio(0.5 * (p - 1)) * math.sqrt(2.0 * spec.a_star))
        return GammaPValue(value, GammaMethod.QUADRATURE, p, spec)

    mu = spec.mu
    log_norm = _log_chi_norm(p)

    def integrand(r: float) -> float:
        if r == 0.0:
            return 0.0
        return math.exp((p - 1) * math.log(r) - 0.5 * r * r - log_norm) / (mu + r)

    peak = math.sqrt(p - 1)
    r_max = peak + _R_TAIL
    integral = _quad(integrand, 0.0, r_max, points=[peak])
    # mu / d == 1 / sqrt(a_star)
    return GammaPValue(integral / math.sqrt(spec.a_star), GammaMethod.QUADRATURE, p, spec)


def gamma_p_closed(p: int, spec: CompactSetSpec) -> GammaPValue:
    """``gamma_p`` from the finite alternating sum.

    Uses ``int_0^inf r^j e^{-r^2/2} dr = 2^{(j-1)/2} Gamma((j+1)/2)`` and the
    recursion ``r^k/(mu+r) = r^{k-1} - mu r^{k-1}/(mu+r)``.  The terms
    alternate in sign and grow like ``mu^{p-1}``, so the sum is accumulated
    with :func:`math.fsum`; accuracy degrades for large ``mu`` and ``p``.

    Raises:
        DomainError: if ``d == 0`` (use :func:`gamma_p_quadrature`).
    """
    _check_p(p)
    if spec.d == 0:
        raise DomainError(
            "closed form divides by d; for d = 0 use gamma_p_quadrature (analytic limit)"
        )
    mu = spec.mu
    log_mu = math.log(mu)
    terms = []
    for j in range(p - 1):
        sign = -1.0 if (p - j) % 2 else 1.0
        log_mag = 0.5 * (j - 1) * math.log(2.0) + (p - 1 - j) * log_mu + math.lgamma(0.5 * (j + 1))
        terms.append(sign * math.exp(log_mag))
    sign_p = -1.0 if p % 2 else 1.0
    terms.append(-sign_p * mu**p * integral_I(mu))
    numerator = math.fsum(terms)
    denominator = math.exp(_log_chi_norm(p)) * spec.d
    return GammaPValue(numerator / denominator, GammaMethod.CLOSED_FORM, p, spec)


def gamma_p(p: int, spec: CompactSetSpec) -> float:
    """Convenience accessor returning the quadrature value as a float."""
    return gamma_p_quadrature(p, spec).value


def chi_mean(p: int) -> float:
    """Mean of the chi distribution with ``p`` degrees of freedom."""
    return math.sqrt(2.0) * _gamma_half_ratio(0.5 * p)


def eq6_constant(p: int) -> ShrinkageConstant:
    """``c = (p - 1) * gamma_p`` with ``d -> 0`` and ``a_star = 1``.

    This is the constant for which the risk at the origin equals
    :func:`risk_at_zero`; it coincides with :func:`chi_mean`.
    """
    _check_p(p)
    g = gamma_p_quadrature(p, CompactSetSpec(d=0.0, a_star=1.0)).value
    return shrink_constant_theorem21(p, 1.0, g)


def risk_at_zero(p: int) -> float:
    """Risk of the shrinkage estimator at ``theta = 0`` under ``N(0, I_p)`` noise.

    ``r_p = p - [(p-1) Gamma((p-1)/2) / (sqrt(2) Gamma(p/2))]^2``.  The
    bracket equals ``sqrt(p) * exp(delta)`` with ``delta`` the excess from
    :func:`_half_step_excess` at ``x = p/2``, so ``r_p = -p * expm1(2 delta)``,
    which stays accurate as ``r_p -> 0.5``.
    """
    _check_p(p)
    return -p * math.expm1(2.0 * _half_step_excess(0.5 * p))


def _check_positive(**values: float) -> None:
    for name, value in values.items():
        if not (value > 0 and math.isfinite(value)):
            raise DomainError(f"{name} must be finite and > 0, got {value!r}")


def shrink_constant_theorem21(p: int, lambda_star: float, gamma_p: float) -> ShrinkageConstant:
    """``c = (p - 1) * lambda_star * gamma_p``."""
    _check_p(p)
    _check_positive(lambda_star=lambda_star, gamma_p=gamma_p)
    return ShrinkageConstant((p - 1) * lambda_star * gamma_p, ShrinkSource.THEOREM_2_1)


def risk_improvement_bound(p: int, lambda_star: float, gamma_p: float) -> float:
    """Guaranteed upper bound ``-[(p - 1) lambda_star gamma_p]^2`` on the risk difference."""
    c = shrink_constant_theorem21(p, lambda_star, gamma_p).c
    return -(c * c)
