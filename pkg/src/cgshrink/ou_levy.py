"""Continuous-time regression with Ornstein-Uhlenbeck-Levy noise.

Observations follow ``dy_t = sum_j theta_j phi_j(t) dt + dxi_t`` on ``[0, n]``
where ``dxi_t = a xi_t dt + rho1 dw_t + rho2 dz_t``, ``xi_0 = 0``, ``w`` is a
Brownian motion and ``z`` a compound Poisson process with intensity ``lam``
and standard normal marks.  The least squares estimate decomposes as
``theta_hat = theta + zeta / sqrt(n)`` with
``zeta_j = n^{-1/2} int_0^n phi_j(t) dxi_t``.  Given the jump times, ``zeta``
is Gaussian with covariance ``V_n``; :func:`conditional_covariance` assembles
``V_n`` from the kernel representation and :func:`simulate_zeta` produces
path-level draws against which that representation is checked.

The basis is the trigonometric system ``1, sqrt2 cos(2 pi k t), sqrt2 sin(2 pi k t)``,
one-periodic and orthonormal on ``[0, 1]`` with sup-norm ``K = sqrt2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.signal import lfilter

from .constants import CompactSetSpec, ShrinkageConstant, ShrinkSource, gamma_p_quadrature
from .errors import DomainError, SingularObservationError

__all__ = [
    "BASIS_SUP_NORM",
    "ConditionalCovariance",
    "JumpRecord",
    "LemmaA2Result",
    "OuLevyModel",
    "basis_function",
    "basis_matrix",
    "check_lemma_A1",
    "check_lemma_A2",
    "conditional_covariance",
    "improved_estimator_ou",
    "kernel_L",
    "kernel_epsilon",
    "lse",
    "ou_compact_spec",
    "ou_risk_bound",
    "ou_shrink_constant",
    "simulate_jumps",
    "simulate_zeta",
    "simulate_zeta_conditional",
    "simulate_zeta_unconditional",
    "trig_basis",
]

BASIS_SUP_NORM = math.sqrt(2.0)
LEMMA_A2_M = 1.0 + 2.0 * BASIS_SUP_NORM**2

_GL_ORDER = 16
_GL_U, _GL_W = np.polynomial.legendre.leggauss(_GL_ORDER)
# nodes and weights mapped to [0, 1]
_GL_U = 0.5 * (_GL_U + 1.0)
_GL_W = 0.5 * _GL_W


@dataclass(frozen=True)
class OuLevyModel:
    a: float = 0.0
    rho1: float = 1.0
    rho2: float = 0.0
    lam: float = 1.0
    n: int = 20
    p: int = 3
    grid_steps_per_unit: int = 200

    def __post_init__(self) -> None:
        if not (math.isfinite(self.a) and self.a <= 0):
            raise DomainError(f"drift a must be <= 0, got {self.a}")
        if not self.rho1 > 0:
            raise DomainError(f"rho1 must be > 0, got {self.rho1}")
        if not self.rho2 >= 0:
            raise DomainError(f"rho2 must be >= 0, got {self.rho2}")
        if not self.lam > 0:
            raise DomainError(f"jump intensity must be > 0, got {self.lam}")
        for name in ("n", "p", "grid_steps_per_unit"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise DomainError(f"{name} must be a positive integer, got {value!r}")

    @property
    def rho_star(self) -> float:
        return self.rho1**2 + self.lam * self.rho2**2

    @property
    def dt(self) -> float:
        return 1.0 / self.grid_steps_per_unit

    @property
    def steps(self) -> int:
        return self.n * self.grid_steps_per_unit


@dataclass(frozen=True)
class JumpRecord:
    """Jump times in ``(0, n]`` and their marks."""

    times: np.ndarray
    marks: np.ndarray

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=float)
        marks = np.asarray(self.marks, dtype=float)
        if times.shape != marks.shape or times.ndim != 1:
            raise DomainError("times and marks must be 1-d arrays of equal length")
        if times.size > 1 and np.any(np.diff(times) <= 0):
            raise DomainError("jump times must be strictly increasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "marks", marks)

    def __len__(self) -> int:
        return self.times.size


# -- basis -----------------------------------------------------------------


def trig_basis(j: int, t):
    """Value of the ``j``-th trigonometric basis function (``j >= 1``) at ``t``."""
    if int(j) != j or j < 1:
        raise DomainError(f"basis index must be >= 1, got {j!r}")
    t = np.asarray(t, dtype=float)
    if j == 1:
        out = np.ones_like(t)
    else:
        k = j // 2
        trig = np.cos if j % 2 == 0 else np.sin
        out = BASIS_SUP_NORM * trig(2.0 * math.pi * k * t)
    return out if out.ndim else float(out)


def basis_function(j: int) -> Callable:
    return lambda t: trig_basis(j, t)


def basis_matrix(t, p: int) -> np.ndarray:
    """Array with shape ``t.shape + (p,)`` holding ``phi_1..phi_p`` at ``t``."""
    t = np.asarray(t, dtype=float)
    return np.stack([np.asarray(trig_basis(j, t)) for j in range(1, p + 1)], axis=-1)


def _exp_weighted_tail(t: np.ndarray, a: float, n: int, p: int) -> np.ndarray:
    """``int_T^n phi_j(s) exp(a (s - T)) ds`` for each ``T`` in ``t`` and ``j <= p``.

    Closed form; relies on ``n`` being an integer so that ``exp(i w n) = 1``.
    """
    t = np.asarray(t, dtype=float)
    rest = n - t
    out = np.empty(t.shape + (p,))
    out[..., 0] = rest if a == 0 else np.expm1(a * rest) / a
    for j in range(2, p + 1):
        k = j // 2
        z = complex(a, 2.0 * math.pi * k)
        # int_T^n e^{a(s-T)} e^{iws} ds = (e^{a(n-T)} - e^{iwT}) / (a + iw)
        val = (np.exp(a * rest) - np.exp(1j * 2.0 * math.pi * k * t)) / z
        out[..., j - 1] = BASIS_SUP_NORM * (val.real if j % 2 == 0 else val.imag)
    return out


def _jump_loadings(model: OuLevyModel, times: np.ndarray) -> np.ndarray:
    """Effect of a unit jump at ``T`` on ``int_0^n phi_j dxi``: ``phi_j(T) + a int_T^n phi_j e^{a(s-T)} ds``."""
    load = basis_matrix(times, model.p)
    if model.a != 0:
        load = load + model.a * _exp_weighted_tail(times, model.a, model.n, model.p)
    return load


# -- simulation ------------------------------------------------------------


def simulate_jumps(model: OuLevyModel, rng: np.random.Generator) -> JumpRecord:
    """Poisson jump times on ``(0, n]`` from cumulative exponential gaps, with N(0, 1) marks."""
    mean = model.lam * model.n
    chunk = int(mean + 6.0 * math.sqrt(mean) + 10)
    arrivals = np.cumsum(rng.exponential(1.0 / model.lam, chunk))
    while arrivals[-1] <= model.n:
        more = arrivals[-1] + np.cumsum(rng.exponential(1.0 / model.lam, chunk))
        arrivals = np.concatenate([arrivals, more])
    times = arrivals[arrivals <= model.n]
    return JumpRecord(times, rng.standard_normal(times.size))


@lru_cache(maxsize=32)
def _grid_design(model: OuLevyModel) -> tuple[np.ndarray, np.ndarray]:
    """Basis rows for the Ito sum (left nodes) and trapezoid weights (nodes 1..K)."""
    k = model.steps
    nodes = np.arange(k + 1) * model.dt
    phi = basis_matrix(nodes, model.p)
    trap = phi[1:].copy()
    trap[-1] *= 0.5
    return phi[:-1], trap


def _continuous_part(model: OuLevyModel, rng: np.random.Generator, size: int) -> np.ndarray:
    """``int_0^n phi_j dxi^c`` for the Brownian-driven OU component, shape ``(size, p)``.

    ``xi^c`` is advanced by exact OU transitions on the regular grid, drawn
    jointly with the Brownian increments.  ``int phi dw`` is the left-point
    grid sum and ``a int phi xi^c dt`` the trapezoid rule.
    """
    a, rho1, dt, k = model.a, model.rho1, model.dt, model.steps
    z = rng.standard_normal((2, size, k))
    if a == 0:
        decay, cov_wx, var_x = 1.0, rho1 * dt, rho1**2 * dt
    else:
        decay = math.exp(a * dt)
        cov_wx = rho1 * math.expm1(a * dt) / a
        var_x = rho1**2 * math.expm1(2.0 * a * dt) / (2.0 * a)
    load_w = cov_wx / math.sqrt(dt)
    load_free = math.sqrt(max(var_x - load_w**2, 0.0))
    dw = math.sqrt(dt) * z[0]
    left_phi, trap = _grid_design(model)
    out = rho1 * (dw @ left_phi)
    if a != 0:
        eta = load_w * z[0] + load_free * z[1]
        xi = lfilter([1.0], [1.0, -decay], eta, axis=1)
        out += a * dt * (xi @ trap)
    return out


def _zeta_from_parts(model: OuLevyModel, cont: np.ndarray, jump: np.ndarray) -> np.ndarray:
    return (cont + model.rho2 * jump) / math.sqrt(model.n)


def simulate_zeta(model: OuLevyModel, jumps: JumpRecord, rng: np.random.Generator) -> np.ndarray:
    """One draw of ``zeta(n)`` for the given jump times and marks."""
    cont = _continuous_part(model, rng, 1)[0]
    jump = jumps.marks @ _jump_loadings(model, jumps.times) if len(jumps) else np.zeros(model.p)
    return _zeta_from_parts(model, cont, jump)


def simulate_zeta_conditional(
    model: OuLevyModel, times, rng: np.random.Generator, size: int
) -> np.ndarray:
    """``size`` draws of ``zeta(n)`` at fixed jump times with fresh marks, shape ``(size, p)``."""
    times = np.asarray(times, dtype=float)
    marks = rng.standard_normal((size, times.size))
    cont = _continuous_part(model, rng, size)
    jump = marks @ _jump_loadings(model, times) if times.size else 0.0
    return _zeta_from_parts(model, cont, jump)


def simulate_zeta_unconditional(
    model: OuLevyModel, rng: np.random.Generator, size: int, return_jumps: bool = False
):
    """``size`` independent draws of ``zeta(n)``, each with its own jump record."""
    records = [simulate_jumps(model, rng) for _ in range(size)]
    jump = np.zeros((size, model.p))
    for r, rec in enumerate(records):
        if len(rec):
            jump[r] = rec.marks @ _jump_loadings(model, rec.times)
    cont = _continuous_part(model, rng, size)
    zeta = _zeta_from_parts(model, cont, jump)
    return (zeta, records) if return_jumps else zeta


def lse(theta, zeta, n: int) -> np.ndarray:
    """Least squares estimate ``theta + zeta / sqrt(n)``."""
    theta = np.asarray(theta, dtype=float)
    zeta = np.asarray(zeta, dtype=float)
    if theta.shape[-1] != zeta.shape[-1]:
        raise DomainError(f"theta has dimension {theta.shape[-1]}, zeta {zeta.shape[-1]}")
    return theta + zeta / math.sqrt(n)


# -- kernels ---------------------------------------------------------------


def _composite_on_unit(panels: int) -> tuple[np.ndarray, np.ndarray]:
    edges = np.arange(panels) / panels
    nodes = (edges[:, None] + _GL_U[None, :] / panels).ravel()
    weights = np.tile(_GL_W / panels, panels)
    return nodes, weights


def _adaptive_unit_integral(f: Callable[[np.ndarray], np.ndarray], tol: float, panels: int) -> np.ndarray:
    """Integrate ``f(u)`` over ``u in [0, 1]`` (last axis) by panel doubling until stable."""
    prev = None
    for _ in range(12):
        u, w = _composite_on_unit(panels)
        cur = f(u) @ w
        if prev is not None and np.max(np.abs(cur - prev)) <= tol:
            return cur
        prev, panels = cur, 2 * panels
    return cur


def kernel_epsilon(g: Callable, t, a: float, tol: float = 1e-9):
    """``a int_0^t exp(a (t - s)) g(s) (1 + exp(2 a s)) ds`` by composite Gauss-Legendre."""
    if a > 0:
        raise DomainError(f"a must be <= 0, got {a}")
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    if a == 0:
        out = np.zeros_like(t_arr)
    else:
        def f(u):
            s = t_arr[:, None] * u[None, :]
            return t_arr[:, None] * np.exp(a * (t_arr[:, None] - s)) * g(s) * (1.0 + np.exp(2 * a * s))

        start = max(2, int(math.ceil(float(t_arr.max(initial=0.0)))))
        out = a * _adaptive_unit_integral(f, tol / max(abs(a), 1.0), start)
    return out if np.ndim(t) else float(out[0])


def kernel_L(g: Callable, x, y, a: float, tol: float = 1e-9):
    """``a exp(a x) (g(y) + a int_0^x exp(a s) g(s + y) ds)`` by composite Gauss-Legendre."""
    if a > 0:
        raise DomainError(f"a must be <= 0, got {a}")
    x_arr, y_arr = np.broadcast_arrays(
        np.atleast_1d(np.asarray(x, dtype=float)), np.atleast_1d(np.asarray(y, dtype=float))
    )
    if np.any(x_arr < 0):
        raise DomainError("x must be >= 0")
    if a == 0:
        out = np.zeros(x_arr.shape)
    else:
        xs, ys = x_arr.ravel(), y_arr.ravel()

        def f(u):
            s = xs[:, None] * u[None, :]
            return xs[:, None] * np.exp(a * s) * g(s + ys[:, None])

        start = max(2, int(math.ceil(float(xs.max(initial=0.0)))))
        inner = _adaptive_unit_integral(f, tol / max(a * a, 1.0), start).reshape(x_arr.shape)
        out = a * np.exp(a * x_arr) * (np.asarray(g(y_arr)) + a * inner)
    scalar = np.ndim(x) == 0 and np.ndim(y) == 0
    return float(out.ravel()[0]) if scalar else out


# -- conditional covariance -------------------------------------------------


def _running_integrals(h: Callable, length: np.ndarray, decay: float, panels: int):
    """Composite GL for ``C(x) = int_0^x exp(decay (x - s)) h(s) ds`` on ``[0, length]``.

    ``h`` maps an array of ``s`` values with shape ``(J, ...)`` (one row per
    interval) to values with a trailing basis axis.  Returns the outer nodes
    ``x`` with shape ``(J, P*m)``, outer weights of the same shape, and
    ``C(x)`` with a trailing basis axis.  Within each panel the partial
    integral from the panel start to every node uses its own GL rule, and
    panel totals are chained with the decay factor.
    """
    length = np.asarray(length, dtype=float)
    width = length / panels  # (J,)
    starts = width[:, None] * np.arange(panels)[None, :]  # (J, P)
    x = starts[:, :, None] + width[:, None, None] * _GL_U[None, None, :]  # (J, P, m)
    # partial integrals [start, x_r] with inner nodes s = start + (x_r - start) u_q
    offs = x - starts[:, :, None]  # (J, P, m)
    s = starts[:, :, None, None] + offs[..., None] * _GL_U  # (J, P, m, q)
    hs = h(s)  # (J, P, m, q, B)
    kern = np.exp(decay * (x[..., None] - s)) * (offs[..., None] * _GL_W)  # (J, P, m, q)
    partial = np.einsum("jpmq,jpmqb->jpmb", kern, hs)
    # full panel integrals by the same rule at the panel end
    ends = starts + width[:, None]
    s_full = starts[:, :, None] + width[:, None, None] * _GL_U  # (J, P, q)
    kern_full = np.exp(decay * (ends[:, :, None] - s_full)) * (width[:, None, None] * _GL_W)
    full = np.einsum("jpq,jpqb->jpb", kern_full, h(s_full))
    # chain: C(start_k) = sum_{i<k} exp(decay (start_k - end_i)) full_i
    carry = np.zeros(full.shape[:1] + full.shape[2:])
    starts_val = np.empty_like(full)
    panel_decay = np.exp(decay * width)  # (J,)
    for k in range(panels):
        starts_val[:, k] = carry
        carry = panel_decay[:, None] * carry + full[:, k]
    values = np.exp(decay * offs)[..., None] * starts_val[:, :, None, :] + partial
    weights = np.broadcast_to(width[:, None, None] * _GL_W, x.shape)
    return x.reshape(x.shape[0], -1), weights.reshape(x.shape[0], -1), values.reshape(
        x.shape[0], -1, values.shape[-1]
    )


def _panels_for(model: OuLevyModel, length: float, per_unit: int) -> int:
    kmax = model.p // 2
    density = max(per_unit, 2 * kmax)
    return max(2, int(math.ceil(length * density)))


def _drift_matrix(model: OuLevyModel, per_unit: int) -> np.ndarray:
    """``F_n``: the Brownian cross term with the epsilon kernel, including ``rho1^2/(2n)``."""
    a, n, p = model.a, model.n, model.p
    if a == 0:
        return np.zeros((p, p))

    def h(s):
        return basis_matrix(s, p) * (1.0 + np.exp(2.0 * a * s))[..., None]

    panels = _panels_for(model, n, per_unit)
    x, w, eps = _running_integrals(h, np.array([float(n)]), a, panels)
    eps = a * eps[0]  # (N, p), epsilon_{phi_j}(x)
    phi = basis_matrix(x[0], p)
    cross = (phi * w[0][:, None]).T @ eps  # int phi_i eps_j
    return model.rho1**2 / (2.0 * n) * (cross + cross.T)


def _jump_matrix(model: OuLevyModel, times: np.ndarray, per_unit: int) -> np.ndarray:
    """Jump terms: ``phi_i(T) phi_j(T)`` plus the ``L``-kernel interaction, without ``rho2^2/n``."""
    p, a, n = model.p, model.a, model.n
    phi_t = basis_matrix(times, p)
    out = phi_t.T @ phi_t
    if a == 0 or times.size == 0:
        return out
    lengths = n - times
    panels = _panels_for(model, float(lengths.max()), per_unit)

    def h(s):
        # e^{a s} phi_j(s + T_l); s carries the jump index on axis 0
        shift = times.reshape((-1,) + (1,) * (s.ndim - 1))
        return np.exp(a * s)[..., None] * basis_matrix(s + shift, p)

    x, w, inner = _running_integrals(h, lengths, 0.0, panels)
    # L_{phi_j}(x, T) = a e^{a x} (phi_j(T) + a inner_j(x))
    L = a * np.exp(a * x)[..., None] * (phi_t[:, None, :] + a * inner)
    phi_out = basis_matrix(x + times[:, None], p)  # phi_i(t) at t = T + x
    cross = np.einsum("jn,jni,jnk->ik", w, phi_out, L)
    return out + cross + cross.T


@dataclass(frozen=True)
class ConditionalCovariance:
    v: np.ndarray
    jumps: JumpRecord
    model: OuLevyModel = field(repr=False)

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.v)


@lru_cache(maxsize=64)
def _cached_drift_matrix(model: OuLevyModel, per_unit: int) -> np.ndarray:
    return _drift_matrix(model, per_unit)


def _assemble(model: OuLevyModel, times: np.ndarray, per_unit: int) -> np.ndarray:
    p, n = model.p, model.n
    # int_0^n phi_i phi_j dt on the same composite rule as the kernels
    u, w = _composite_on_unit(_panels_for(model, n, per_unit))
    phi = basis_matrix(n * u, p)
    gram = n * (phi * w[:, None]).T @ phi
    v = model.rho1**2 / n * gram + _cached_drift_matrix(model, per_unit)
    if model.rho2 > 0:
        v = v + model.rho2**2 / n * _jump_matrix(model, times, per_unit)
    return 0.5 * (v + v.T)


def conditional_covariance(
    model: OuLevyModel,
    jumps: JumpRecord | Sequence[float],
    tol: float = 1e-8,
    per_unit: int = 4,
) -> ConditionalCovariance:
    """Assemble ``V_n`` from the four-term kernel representation.

    Entries are computed by composite Gauss-Legendre (``per_unit`` panels per
    unit time, 16 nodes each) and the panel density is doubled until
    successive results agree within ``tol``.
    """
    if not isinstance(jumps, JumpRecord):
        times = np.asarray(jumps, dtype=float)
        jumps = JumpRecord(times, np.zeros_like(times))
    times = jumps.times
    prev = _assemble(model, times, per_unit)
    for _ in range(6):
        per_unit *= 2
        cur = _assemble(model, times, per_unit)
        if np.max(np.abs(cur - prev)) <= tol:
            return ConditionalCovariance(cur, jumps, model)
        prev = cur
    return ConditionalCovariance(cur, jumps, model)


def check_lemma_A1(cc: ConditionalCovariance, rho1: float, slack: float = 1e-6) -> bool:
    """True iff ``lambda_min(V_n) >= rho1^2 - slack``."""
    return bool(cc.eigenvalues[0] >= rho1**2 - slack)


@dataclass(frozen=True)
class LemmaA2Result:
    estimate: float
    std_error: float
    bound: float
    replicates: int

    @property
    def passed(self) -> bool:
        return self.estimate <= self.bound + 3.0 * self.std_error


def check_lemma_A2(model: OuLevyModel, replicates: int, rng: np.random.Generator) -> LemmaA2Result:
    """Monte Carlo estimate of ``E lambda_max(V_n)`` against ``M p rho_star`` with ``M = 1 + 2 K^2``."""
    lmax = np.empty(replicates)
    for r in range(replicates):
        rec = simulate_jumps(model, rng)
        lmax[r] = conditional_covariance(model, rec).eigenvalues[-1]
    se = float(lmax.std(ddof=1) / math.sqrt(replicates)) if replicates > 1 else 0.0
    return LemmaA2Result(float(lmax.mean()), se, LEMMA_A2_M * model.p * model.rho_star, replicates)


# -- improved estimator -------------------------------------------------------


def ou_compact_spec(
    model: OuLevyModel, d: float, lambda_star: float | None = None, a_star: float | None = None
) -> CompactSetSpec:
    """Bounds for ``theta_hat = theta + zeta / sqrt(n)``.

    Defaults scale the covariance bounds of ``zeta`` by ``1/n``:
    ``lambda_star = rho1^2 / n`` and ``a_star = M p rho_star / n``.
    """
    if lambda_star is None:
        lambda_star = model.rho1**2 / model.n
    if a_star is None:
        a_star = LEMMA_A2_M * model.p * model.rho_star / model.n
    return CompactSetSpec(d=d, lambda_star=lambda_star, a_star=a_star)


def ou_shrink_constant(model: OuLevyModel, gamma_p: float) -> ShrinkageConstant:
    """``c = rho1^2 (p - 1) gamma_p / n``."""
    if model.n < 2:
        raise DomainError(f"the improved estimator needs n >= 2, got {model.n}")
    if not gamma_p > 0:
        raise DomainError(f"gamma_p must be > 0, got {gamma_p}")
    return ShrinkageConstant(model.rho1**2 * (model.p - 1) * gamma_p / model.n, ShrinkSource.THEOREM_3_1)


def ou_risk_bound(model: OuLevyModel, gamma_p: float) -> float:
    c = ou_shrink_constant(model, gamma_p).c
    return -(c * c)


def ou_gamma_p(model: OuLevyModel, spec: CompactSetSpec) -> float:
    if model.p < 2:
        return 1.0
    return gamma_p_quadrature(model.p, spec).value


def improved_estimator_ou(theta_hat, model: OuLevyModel, gamma_p: float) -> np.ndarray:
    """``(1 - rho1^2 (p - 1) gamma_p / (n ||theta_hat||)) theta_hat``.

    Raises:
        SingularObservationError: if ``theta_hat`` has zero norm.
    """
    theta_hat = np.asarray(theta_hat, dtype=float)
    norms = np.linalg.norm(theta_hat, axis=-1, keepdims=True)
    if np.any(norms == 0):
        raise SingularObservationError("theta_hat has zero norm")
    c = ou_shrink_constant(model, gamma_p).c
    if c == 0:
        return theta_hat.copy()
    return (1.0 - c / norms) * theta_hat
