"""Monte Carlo risk evaluation and dominance certification.

Noise is drawn once per experiment in fixed-size replicate blocks.  Block
``b`` uses the stream ``derive_replicate_seed(master_seed, b, NOISE_TAG)``, so
the draws do not depend on how many worker threads process the blocks.  All
estimators and all grid points consume the same noise (common random
numbers), which makes paired risk differences far less noisy than the risks
themselves.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .constants import CompactSetSpec
from .errors import DomainError, SingularRateError
from .estimators import EstimatorId, shrink_factor
from .gaussian_models import CovarianceSource
from .ou_levy import OuLevyModel, simulate_zeta_unconditional

logger = logging.getLogger(__name__)

__all__ = [
    "DominanceReport",
    "DominanceRow",
    "EstimatorSpec",
    "ExperimentConfig",
    "RiskEstimate",
    "derive_replicate_seed",
    "dominance_report",
    "draw_noise",
    "estimate_risk",
    "make_theta_grid",
    "paired_losses",
    "risk_table",
]

NOISE_TAG = 0
GRID_TAG = 1
DEFAULT_BLOCK_SIZE = 1000
MAX_SINGULAR_RATE = 1e-3
MIN_REPLICATES = 100

NoiseModel = Union[CovarianceSource, OuLevyModel]


def derive_replicate_seed(master_seed: int, replicate_index: int, stream_tag: int) -> np.random.Generator:
    """Independent Philox stream keyed by ``(master_seed, replicate_index, stream_tag)``.

    The triple is hashed by :class:`numpy.random.SeedSequence`, so nearby
    indices give unrelated streams.
    """
    for name, value in (("master_seed", master_seed), ("replicate_index", replicate_index), ("stream_tag", stream_tag)):
        if int(value) != value or value < 0:
            raise DomainError(f"{name} must be a non-negative integer, got {value!r}")
    seq = np.random.SeedSequence(entropy=int(master_seed), spawn_key=(int(replicate_index), int(stream_tag)))
    return np.random.Generator(np.random.Philox(seq))


@dataclass(frozen=True)
class EstimatorSpec:
    """Named estimator: an :class:`EstimatorId` and its shrinkage constant."""

    name: str
    kind: EstimatorId
    c: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", EstimatorId(self.kind))
        if not (self.c >= 0 and math.isfinite(self.c)):
            raise DomainError(f"estimator {self.name!r}: c must be finite and >= 0, got {self.c}")


@dataclass(frozen=True)
class ExperimentConfig:
    model: NoiseModel
    estimators: tuple[EstimatorSpec, ...]
    theta_grid: np.ndarray
    replicates: int = 100_000
    master_seed: int = 0
    spec: CompactSetSpec | None = None
    block_size: int = DEFAULT_BLOCK_SIZE
    workers: int = 1

    def __post_init__(self) -> None:
        grid = np.atleast_2d(np.asarray(self.theta_grid, dtype=float))
        object.__setattr__(self, "theta_grid", grid)
        object.__setattr__(self, "estimators", tuple(self.estimators))
        if self.replicates < MIN_REPLICATES:
            raise DomainError(f"replicates must be >= {MIN_REPLICATES}, got {self.replicates}")
        if grid.shape[1] != self.p:
            raise DomainError(f"theta grid has dimension {grid.shape[1]}, model has {self.p}")
        names = [e.name for e in self.estimators]
        if len(set(names)) != len(names):
            raise DomainError(f"estimator names must be unique, got {names}")
        if self.spec is not None:
            norms = np.linalg.norm(grid, axis=1)
            if np.any(norms > self.spec.d * (1 + 1e-12)):
                raise DomainError(f"theta grid leaves the ball of radius d = {self.spec.d}")
        if self.block_size < 1 or self.workers < 1:
            raise DomainError("block_size and workers must be >= 1")

    @property
    def p(self) -> int:
        return self.model.p

    def estimator(self, name: str) -> EstimatorSpec:
        for est in self.estimators:
            if est.name == name:
                return est
        raise KeyError(f"no estimator named {name!r}; have {[e.name for e in self.estimators]}")


@dataclass(frozen=True)
class RiskEstimate:
    mean: float
    std_error: float
    replicates: int
    estimator_id: str
    theta: np.ndarray = field(repr=False)
    singular: int = 0


@dataclass(frozen=True)
class DominanceRow:
    theta: np.ndarray = field(repr=False)
    theta_norm: float
    delta: float
    std_error: float
    bound: float
    baseline_risk: float
    improved_risk: float

    @property
    def sign_ok(self) -> bool:
        return self.delta + 3.0 * self.std_error <= 0.0

    @property
    def bound_ok(self) -> bool:
        return self.delta <= self.bound + 3.0 * self.std_error

    @property
    def passed(self) -> bool:
        return self.sign_ok and self.bound_ok


@dataclass(frozen=True)
class DominanceReport:
    baseline_id: str
    improved_id: str
    bound: float
    rows: tuple[DominanceRow, ...]
    replicates: int

    @property
    def passed(self) -> bool:
        return all(row.passed for row in self.rows)

    @property
    def verdict(self) -> str:
        return "PASS" if self.passed else "FAIL"


def _block_sizes(total: int, block: int) -> list[int]:
    full, rest = divmod(total, block)
    return [block] * full + ([rest] if rest else [])


def _draw_block(model: NoiseModel, master_seed: int, index: int, size: int) -> np.ndarray:
    rng = derive_replicate_seed(master_seed, index, NOISE_TAG)
    if isinstance(model, OuLevyModel):
        zeta = simulate_zeta_unconditional(model, rng, size)
        return zeta / math.sqrt(model.n)
    noise, _ = model.sample_noise(rng, size)
    return noise


def draw_noise(config: ExperimentConfig) -> np.ndarray:
    """All noise draws for ``config`` as an array of shape ``(replicates, p)``."""
    sizes = _block_sizes(config.replicates, config.block_size)
    jobs = [(config.model, config.master_seed, b, s) for b, s in enumerate(sizes)]
    if config.workers == 1:
        blocks = [_draw_block(*job) for job in jobs]
    else:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            blocks = list(pool.map(lambda job: _draw_block(*job), jobs))
    return np.concatenate(blocks, axis=0)


def _estimate(spec: EstimatorSpec, y: np.ndarray, norms: np.ndarray) -> np.ndarray:
    if spec.kind is EstimatorId.MLE:
        return y
    if spec.kind is EstimatorId.JAMES_STEIN:
        return (1.0 - (y.shape[1] - 2) / norms**2) * y
    if spec.c == 0 and spec.kind is EstimatorId.SHRINK:
        return y
    positive = spec.kind is EstimatorId.SHRINK_POSITIVE_PART
    return shrink_factor(norms, spec.c, positive) * y


def paired_losses(
    config: ExperimentConfig, noise: np.ndarray, theta, names=None
) -> tuple[dict[str, np.ndarray], int]:
    """Squared errors of each estimator on the same draws ``Y = theta + noise``.

    Rows where ``||Y|| = 0`` are dropped for every estimator and counted.

    Raises:
        SingularRateError: if more than 0.1% of the rows are singular.
    """
    theta = np.asarray(theta, dtype=float)
    y = theta + noise
    norms = np.linalg.norm(y, axis=1, keepdims=True)
    ok = norms[:, 0] > 0
    singular = int((~ok).sum())
    if singular > MAX_SINGULAR_RATE * len(y):
        raise SingularRateError(f"{singular} of {len(y)} observations have zero norm")
    if singular:
        logger.warning("dropping %d singular observations", singular)
        y, norms = y[ok], norms[ok]
    specs = config.estimators if names is None else [config.estimator(n) for n in names]
    losses = {}
    for spec in specs:
        err = _estimate(spec, y, norms) - theta
        losses[spec.name] = np.einsum("ij,ij->i", err, err)
    return losses, singular


def _mean_se(values: np.ndarray) -> tuple[float, float]:
    return float(values.mean()), float(values.std(ddof=1) / math.sqrt(values.size))


def estimate_risk(config: ExperimentConfig, estimator_id: str, theta, noise: np.ndarray | None = None) -> RiskEstimate:
    """Monte Carlo quadratic risk of one estimator at ``theta``."""
    if noise is None:
        noise = draw_noise(config)
    losses, singular = paired_losses(config, noise, theta, [estimator_id])
    mean, se = _mean_se(losses[estimator_id])
    return RiskEstimate(mean, se, losses[estimator_id].size, estimator_id, np.asarray(theta, float), singular)


def risk_table(config: ExperimentConfig, noise: np.ndarray | None = None) -> list[RiskEstimate]:
    """Risks of every estimator at every grid point, all on the same noise."""
    if noise is None:
        noise = draw_noise(config)
    out = []
    for theta in config.theta_grid:
        losses, singular = paired_losses(config, noise, theta)
        for name, loss in losses.items():
            mean, se = _mean_se(loss)
            out.append(RiskEstimate(mean, se, loss.size, name, theta, singular))
    return out


def dominance_report(
    config: ExperimentConfig,
    baseline_id: str,
    improved_id: str,
    bound: float,
    noise: np.ndarray | None = None,
) -> DominanceReport:
    """Paired estimate of ``Delta(theta) = R(improved) - R(baseline)`` on the grid.

    A grid point passes when ``Delta + 3 SE <= 0`` and ``Delta <= bound + 3 SE``.
    """
    if noise is None:
        noise = draw_noise(config)
    rows = []
    for theta in config.theta_grid:
        losses, _ = paired_losses(config, noise, theta, [baseline_id, improved_id])
        base, impr = losses[baseline_id], losses[improved_id]
        delta, se = _mean_se(impr - base)
        rows.append(
            DominanceRow(
                theta=theta,
                theta_norm=float(np.linalg.norm(theta)),
                delta=delta,
                std_error=se,
                bound=bound,
                baseline_risk=float(base.mean()),
                improved_risk=float(impr.mean()),
            )
        )
    return DominanceReport(baseline_id, improved_id, bound, tuple(rows), config.replicates)


def make_theta_grid(p: int, d: float, radii=None, n_random: int = 8, seed: int = 0) -> np.ndarray:
    """Points of the centred ball of radius ``d``.

    For every radius (default ``0, d/2, d``) the grid holds the point on the
    first coordinate axis plus ``n_random`` uniformly random directions; the
    origin appears once.
    """
    if radii is None:
        radii = (0.0, 0.5 * d, d)
    rng = derive_replicate_seed(seed, 0, GRID_TAG)
    points = []
    for r in radii:
        if r < 0 or r > d * (1 + 1e-12):
            raise DomainError(f"radius {r} outside [0, {d}]")
        if r == 0:
            points.append(np.zeros(p))
            continue
        axis = np.zeros(p)
        axis[0] = r
        points.append(axis)
        dirs = rng.standard_normal((n_random, p))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        points.extend(r * dirs)
    return np.array(points)
