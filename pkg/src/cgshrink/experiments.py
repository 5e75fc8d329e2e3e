"""Experiment configuration files and the dominance runs they describe.

A config is a TOML document with the tables ``[experiment]``,
``[compact_set]``, ``[model]`` and optionally ``[grid]``.  The experiment
``kind`` selects how the shrinkage constant and the guaranteed bound are
derived:

``theorem_2_1``
    conditionally Gaussian noise ``sigma^2 I_p`` with ``sigma^2`` uniform on
    ``[sigma2_low, sigma2_high]``; ``c = (p - 1) lambda_star gamma_p``.
``ar1``
    AR(1) noise for every ``a`` in ``a_values``;
    ``c = (p - 1/(1 - alpha)^2) gamma_p``.
``theorem_3_1``
    the OU-Levy regression; ``c = rho1^2 (p - 1) gamma_p / n``.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .constants import CompactSetSpec, gamma_p_quadrature
from .estimators import EstimatorId
from .gaussian_models import (
    Ar1Spec,
    FixedCovariance,
    ScaledIdentity,
    ar1_covariance,
    ar1_lambda_max_bound,
    ar1_shrink_constant,
)
from .ou_levy import OuLevyModel, ou_compact_spec, ou_shrink_constant
from .risk_lab import DominanceReport, EstimatorSpec, ExperimentConfig, dominance_report, make_theta_grid

__all__ = ["ConfigError", "Case", "CaseResult", "build_cases", "load_config", "run_cases"]

KINDS = ("theorem_2_1", "ar1", "theorem_3_1")
BASELINE = "mle"
IMPROVED = "shrink"


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the offending field."""


def load_config(path: str | Path) -> dict[str, Any]:
    path = Path(path)
    try:
        with path.open("rb") as fh:
            return tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"TOML syntax: {exc}") from None
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None


class _Fields:
    """Typed accessors over one config table that report ``[table].key`` on failure."""

    def __init__(self, raw: dict, table: str, required: bool = True):
        value = raw.get(table)
        if value is None:
            if required:
                raise ConfigError(f"missing table [{table}]")
            value = {}
        if not isinstance(value, dict):
            raise ConfigError(f"[{table}] must be a table")
        self.table, self.data, self.seen = table, value, set()

    def _fail(self, key: str, msg: str):
        raise ConfigError(f"[{self.table}].{key}: {msg}")

    def get(self, key: str, default: Any = ...) -> Any:
        self.seen.add(key)
        if key not in self.data:
            if default is ...:
                self._fail(key, "required field is missing")
            return default
        return self.data[key]

    def integer(self, key: str, default: Any = ..., minimum: int | None = None) -> int:
        value = self.get(key, default)
        if isinstance(value, bool) or not isinstance(value, int):
            self._fail(key, f"expected an integer, got {value!r}")
        if minimum is not None and value < minimum:
            self._fail(key, f"must be >= {minimum}, got {value}")
        return value

    def real(self, key: str, default: Any = ..., check=None, what: str = "") -> float:
        value = self.get(key, default)
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self._fail(key, f"expected a number, got {value!r}")
        value = float(value)
        if not math.isfinite(value) or (check is not None and not check(value)):
            self._fail(key, f"{what or 'invalid value'}, got {value}")
        return value

    def reals(self, key: str, default: Any = ...) -> list[float]:
        value = self.get(key, default)
        if not isinstance(value, list) or not value:
            self._fail(key, f"expected a non-empty array of numbers, got {value!r}")
        if any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in value):
            self._fail(key, f"expected numbers only, got {value!r}")
        return [float(v) for v in value]

    def boolean(self, key: str, default: Any = ...) -> bool:
        value = self.get(key, default)
        if not isinstance(value, bool):
            self._fail(key, f"expected true or false, got {value!r}")
        return value

    def text(self, key: str, default: Any = ..., choices=None) -> str:
        value = self.get(key, default)
        if not isinstance(value, str):
            self._fail(key, f"expected a string, got {value!r}")
        if choices is not None and value not in choices:
            self._fail(key, f"must be one of {list(choices)}, got {value!r}")
        return value

    def finish(self) -> None:
        unknown = sorted(set(self.data) - self.seen)
        if unknown:
            raise ConfigError(f"[{self.table}]: unknown field(s) {', '.join(unknown)}")


@dataclass(frozen=True)
class Case:
    """One dominance check: an experiment, its constant ``c`` and bound."""

    label: str
    config: ExperimentConfig
    gamma_p: float
    c: float
    bound: float


@dataclass(frozen=True)
class CaseResult:
    case: Case
    report: DominanceReport


def _positive(v: float) -> bool:
    return v > 0


def build_cases(raw: dict[str, Any], workers: int | None = None) -> tuple[list[Case], dict[str, Any]]:
    """Validate a parsed config and return the cases plus the fully resolved config.

    Raises:
        ConfigError: on any schema or hypothesis violation.
    """
    unknown = sorted(set(raw) - {"experiment", "compact_set", "model", "grid"})
    if unknown:
        raise ConfigError(f"unknown table(s) {', '.join(unknown)}")
    exp = _Fields(raw, "experiment")
    kind = exp.text("kind", choices=KINDS)
    replicates = exp.integer("replicates", 100_000 if kind != "theorem_3_1" else 10_000, minimum=100)
    seed = exp.integer("master_seed", minimum=0)
    block = exp.integer("block_size", 1000, minimum=1)
    positive_part = exp.boolean("positive_part", False)
    cfg_workers = exp.integer("workers", 1, minimum=1)
    exp.finish()
    workers = cfg_workers if workers is None else workers

    cs = _Fields(raw, "compact_set")
    d = cs.real("d", check=lambda v: v >= 0, what="must be >= 0")
    model = _Fields(raw, "model")
    p = model.integer("p", minimum=2)

    resolved: dict[str, Any] = {
        "experiment": {
            "kind": kind,
            "replicates": replicates,
            "master_seed": seed,
            "block_size": block,
            "positive_part": positive_part,
        },
    }
    bases: list[tuple[str, Any, CompactSetSpec, float]] = []  # label, model, spec, c

    if kind == "theorem_2_1":
        low = model.real("sigma2_low", 1.0, _positive, "must be > 0")
        high = model.real("sigma2_high", low, lambda v: v >= low, "must be >= sigma2_low")
        model.finish()
        lambda_star = cs.real("lambda_star", low, _positive, "must be > 0")
        a_star = cs.real("a_star", high, _positive, "must be > 0")
        cs.finish()
        spec = CompactSetSpec(d=d, lambda_star=lambda_star, a_star=a_star)
        gamma = gamma_p_quadrature(p, spec).value
        c = (p - 1) * lambda_star * gamma
        bases.append((f"sigma2=[{low:g},{high:g}]", ScaledIdentity(p, low, high), spec, c))
        resolved["model"] = {"p": p, "sigma2_low": low, "sigma2_high": high}
    elif kind == "ar1":
        alpha = model.real("alpha", check=lambda v: 0 < v < 1, what="must lie in (0, 1)")
        a_values = model.reals("a_values")
        model.finish()
        envelope = ar1_lambda_max_bound(alpha)
        if p <= envelope:
            raise ConfigError(f"[model].p: must exceed 1/(1-alpha)^2 = {envelope:g}, got {p}")
        for a in a_values:
            if abs(a) > alpha:
                raise ConfigError(f"[model].a_values: |{a}| exceeds alpha = {alpha}")
        a_star = cs.real("a_star", envelope, _positive, "must be > 0")
        cs.finish()
        spec = CompactSetSpec(d=d, lambda_star=1.0, a_star=a_star)
        gamma = gamma_p_quadrature(p, spec).value
        for a in a_values:
            c = ar1_shrink_constant(Ar1Spec(a, alpha, p), gamma).c
            source = FixedCovariance(ar1_covariance(a, p), a_star=a_star)
            bases.append((f"a={a:g}", source, spec, c))
        resolved["model"] = {"p": p, "alpha": alpha, "a_values": a_values}
    else:
        ou = OuLevyModel(
            a=model.real("a", 0.0, lambda v: v <= 0, "must be <= 0"),
            rho1=model.real("rho1", 1.0, _positive, "must be > 0"),
            rho2=model.real("rho2", 0.0, lambda v: v >= 0, "must be >= 0"),
            lam=model.real("lam", 1.0, _positive, "must be > 0"),
            n=model.integer("n", minimum=2),
            p=p,
            grid_steps_per_unit=model.integer("grid_steps_per_unit", 200, minimum=1),
        )
        model.finish()
        defaults = ou_compact_spec(ou, d)
        lambda_star = cs.real("lambda_star", defaults.lambda_star, _positive, "must be > 0")
        a_star = cs.real("a_star", defaults.a_star, _positive, "must be > 0")
        cs.finish()
        spec = CompactSetSpec(d=d, lambda_star=lambda_star, a_star=a_star)
        gamma = gamma_p_quadrature(p, spec).value
        # lambda_star enters c through rho1^2 / n by default
        c = ou_shrink_constant(ou, gamma).c * (lambda_star / defaults.lambda_star)
        bases.append((f"n={ou.n}", ou, spec, c))
        resolved["model"] = {
            "p": p, "a": ou.a, "rho1": ou.rho1, "rho2": ou.rho2, "lam": ou.lam,
            "n": ou.n, "grid_steps_per_unit": ou.grid_steps_per_unit,
        }
    resolved["compact_set"] = {"d": spec.d, "lambda_star": spec.lambda_star, "a_star": spec.a_star}

    grid = _Fields(raw, "grid", required=False)
    radii = grid.reals("radii", [0.0, 0.5 * d, d])
    n_random = grid.integer("random_directions", 8, minimum=0)
    grid_seed = grid.integer("seed", seed, minimum=0)
    grid.finish()
    for r in radii:
        if r < 0 or r > d:
            raise ConfigError(f"[grid].radii: {r} lies outside [0, d = {d}]")
    resolved["grid"] = {"radii": radii, "random_directions": n_random, "seed": grid_seed}
    thetas = make_theta_grid(p, d, radii, n_random, grid_seed)

    improved_kind = EstimatorId.SHRINK_POSITIVE_PART if positive_part else EstimatorId.SHRINK
    cases = []
    for label, noise_model, spec, c in bases:
        estimators = (EstimatorSpec(BASELINE, EstimatorId.MLE), EstimatorSpec(IMPROVED, improved_kind, c))
        config = ExperimentConfig(
            model=noise_model,
            estimators=estimators,
            theta_grid=thetas,
            replicates=replicates,
            master_seed=seed,
            spec=spec,
            block_size=block,
            workers=workers,
        )
        cases.append(Case(label, config, gamma, c, -(c * c)))
    return cases, resolved


def run_cases(cases: list[Case]) -> list[CaseResult]:
    return [CaseResult(case, dominance_report(case.config, BASELINE, IMPROVED, case.bound)) for case in cases]


def theta_to_text(theta: np.ndarray) -> str:
    return " ".join(repr(float(v)) for v in theta)
