"""Acceptance criteria, each checked at its stated tolerance and runtime budget.

Every criterion prints one ``PASS`` or ``FAIL`` line.  Run under pytest the
lines are collected into an "acceptance criteria" summary section; run as a
script (``python tests/test_acceptance.py``) they are printed as they finish.
"""

import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest
from scipy import integrate

from cgshrink.cli import main as cli_main
from cgshrink.constants import CompactSetSpec, eq6_constant, gamma_p_closed, gamma_p_quadrature, risk_at_zero
from cgshrink.estimators import EstimatorId
from cgshrink.experiments import build_cases, load_config, run_cases
from cgshrink.gaussian_models import ScaledIdentity, ar1_covariance
from cgshrink.ou_levy import (
    OuLevyModel,
    _jump_loadings,
    basis_matrix,
    conditional_covariance,
    simulate_jumps,
    simulate_zeta_conditional,
)
from cgshrink.risk_lab import EstimatorSpec, ExperimentConfig, derive_replicate_seed, estimate_risk

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
SEED = 20240601

# model of the conditional covariance checks
OU_CHECK = OuLevyModel(a=-0.5, rho1=1.0, rho2=0.5, lam=1.0, n=20, p=3)


class Timer:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start


def line(number, ok, detail):
    return f"criterion {number}: {'PASS' if ok else 'FAIL'} | {detail}"


def dominance_verdict(config_name, workers=1):
    cases, _ = build_cases(load_config(CONFIGS / f"{config_name}.toml"), workers)
    results = run_cases(cases)
    worst = max(r.delta + 3 * r.std_error for res in results for r in res.report.rows)
    bound_slack = min(res.case.bound + 3 * r.std_error - r.delta for res in results for r in res.report.rows)
    return all(res.report.passed for res in results), worst, bound_slack, results


# 1


def criterion_1():
    with Timer() as t:
        worst = 0.0
        for p in range(2, 11):
            for d in (0.5, 1.0, 2.0, 5.0):
                for a_star in (0.5, 1.0, 4.0):
                    spec = CompactSetSpec(d=d, a_star=a_star)
                    diff = abs(gamma_p_closed(p, spec).value - gamma_p_quadrature(p, spec).value)
                    worst = max(worst, diff)
    ok = worst <= 1e-8 and t.elapsed < 5
    return ok, f"max |closed - quadrature| = {worst:.2e} over 108 points, {t.elapsed:.2f} s (limit 5 s)"


# 2


def criterion_2():
    with Timer() as t:
        parts = []
        ok = True
        for p in (2, 5, 10):
            c = eq6_constant(p).c
            cfg = ExperimentConfig(
                ScaledIdentity(p), (EstimatorSpec("shrink", EstimatorId.SHRINK, c),), np.zeros((1, p)),
                replicates=100_000, master_seed=SEED + p,
            )
            est = estimate_risk(cfg, "shrink", np.zeros(p))
            r = risk_at_zero(p)
            z = (est.mean - r) / est.std_error
            ok &= abs(z) <= 3
            parts.append(f"p={p}: {est.mean:.4f} vs r_p={r:.4f} ({z:+.2f} SE)")
        exact = abs(risk_at_zero(2) - (2 - math.pi / 2)) < 1e-12 and abs(risk_at_zero(3) - (3 - 8 / math.pi)) < 1e-12
        far = abs(risk_at_zero(10**6) - 0.5)
        ok &= exact and far <= 1e-3
    ok &= t.elapsed < 30
    parts.append(f"|r_1e6 - 0.5| = {far:.2e}, {t.elapsed:.1f} s (limit 30 s)")
    return ok, "; ".join(parts)


# 3


def criterion_3():
    with Timer() as t:
        parts, ok = [], True
        for p in (2, 5, 10):
            theta = np.full(p, 0.7)
            cfg = ExperimentConfig(ScaledIdentity(p), (EstimatorSpec("mle", EstimatorId.MLE),), theta[None, :],
                                   replicates=100_000, master_seed=SEED + 10 + p)
            est = estimate_risk(cfg, "mle", theta)
            z = (est.mean - p) / est.std_error
            ok &= abs(z) <= 3
            parts.append(f"MLE p={p}: {z:+.2f} SE")
        for p in (3, 5, 10):
            cfg = ExperimentConfig(ScaledIdentity(p), (EstimatorSpec("js", EstimatorId.JAMES_STEIN),),
                                   np.zeros((1, p)), replicates=100_000, master_seed=SEED + 20 + p)
            est = estimate_risk(cfg, "js", np.zeros(p))
            z = (est.mean - 2.0) / est.std_error
            ok &= abs(z) <= 3
            parts.append(f"JS p={p}: {est.mean:.4f} ({z:+.2f} SE)")
    ok &= t.elapsed < 30
    return ok, "; ".join(parts) + f"; {t.elapsed:.1f} s (limit 30 s)"


# 4


def criterion_4():
    with Timer() as t:
        parts, ok = [], True
        for name, p in (("thm21_p2", 2), ("thm21_p5", 5)):
            passed, worst, slack, results = dominance_verdict(name)
            case = results[0].case
            expected = -(((p - 1) * gamma_p_quadrature(p, CompactSetSpec(d=2.0)).value) ** 2)
            ok &= passed and math.isclose(case.bound, expected, rel_tol=1e-12)
            ok &= results[0].report.replicates == 100_000 and len(results[0].report.rows) == 19
            parts.append(f"p={p}: bound {case.bound:.4f}, max(Delta+3SE) = {worst:.4f}, min bound slack {slack:.4f}")
    ok &= t.elapsed < 120
    return ok, "; ".join(parts) + f"; {t.elapsed:.1f} s (limit 120 s)"


# 5


def criterion_5():
    with Timer() as t:
        ok = True
        worst_trace, worst_lmax = 0.0, 0.0
        for a in (-0.5, 0.0, 0.5):
            cov = ar1_covariance(a, 5)
            worst_trace = max(worst_trace, abs(np.trace(cov) - 5 / (1 - a * a)) / (5 / (1 - a * a)))
            worst_lmax = max(worst_lmax, np.linalg.eigvalsh(cov)[-1])
        ok &= worst_trace <= 1e-12 and worst_lmax <= 4.0
        passed, worst, _, results = dominance_verdict("ar1_p5_alpha05")
        c_ok = all(math.isclose(res.case.c, res.case.gamma_p, rel_tol=1e-14) for res in results)
        ok &= passed and c_ok and len(results) == 3
    ok &= t.elapsed < 120
    return ok, (
        f"trace rel err {worst_trace:.1e}, max lambda_max {worst_lmax:.4f} <= 4, "
        f"c = (5 - 4) gamma_5 = {results[0].case.c:.4f}, max(Delta+3SE) = {worst:.4f}; {t.elapsed:.1f} s (limit 120 s)"
    )


# 6


def _loading_gram(model):
    def outer(s):
        psi = _jump_loadings(model, np.array([s]))[0]
        return np.outer(psi, psi).ravel()

    total = sum(integrate.quad_vec(outer, k, k + 1, epsabs=1e-13, epsrel=1e-12)[0] for k in range(model.n))
    return total.reshape(model.p, model.p)


def criterion_6():
    with Timer() as t:
        m = OU_CHECK
        jumps = simulate_jumps(m, derive_replicate_seed(SEED, 0, 6))
        v = conditional_covariance(m, jumps).v
        total, block = 100_000, 5_000
        acc = np.zeros((m.p, m.p))
        for b in range(total // block):
            zeta = simulate_zeta_conditional(m, jumps.times, derive_replicate_seed(SEED, b + 1, 6), block)
            acc += zeta.T @ zeta
        emp = acc / total
        rel = np.linalg.norm(emp - v) / np.linalg.norm(v)

        # a = 0: V_n = rho1^2 I + rho2^2/n sum_l phi(T_l) phi(T_l)'
        m0 = OuLevyModel(a=0.0, rho1=1.0, rho2=0.5, lam=1.0, n=20, p=3)
        phi = basis_matrix(jumps.times, 3)
        exact0 = np.eye(3) + 0.25 / 20 * phi.T @ phi
        err0 = np.abs(conditional_covariance(m0, jumps).v - exact0).max()

        # rho2 = 0: V_n = rho1^2/n int_0^n psi psi' with psi the jump-free loading
        m1 = OuLevyModel(a=-0.5, rho1=1.0, rho2=0.0, lam=1.0, n=20, p=3)
        exact1 = _loading_gram(m1) / m1.n
        err1 = np.abs(conditional_covariance(m1, jumps).v - exact1).max()
    ok = rel <= 0.03 and err0 <= 1e-10 and err1 <= 1e-10 and t.elapsed < 300
    return ok, (
        f"{len(jumps)} jumps, Frobenius rel err {100 * rel:.2f}% at 1e5 replicates (limit 3%); "
        f"corner a=0 max err {err0:.1e}, corner rho2=0 max err {err1:.1e}; {t.elapsed:.1f} s (limit 300 s)"
    )


# 7


def criterion_7():
    with Timer() as t:
        m = OU_CHECK
        lmin = np.empty(1000)
        lmax = np.empty(1000)
        for i in range(1000):
            jumps = simulate_jumps(m, derive_replicate_seed(SEED, i, 7))
            eig = conditional_covariance(m, jumps).eigenvalues
            lmin[i], lmax[i] = eig[0], eig[-1]
    a1_ok = bool(np.all(lmin >= m.rho1**2 - 1e-6))
    mean, se = lmax.mean(), lmax.std(ddof=1) / math.sqrt(lmax.size)
    bound = 5 * m.p * m.rho_star
    a2_ok = mean <= bound + 3 * se
    ok = a1_ok and a2_ok and t.elapsed < 300
    return ok, (
        f"Lemma 6.1 {'holds' if a1_ok else 'VIOLATED'}: min lambda_min = {lmin.min():.4f}, "
        f"max lambda_min = {lmin.max():.4f} vs rho1^2 - 1e-6 = {m.rho1**2 - 1e-6:.6f} "
        f"({int((lmin < m.rho1**2 - 1e-6).sum())}/1000 below); "
        f"Lemma 6.2 {'holds' if a2_ok else 'VIOLATED'}: E lambda_max = {mean:.4f} +- {se:.4f} <= {bound:.2f}; "
        f"{t.elapsed:.1f} s (limit 300 s)"
    )


# 8


def criterion_8():
    with Timer() as t:
        passed, worst, slack, results = dominance_verdict("thm31_ou")
        case = results[0].case
        cfg = case.config
        ok = passed and cfg.replicates == 10_000 and cfg.model.n == 50 and cfg.model.p == 5
    ok &= t.elapsed < 600
    return ok, (
        f"c = {case.c:.5f}, bound {case.bound:.2e}, max(Delta+3SE) = {worst:.5f}, "
        f"min bound slack {slack:.5f}; {t.elapsed:.1f} s (limit 600 s)"
    )


# 9

DETERMINISM_CONFIGS = ("thm21_p2", "thm21_p5", "thm21_scaled_p5", "ar1_p5_alpha05", "thm31_ou")


def criterion_9(tmp_dir: Path):
    with Timer() as t:
        mismatched = []
        for name in DETERMINISM_CONFIGS:
            outputs = []
            for workers in (1, 8):
                out = tmp_dir / f"{name}_w{workers}"
                code = cli_main(["dominance", str(CONFIGS / f"{name}.toml"), "--workers", str(workers), "--output", str(out)])
                outputs.append((code, (out / f"{name}_report.csv").read_bytes()))
            if outputs[0] != outputs[1]:
                mismatched.append(name)
    ok = not mismatched
    detail = "bit-identical" if ok else f"differ: {', '.join(mismatched)}"
    return ok, f"{len(DETERMINISM_CONFIGS)} CLI runs at 1 and 8 workers, CSV {detail}; {t.elapsed:.1f} s"


CRITERIA = {1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5,
            6: criterion_6, 7: criterion_7, 8: criterion_8}


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, acceptance_log):
    ok, detail = CRITERIA[number]()
    acceptance_log[number] = line(number, ok, detail)
    print(acceptance_log[number])
    assert ok, acceptance_log[number]


def test_criterion_9_determinism(tmp_path, acceptance_log):
    ok, detail = criterion_9(tmp_path)
    acceptance_log[9] = line(9, ok, detail)
    print(acceptance_log[9])
    assert ok, acceptance_log[9]


if __name__ == "__main__":
    import tempfile

    failed = 0
    for number, fn in sorted(CRITERIA.items()):
        ok, detail = fn()
        failed += not ok
        print(line(number, ok, detail), flush=True)
    with tempfile.TemporaryDirectory() as tmp:
        ok, detail = criterion_9(Path(tmp))
        failed += not ok
        print(line(9, ok, detail), flush=True)
    sys.exit(1 if failed else 0)
