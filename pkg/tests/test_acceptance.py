"""Acceptance gate: one test per criterion, printed as PASS lines.

The Monte Carlo criteria share a fixed design (n=600, p=50, t0=0.2,
alpha=0.05, 500 runs, 100000 quantile repetitions, master seed 0); the
per-delta experiments are computed once per session and reused.  Run with
``pytest -s tests/test_acceptance.py`` to see the PASS lines inline.
"""

import math

import numpy as np
import pytest

from covcp import (
    DataMatrix,
    build_kernel_grid,
    build_profile,
    build_profile_noncentered,
    kernel_sigma,
    kurtosis_hat,
    sequential_log_dets,
    sigma_nt_squared,
    simulate_min_quantile,
    substitution_gap,
)
from covcp.cli import RunConfig, run_experiment

N, P, T0, ALPHA, RUNS, MC_REPS, SEED = 600, 50, 0.2, 0.05, 500, 100_000, 0


def experiment(model, delta, innovation="gaussian"):
    return run_experiment(RunConfig(
        command="simulate", model=model, n=N, p=P, delta=delta, t_star=0.5,
        runs=RUNS, innovation=innovation, t0=T0, alpha=ALPHA,
        mc_reps=MC_REPS, seed=SEED,
    ))


@pytest.fixture(scope="module")
def model1():
    return {delta: experiment(1, delta) for delta in (1.0, 1.2, 1.5, 2.0)}


@pytest.fixture(scope="module")
def model2_uniform():
    return experiment(2, 2.0, innovation="uniform")


def report(criterion, detail):
    print(f"ACCEPTANCE {criterion}: PASS — {detail}")


def test_criterion_01_null_level(model1):
    rate = model1[1.0].rejection_rate
    assert 0.030 <= rate <= 0.080
    report("1 (null level)", f"rejection rate {rate:.3f} in [0.030, 0.080]")


def test_criterion_02_power_increases_with_delta(model1):
    rates = {d: model1[d].rejection_rate for d in (1.2, 1.5, 2.0)}
    assert rates[2.0] >= 0.95
    assert rates[1.2] < rates[1.5] <= rates[2.0]
    report("2 (power)",
           f"rates delta=1.2/1.5/2.0 = {rates[1.2]:.3f}/{rates[1.5]:.3f}/"
           f"{rates[2.0]:.3f}")


def test_criterion_03_estimator_accuracy(model1):
    strong = model1[2.0]
    assert 0.49 <= strong.tau_mean <= 0.51
    assert strong.tau_sd <= 0.02
    assert strong.tau_mse <= 0.001
    medium = model1[1.5]
    assert 0.47 <= medium.tau_mean <= 0.53
    assert medium.tau_sd <= 0.09
    assert medium.tau_mse <= 0.008
    report("3 (estimator accuracy)",
           f"delta=2: mean {strong.tau_mean:.4f} sd {strong.tau_sd:.4f} "
           f"mse {strong.tau_mse:.2e}; delta=1.5: mean {medium.tau_mean:.4f} "
           f"sd {medium.tau_sd:.4f} mse {medium.tau_mse:.2e}")


def test_criterion_04_estimator_under_rotation(model2_uniform):
    summary = model2_uniform
    assert 0.49 <= summary.tau_mean <= 0.51
    assert summary.tau_mse <= 0.001
    report("4 (rotated model estimator)",
           f"mean {summary.tau_mean:.4f} mse {summary.tau_mse:.2e}")


def test_criterion_05_exact_diagonal_identity():
    rng = np.random.default_rng(105)
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(20, 2000))
        p = int(rng.integers(1, max(2, min(n // 2 - 1, 250))))
        m = int(rng.integers(p + 1, n - p))  # m > p and n - m > p
        got = sigma_nt_squared(n, p, m)
        want = kernel_sigma(m / n, m / n, p / n)
        worst = max(worst, abs(got - want) / abs(got))
        assert abs(got - want) <= 1e-12 * abs(got)
    report("5 (diagonal identity)", f"worst relative gap {worst:.2e} <= 1e-12")


def test_criterion_06_affine_invariance():
    rng = np.random.default_rng(106)
    worst = 0.0
    for _ in range(50):
        n = int(rng.integers(60, 201))
        p = int(rng.integers(1, 11))
        y = rng.standard_normal((n, p))
        a = rng.standard_normal((p, p)) + 2.0 * np.eye(p)
        b = rng.standard_normal(p) * 3.0
        base = build_profile(DataMatrix(y), 0.2, 3.0)
        moved = build_profile(DataMatrix(y @ a.T + b), 0.2, 3.0)
        gap = np.abs(moved.two_log_lambda_cen - base.two_log_lambda_cen).max()
        worst = max(worst, gap)
        assert gap <= 1e-6
    report("6 (affine invariance)", f"worst per-entry gap {worst:.2e} <= 1e-6")


def test_criterion_07_concavity_bound():
    rng = np.random.default_rng(107)
    worst = -np.inf
    for _ in range(50):
        n = int(rng.integers(60, 201))
        p = int(rng.integers(1, 11))
        y = rng.standard_normal((n, p)) + rng.standard_normal(p)
        profile = build_profile_noncentered(DataMatrix(y), 0.2, 3.0)
        top = profile.two_log_lambda_cen.max()
        worst = max(worst, top)
        assert top <= 1e-8
    report("7 (concavity bound)", f"largest raw statistic {worst:.2e} <= 1e-8")


def test_criterion_08_oracle_equivalence():
    rng = np.random.default_rng(108)
    worst = 0.0
    for _ in range(50):
        n = int(rng.integers(60, 151))
        p = int(rng.integers(1, 13))
        y = rng.standard_normal((n, p)) * 2.0 + rng.standard_normal(p)
        data = DataMatrix(y)
        m_lo, m_hi = p + 2, n - p - 2
        seq = sequential_log_dets(data, m_lo, m_hi)

        def oracle(segment):
            centered = segment - segment.mean(axis=0)
            cov = centered.T @ centered / (len(segment) - 1)
            return float(np.log(np.linalg.eigvalsh(cov)).sum())

        for m, left, right in seq:
            worst = max(worst, abs(left - oracle(y[:m])),
                        abs(right - oracle(y[m:])))
            assert abs(left - oracle(y[:m])) <= 1e-8
            assert abs(right - oracle(y[m:])) <= 1e-8
        assert abs(seq.full - oracle(y)) <= 1e-8
    report("8 (oracle equivalence)", f"worst absolute gap {worst:.2e} <= 1e-8")


def test_criterion_09_kurtosis_sanity():
    gauss_hits = 0
    uniform_hits = 0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        est = kurtosis_hat(DataMatrix(rng.standard_normal((2000, 20))))
        gauss_hits += 2.7 <= est.kappa_hat <= 3.3
        rng = np.random.default_rng(10_000 + seed)
        x = math.sqrt(12.0) * (rng.random((2000, 20)) - 0.5)
        est = kurtosis_hat(DataMatrix(x))
        uniform_hits += 1.6 <= est.kappa_hat <= 2.0
    assert gauss_hits >= 95
    assert uniform_hits >= 95
    report("9 (kurtosis sanity)",
           f"gaussian {gauss_hits}/100, uniform {uniform_hits}/100 in band")


def test_criterion_10_quantile_sanity():
    kg = build_kernel_grid(21, 2, 0.49)  # single admissible split
    assert kg.size == 1
    est = simulate_min_quantile(kg, 0.05, 200_000, seed=10)
    target = -1.6449
    assert abs(est.q_alpha - target) <= 3.0 * est.std_error

    alphas = (0.01, 0.025, 0.05, 0.1, 0.25, 0.5)
    qs = [simulate_min_quantile(kg, a, 200_000, seed=10).q_alpha
          for a in alphas]
    assert all(x <= y for x, y in zip(qs, qs[1:]))
    report("10 (quantile sanity)",
           f"q_0.05 = {est.q_alpha:.4f} within 3 x {est.std_error:.4f} of "
           f"{target}; monotone over {len(alphas)} levels")


def test_criterion_11_substitution_diagnostic():
    gaps = [substitution_gap(n, p)
            for n, p in ((200, 25), (400, 50), (800, 100), (1600, 200))]
    assert all(a > b for a, b in zip(gaps, gaps[1:]))
    report("11 (substitution diagnostic)",
           "gaps " + " > ".join(f"{g:.2e}" for g in gaps))
