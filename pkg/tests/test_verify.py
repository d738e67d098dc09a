import math

import numpy as np
import pytest

from rrpursuit.errors import BudgetExceeded, InvalidParam, PremiseUnmet
from rrpursuit.lincore import least_squares_on_support, normalize_columns, embed
from rrpursuit.problems import SparseSignal, gen_gaussian_matrix, gen_identity_hadamard, gen_signal
from rrpursuit.pursuit import run_pursuit
from rrpursuit.rng import make_rng
from rrpursuit.verify import (
    RIP_VIOLATED, beta_law_conformance, error_floor_bound, guarantee_thresholds,
    instance_guarantees, isometry_spot_check, ric_bruteforce, verify_sufficient_recovery,
)


def test_ric_orthonormal():
    q, _ = np.linalg.qr(make_rng(1).standard_normal((6, 6)))
    x = normalize_columns(q)
    assert ric_bruteforce(x, 1).delta_k == pytest.approx(0, abs=1e-12)
    assert ric_bruteforce(normalize_columns(np.eye(5)), 2).delta_k == 0.0


def test_ric_identity_hadamard_pair():
    x = gen_identity_hadamard(4)
    est = ric_bruteforce(x, 2)
    assert est.delta_k == pytest.approx(0.5, abs=1e-12)
    assert est.subsets_checked == math.comb(8, 2)


def test_ric_against_pairwise_oracle():
    # for k = 2 the Gram eigenvalues are 1 +- |<x_i, x_j>|
    x = gen_gaussian_matrix(8, 12, seed=6)
    g = np.abs(x.data.T @ x.data)
    np.fill_diagonal(g, 0)
    assert ric_bruteforce(x, 2).delta_k == pytest.approx(g.max(), abs=1e-12)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_ric_monotone(seed):
    x = gen_gaussian_matrix(8, 12, seed=seed)
    d = [ric_bruteforce(x, k).delta_k for k in (1, 2, 3)]
    assert d[0] <= d[1] <= d[2]


def test_ric_budget_and_order():
    x = gen_gaussian_matrix(10, 40, seed=0)
    with pytest.raises(BudgetExceeded):
        ric_bruteforce(x, 5, budget=1000)
    with pytest.raises(InvalidParam):
        ric_bruteforce(x, 11)


def test_guarantee_degenerate_case():
    r = guarantee_thresholds(0.0, 1.0, 1.0, 1.0, 1.0, 0.0, 1)
    assert r.eps_sig == pytest.approx(0.25)
    assert r.eps_x == pytest.approx(0.5) and r.eps_rrt == pytest.approx(0.5)
    assert r.eps_exact == pytest.approx(0.5)
    assert not r.flags


@pytest.mark.parametrize("glb,bound", [(0.4, 1.75), (0.8, 1.125)])
def test_simple_excess_bound(glb, bound):
    r = guarantee_thresholds(0.1, 1.0, 1.0, 0.9, glb, 0.1, 2)
    assert r.snr_excess_rrt_simple == pytest.approx(bound)


def test_signal_excess_bound_small_ric():
    r = guarantee_thresholds(1e-12, 1.0, 1.0, 0.5, 0.5, 1e-12, 2)
    assert r.snr_excess_sig_bound == pytest.approx(2.0, abs=1e-9)


def test_thresholds_decrease_with_ric():
    prev = None
    for d in np.linspace(0.0, 0.5, 11):
        r = guarantee_thresholds(d, 1.0, 2.0, 0.6, 0.5, d, 2)
        cur = (r.eps_sig, r.eps_x, r.eps_rrt, r.eps_exact)
        if prev is not None:
            assert all(c < p for c, p in zip(cur, prev))
        prev = cur


def test_rip_violated_flag():
    r = guarantee_thresholds(0.2, 1.0, 1.0, 0.5, 0.5, 0.6, 3)  # 0.6 >= 1/2
    assert RIP_VIOLATED in r.flags
    assert r.eps_exact == 0.0 and r.snr_excess_rrt_bound is None
    assert r.rrt_threshold == 0.0


def test_guarantee_invalid_inputs():
    with pytest.raises(InvalidParam):
        guarantee_thresholds(1.0, 1.0, 1.0, 0.5, 0.5, 0.1, 1)
    with pytest.raises(InvalidParam):
        guarantee_thresholds(0.1, 2.0, 1.0, 0.5, 0.5, 0.1, 1)
    with pytest.raises(InvalidParam):
        guarantee_thresholds(0.1, 1.0, 1.0, 0.0, 0.5, 0.1, 1)


@pytest.mark.parametrize("k", [1, 10])
def test_beta_law(k):
    (row,) = beta_law_conformance(20, [k], 10_000, seed=(31, k))
    assert row["ks_statistic"] < 1.63 / math.sqrt(10_000)
    assert row["expected_mean"] == pytest.approx((20 - k) / (20 - k + 1))
    assert abs(row["sample_mean"] - row["expected_mean"]) <= 3 * row["mean_se"]


def test_beta_law_invalid():
    with pytest.raises(InvalidParam):
        beta_law_conformance(20, [20], 10_000, seed=0)
    with pytest.raises(InvalidParam):
        beta_law_conformance(20, [1], 10, seed=0)


@pytest.mark.parametrize("seed", [3, 4])
def test_isometry_spot_checks(seed):
    x = gen_gaussian_matrix(8, 12, seed=seed)
    r = isometry_spot_check(x, 3, draws=300, seed=seed)
    tol = 1e-10
    assert r["cross_violation"] <= tol
    assert r["lower_violation"] <= tol and r["upper_violation"] <= tol


def test_error_floor_on_missed_supports():
    x = gen_identity_hadamard(16)
    k0, eps2 = 2, 0.2
    d_k0, d_2k0 = ric_bruteforce(x, k0).delta_k, ric_bruteforce(x, 2 * k0).delta_k
    misses = 0
    for t in range(400):
        rng = make_rng(41, t)
        sig = gen_signal(32, k0, "uniform", seed=rng)
        g = rng.standard_normal(16)
        y = x.data @ sig.beta + eps2 * g / np.linalg.norm(g)
        bound = error_floor_bound(d_2k0, d_k0, sig.beta_min, eps2)
        assert bound > 0
        trace = run_pursuit("OMP", x, y, kmax=k0)
        supports = [trace.supports[k0]]
        # adversarial wrong supports exercise the same inequality
        supports += [tuple(rng.choice(32, size=k0, replace=False)) for _ in range(5)]
        for s in supports:
            if set(s) == set(sig.support):
                continue
            misses += 1
            est = embed(least_squares_on_support(x, s, y), s, 32)
            assert np.linalg.norm(sig.beta - est) >= bound - 1e-12
    assert misses > 100


def _ih_instance():
    x = gen_identity_hadamard(16)
    sig = gen_signal(32, 2, "uniform", seed=7)
    return x, sig


def test_noiseless_verify_passes():
    x, sig = _ih_instance()
    out = verify_sufficient_recovery(x, sig, 0.0, trials=20, seed=1, gamma_runs=200)
    assert out["passed"] and out["checked"]["TF"] and out["checked"]["RRT"]
    assert out["support_errors"] == {"TF": 0, "RRT": 0}


def test_verify_below_threshold():
    x, sig = _ih_instance()
    report = instance_guarantees(x, sig, gamma_runs=500, seed=2)
    eps2 = 0.9 * report.threshold
    out = verify_sufficient_recovery(x, sig, eps2, trials=500, seed=3, report=report)
    assert out["passed"] and out["support_errors"] == {"TF": 0, "RRT": 0}


def test_verify_far_above_threshold_is_informative():
    x, sig = _ih_instance()
    report = instance_guarantees(x, sig, gamma_runs=200, seed=2)
    out = verify_sufficient_recovery(x, sig, 10 * report.threshold + 1.0, trials=50, seed=4,
                                     report=report)
    assert out["checked"] == {"TF": False, "RRT": False}
    assert out["passed"] and not out["counterexamples"]


def test_verify_premise_unmet():
    x = gen_identity_hadamard(4)
    sig = SparseSignal(np.array([1.0, 1.0, 1.0, 0, 0, 0, 0, 0]))
    with pytest.raises(PremiseUnmet):
        verify_sufficient_recovery(x, sig, 0.0, trials=5, seed=0, gamma_runs=50)


def test_instance_guarantees_omp_only():
    x, sig = _ih_instance()
    with pytest.raises(InvalidParam):
        instance_guarantees(x, sig, algorithm="OLS")
