import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rrpursuit.errors import AllColumnsDependent
from rrpursuit.lincore import SensingMatrix, empty_state, normalize_columns, state_for_support
from rrpursuit.problems import add_noise_at_snr, gen_gaussian_matrix, gen_identity_hadamard, gen_signal
from rrpursuit.pursuit import (Algorithm, PursuitTrace, Termination, default_kmax, run_pursuit,
                               select_next_ols, select_next_omp)


def _omp_reference(x, y, kmax):
    """Non-incremental OMP: full least squares after every selection."""
    support, norms = [], [np.linalg.norm(y)]
    r = y.copy()
    for _ in range(kmax):
        c = np.abs(x.T @ r)
        c[support] = -1
        support.append(int(np.argmax(c)))
        a = x[:, support]
        r = y - a @ np.linalg.lstsq(a, y, rcond=None)[0]
        norms.append(np.linalg.norm(r))
    return support, np.array(norms)


def _ols_reference(x, y, kmax):
    support, norms = [], [np.linalg.norm(y)]
    for _ in range(kmax):
        best, best_norm = None, np.inf
        for j in range(x.shape[1]):
            if j in support:
                continue
            a = x[:, support + [j]]
            rn = np.linalg.norm(y - a @ np.linalg.lstsq(a, y, rcond=None)[0])
            if rn < best_norm - 1e-14:
                best, best_norm = j, rn
        support.append(best)
        norms.append(best_norm)
    return support, np.array(norms)


@pytest.mark.parametrize("n,k", [(32, 16), (5, 3), (1, 1), (2, 1)])
def test_default_kmax(n, k):
    assert default_kmax(n) == k


def test_select_next_omp_examples():
    x = SensingMatrix(np.eye(4))
    assert select_next_omp(x, empty_state(np.array([0.0, 3.0, -5.0, 1.0]))) == 2
    x = SensingMatrix(np.eye(8))
    y = np.zeros(8)
    y[7] = 0.3
    assert select_next_omp(x, empty_state(y)) == 7


def test_select_next_omp_ties_go_to_smallest_index():
    x = SensingMatrix(np.eye(3))
    assert select_next_omp(x, empty_state(np.array([1.0, -1.0, 1.0]))) == 0


def test_select_next_matches_bruteforce():
    x = gen_gaussian_matrix(8, 16, 7)
    y = np.random.default_rng(7).standard_normal(8)
    st_ = state_for_support(x, [3, 11], y)
    r = st_.residual
    corr = np.abs(x.data.T @ r)
    corr[[3, 11]] = -1
    assert select_next_omp(x, st_) == int(np.argmax(corr))
    trial = []
    for j in range(16):
        if j in (3, 11):
            trial.append(np.inf)
            continue
        a = x.data[:, [3, 11, j]]
        trial.append(np.linalg.norm(y - a @ np.linalg.lstsq(a, y, rcond=None)[0]))
    assert select_next_ols(x, st_, y) == int(np.argmin(trial))


def test_first_step_omp_equals_ols():
    for s in range(20):
        x = gen_gaussian_matrix(10, 25, s)
        y = np.random.default_rng(s).standard_normal(10)
        assert select_next_omp(x, empty_state(y)) == select_next_ols(x, empty_state(y), y)


def test_ols_exact_column():
    x = gen_gaussian_matrix(6, 9, 3)
    y = 2.0 * x.column(3)
    assert select_next_ols(x, empty_state(y), y) == 3
    tr = run_pursuit("OLS", x, y)
    assert tr.supports[1] == (3,) and tr.termination is Termination.RESIDUAL_ZERO


def test_ols_all_dependent():
    x = SensingMatrix(np.eye(2))
    st_ = state_for_support(x, [0, 1], np.array([1.0, 1.0]))
    with pytest.raises(AllColumnsDependent):
        select_next_ols(x, st_)


@pytest.mark.parametrize("alg,ref", [("OMP", _omp_reference), ("OLS", _ols_reference)])
def test_run_pursuit_matches_reference(alg, ref):
    for s in range(10):
        x = gen_gaussian_matrix(12, 24, s)
        y = np.random.default_rng(100 + s).standard_normal(12)
        tr = run_pursuit(alg, x, y)
        sup, norms = ref(x.data, y, default_kmax(12))
        assert list(tr.supports[-1]) == sup
        assert np.allclose(tr.residual_norms, norms, atol=1e-10)
        assert np.allclose(tr.rr, norms[1:] / norms[:-1], atol=1e-10)


def test_fig1_selection_order():
    x = gen_identity_hadamard(32)
    sig = gen_signal(64, 3, "explicit", support=[0, 1, 2], values=[1.0, 1.0, 1.0])
    y = add_noise_at_snr(x, sig, 30, seed=1).y
    tr = run_pursuit("OMP", x, y)
    assert sorted(tr.supports[3]) == [0, 1, 2]
    assert int(np.argmin(tr.rr)) + 1 == 3


def test_single_column_terminates_residual_zero():
    x = gen_gaussian_matrix(10, 20, 2)
    tr = run_pursuit("OMP", x, x.column(5))
    assert tr.termination is Termination.RESIDUAL_ZERO
    assert tr.k_reached == 1 and tr.supports[1] == (5,)


def test_noiseless_two_sparse_recovered():
    x = gen_gaussian_matrix(16, 32, 11)
    sig = gen_signal(32, 2, "explicit", support=[4, 20], values=[1.0, -1.5])
    y = x.data @ sig.beta
    tr = run_pursuit("OMP", x, y)
    assert set(tr.supports[2]) == {4, 20}
    assert tr.termination is Termination.RESIDUAL_ZERO and tr.k_reached == 2
    sup, _ = _omp_reference(x.data, y, 2)
    assert set(sup) == {4, 20}


def test_rank_deficient_termination():
    # p = n: after n steps no column is left that adds a direction
    x = gen_gaussian_matrix(3, 3, 0)
    y = np.array([1.0, 2.0, 3.0])
    tr = run_pursuit("OMP", x, y, kmax=3)
    assert tr.termination in (Termination.RESIDUAL_ZERO, Termination.RANK_DEFICIENT)
    dup = SensingMatrix(np.column_stack([np.eye(2)[:, 0], np.eye(2)[:, 0]]))
    tr = run_pursuit("OLS", dup, np.array([1.0, 1.0]), kmax=2)
    assert tr.termination is Termination.RANK_DEFICIENT and tr.k_reached == 1
    tr = run_pursuit("OMP", dup, np.array([1.0, 1.0]), kmax=2)
    assert tr.termination is Termination.RANK_DEFICIENT and tr.k_reached == 1


def test_zero_observation_rejected():
    with pytest.raises(ValueError):
        run_pursuit("OMP", SensingMatrix(np.eye(2)), np.zeros(2))


def test_trace_json_roundtrip():
    x = gen_gaussian_matrix(8, 12, 4)
    tr = run_pursuit("OLS", x, np.arange(1.0, 9.0))
    back = PursuitTrace.from_json(tr.to_json())
    assert back == tr
    assert back.algorithm is Algorithm.OLS


@pytest.mark.parametrize("alg", ["OMP", "OLS"])
@pytest.mark.parametrize("k", [1, 2, 3])
def test_reproducibility_warm_start(alg, k):
    x = gen_gaussian_matrix(14, 28, 50 + k)
    y = np.random.default_rng(k).standard_normal(14)
    tr = run_pursuit(alg, x, y)
    rk = state_for_support(x, tr.supports[k], y).residual
    warm = run_pursuit(alg, x, rk, kmax=tr.k_reached - k, initial_support=tr.supports[k])
    assert warm.supports[1:] == tr.supports[k + 1:]
    assert np.allclose(warm.rr, tr.rr[k:], atol=1e-12)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_omp_fresh_restart_on_residual_picks_next(k):
    x = gen_gaussian_matrix(14, 28, 70 + k)
    y = np.random.default_rng(k).standard_normal(14)
    tr = run_pursuit("OMP", x, y)
    rk = state_for_support(x, tr.supports[k], y).residual
    assert run_pursuit("OMP", x, rk, kmax=1).supports[1][0] == tr.supports[k + 1][-1]


@settings(max_examples=50, deadline=None)
@given(st.integers(3, 12), st.integers(0, 2**31 - 1), st.sampled_from(["OMP", "OLS"]))
def test_trace_invariants(n, seed, alg):
    rng = np.random.default_rng(seed)
    x = normalize_columns(rng.standard_normal((n, 2 * n)))
    tr = run_pursuit(alg, x, rng.standard_normal(n))
    for k in range(1, tr.k_reached + 1):
        assert len(tr.supports[k]) == k and tr.supports[k][:-1] == tr.supports[k - 1]
        assert tr.residual_norms[k] <= tr.residual_norms[k - 1]
        assert 0 < tr.rr[k - 1] <= 1
