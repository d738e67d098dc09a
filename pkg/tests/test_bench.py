import csv
import io

import numpy as np
import pytest

from rrpursuit.bench import (
    CSV_COLUMNS, ExperimentConfig, TrialOutcome, aggregate, find, records_to_csv, run_experiment,
    write_csv,
)
from rrpursuit.errors import ConfigError
from rrpursuit.problems import add_noise_at_snr, gen_gaussian_matrix, gen_signal
from rrpursuit.pursuit import run_pursuit
from rrpursuit.rng import make_rng
from rrpursuit.selectors import (Selector, select_oracle_k0, select_oracle_sigma, select_rrt,
                                 select_tf)


def _cfg(**over):
    d = {"matrix": {"kind": "gaussian", "n": 16, "p": 32}, "k0_list": [2], "snr_db_list": [20],
         "trials": 5, "threshold": {"kind": "alpha", "alpha": 0.1}, "base_seed": 1}
    d.update(over)
    return ExperimentConfig.from_dict(d)


def test_config_defaults_and_roundtrip():
    c = _cfg()
    assert len(c.selectors) == 5 and c.algorithm.value == "OMP"
    assert ExperimentConfig.from_dict(c.to_dict()) == c


@pytest.mark.parametrize("over", [
    {"bogus": 1},
    {"trials": 0},
    {"k0_list": [9]},                       # kmax(16) = 8
    {"matrix": {"kind": "gaussian", "n": 16, "p": 32, "q": 1}},
    {"matrix": {"kind": "circulant", "n": 16}},
    {"selectors": ["tf", "magic"]},
    {"threshold": {}},
    {"threshold": {"kind": "alpha", "level": 0.1}},
    {"base_seed": -1},
])
def test_config_rejects(over):
    with pytest.raises(ConfigError):
        _cfg(**over)


def test_config_requires_seed():
    d = _cfg().to_dict()
    del d["base_seed"]
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(d)


def test_noiseless_like_single_trial():
    cfg = _cfg(matrix={"kind": "identity_hadamard", "n": 16}, trials=1, snr_db_list=[300],
               selectors=["tf", "oracle-k0"])
    recs = run_experiment(cfg)
    for sel in ("tf", "oracle-k0"):
        r = find(recs, sel, 2, 300)
        assert r.pe_mean == 0.0 and r.nmse_mean < 1e-20 and r.trials == 1


def _outcome(t, pe, nm=0.5):
    return TrialOutcome(Selector.TF, 2, 10.0, t, nm, pe)


def test_aggregate_examples():
    (one,) = aggregate([_outcome(0, 1, 0.25)])
    assert one.pe_mean == 1.0 and one.nmse_mean == 0.25 and one.trials == 1
    (rec,) = aggregate([_outcome(t, pe) for t, pe in enumerate([0, 1, 1, 0])])
    assert rec.pe_mean == 0.5 and rec.trials == 4


def test_aggregate_permutation_invariant():
    rng = make_rng(2)
    outs = [_outcome(t, int(rng.integers(0, 2)), float(rng.exponential())) for t in range(500)]
    base = aggregate(outs)[0]
    for k in range(5):
        perm = make_rng(3, k).permutation(len(outs))
        other = aggregate([outs[i] for i in perm])[0]
        assert other.nmse_mean == base.nmse_mean and other.pe_mean == base.pe_mean


def test_deterministic_across_workers():
    cfg = _cfg(k0_list=[1, 3], snr_db_list=[5, 25], trials=40)
    a = records_to_csv(run_experiment(cfg, workers=1), cfg)
    b = records_to_csv(run_experiment(cfg, workers=4), cfg)
    assert a == b
    assert a == records_to_csv(run_experiment(cfg, workers=1), cfg)


def test_trace_sharing_matches_independent_runs():
    gamma = 0.5
    for t in range(100):
        rng = make_rng(61, t)
        x = gen_gaussian_matrix(16, 32, seed=rng)
        sig = gen_signal(32, 3, seed=rng)
        sysm = add_noise_at_snr(x, sig, 15.0, seed=rng)
        shared = run_pursuit("OMP", x, sysm.y)
        funcs = [select_tf, lambda tr: select_rrt(tr, gamma), lambda tr: select_oracle_k0(tr, 3),
                 lambda tr: select_oracle_sigma(tr, sysm.sigma)]
        for f in funcs:
            a, b = f(shared), f(run_pursuit("OMP", x, sysm.y))
            assert a.k_hat == b.k_hat and a.support == b.support
            np.testing.assert_array_equal(a.beta_hat, b.beta_hat)


def test_csv_layout(tmp_path):
    cfg = _cfg(snr_db_list=[10, 20], trials=3)
    recs = run_experiment(cfg)
    path = tmp_path / "out.csv"
    write_csv(path, recs, cfg)
    raw = path.read_bytes()
    assert b"\r" not in raw
    rows = list(csv.DictReader(io.StringIO(raw.decode())))
    assert tuple(rows[0].keys()) == CSV_COLUMNS
    assert len(rows) == 5 * 2
    assert {r["selector"] for r in rows} == {"TF", "RRT", "OracleK0", "OracleSigma", "OracleEps"}
    for r in rows:
        assert r["algorithm"] == "OMP" and r["matrix_kind"] == "gaussian"
        assert 0 <= float(r["pe_mean"]) <= 1 and float(r["nmse_mean"]) >= 0


def test_residual_ratio_selectors_track_sigma_oracle():
    cfg = ExperimentConfig.from_dict({
        "matrix": {"kind": "identity_hadamard", "n": 16}, "k0_list": [2],
        "snr_db_list": [15, 20], "trials": 2000, "selectors": ["tf", "rrt", "oracle-sigma"],
        "threshold": {"kind": "alpha", "alpha": 0.1}, "base_seed": 71})
    recs = run_experiment(cfg)
    for snr in (15, 20):
        ref = find(recs, "oracle-sigma", 2, snr).nmse_db
        for sel in ("tf", "rrt"):
            assert abs(find(recs, sel, 2, snr).nmse_db - ref) <= 2.0


def test_oracle_k0_error_floor():
    cfg = ExperimentConfig.from_dict({
        "matrix": {"kind": "gaussian", "n": 32, "p": 64}, "k0_list": [3], "snr_db_list": [30],
        "trials": 1000, "selectors": ["tf", "rrt", "oracle-k0"],
        "threshold": {"kind": "alpha", "alpha": 0.1}, "base_seed": 72})
    recs = run_experiment(cfg)
    floor = find(recs, "oracle-k0").nmse_mean
    assert floor > find(recs, "tf").nmse_mean
    assert floor > find(recs, "rrt").nmse_mean
