"""Monte Carlo sweeps over SNR and sparsity with every selector on one trace."""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .problems import (NoiseModel, SignalModel, add_noise_at_snr, gaussian_matrix_from_rng,
                       gen_identity_hadamard, gen_signal, nmse, pe_indicator)
from .pursuit import Algorithm, default_kmax, run_pursuit
from .rng import make_rng
from .selectors import (CLI_NAMES, Selector, select_oracle_eps, select_oracle_k0,
                        select_oracle_sigma, select_rrt, select_tf)
from .thresholds import cached_train_gamma_lb, gamma_rrt_alpha, train_gamma_lb

CSV_COLUMNS = ("selector", "algorithm", "matrix_kind", "n", "p", "k0", "snr_db", "trials",
               "nmse_mean", "pe_mean")

_CONFIG_KEYS = {"matrix", "signal_model", "noise_model", "k0_list", "snr_db_list", "trials",
                "algorithm", "selectors", "threshold", "base_seed"}
_MATRIX_KEYS = {"kind", "n", "p"}
_THRESHOLD_KEYS = {"kind", "alpha", "ntr", "seed", "value", "cache", "matrix_kind"}


def _parse_selector(name) -> Selector:
    if isinstance(name, Selector):
        return name
    if name in CLI_NAMES:
        return CLI_NAMES[name]
    try:
        return Selector(name)
    except ValueError:
        raise ConfigError(f"unknown selector {name!r}") from None


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment grid.

    ``matrix`` is ``{"kind": "gaussian", "n": .., "p": ..}`` (a fresh matrix
    per trial) or ``{"kind": "identity_hadamard", "n": ..}``. ``threshold``
    says where RRT gets its bound: ``{"kind": "alpha", "alpha": a}``,
    ``{"kind": "trained", "ntr": N, "seed": s[, "cache": path]}`` or
    ``{"kind": "value", "value": g}``.
    """

    matrix_kind: str
    n: int
    p: int
    signal_model: SignalModel
    k0_list: tuple
    snr_db_list: tuple
    trials: int
    algorithm: Algorithm
    selectors: tuple
    threshold: dict
    base_seed: int
    noise_model: NoiseModel = NoiseModel.GAUSSIAN

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if not self.k0_list or not self.snr_db_list:
            raise ConfigError("k0_list and snr_db_list must be nonempty")
        kmax = default_kmax(self.n)
        for k0 in self.k0_list:
            if not 1 <= k0 <= kmax:
                raise ConfigError(f"k0={k0} must lie in [1, kmax={kmax}]")
        if not self.selectors:
            raise ConfigError("no selectors configured")
        if Selector.RRT in self.selectors and not self.threshold:
            raise ConfigError("rrt selector needs a threshold source")
        if self.base_seed is None or int(self.base_seed) < 0:
            raise ConfigError("base_seed must be a non-negative integer")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(d) - _CONFIG_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        for key in ("matrix", "k0_list", "snr_db_list", "trials", "base_seed"):
            if key not in d:
                raise ConfigError(f"missing config key {key!r}")
        m = d["matrix"]
        if not isinstance(m, dict) or set(m) - _MATRIX_KEYS:
            raise ConfigError(f"matrix must be an object with keys {sorted(_MATRIX_KEYS)}")
        kind = str(m.get("kind", "")).lower().replace("-", "_")
        if kind == "gaussian":
            n, p = int(m["n"]), int(m["p"])
        elif kind == "identity_hadamard":
            n = int(m["n"])
            p = 2 * n
            if "p" in m and int(m["p"]) != p:
                raise ConfigError("identity_hadamard has p = 2n")
        else:
            raise ConfigError(f"unknown matrix kind {m.get('kind')!r}")
        threshold = dict(d.get("threshold") or {})
        if set(threshold) - _THRESHOLD_KEYS:
            raise ConfigError(f"unknown threshold keys: {sorted(set(threshold) - _THRESHOLD_KEYS)}")
        if threshold and threshold.get("kind") not in ("alpha", "trained", "value"):
            raise ConfigError("threshold kind must be alpha, trained or value")
        try:
            return cls(
                matrix_kind=kind, n=n, p=p,
                signal_model=SignalModel.parse(d.get("signal_model", "uniform")),
                k0_list=tuple(int(k) for k in d["k0_list"]),
                snr_db_list=tuple(float(s) for s in d["snr_db_list"]),
                trials=int(d["trials"]),
                algorithm=Algorithm.parse(d.get("algorithm", "OMP")),
                selectors=tuple(_parse_selector(s) for s in
                                d.get("selectors", ["tf", "rrt", "oracle-k0", "oracle-sigma",
                                                    "oracle-eps"])),
                threshold=threshold,
                base_seed=int(d["base_seed"]),
                noise_model=NoiseModel.parse(d.get("noise_model", "gaussian")),
            )
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from None

    def to_dict(self) -> dict:
        matrix = {"kind": self.matrix_kind, "n": self.n}
        if self.matrix_kind == "gaussian":
            matrix["p"] = self.p
        return {
            "matrix": matrix, "signal_model": self.signal_model.value,
            "noise_model": self.noise_model.value, "k0_list": list(self.k0_list),
            "snr_db_list": list(self.snr_db_list), "trials": self.trials,
            "algorithm": self.algorithm.value, "selectors": [s.value for s in self.selectors],
            "threshold": dict(self.threshold), "base_seed": self.base_seed,
        }


def resolve_threshold(config: ExperimentConfig, workers: int = 1) -> float | None:
    """The RRT bound for the config's dimensions, or ``None`` if RRT is unused."""
    t = config.threshold
    if Selector.RRT not in config.selectors:
        return None
    kind = t["kind"]
    if kind == "value":
        return float(t["value"])
    if kind == "alpha":
        return gamma_rrt_alpha(config.n, config.p, alpha=float(t.get("alpha", 0.1))).value
    ntr, seed = int(t.get("ntr", 1000)), int(t.get("seed", 0))
    mk = t.get("matrix_kind", "gaussian")
    if mk != "gaussian":
        return train_gamma_lb(config.n, config.p, ntr, config.algorithm, seed, workers=workers,
                              matrix_kind=mk).value
    if t.get("cache"):
        spec, _ = cached_train_gamma_lb(t["cache"], config.n, config.p, ntr, config.algorithm,
                                        seed, workers)
        return spec.value
    return train_gamma_lb(config.n, config.p, ntr, config.algorithm, seed, workers=workers).value


@dataclass(frozen=True)
class TrialOutcome:
    selector: Selector
    k0: int
    snr_db: float
    trial: int
    nmse: float
    pe: int


@dataclass(frozen=True)
class MetricsRecord:
    selector: Selector
    k0: int
    snr_db: float
    nmse_mean: float
    pe_mean: float
    trials: int
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def key(self):
        return (self.selector, self.k0, self.snr_db)

    @property
    def pe_se(self) -> float:
        """Binomial standard error of ``pe_mean``."""
        return math.sqrt(self.pe_mean * (1.0 - self.pe_mean) / self.trials)

    @property
    def nmse_db(self) -> float:
        return 10.0 * math.log10(self.nmse_mean) if self.nmse_mean > 0 else -math.inf


def aggregate(outcomes, meta: dict | None = None) -> list:
    """Per-key means of trial outcomes, keys in first-seen order.

    Outcomes within a key are summed in trial order, so any permutation of
    the input gives the same floating-point result.
    """
    groups = {}
    for o in outcomes:
        groups.setdefault((o.selector, o.k0, o.snr_db), []).append(o)
    records = []
    for (sel, k0, snr), items in groups.items():
        items.sort(key=lambda o: o.trial)
        count = len(items)
        nm = float(np.sum(np.fromiter((o.nmse for o in items), float, count))) / count
        pe = float(np.sum(np.fromiter((o.pe for o in items), float, count))) / count
        records.append(MetricsRecord(sel, k0, snr, nm, pe, count, dict(meta or {})))
    return records


def run_trial(config: ExperimentConfig, cell: int, trial: int, k0: int, snr_db: float,
              gamma_lb: float | None, fixed_matrix=None) -> list:
    """One instance, one pursuit run, every configured selector."""
    rng = make_rng(config.base_seed, cell, trial)
    if fixed_matrix is not None:
        x = fixed_matrix
    else:
        x = gaussian_matrix_from_rng(rng, config.n, config.p)
    sig = gen_signal(config.p, k0, config.signal_model, seed=rng)
    sysm = add_noise_at_snr(x, sig, snr_db, config.noise_model, seed=rng)
    trace = run_pursuit(config.algorithm, x, sysm.y)
    out = []
    for sel in config.selectors:
        if sel is Selector.TF:
            res = select_tf(trace)
        elif sel is Selector.RRT:
            res = select_rrt(trace, gamma_lb)
        elif sel is Selector.ORACLE_K0:
            res = select_oracle_k0(trace, min(k0, trace.k_reached))
        elif sel is Selector.ORACLE_SIGMA:
            sigma = sysm.sigma if sysm.sigma is not None else sysm.eps2 / math.sqrt(config.n)
            res = select_oracle_sigma(trace, sigma)
        else:
            eps2 = sysm.eps2 if sysm.eps2 is not None else float(np.linalg.norm(sysm.noise))
            res = select_oracle_eps(trace, eps2)
        out.append(TrialOutcome(sel, k0, snr_db, trial, nmse(sig.beta, res.beta_hat),
                                pe_indicator(sig.support, res.support)))
    return out


def run_experiment(config: ExperimentConfig, workers: int = 1, gamma_lb: float | None = None) -> list:
    """Metrics for every (selector, k0, snr) cell of the grid.

    Trial ``t`` of cell ``c`` draws everything from ``make_rng(base_seed, c, t)``
    so the output does not depend on ``workers``.
    """
    if gamma_lb is None:
        gamma_lb = resolve_threshold(config, workers)
    fixed = gen_identity_hadamard(config.n) if config.matrix_kind == "identity_hadamard" else None
    meta = {"algorithm": config.algorithm.value, "matrix_kind": config.matrix_kind,
            "n": config.n, "p": config.p}
    records = []
    cell = 0
    pool = ThreadPoolExecutor(workers) if workers > 1 else None
    try:
        for k0 in config.k0_list:
            for snr in config.snr_db_list:
                def one(t, c=cell, k=k0, s=snr):
                    return run_trial(config, c, t, k, s, gamma_lb, fixed)
                trials = range(config.trials)
                per_trial = list(pool.map(one, trials)) if pool else [one(t) for t in trials]
                records.extend(aggregate([o for lst in per_trial for o in lst], meta))
                cell += 1
    finally:
        if pool:
            pool.shutdown()
    return records


def records_to_csv(records, config: ExperimentConfig | None = None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in records:
        m = dict(r.meta)
        if config is not None:
            m.update(algorithm=config.algorithm.value, matrix_kind=config.matrix_kind,
                     n=config.n, p=config.p)
        w.writerow([r.selector.value, m.get("algorithm", ""), m.get("matrix_kind", ""),
                    m.get("n", ""), m.get("p", ""), r.k0, repr(r.snr_db), r.trials,
                    repr(r.nmse_mean), repr(r.pe_mean)])
    return buf.getvalue()


def write_csv(path, records, config: ExperimentConfig | None = None) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(records_to_csv(records, config))


def find(records, selector, k0=None, snr_db=None) -> MetricsRecord:
    """First record matching the given key parts."""
    selector = _parse_selector(selector)
    for r in records:
        if r.selector is selector and (k0 is None or r.k0 == k0) and \
                (snr_db is None or r.snr_db == float(snr_db)):
            return r
    raise KeyError((selector, k0, snr_db))
