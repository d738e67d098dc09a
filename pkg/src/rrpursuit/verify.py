"""Analytical checks: brute-force RIC, recovery thresholds, the Beta law of
residual ratios and an empirical sufficiency test for exact recovery.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import stats

from .betafn import BetaParams, beta_cdf_array
from .errors import BudgetExceeded, InvalidParam, PremiseUnmet
from .lincore import SensingMatrix
from .problems import SparseSignal
from .pursuit import Algorithm, default_kmax, run_pursuit
from .rng import as_rng, make_rng
from .selectors import select_rrt, select_tf

DEFAULT_RIC_BUDGET = 2_000_000
RIP_VIOLATED = "RipViolated"
_CHUNK = 4096


@dataclass(frozen=True)
class RicEstimate:
    k: int
    delta_k: float
    subsets_checked: int


def ric_bruteforce(matrix: SensingMatrix, k: int, budget: int = DEFAULT_RIC_BUDGET) -> RicEstimate:
    """Exact ``delta_k`` by sweeping every size-``k`` column subset.

    Smaller supports are covered because Gram spectra interlace, so the
    size-``k`` sweep already bounds them.
    """
    n, p = matrix.n, matrix.p
    if not 1 <= k <= min(n, p):
        raise InvalidParam(f"order k={k} must lie in [1, min(n, p)={min(n, p)}]")
    count = math.comb(p, k)
    if count > budget:
        raise BudgetExceeded(count, budget)
    x = matrix.data
    delta = 0.0
    combos = itertools.combinations(range(p), k)
    while True:
        idx = np.fromiter(itertools.chain.from_iterable(itertools.islice(combos, _CHUNK)),
                          dtype=np.intp)
        if idx.size == 0:
            break
        idx = idx.reshape(-1, k)
        sub = x[:, idx].transpose(1, 0, 2)          # (m, n, k)
        gram = np.einsum("mik,mil->mkl", sub, sub)
        ev = np.linalg.eigvalsh(gram)
        delta = max(delta, float(ev[:, -1].max()) - 1.0, 1.0 - float(ev[:, 0].min()))
    return RicEstimate(k, max(delta, 0.0), count)


# --- recovery thresholds --------------------------------------------------

@dataclass(frozen=True)
class GuaranteeReport:
    eps_exact: float
    eps_sig: float
    eps_x: float
    eps_rrt: float
    snr_excess_rrt_bound: float | None
    snr_excess_x_bound: float | None
    snr_excess_sig_bound: float | None
    snr_excess_rrt_simple: float
    inputs: dict
    flags: frozenset = frozenset()

    @property
    def tf_threshold(self) -> float:
        return min(self.eps_exact, self.eps_sig, self.eps_x)

    @property
    def rrt_threshold(self) -> float:
        return min(self.eps_exact, self.eps_rrt)

    @property
    def threshold(self) -> float:
        return min(self.tf_threshold, self.rrt_threshold)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["flags"] = sorted(self.flags)
        d["tf_threshold"] = self.tf_threshold
        d["rrt_threshold"] = self.rrt_threshold
        return d


def _check_delta(name, v):
    if not 0.0 <= v < 1.0:
        raise InvalidParam(f"{name} must lie in [0, 1), got {v}")


def guarantee_thresholds(delta_ksup: float, beta_min: float, beta_max: float, gamma: float,
                         gamma_lb: float, delta_k0plus1: float, k0: int) -> GuaranteeReport:
    """Noise levels below which TF and RRT provably recover the support.

    ``delta_ksup`` is the RIC at the superset level (``delta_k0`` for exact
    recovery). ``eps_exact`` is zero and ``RipViolated`` flagged when
    ``delta_k0plus1 >= 1 / sqrt(k0 + 1)``.
    """
    _check_delta("delta_ksup", delta_ksup)
    _check_delta("delta_k0plus1", delta_k0plus1)
    if not beta_min > 0 or beta_max < beta_min:
        raise InvalidParam("need 0 < beta_min <= beta_max")
    for name, g in (("gamma", gamma), ("gamma_lb", gamma_lb)):
        if not 0.0 < g <= 1.0:
            raise InvalidParam(f"{name} must lie in (0, 1], got {g}")
    if k0 < 0:
        raise InvalidParam("k0 must be >= 0")

    d = delta_ksup
    dr = beta_max / beta_min
    lower = math.sqrt(1.0 - d) * beta_min
    cond = math.sqrt((1.0 + d) / (1.0 - d))
    eps_sig = lower / (1.0 + cond * (2.0 + dr))
    eps_x = lower * gamma / (1.0 + gamma)
    eps_rrt = lower * gamma_lb / (1.0 + gamma_lb)

    flags = set()
    d1 = delta_k0plus1
    s = math.sqrt(k0 + 1.0)
    if d1 < 1.0 / s:
        ratio = math.sqrt(1.0 - d1 * d1) / (1.0 - s * d1)
        eps_exact = beta_min * math.sqrt(1.0 - d1) / (1.0 + ratio)
        excess_rrt = (1.0 + 1.0 / gamma_lb) / (1.0 + ratio)
        excess_x = (1.0 + 1.0 / gamma) / (1.0 + ratio)
        excess_sig = 0.5 * (1.0 + cond * (2.0 + dr))
    else:
        flags.add(RIP_VIOLATED)
        eps_exact = 0.0
        excess_rrt = excess_x = excess_sig = None
    inputs = {"delta_ksup": d, "delta_k0plus1": d1, "beta_min": beta_min, "beta_max": beta_max,
              "gamma": gamma, "gamma_lb": gamma_lb, "k0": k0}
    return GuaranteeReport(eps_exact, eps_sig, eps_x, eps_rrt, excess_rrt, excess_x, excess_sig,
                           0.5 * (1.0 + 1.0 / gamma_lb), inputs, frozenset(flags))


def error_floor_bound(delta_2k0: float, delta_k0: float, beta_min: float, eps2: float) -> float:
    """Lower bound on ``||beta - beta_hat||`` when the k0-step estimate misses an index."""
    return (1.0 - delta_2k0 / (1.0 - delta_k0)) * beta_min - eps2 / math.sqrt(1.0 - delta_k0)


# --- isometry spot checks -------------------------------------------------

def isometry_spot_check(matrix: SensingMatrix, k: int, draws: int, seed, delta: float | None = None) -> dict:
    """Largest violations of the cross-correlation and projected-isometry bounds.

    Each draw picks disjoint nonempty ``J1``, ``J2`` with ``|J1 u J2| <= k``
    and a Gaussian ``a``. Nonpositive violations mean every draw passed.
    """
    if k < 2:
        raise InvalidParam("need k >= 2 for two disjoint nonempty sets")
    if delta is None:
        delta = ric_bruteforce(matrix, k).delta_k
    rng = as_rng(seed)
    x = matrix.data
    worst_d = worst_lo = worst_hi = -math.inf
    for _ in range(draws):
        m = int(rng.integers(2, k + 1))
        idx = rng.choice(matrix.p, size=m, replace=False)
        m1 = int(rng.integers(1, m))
        j1, j2 = idx[:m1], idx[m1:]
        a = rng.standard_normal(j2.size)
        na = float(a @ a)
        x1, v = x[:, j1], x[:, j2] @ a
        worst_d = max(worst_d, float(np.linalg.norm(x1.T @ v)) - delta * math.sqrt(na))
        q, _ = np.linalg.qr(x1)
        r = v - q @ (q.T @ v)
        rr = float(r @ r)
        worst_lo = max(worst_lo, (1.0 - delta) * na - rr)
        worst_hi = max(worst_hi, rr - (1.0 + delta) * na)
    return {"k": k, "delta_k": delta, "draws": draws,
            "cross_violation": worst_d, "lower_violation": worst_lo, "upper_violation": worst_hi}


# --- Beta law of residual ratios ------------------------------------------

def beta_law_conformance(n: int, k_list, samples: int, seed) -> list:
    """KS test of ``RR(k)^2`` under fixed coordinate projections.

    With ``P_k`` projecting onto the first ``k`` coordinates,
    ``||(I - P_k) z||^2 / ||(I - P_{k-1}) z||^2`` is compared with
    ``Beta((n - k) / 2, 1 / 2)``.
    """
    if samples < 1000:
        raise InvalidParam("need at least 1000 samples")
    ks = [int(k) for k in k_list]
    if any(not 1 <= k < n for k in ks):
        raise InvalidParam(f"every k must satisfy 1 <= k < n={n}")
    z = as_rng(seed).standard_normal((samples, n))
    # tail[:, j] = sum_{i >= j} z_i^2
    tail = np.cumsum((z * z)[:, ::-1], axis=1)[:, ::-1]
    out = []
    for k in ks:
        r2 = tail[:, k] / tail[:, k - 1]
        params = BetaParams((n - k) / 2.0, 0.5)
        res = stats.kstest(r2, lambda v: beta_cdf_array(params, v))
        a, b = params.a, params.b
        mean = a / (a + b)
        sd = math.sqrt(a * b / ((a + b) ** 2 * (a + b + 1.0)))
        out.append({
            "k": k, "samples": samples, "ks_statistic": float(res.statistic),
            "p_value": float(res.pvalue), "critical_1pct": 1.63 / math.sqrt(samples),
            "sample_mean": float(np.mean(r2)), "expected_mean": mean,
            "mean_se": sd / math.sqrt(samples),
        })
    return out


# --- empirical sufficiency ------------------------------------------------

def measure_gamma_alg(matrix: SensingMatrix, algorithm="OMP", runs: int = 2000, seed=0,
                      kmax: int | None = None) -> float:
    """Smallest residual ratio over ``runs`` noise-only pursuits on ``matrix``."""
    if kmax is None:
        kmax = default_kmax(matrix.n)
    best = 1.0
    for s in range(runs):
        y = make_rng(seed, s).standard_normal(matrix.n)
        best = min(best, min(run_pursuit(algorithm, matrix, y, kmax).rr))
    return float(best)


def instance_guarantees(matrix: SensingMatrix, signal: SparseSignal, gamma_lb: float | None = None,
                        algorithm="OMP", gamma_runs: int = 2000, seed=0,
                        budget: int = DEFAULT_RIC_BUDGET) -> GuaranteeReport:
    """Thresholds for a concrete matrix and signal with brute-forced RICs.

    ``Gamma_Alg(X)`` is measured from noise-only runs; the RRT bound uses
    the smaller of that and ``gamma_lb`` when one is given.
    """
    algorithm = Algorithm.parse(algorithm)
    if algorithm is not Algorithm.OMP:
        raise InvalidParam("exact-recovery condition is only available for OMP")
    k0 = signal.k0
    if k0 < 1:
        raise InvalidParam("signal must be nonzero")
    d_k0 = ric_bruteforce(matrix, k0, budget).delta_k
    d_k1 = ric_bruteforce(matrix, k0 + 1, budget).delta_k
    if d_k1 >= 1.0:
        raise PremiseUnmet(f"delta_{k0 + 1}={d_k1:.4g}: no restricted isometry at that order")
    gamma = measure_gamma_alg(matrix, algorithm, gamma_runs, seed)
    glb = gamma if gamma_lb is None else min(gamma, float(gamma_lb))
    return guarantee_thresholds(d_k0, signal.beta_min, signal.beta_max, gamma, glb, d_k1, k0)


def verify_sufficient_recovery(matrix: SensingMatrix, signal: SparseSignal, eps2: float,
                               trials: int, seed, gamma_lb: float | None = None,
                               algorithm="OMP", gamma_runs: int = 2000,
                               report: GuaranteeReport | None = None) -> dict:
    """Check that TF and RRT recover the support whenever the theory says so.

    Noise is drawn uniformly on the sphere of radius ``eps2``. A selector is
    only held to exact recovery when ``eps2`` is below its threshold;
    otherwise its outcomes are reported but not judged.
    """
    if eps2 < 0:
        raise InvalidParam("eps2 must be >= 0")
    if report is None:
        report = instance_guarantees(matrix, signal, gamma_lb, algorithm, gamma_runs, seed)
    if RIP_VIOLATED in report.flags:
        raise PremiseUnmet("delta_{k0+1} >= 1/sqrt(k0+1); exact-recovery premise fails")
    glb = report.inputs["gamma_lb"]
    check_tf = eps2 < report.tf_threshold
    check_rrt = eps2 < report.rrt_threshold
    truth = set(signal.support)
    clean = matrix.data @ signal.beta
    errors = {"TF": 0, "RRT": 0}
    counterexamples = []
    for t in range(trials):
        g = make_rng(seed, 1, t).standard_normal(matrix.n)
        w = eps2 * g / np.linalg.norm(g) if eps2 > 0 else np.zeros(matrix.n)
        y = clean + w
        trace = run_pursuit(algorithm, matrix, y)
        for name, res, judged in (("TF", select_tf(trace), check_tf),
                                  ("RRT", select_rrt(trace, glb), check_rrt)):
            if set(res.support) != truth:
                errors[name] += 1
                if judged:
                    counterexamples.append({"trial": t, "selector": name, "y": y.tolist(),
                                            "support_hat": list(res.support),
                                            "rr": list(trace.rr)})
    return {
        "eps2": eps2, "trials": trials, "seed": seed if not isinstance(seed, np.random.Generator) else None,
        "thresholds": report.to_dict(),
        "checked": {"TF": check_tf, "RRT": check_rrt},
        "support_errors": errors,
        "counterexamples": counterexamples,
        "passed": not counterexamples,
    }


def report_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True)
