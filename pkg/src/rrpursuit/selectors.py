"""Pick an iteration count from a pursuit trace.

``select_tf`` and ``select_rrt`` need neither the sparsity nor the noise
level. The three ``select_oracle_*`` baselines are handed one of them.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyTrace, InvalidParam, K0ExceedsTrace
from .lincore import RESIDUAL_ZERO_TOL, embed, least_squares_on_support
from .pursuit import PursuitTrace

NO_THRESHOLD_CROSSING = "NoThresholdCrossing"


class Selector(str, enum.Enum):
    TF = "TF"
    RRT = "RRT"
    ORACLE_K0 = "OracleK0"
    ORACLE_SIGMA = "OracleSigma"
    ORACLE_EPS = "OracleEps"


CLI_NAMES = {
    "tf": Selector.TF,
    "rrt": Selector.RRT,
    "oracle-k0": Selector.ORACLE_K0,
    "oracle-sigma": Selector.ORACLE_SIGMA,
    "oracle-eps": Selector.ORACLE_EPS,
}


@dataclass(frozen=True)
class SelectorResult:
    k_hat: int
    support: tuple
    beta_hat: np.ndarray = field(repr=False)
    selector: Selector
    flags: frozenset = frozenset()

    def to_dict(self) -> dict:
        return {
            "selector": self.selector.value,
            "k_hat": self.k_hat,
            "support": list(self.support),
            "flags": sorted(self.flags),
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _finish(trace: PursuitTrace, k_hat: int, selector: Selector, flags=()) -> SelectorResult:
    if trace.matrix is None or trace.y is None:
        raise ValueError("trace carries no matrix/observation; cannot form beta_hat")
    support = trace.supports[k_hat]
    coef = least_squares_on_support(trace.matrix, support, trace.y)
    beta = embed(coef, support, trace.matrix.p)
    return SelectorResult(k_hat, tuple(support), beta, selector, frozenset(flags))


def _require_iterations(trace: PursuitTrace):
    if trace.k_reached < 1:
        raise EmptyTrace("trace has no completed iteration")


def tf_index(rr) -> int:
    """1-based argmin of the residual ratios, ties to the smallest k."""
    return int(np.argmin(np.asarray(rr))) + 1


def rrt_index(rr, gamma: float) -> int:
    """Largest 1-based k with ``RR(k) < gamma``; 0 when none."""
    below = np.flatnonzero(np.asarray(rr) < gamma)
    return int(below[-1]) + 1 if below.size else 0


def select_tf(trace: PursuitTrace) -> SelectorResult:
    """Tuning-free choice: the iteration with the smallest residual ratio."""
    _require_iterations(trace)
    return _finish(trace, tf_index(trace.rr), Selector.TF)


def select_rrt(trace: PursuitTrace, gamma_lb: float) -> SelectorResult:
    """Last iteration whose residual ratio falls below ``gamma_lb``.

    When no ratio is below the threshold the result is the empty support
    flagged with ``NoThresholdCrossing``.
    """
    _require_iterations(trace)
    if not 0 < gamma_lb <= 1:
        raise InvalidParam(f"threshold must lie in (0, 1], got {gamma_lb}")
    k = rrt_index(trace.rr, gamma_lb)
    flags = () if k else (NO_THRESHOLD_CROSSING,)
    return _finish(trace, k, Selector.RRT, flags)


def select_oracle_k0(trace: PursuitTrace, k0: int) -> SelectorResult:
    if k0 < 0:
        raise InvalidParam("k0 must be >= 0")
    if k0 > trace.k_reached:
        raise K0ExceedsTrace(k0, trace.k_reached)
    return _finish(trace, k0, Selector.ORACLE_K0)


def sigma_stopping_level(sigma: float, n: int) -> float:
    """Residual norm below which Gaussian noise of std ``sigma`` is deemed reached."""
    return sigma * math.sqrt(n + 2.0 * math.sqrt(n * math.log(n)))


def _first_below(trace: PursuitTrace, level: float, selector: Selector) -> SelectorResult:
    # a residual flagged as numerically zero counts as exactly zero
    zero = RESIDUAL_ZERO_TOL * trace.residual_norms[0]
    for k, r in enumerate(trace.residual_norms):
        if r <= level or r <= zero:
            return _finish(trace, k, selector)
    return _finish(trace, trace.k_reached, selector, (NO_THRESHOLD_CROSSING,))


def select_oracle_sigma(trace: PursuitTrace, sigma: float, n: int | None = None) -> SelectorResult:
    """Stop at the first residual norm below ``sigma * sqrt(n + 2 sqrt(n ln n))``."""
    if not sigma > 0:
        raise InvalidParam("sigma must be > 0")
    if n is None:
        n = trace.matrix.n
    return _first_below(trace, sigma_stopping_level(sigma, n), Selector.ORACLE_SIGMA)


def select_oracle_eps(trace: PursuitTrace, eps2: float) -> SelectorResult:
    """Stop at the first residual norm not exceeding the noise bound ``eps2``."""
    if eps2 < 0:
        raise InvalidParam("eps2 must be >= 0")
    return _first_below(trace, eps2, Selector.ORACLE_EPS)
