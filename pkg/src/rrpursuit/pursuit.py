"""OMP and OLS run as incremental greedy pursuits.

A single run up to ``kmax`` records every nested support, the residual
norms and the residual ratios ``RR(k) = ||r_k|| / ||r_{k-1}||``; all
selectors work off that one trace.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import AllColumnsDependent
from .lincore import (RANK_TOL, RESIDUAL_ZERO_TOL, ProjectionState, SensingMatrix,
                      state_for_support)


class Algorithm(str, enum.Enum):
    OMP = "OMP"
    OLS = "OLS"

    @classmethod
    def parse(cls, value) -> "Algorithm":
        if isinstance(value, cls):
            return value
        return cls(str(value).upper())


class Termination(str, enum.Enum):
    REACHED_KMAX = "ReachedKmax"
    RESIDUAL_ZERO = "ResidualZero"
    RANK_DEFICIENT = "RankDeficient"


def default_kmax(n: int) -> int:
    """Largest sparsity level examined by default: ``floor((n + 1) / 2)``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return (n + 1) // 2


@dataclass(frozen=True)
class PursuitTrace:
    """Everything one pursuit run produced.

    ``supports[k]`` is the ordered support after ``k`` iterations,
    ``residual_norms[k]`` its residual norm (entry 0 is ``||y||``), and
    ``rr[k - 1]`` is ``RR(k)``.
    """

    algorithm: Algorithm
    supports: tuple
    residual_norms: tuple
    rr: tuple
    termination: Termination
    matrix: SensingMatrix | None = field(default=None, repr=False, compare=False)
    y: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def k_reached(self) -> int:
        return len(self.rr)

    def ratio(self, k: int) -> float:
        """``RR(k)`` for ``1 <= k <= k_reached``."""
        if not 1 <= k <= self.k_reached:
            raise IndexError(f"RR({k}) not recorded (k_reached={self.k_reached})")
        return self.rr[k - 1]

    def to_dict(self) -> dict:
        return {
            "algorithm": self.algorithm.value,
            "supports": [list(s) for s in self.supports],
            "residual_norms": list(self.residual_norms),
            "rr": list(self.rr),
            "termination": self.termination.value,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d, matrix=None, y=None) -> "PursuitTrace":
        return cls(
            Algorithm.parse(d.get("algorithm", "OMP")),
            tuple(tuple(int(i) for i in s) for s in d["supports"]),
            tuple(float(v) for v in d["residual_norms"]),
            tuple(float(v) for v in d["rr"]),
            Termination(d["termination"]),
            matrix,
            None if y is None else np.asarray(y, dtype=np.float64),
        )

    @classmethod
    def from_json(cls, text, matrix=None, y=None) -> "PursuitTrace":
        return cls.from_dict(json.loads(text), matrix, y)


def select_next_omp(matrix: SensingMatrix, state: ProjectionState) -> int:
    """Index outside the support most correlated with the residual."""
    corr = np.abs(matrix.data.T @ state.residual)
    if state.support:
        corr[list(state.support)] = -np.inf
    return int(np.argmax(corr))


def residual_columns(matrix: SensingMatrix, state: ProjectionState) -> np.ndarray:
    """``(I - P_J) X`` for the current support ``J``."""
    q = state.orthobasis
    x = matrix.data
    if q.shape[1] == 0:
        return x.copy()
    b = x - q @ (q.T @ x)
    return b - q @ (q.T @ b)


def select_next_ols(matrix: SensingMatrix, state: ProjectionState, y=None,
                    resid_cols: np.ndarray | None = None) -> int:
    """Index whose inclusion gives the smallest new residual norm.

    With ``b_t = (I - P_J) X_t`` the new squared residual norm is
    ``||r||^2 - (b_t' r)^2 / ||b_t||^2``, so the argmin is an argmax of the
    second term over columns with ``||b_t||`` above the rank tolerance.
    ``resid_cols`` lets a caller pass an incrementally maintained ``B``.
    """
    b = residual_columns(matrix, state) if resid_cols is None else resid_cols
    bnorm2 = np.einsum("ij,ij->j", b, b)
    admissible = bnorm2 >= RANK_TOL ** 2
    if state.support:
        admissible[list(state.support)] = False
    if not admissible.any():
        raise AllColumnsDependent("every remaining column is in the span of the support")
    gain = np.full(matrix.p, -np.inf)
    proj = b[:, admissible].T @ state.residual
    gain[admissible] = proj * proj / bnorm2[admissible]
    return int(np.argmax(gain))


def run_pursuit(algorithm, matrix: SensingMatrix, y, kmax: int | None = None,
                initial_support=()) -> PursuitTrace:
    """Run OMP or OLS for up to ``kmax`` iterations and record the trace.

    Iterations stop early once the residual is numerically zero or the
    next column would make the support rank deficient; both end up as the
    trace's termination cause, never as an exception.

    ``initial_support`` warm-starts the pursuit from an existing support;
    ``supports[0]`` is then that support and ``kmax`` counts the new
    iterations only.
    """
    algorithm = Algorithm.parse(algorithm)
    y = np.asarray(y, dtype=np.float64).ravel()
    if y.size != matrix.n:
        raise ValueError(f"observation has length {y.size}, matrix has {matrix.n} rows")
    ynorm = float(np.linalg.norm(y))
    if not ynorm > 0:
        raise ValueError("observation vector must be nonzero")
    if kmax is None:
        kmax = default_kmax(matrix.n)
    if kmax < 1:
        raise ValueError("kmax must be >= 1")

    init = state_for_support(matrix, initial_support, y)
    zero_tol = RESIDUAL_ZERO_TOL * ynorm
    x = matrix.data
    n, p = x.shape
    steps = min(kmax, p - init.k)
    # preallocated basis; columns [:k] are in use
    q = np.empty((n, init.k + max(steps, 0)))
    k = init.k
    q[:, :k] = init.orthobasis
    r = np.array(init.residual)
    rnorm = init.residual_norm
    support = list(init.support)
    taken = np.zeros(p, dtype=bool)
    taken[support] = True
    b = residual_columns(matrix, init) if algorithm is Algorithm.OLS else None
    bnorm2 = np.einsum("ij,ij->j", b, b) if b is not None else None

    supports = [tuple(support)]
    norms = [rnorm]
    rr = []
    termination = Termination.REACHED_KMAX
    if rnorm <= zero_tol:
        termination = Termination.RESIDUAL_ZERO
        kmax = 0
    while len(rr) < kmax:
        if len(rr) >= steps:
            termination = Termination.RANK_DEFICIENT
            break
        if b is None:
            score = np.abs(x.T @ r)
            score[taken] = -np.inf
        else:
            admissible = (bnorm2 >= RANK_TOL ** 2) & ~taken
            if not admissible.any():
                termination = Termination.RANK_DEFICIENT
                break
            proj = b.T @ r
            score = np.where(admissible, proj * proj / np.where(admissible, bnorm2, 1.0), -np.inf)
        t = int(np.argmax(score))
        qk = q[:, :k]
        v = x[:, t] - qk @ (qk.T @ x[:, t])
        v -= qk @ (qk.T @ v)
        vnorm = float(np.linalg.norm(v))
        if vnorm < RANK_TOL:
            termination = Termination.RANK_DEFICIENT
            break
        v /= vnorm
        q[:, k] = v
        k += 1
        r = r - v * (v @ r)
        new_norm = min(float(np.linalg.norm(r)), rnorm)
        if b is not None:
            c = v @ b
            b -= np.outer(v, c)
            bnorm2 = np.einsum("ij,ij->j", b, b)
        rr.append(new_norm / rnorm)
        rnorm = new_norm
        support.append(t)
        taken[t] = True
        supports.append(tuple(support))
        norms.append(rnorm)
        if rnorm <= zero_tol:
            termination = Termination.RESIDUAL_ZERO
            break

    return PursuitTrace(algorithm, tuple(supports), tuple(norms), tuple(rr),
                        termination, matrix, y)
