"""Universal lower bounds on the noise-only residual ratio.

Two sources are provided: the closed-form Beta-quantile bound
``gamma_rrt_alpha`` and the Monte Carlo bound ``train_gamma_lb`` obtained
by running the pursuit on pure-noise observations.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .betafn import BetaParams, beta_inv_cdf
from .errors import InvalidDims, InvalidParam
from .problems import gaussian_matrix_from_rng, gen_identity_hadamard
from .pursuit import Algorithm, default_kmax, run_pursuit
from .rng import make_rng


@dataclass(frozen=True)
class ThresholdSpec:
    """A threshold value together with how it was produced.

    ``kind`` is ``"analytic"`` (uses ``alpha``) or ``"trained"`` (uses
    ``ntr``, ``seed`` and ``algorithm``).
    """

    kind: str
    n: int
    p: int
    kmax: int
    value: float
    alpha: float | None = None
    ntr: int | None = None
    seed: int | None = None
    algorithm: str | None = None
    matrix_kind: str = "gaussian"

    def __post_init__(self):
        if self.kind not in ("analytic", "trained"):
            raise InvalidParam(f"unknown threshold kind {self.kind!r}")
        if not 0.0 < self.value <= 1.0:
            raise InvalidParam(f"threshold value {self.value} outside (0, 1]")
        if self.kind == "analytic" and not (self.alpha is not None and 0 < self.alpha < 1):
            raise InvalidParam("analytic threshold needs alpha in (0, 1)")

    def to_dict(self) -> dict:
        return {k: v for k, v in self.__dict__.items() if v is not None}


def gamma_rrt_alpha(n: int, p: int, kmax: int | None = None, alpha: float = 0.1) -> ThresholdSpec:
    """Closed-form threshold

        min_{k=1..kmax} sqrt(Finv_{(n-k)/2, 1/2}(alpha / (kmax (p - k + 1))))

    where ``Finv_{a,b}`` is the Beta quantile function. With probability at
    least ``1 - alpha`` no noise-only residual ratio falls below it.
    """
    if kmax is None:
        kmax = default_kmax(n)
    if not 0.0 < alpha < 1.0:
        raise InvalidParam(f"alpha must lie in (0, 1), got {alpha}")
    if kmax < 1 or (n - kmax) / 2.0 <= 0:
        raise InvalidDims(f"need 1 <= kmax <= n - 1, got n={n}, kmax={kmax}")
    if p < kmax:
        raise InvalidDims(f"need p >= kmax, got p={p}, kmax={kmax}")
    value = min(
        math.sqrt(beta_inv_cdf(BetaParams((n - k) / 2.0, 0.5), alpha / (kmax * (p - k + 1))))
        for k in range(1, kmax + 1)
    )
    return ThresholdSpec("analytic", n, p, kmax, value, alpha=alpha)


def _training_matrix(rng, n, p, matrix_kind):
    if matrix_kind == "gaussian":
        return gaussian_matrix_from_rng(rng, n, p)
    if matrix_kind == "identity_hadamard":
        if p != 2 * n:
            raise InvalidDims("identity_hadamard training requires p = 2n")
        return gen_identity_hadamard(n)
    raise InvalidParam(f"unknown training matrix kind {matrix_kind!r}")


def training_min_ratio(n, p, algorithm, seed, s, kmax=None, matrix_kind="gaussian") -> float:
    """Smallest residual ratio of one noise-only training run ``s``."""
    rng = make_rng(seed, s)
    x = _training_matrix(rng, n, p, matrix_kind)
    y = rng.standard_normal(n)
    trace = run_pursuit(algorithm, x, y, kmax)
    return min(trace.rr)


def train_gamma_lb(n: int, p: int, ntr: int, algorithm="OMP", seed: int = 0,
                   kmax: int | None = None, workers: int = 1,
                   matrix_kind: str = "gaussian") -> ThresholdSpec:
    """Noise-assisted offline training of a residual-ratio threshold.

    Each training sample ``s`` draws a standard normal observation and a
    fresh matrix with i.i.d. N(0, 1) entries (columns normalized), runs the
    pursuit up to ``kmax`` and keeps the smallest residual ratio. The
    threshold is the minimum over all samples. Sample ``s`` uses the stream
    ``make_rng(seed, s)``, so a larger ``ntr`` only adds samples.
    """
    if ntr < 1:
        raise InvalidParam("ntr must be >= 1")
    if n < 1 or p < 1:
        raise InvalidDims(f"invalid dimensions n={n}, p={p}")
    algorithm = Algorithm.parse(algorithm)
    if kmax is None:
        kmax = default_kmax(n)

    def one(s):
        return training_min_ratio(n, p, algorithm, seed, s, kmax, matrix_kind)

    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            mins = list(ex.map(one, range(ntr)))
    else:
        mins = [one(s) for s in range(ntr)]
    value = float(np.min(mins))
    return ThresholdSpec("trained", n, p, kmax, value, ntr=ntr, seed=seed,
                         algorithm=algorithm.value, matrix_kind=matrix_kind)


# --- cache sidecar ----------------------------------------------------------

def cache_key(n, p, algorithm, ntr, seed) -> str:
    return f"{n}:{p}:{Algorithm.parse(algorithm).value}:{ntr}:{seed}"


def load_cache(path) -> dict:
    path = Path(path)
    if not path.exists():
        return {}
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ValueError(f"{path}: cache must be a JSON object")
    return {str(k): float(v) for k, v in data.items()}


def save_cache(path, cache: dict) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", newline="\n") as fh:
        json.dump(dict(sorted(cache.items())), fh, indent=2)
        fh.write("\n")
    os.replace(tmp, path)


def cached_train_gamma_lb(cache_path, n, p, ntr, algorithm="OMP", seed=0, workers=1):
    """``train_gamma_lb`` backed by the JSON sidecar at ``cache_path``.

    Returns ``(spec, hit)``.
    """
    key = cache_key(n, p, algorithm, ntr, seed)
    cache = load_cache(cache_path) if cache_path else {}
    if key in cache:
        spec = ThresholdSpec("trained", n, p, default_kmax(n), cache[key], ntr=ntr,
                             seed=seed, algorithm=Algorithm.parse(algorithm).value)
        return spec, True
    spec = train_gamma_lb(n, p, ntr, algorithm, seed, workers=workers)
    if cache_path:
        cache[key] = spec.value
        save_cache(cache_path, cache)
    return spec, False


def lookup_cache(path, n, p, algorithm) -> float:
    """Trained value for ``(n, p, algorithm)`` from a cache file.

    When several entries match, the one with the largest ``ntr`` wins,
    then the smallest seed.
    """
    alg = Algorithm.parse(algorithm).value
    best = None
    for key, value in load_cache(path).items():
        parts = key.split(":")
        if len(parts) != 5:
            continue
        kn, kp, kalg, kntr, kseed = parts
        if (int(kn), int(kp), kalg) != (n, p, alg):
            continue
        rank = (-int(kntr), int(kseed))
        if best is None or rank < best[0]:
            best = (rank, value)
    if best is None:
        raise KeyError(f"no trained threshold for n={n}, p={p}, {alg} in {path}")
    return best[1]
