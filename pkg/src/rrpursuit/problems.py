"""Experiment instances: matrices, sparse signals, noise at a target SNR, metrics."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.linalg import hadamard

from .errors import K0TooLarge, NotPowerOfTwo, ZeroSignal
from .lincore import SensingMatrix, normalize_columns, read_matrix_csv, write_matrix_csv
from .rng import as_rng


class SignalModel(str, enum.Enum):
    UNIFORM = "Uniform"
    RANDOM_GAUSSIAN = "RandomGaussian"
    EXPLICIT = "Explicit"

    @classmethod
    def parse(cls, value) -> "SignalModel":
        if isinstance(value, cls):
            return value
        aliases = {"uniform": cls.UNIFORM, "gaussian": cls.RANDOM_GAUSSIAN,
                   "randomgaussian": cls.RANDOM_GAUSSIAN, "random": cls.RANDOM_GAUSSIAN,
                   "explicit": cls.EXPLICIT}
        try:
            return aliases[str(value).lower().replace("_", "").replace("-", "")]
        except KeyError:
            raise ValueError(f"unknown signal model {value!r}") from None


class NoiseModel(str, enum.Enum):
    GAUSSIAN = "Gaussian"
    L2_BOUNDED = "L2Bounded"

    @classmethod
    def parse(cls, value) -> "NoiseModel":
        if isinstance(value, cls):
            return value
        key = str(value).lower().replace("_", "").replace("-", "")
        if key == "gaussian":
            return cls.GAUSSIAN
        if key in ("l2bounded", "bounded"):
            return cls.L2_BOUNDED
        raise ValueError(f"unknown noise model {value!r}")


_rng = as_rng


# --- matrices -------------------------------------------------------------

def gaussian_matrix_from_rng(rng: np.random.Generator, n: int, p: int) -> SensingMatrix:
    return normalize_columns(rng.standard_normal((n, p)))


def gen_gaussian_matrix(n: int, p: int, seed) -> SensingMatrix:
    """i.i.d. N(0, 1) entries followed by column normalization."""
    if n < 1 or p < 1:
        raise ValueError(f"invalid dimensions n={n}, p={p}")
    return gaussian_matrix_from_rng(_rng(seed), n, p)


def gen_identity_hadamard(n: int) -> SensingMatrix:
    """``[I_n, H_n / sqrt(n)]`` with ``H_n`` the Sylvester-Hadamard matrix."""
    if n < 1 or n & (n - 1):
        raise NotPowerOfTwo(f"n={n} is not a power of two")
    h = hadamard(n).astype(np.float64) / np.sqrt(n)
    return SensingMatrix(np.hstack([np.eye(n), h]))


def mutual_coherence(matrix: SensingMatrix) -> float:
    g = np.abs(matrix.data.T @ matrix.data)
    np.fill_diagonal(g, 0.0)
    return float(g.max())


# --- signals --------------------------------------------------------------

@dataclass(frozen=True)
class SparseSignal:
    beta: np.ndarray = field(repr=False)
    model: SignalModel = SignalModel.EXPLICIT
    support: tuple = field(init=False)

    def __post_init__(self):
        beta = np.array(self.beta, dtype=np.float64)
        beta.setflags(write=False)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "support", tuple(int(i) for i in np.flatnonzero(beta)))
        object.__setattr__(self, "model", SignalModel.parse(self.model))

    @property
    def k0(self) -> int:
        return len(self.support)

    @property
    def p(self) -> int:
        return self.beta.size

    @property
    def beta_min(self) -> float:
        return float(np.abs(self.beta[list(self.support)]).min()) if self.support else 0.0

    @property
    def beta_max(self) -> float:
        return float(np.abs(self.beta[list(self.support)]).max()) if self.support else 0.0

    @property
    def dynamic_range(self) -> float:
        return self.beta_max / self.beta_min if self.support else 1.0


def gen_signal(p: int, k0: int, model="uniform", support=None, values=None,
               seed=0) -> SparseSignal:
    """Draw a ``k0``-sparse vector of length ``p``.

    ``support=None`` samples the support uniformly without replacement;
    otherwise the given indices are used. ``values`` is required for the
    explicit model and ignored by the random ones.
    """
    model = SignalModel.parse(model)
    if k0 < 0 or k0 > p:
        raise K0TooLarge(f"k0={k0} must lie in [0, p={p}]")
    rng = _rng(seed)
    if support is None:
        support = np.sort(rng.choice(p, size=k0, replace=False)) if k0 else np.array([], int)
    else:
        support = np.asarray(list(support), dtype=int)
        if support.size != k0 or len(set(support.tolist())) != k0:
            raise ValueError("explicit support must hold k0 distinct indices")
        if k0 and (support.min() < 0 or support.max() >= p):
            raise ValueError("support index out of range")
    if model is SignalModel.UNIFORM:
        vals = rng.choice([-1.0, 1.0], size=k0)
    elif model is SignalModel.RANDOM_GAUSSIAN:
        vals = rng.standard_normal(k0)
    else:
        if values is None or len(values) != k0:
            raise ValueError("explicit model needs k0 values")
        vals = np.asarray(values, dtype=np.float64)
        if np.any(vals == 0):
            raise ValueError("explicit values must be nonzero")
    beta = np.zeros(p)
    beta[support] = vals
    return SparseSignal(beta, model)


# --- noise ----------------------------------------------------------------

@dataclass(frozen=True)
class NoisySystem:
    matrix: SensingMatrix = field(repr=False)
    signal: SparseSignal = field(repr=False)
    noise: np.ndarray = field(repr=False)
    y: np.ndarray = field(repr=False)
    snr_db: float | None
    noise_model: NoiseModel
    sigma: float | None = None
    eps2: float | None = None
    seed: object = None

    def save(self, directory) -> None:
        """Write ``matrix.csv``, ``beta.csv``, ``noise.csv``, ``y.csv`` and ``manifest.json``."""
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        write_matrix_csv(d / "matrix.csv", self.matrix.data)
        write_vector_csv(d / "beta.csv", self.signal.beta)
        write_vector_csv(d / "noise.csv", self.noise)
        write_vector_csv(d / "y.csv", self.y)
        manifest = {
            "n": self.matrix.n, "p": self.matrix.p, "k0": self.signal.k0,
            "snr_db": self.snr_db, "seed": self.seed,
            "signal_model": self.signal.model.value, "noise_model": self.noise_model.value,
            "sigma": self.sigma, "eps2": self.eps2,
        }
        with open(d / "manifest.json", "w", newline="\n") as fh:
            json.dump(manifest, fh, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, directory) -> "NoisySystem":
        d = Path(directory)
        with open(d / "manifest.json") as fh:
            m = json.load(fh)
        matrix = SensingMatrix(read_matrix_csv(d / "matrix.csv"))
        signal = SparseSignal(read_vector_csv(d / "beta.csv"), SignalModel.parse(m["signal_model"]))
        return cls(matrix, signal, read_vector_csv(d / "noise.csv"), read_vector_csv(d / "y.csv"),
                   m["snr_db"], NoiseModel.parse(m["noise_model"]), m.get("sigma"),
                   m.get("eps2"), m.get("seed"))


def add_noise_at_snr(matrix: SensingMatrix, signal: SparseSignal, snr_db=None,
                     noise_model="gaussian", seed=0, sigma=None, eps2=None) -> NoisySystem:
    """Observation ``y = X beta + w`` with ``w`` scaled to the requested SNR.

    Gaussian noise uses ``sigma^2 = ||X beta||^2 / (n 10^(snr/10))``; bounded
    noise is drawn uniformly on the sphere of radius
    ``eps2 = ||X beta|| / 10^(snr/20)``. Passing ``sigma`` (or ``eps2``)
    instead of ``snr_db`` fixes the noise level directly, which is the only
    option for a zero signal.
    """
    noise_model = NoiseModel.parse(noise_model)
    rng = _rng(seed)
    n = matrix.n
    clean = matrix.data @ signal.beta
    power = float(clean @ clean)
    if snr_db is not None:
        if power <= 0.0:
            raise ZeroSignal("SNR is undefined for a zero signal; pass sigma/eps2 instead")
        if noise_model is NoiseModel.GAUSSIAN:
            sigma = float(np.sqrt(power / (n * 10.0 ** (snr_db / 10.0))))
        else:
            eps2 = float(np.sqrt(power) / 10.0 ** (snr_db / 20.0))
    if noise_model is NoiseModel.GAUSSIAN:
        if sigma is None or sigma < 0:
            raise ValueError("need snr_db or a non-negative sigma")
        w = sigma * rng.standard_normal(n)
    else:
        if eps2 is None or eps2 < 0:
            raise ValueError("need snr_db or a non-negative eps2")
        g = rng.standard_normal(n)
        w = eps2 * g / np.linalg.norm(g)
    return NoisySystem(matrix, signal, w, clean + w, snr_db, noise_model, sigma, eps2,
                       seed if not isinstance(seed, np.random.Generator) else None)


# --- metrics --------------------------------------------------------------

def nmse(beta, beta_hat) -> float:
    """Per-trial ``||beta - beta_hat||^2 / ||beta||^2``."""
    beta = np.asarray(beta, dtype=np.float64)
    den = float(beta @ beta)
    if den <= 0.0:
        raise ZeroSignal("normalized error is undefined for a zero signal")
    d = beta - np.asarray(beta_hat, dtype=np.float64)
    return float(d @ d) / den


def pe_indicator(support_true, support_hat) -> int:
    """1 when the supports differ as sets, else 0."""
    return int(set(int(i) for i in support_true) != set(int(i) for i in support_hat))


def write_vector_csv(path, v, header: str | None = None) -> None:
    with open(path, "w", newline="\n") as fh:
        if header:
            fh.write(header + "\n")
        for x in np.ravel(v):
            fh.write(repr(float(x)) + "\n")


def read_vector_csv(path) -> np.ndarray:
    return read_matrix_csv(path).ravel()
