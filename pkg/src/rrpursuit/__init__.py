"""Tuning-free greedy sparse recovery driven by residual ratios."""

__version__ = "0.1.0"

from . import errors
from .errors import *  # noqa: F401,F403
from .lincore import SensingMatrix, least_squares_on_support, load_matrix, normalize_columns
from .problems import (NoiseModel, NoisySystem, SignalModel, SparseSignal, add_noise_at_snr,
                       gen_gaussian_matrix, gen_identity_hadamard, gen_signal, nmse, pe_indicator)
from .pursuit import Algorithm, PursuitTrace, Termination, default_kmax, run_pursuit
from .rng import make_rng
from .selectors import (Selector, SelectorResult, select_oracle_eps, select_oracle_k0,
                        select_oracle_sigma, select_rrt, select_tf)
from .thresholds import ThresholdSpec, gamma_rrt_alpha, train_gamma_lb

__all__ = [
    "SensingMatrix", "least_squares_on_support", "load_matrix", "normalize_columns",
    "NoiseModel", "NoisySystem", "SignalModel", "SparseSignal", "add_noise_at_snr",
    "gen_gaussian_matrix", "gen_identity_hadamard", "gen_signal", "nmse", "pe_indicator",
    "Algorithm", "PursuitTrace", "Termination", "default_kmax", "run_pursuit", "make_rng",
    "Selector", "SelectorResult", "select_oracle_eps", "select_oracle_k0", "select_oracle_sigma",
    "select_rrt", "select_tf", "ThresholdSpec", "gamma_rrt_alpha", "train_gamma_lb",
]
__all__ += [name for name in dir(errors) if isinstance(getattr(errors, name), type)]
