"""Dense linear-algebra kernel shared by the greedy pursuits.

The projection onto a growing set of columns is kept as an explicit
orthonormal basis that is extended one column at a time by Gram-Schmidt
with a single re-orthogonalisation pass.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.linalg import solve_triangular

from .errors import RankDeficient, ZeroColumn

ZERO_COLUMN_TOL = 1e-12
RANK_TOL = 1e-10
RESIDUAL_ZERO_TOL = 1e-10  # relative to ||y||
NORM_TOL = 1e-9


def _frozen(a):
    a = np.array(a, dtype=np.float64, order="C", copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SensingMatrix:
    """Design matrix ``X`` with unit-norm columns."""

    data: np.ndarray

    def __post_init__(self):
        data = _frozen(self.data)
        if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] < 1:
            raise ValueError(f"expected a non-empty 2-D matrix, got shape {data.shape}")
        norms = np.linalg.norm(data, axis=0)
        bad = np.flatnonzero(np.abs(norms - 1.0) > NORM_TOL)
        if bad.size:
            raise ValueError(
                f"column {bad[0]} has norm {norms[bad[0]]:.3g}; use normalize_columns")
        object.__setattr__(self, "data", data)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def p(self) -> int:
        return self.data.shape[1]

    def column(self, j) -> np.ndarray:
        return self.data[:, j]

    def columns(self, idx) -> np.ndarray:
        return self.data[:, list(idx)]

    def __eq__(self, other):
        if not isinstance(other, SensingMatrix):
            return NotImplemented
        return self.data.shape == other.data.shape and bool(np.array_equal(self.data, other.data))

    def __hash__(self):
        return hash((self.data.shape, self.data.tobytes()))


def normalize_columns(matrix) -> SensingMatrix:
    """Scale every column of ``matrix`` to unit Euclidean norm."""
    a = np.array(matrix, dtype=np.float64)
    if a.ndim == 1:
        a = a[:, None]
    norms = np.linalg.norm(a, axis=0)
    small = np.flatnonzero(norms < ZERO_COLUMN_TOL)
    if small.size:
        raise ZeroColumn(int(small[0]))
    return SensingMatrix(a / norms)


@dataclass(frozen=True)
class ProjectionState:
    """Support, orthonormal basis of its span and the current residual."""

    support: tuple
    orthobasis: np.ndarray
    residual: np.ndarray
    residual_norm: float

    @property
    def k(self) -> int:
        return len(self.support)


def empty_state(y) -> ProjectionState:
    y = _frozen(y).ravel()
    return ProjectionState((), _frozen(np.empty((y.size, 0))), y, float(np.linalg.norm(y)))


def orthogonalize(q: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Return ``x`` minus its projection on the columns of ``q`` (two passes)."""
    if q.shape[1] == 0:
        return np.array(x, dtype=np.float64)
    v = x - q @ (q.T @ x)
    return v - q @ (q.T @ v)


def project_extend(state: ProjectionState, matrix: SensingMatrix, index: int,
                   y=None) -> ProjectionState:
    """Add column ``index`` to the support and update the residual.

    ``y`` is accepted for interface symmetry; the residual of ``state``
    already carries everything needed since ``r = (I - P) y``.
    """
    if index in state.support:
        raise ValueError(f"column {index} is already in the support")
    v = orthogonalize(state.orthobasis, matrix.column(index))
    vnorm = float(np.linalg.norm(v))
    if vnorm < RANK_TOL:
        raise RankDeficient(index)
    q = v / vnorm
    r = state.residual - q * (q @ state.residual)
    rnorm = float(np.linalg.norm(r))
    # rounding must not make the residual grow
    rnorm = min(rnorm, state.residual_norm)
    return ProjectionState(
        state.support + (int(index),),
        _frozen(np.column_stack([state.orthobasis, q])),
        _frozen(r),
        rnorm,
    )


def state_for_support(matrix: SensingMatrix, support, y) -> ProjectionState:
    """Build the projection state of ``y`` on ``support`` column by column."""
    state = empty_state(y)
    for j in support:
        state = project_extend(state, matrix, j, y)
    return state


def least_squares_on_support(matrix: SensingMatrix, support, y) -> np.ndarray:
    """Coefficients ``b`` minimising ``||y - X_S b||`` for the columns in ``support``."""
    support = list(support)
    y = np.asarray(y, dtype=np.float64).ravel()
    if not support:
        return np.zeros(0)
    xs = matrix.columns(support)
    q, r = np.linalg.qr(xs)
    diag = np.abs(np.diag(r))
    if diag.min() < RANK_TOL * max(diag.max(), 1.0):
        raise RankDeficient()
    return solve_triangular(r, q.T @ y, lower=False)


def embed(coef, support, p: int) -> np.ndarray:
    """Scatter ``coef`` into a length-``p`` zero vector at ``support``."""
    out = np.zeros(p)
    if len(support):
        out[list(support)] = coef
    return out


# --- file ingestion -------------------------------------------------------

def _has_header(path) -> bool:
    with open(path) as fh:
        first = fh.readline().strip()
    try:
        [float(v) for v in first.split(",")]
    except ValueError:
        return True
    return False


def read_matrix_csv(path) -> np.ndarray:
    """Comma-separated rows; a non-numeric first line is taken as a header."""
    skip = 1 if _has_header(path) else 0
    return np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2, skiprows=skip)


def write_matrix_csv(path, a) -> None:
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    with open(path, "w", newline="\n") as fh:
        for row in a:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def read_matrix_bin(path) -> np.ndarray:
    """Raw little-endian float64 matrix preceded by ``n, p`` as uint32."""
    raw = Path(path).read_bytes()
    if len(raw) < 8:
        raise ValueError(f"{path}: truncated header")
    n, p = struct.unpack("<II", raw[:8])
    body = raw[8:]
    if len(body) != 8 * n * p:
        raise ValueError(f"{path}: expected {n}x{p} float64 values, got {len(body)} bytes")
    return np.frombuffer(body, dtype="<f8").reshape(n, p).astype(np.float64)


def write_matrix_bin(path, a) -> None:
    a = np.atleast_2d(np.asarray(a, dtype="<f8"))
    n, p = a.shape
    Path(path).write_bytes(struct.pack("<II", n, p) + np.ascontiguousarray(a).tobytes())


def load_matrix(path, normalize: bool = True) -> SensingMatrix:
    """Load a matrix from ``.csv`` or the binary format (any other suffix)."""
    path = Path(path)
    a = read_matrix_csv(path) if path.suffix.lower() == ".csv" else read_matrix_bin(path)
    return normalize_columns(a) if normalize else SensingMatrix(a)
