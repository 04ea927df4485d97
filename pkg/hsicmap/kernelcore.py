"""Dense squared-exponential kernels, bandwidth heuristics and Gram centering.

Row-block parallelism is not used: every reduction runs in numpy's fixed
order, so results are bitwise reproducible for the same inputs.
"""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist

from hsicmap.errors import AllSamplesIdentical, InputError, NonFiniteInput, ShapeMismatch

logger = logging.getLogger(__name__)


class Heuristic(enum.Enum):
    MEAN = "mean"
    MEDIAN = "median"
    FIXED = "fixed"


@dataclass(frozen=True)
class Bandwidth:
    sigma: float
    heuristic: Heuristic = Heuristic.FIXED

    def __post_init__(self) -> None:
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise InputError(f"Bandwidth must be positive and finite, got {self.sigma}")


@dataclass(frozen=True, eq=False)
class GramMatrix:
    values: np.ndarray
    sigma: Bandwidth | None
    centered: bool = False

    @property
    def n(self) -> int:
        return self.values.shape[0]


def as_bandwidth(sigma: Bandwidth | float) -> Bandwidth:
    if isinstance(sigma, Bandwidth):
        return sigma
    return Bandwidth(float(sigma))


def as_data_matrix(A, name: str = "X", *, min_rows: int = 2) -> np.ndarray:
    """Validate and return an n x d float64 matrix; 1-D input becomes a column."""
    X = np.asarray(A, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.ndim != 2 or X.shape[1] < 1:
        raise ShapeMismatch(f"{name}: expected an n x d matrix, got shape {X.shape}")
    if X.shape[0] < min_rows:
        raise InputError(f"{name}: need at least {min_rows} samples, got {X.shape[0]}")
    if not np.all(np.isfinite(X)):
        raise NonFiniteInput(f"{name}: contains NaN or Inf")
    return X


def standardize(X: np.ndarray) -> np.ndarray:
    """Z-score columns; zero-variance columns are only centered."""
    X = as_data_matrix(X, min_rows=1)
    std = X.std(axis=0)
    std[std == 0] = 1.0
    return (X - X.mean(axis=0)) / std


def bandwidth_heuristic(X, heuristic: Heuristic = Heuristic.MEAN) -> Bandwidth:
    X = as_data_matrix(X)
    if heuristic is Heuristic.FIXED:
        raise InputError("FIXED is not a heuristic; build a Bandwidth directly")

    dist = pdist(X, metric="euclidean")
    if not np.any(dist > 0):
        raise AllSamplesIdentical(f"All {X.shape[0]} samples are identical; bandwidth would be 0")

    sigma = float(np.mean(dist)) if heuristic is Heuristic.MEAN else float(np.median(dist))
    if sigma <= 0:
        # median of mostly-duplicated rows
        raise AllSamplesIdentical("Median pairwise distance is 0; use the mean heuristic")
    logger.debug("bandwidth %s over n=%s -> %.6g", heuristic.value, X.shape[0], sigma)
    return Bandwidth(sigma, heuristic)


def pairwise_sq_distances(X: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances via |x|^2 + |x'|^2 - 2 x.x', clamped at 0.

    Rows are shifted by the first sample beforehand (distances are
    translation invariant, and identical rows then give exact zeros).
    The upper triangle is mirrored so the result is exactly symmetric.
    """
    Xs = X - X[:1]
    sq = np.einsum("ij,ij->i", Xs, Xs)
    D2 = Xs @ Xs.T
    D2 *= -2.0
    D2 += sq[:, None]
    D2 += sq[None, :]
    np.maximum(D2, 0.0, out=D2)
    _mirror_upper(D2)
    np.fill_diagonal(D2, 0.0)
    return D2


def _mirror_upper(A: np.ndarray, block: int = 512) -> None:
    # in place, block by block, to avoid n^2 index arrays
    n = A.shape[0]
    for i0 in range(block, n, block):
        i1 = min(i0 + block, n)
        A[i0:i1, :i0] = A[:i0, i0:i1].T
    for i0 in range(0, n, block):
        i1 = min(i0 + block, n)
        tile = A[i0:i1, i0:i1]
        low = np.tril_indices(i1 - i0, k=-1)
        tile[low] = tile.T[low]


def se_kernel_values(X: np.ndarray, sigma: Bandwidth) -> np.ndarray:
    K = pairwise_sq_distances(X)
    K *= -1.0 / (2.0 * sigma.sigma * sigma.sigma)
    np.exp(K, out=K)
    return K


def se_kernel_matrix(X, sigma: Bandwidth | float) -> GramMatrix:
    """K_ij = exp(-|x_i - x_j|^2 / (2 sigma^2))."""
    X = as_data_matrix(X, min_rows=1)
    sigma = as_bandwidth(sigma)
    return GramMatrix(se_kernel_values(X, sigma), sigma)


def double_center(K: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
    """H K H as K - row means - column means + grand mean, O(n^2)."""
    row = K.mean(axis=1)
    col = K.mean(axis=0)
    grand = row.mean()
    if out is None:
        out = K.copy()
    elif out is not K:
        out[...] = K
    out -= row[:, None]
    out -= col[None, :]
    out += grand
    return out


def center_gram(K: GramMatrix | np.ndarray) -> GramMatrix:
    values = K.values if isinstance(K, GramMatrix) else np.asarray(K, dtype=np.float64)
    if values.ndim != 2 or values.shape[0] != values.shape[1]:
        raise ShapeMismatch(f"Gram matrix must be square, got shape {values.shape}")
    sigma = K.sigma if isinstance(K, GramMatrix) else None
    return GramMatrix(double_center(values), sigma, centered=True)
