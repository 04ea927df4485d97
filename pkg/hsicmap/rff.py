"""Random Fourier features for the squared-exponential kernel.

The complex map z(x) = [exp(i w_1.x), ..., exp(i w_D.x)] / sqrt(D) is stored
as two real matrices, cos(XW)/sqrt(D) and sin(XW)/sqrt(D). Kernel
reconstruction uses the conjugate transpose, Re(Z Z^H) = C C^T + S S^T,
whose (i, j) entry is (1/D) sum_k cos(w_k.(x_i - x_j)).
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, replace

import numpy as np

from hsicmap.errors import AlreadyCentered, InputError, ShapeMismatch
from hsicmap.kernelcore import Bandwidth, GramMatrix, as_bandwidth, as_data_matrix
from hsicmap.seeding import generator, spawn_seeds

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class FrequencyMatrix:
    W: np.ndarray  # d x D
    sigma: Bandwidth
    seed: int

    @property
    def d(self) -> int:
        return self.W.shape[0]

    @property
    def D(self) -> int:
        return self.W.shape[1]


@dataclass(frozen=True, eq=False)
class FeatureMap:
    cos_part: np.ndarray  # n x D
    sin_part: np.ndarray  # n x D
    centered: bool
    frequencies: FrequencyMatrix

    @property
    def n(self) -> int:
        return self.cos_part.shape[0]

    @property
    def D(self) -> int:
        return self.cos_part.shape[1]


def sample_frequencies(d: int, D: int, sigma: Bandwidth | float, seed: int) -> FrequencyMatrix:
    """Draw W with i.i.d. N(0, sigma^-2) entries, reproducible from (seed, d, D, sigma)."""
    if d < 1 or D < 1:
        raise InputError(f"Need d >= 1 and D >= 1, got d={d}, D={D}")
    sigma = as_bandwidth(sigma)
    W = generator(seed).standard_normal((d, D))
    W /= sigma.sigma
    return FrequencyMatrix(W, sigma, int(seed))


def feature_map(X, W: FrequencyMatrix) -> FeatureMap:
    X = as_data_matrix(X, min_rows=1)
    if X.shape[1] != W.d:
        raise ShapeMismatch(f"X has {X.shape[1]} columns but W has {W.d} rows")
    proj = X @ W.W
    scale = 1.0 / np.sqrt(W.D)
    return FeatureMap(np.cos(proj) * scale, np.sin(proj) * scale, False, W)


def _center_columns(A: np.ndarray) -> np.ndarray:
    # shift by the first row first: identical rows centre to exact zeros
    B = A - A[:1]
    B -= B.mean(axis=0)
    return B


def center_features(Z: FeatureMap) -> FeatureMap:
    """Subtract column means from both parts (left-multiplication by H)."""
    if Z.centered:
        warnings.warn("feature map is already centered", AlreadyCentered, stacklevel=2)
    return replace(
        Z,
        cos_part=_center_columns(Z.cos_part),
        sin_part=_center_columns(Z.sin_part),
        centered=True,
    )


def approx_gram(Z: FeatureMap) -> GramMatrix:
    K = Z.cos_part @ Z.cos_part.T
    K += Z.sin_part @ Z.sin_part.T
    return GramMatrix(K, Z.frequencies.sigma, centered=Z.centered)


def feature_pair(
    X,
    Y,
    D: int,
    sigma_x: Bandwidth | float,
    sigma_y: Bandwidth | float,
    seed: int,
    *,
    D_y: int | None = None,
) -> tuple[FeatureMap, FeatureMap]:
    """Centered maps for X and Y, frequencies from independent sub-streams of `seed`."""
    X = as_data_matrix(X, "X", min_rows=1)
    Y = as_data_matrix(Y, "Y", min_rows=1)
    seed_x, seed_y = spawn_seeds(seed, 2)
    Wx = sample_frequencies(X.shape[1], D, sigma_x, seed_x)
    Wy = sample_frequencies(Y.shape[1], D if D_y is None else D_y, sigma_y, seed_y)
    logger.debug("feature pair D_x=%s D_y=%s seed=%s", Wx.D, Wy.D, seed)
    return center_features(feature_map(X, Wx)), center_features(feature_map(Y, Wy))
