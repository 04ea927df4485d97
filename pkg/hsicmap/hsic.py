from __future__ import annotations

import enum
import logging
from dataclasses import dataclass

import numpy as np

from hsicmap.errors import NotCentered, RowCountMismatch
from hsicmap.kernelcore import (
    Bandwidth,
    Heuristic,
    as_bandwidth,
    as_data_matrix,
    bandwidth_heuristic,
    double_center,
    se_kernel_values,
)
from hsicmap.rff import FeatureMap, feature_pair

logger = logging.getLogger(__name__)


class Method(enum.Enum):
    HSIC = "hsic"
    RHSIC = "rhsic"


@dataclass(frozen=True)
class DependenceStatistic:
    value: float  # raw, may be a hair below 0 from round-off
    method: Method
    n: int
    sigma_x: Bandwidth
    sigma_y: Bandwidth
    D: int | None = None

    @property
    def clamped(self) -> float:
        return max(self.value, 0.0)


@dataclass(frozen=True, eq=False)
class CrossCovariance:
    """Z_x^H Z_y split into real and imaginary D_x x D_y blocks."""

    real: np.ndarray
    imag: np.ndarray

    def sq_frobenius(self) -> float:
        return float(np.sum(self.real * self.real) + np.sum(self.imag * self.imag))


def check_pair(X, Y) -> tuple[np.ndarray, np.ndarray]:
    X = as_data_matrix(X, "X")
    Y = as_data_matrix(Y, "Y")
    if X.shape[0] != Y.shape[0]:
        raise RowCountMismatch(f"X has {X.shape[0]} rows, Y has {Y.shape[0]}")
    return X, Y


def resolve_bandwidth(X: np.ndarray, sigma: Bandwidth | float | None, heuristic: Heuristic) -> Bandwidth:
    if sigma is None:
        return bandwidth_heuristic(X, heuristic)
    return as_bandwidth(sigma)


def centered_gram(X: np.ndarray, sigma: Bandwidth) -> np.ndarray:
    """H K H for the SE kernel, centred in place (one n x n buffer)."""
    K = se_kernel_values(X, sigma)
    return double_center(K, out=K)


def hsic(
    X,
    Y,
    sigma_x: Bandwidth | float | None = None,
    sigma_y: Bandwidth | float | None = None,
    *,
    heuristic: Heuristic = Heuristic.MEAN,
) -> DependenceStatistic:
    """(1/n^2) Tr(K_x H K_y H) with SE kernels.

    Computed as the elementwise product-sum of the two centred Grams
    (H is idempotent), O(n^2) after the kernels; a constant input therefore
    yields exactly zero.
    """
    X, Y = check_pair(X, Y)
    sx = resolve_bandwidth(X, sigma_x, heuristic)
    sy = resolve_bandwidth(Y, sigma_y, heuristic)
    n = X.shape[0]

    Lx = centered_gram(X, sx)
    Ly = centered_gram(Y, sy)
    value = float(np.vdot(Lx, Ly)) / (n * n)
    logger.debug("hsic n=%s sigma=(%.4g, %.4g) -> %.6g", n, sx.sigma, sy.sigma, value)
    return DependenceStatistic(value, Method.HSIC, n, sx, sy)


def rhsic_cross_covariance(Zx: FeatureMap, Zy: FeatureMap) -> CrossCovariance:
    if not (Zx.centered and Zy.centered):
        raise NotCentered("rhsic needs centered feature maps (see center_features)")
    if Zx.n != Zy.n:
        raise RowCountMismatch(f"Zx has {Zx.n} rows, Zy has {Zy.n}")
    Cx, Sx = Zx.cos_part, Zx.sin_part
    Cy, Sy = Zy.cos_part, Zy.sin_part
    # (Cx - iSx)^T (Cy + iSy)
    real = Cx.T @ Cy
    real += Sx.T @ Sy
    imag = Cx.T @ Sy
    imag -= Sx.T @ Cy
    return CrossCovariance(real, imag)


def rhsic(Zx: FeatureMap, Zy: FeatureMap, *, cov: CrossCovariance | None = None) -> DependenceStatistic:
    """(1/n^2) |Z_x^H Z_y|_F^2 from centered maps, O(n D_x D_y)."""
    if cov is None:
        cov = rhsic_cross_covariance(Zx, Zy)
    n = Zx.n
    value = cov.sq_frobenius() / (n * n)
    return DependenceStatistic(
        value,
        Method.RHSIC,
        n,
        Zx.frequencies.sigma,
        Zy.frequencies.sigma,
        D=min(Zx.D, Zy.D),
    )


def dependence(
    X,
    Y,
    method: Method = Method.HSIC,
    sigma_x: Bandwidth | float | None = None,
    sigma_y: Bandwidth | float | None = None,
    *,
    D: int = 30,
    seed: int = 0,
    heuristic: Heuristic = Heuristic.MEAN,
) -> DependenceStatistic:
    """HSIC or RHSIC on raw data, bandwidths from the heuristic when not given."""
    X, Y = check_pair(X, Y)
    sx = resolve_bandwidth(X, sigma_x, heuristic)
    sy = resolve_bandwidth(Y, sigma_y, heuristic)
    if method is Method.HSIC:
        return hsic(X, Y, sx, sy)
    Zx, Zy = feature_pair(X, Y, D, sx, sy, seed)
    return rhsic(Zx, Zy)
