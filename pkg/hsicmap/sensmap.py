"""Sensitivity maps: derivatives of HSIC / RHSIC with respect to every input entry.

For HSIC the row-resolved gradient of (1/n^2) Tr(K_x H K_y H) is

    S^x_ij = -(2 / (sigma_x^2 n^2)) sum_k (H K_y H)_ik (K_x)_ik (X_ij - X_kj)

and symmetrically for Y. For RHSIC the derivative of row i of the complex map
is i * w_k * z_k(x_i), so with P = Z~_y C^H every entry costs O(D_x) once the
D_x x D_y cross-covariance C is known:

    S^x = (2 / n^2) (cos(XW)/sqrt(D) * Im P - sin(XW)/sqrt(D) * Re P) W^T
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

from hsicmap.errors import InputError, NotCentered, ShapeMismatch
from hsicmap.hsic import Method, check_pair, hsic, resolve_bandwidth, rhsic, rhsic_cross_covariance
from hsicmap.kernelcore import (
    Bandwidth,
    Heuristic,
    as_bandwidth,
    as_data_matrix,
    double_center,
    se_kernel_values,
)
from hsicmap.rff import FeatureMap, FrequencyMatrix, center_features, feature_map

logger = logging.getLogger(__name__)

StatFn = Callable[[np.ndarray, np.ndarray], float]


@dataclass(frozen=True, eq=False)
class SensitivityMap:
    Sx: np.ndarray  # n x d_x
    Sy: np.ndarray  # n x d_y
    method: Method | None

    @property
    def S(self) -> np.ndarray:
        """Total map [S^x, S^y], n x (d_x + d_y)."""
        return np.hstack([self.Sx, self.Sy])

    def swapped(self) -> "SensitivityMap":
        return SensitivityMap(self.Sy, self.Sx, self.method)


@dataclass(frozen=True, eq=False)
class SensitivityAggregate:
    per_sample: np.ndarray  # (1/d) sum_j S_ij^2
    per_feature: np.ndarray  # (1/n) sum_i S_ij^2
    sample_norms: np.ndarray  # |s_i| over the concatenated row
    sample_norms_x: np.ndarray  # |s_i| over the x-block only


def _kernel_block_gradient(Z: np.ndarray, K: np.ndarray, L_other: np.ndarray, sigma: Bandwidth, n: int) -> np.ndarray:
    # sum_k M_ik (Z_ij - Z_kj) = Z_ij * rowsum(M)_i - (M Z)_ij, with M = L_other o K
    M = L_other * K
    Zs = Z - Z[:1]
    G = Zs * M.sum(axis=1)[:, None]
    G -= M @ Zs
    G *= -2.0 / (sigma.sigma * sigma.sigma * n * n)
    return G


def hsic_sensitivity(
    X,
    Y,
    sigma_x: Bandwidth | float | None = None,
    sigma_y: Bandwidth | float | None = None,
    *,
    heuristic: Heuristic = Heuristic.MEAN,
) -> SensitivityMap:
    X, Y = check_pair(X, Y)
    sx = resolve_bandwidth(X, sigma_x, heuristic)
    sy = resolve_bandwidth(Y, sigma_y, heuristic)
    n = X.shape[0]

    Kx = se_kernel_values(X, sx)
    Ky = se_kernel_values(Y, sy)
    Sx = _kernel_block_gradient(X, Kx, double_center(Ky), sx, n)
    # Kx is no longer needed uncentred
    Sy = _kernel_block_gradient(Y, Ky, double_center(Kx, out=Kx), sy, n)
    return SensitivityMap(Sx, Sy, Method.HSIC)


def _check_map(Z: FeatureMap, A: np.ndarray, W: FrequencyMatrix, name: str) -> None:
    if not Z.centered:
        raise NotCentered(f"{name}: rhsic_sensitivity needs a centered feature map")
    if Z.n != A.shape[0]:
        raise ShapeMismatch(f"{name}: feature map has {Z.n} rows, data has {A.shape[0]}")
    if W.d != A.shape[1] or W.D != Z.D:
        raise ShapeMismatch(f"{name}: frequencies are {W.d} x {W.D}, data has {A.shape[1]} columns, map {Z.D} features")


def rhsic_sensitivity(
    X,
    Y,
    Zx: FeatureMap,
    Zy: FeatureMap,
    Wx: FrequencyMatrix | None = None,
    Wy: FrequencyMatrix | None = None,
) -> SensitivityMap:
    """Gradient of rhsic(Zx, Zy) at fixed frequencies; no n x n matrix is formed."""
    X, Y = check_pair(X, Y)
    Wx = Wx or Zx.frequencies
    Wy = Wy or Zy.frequencies
    _check_map(Zx, X, Wx, "X")
    _check_map(Zy, Y, Wy, "Y")
    n = X.shape[0]

    cov = rhsic_cross_covariance(Zx, Zy)
    R, I = cov.real, cov.imag
    raw_x = feature_map(X, Wx)
    raw_y = feature_map(Y, Wy)

    # P = Z~_y C^H, C^H = R^T - i I^T
    Pr = Zy.cos_part @ R.T + Zy.sin_part @ I.T
    Pi = Zy.sin_part @ R.T - Zy.cos_part @ I.T
    Sx = (raw_x.cos_part * Pi - raw_x.sin_part * Pr) @ Wx.W.T

    # P' = Z~_x C
    Qr = Zx.cos_part @ R - Zx.sin_part @ I
    Qi = Zx.cos_part @ I + Zx.sin_part @ R
    Sy = (raw_y.cos_part * Qi - raw_y.sin_part * Qr) @ Wy.W.T

    scale = 2.0 / (n * n)
    return SensitivityMap(Sx * scale, Sy * scale, Method.RHSIC)


def aggregate(S: SensitivityMap) -> SensitivityAggregate:
    full = S.S
    sq = full * full
    return SensitivityAggregate(
        per_sample=sq.mean(axis=1),
        per_feature=sq.mean(axis=0),
        sample_norms=np.sqrt(sq.sum(axis=1)),
        sample_norms_x=np.sqrt(np.sum(S.Sx * S.Sx, axis=1)),
    )


def hsic_evaluator(sigma_x: Bandwidth | float, sigma_y: Bandwidth | float) -> StatFn:
    sx, sy = as_bandwidth(sigma_x), as_bandwidth(sigma_y)
    return lambda X, Y: hsic(X, Y, sx, sy).value


def rhsic_evaluator(Wx: FrequencyMatrix, Wy: FrequencyMatrix) -> StatFn:
    def _stat(X: np.ndarray, Y: np.ndarray) -> float:
        Zx = center_features(feature_map(X, Wx))
        Zy = center_features(feature_map(Y, Wy))
        return rhsic(Zx, Zy).value

    return _stat


def _default_steps(A: np.ndarray) -> np.ndarray:
    std = A.std(axis=0)
    std[std == 0] = 1.0
    return 1e-5 * std


def finite_difference_map(stat_fn: StatFn, X, Y, h: float | None = None) -> SensitivityMap:
    """Central differences (f(e + h) - f(e - h)) / 2h for every entry of X and Y.

    Without `h` the step is 1e-5 times each column's standard deviation.
    Parameters captured by `stat_fn` (bandwidths, frequencies) stay fixed.
    """
    if h is not None and not h > 0:
        raise InputError(f"Finite-difference step must be positive, got {h}")
    X = as_data_matrix(X, "X", min_rows=1).copy()
    Y = as_data_matrix(Y, "Y", min_rows=1).copy()

    def _block(A: np.ndarray, other: np.ndarray, first: bool) -> np.ndarray:
        steps = np.full(A.shape[1], h) if h is not None else _default_steps(A)
        G = np.empty_like(A)
        for i in range(A.shape[0]):
            for j in range(A.shape[1]):
                orig = A[i, j]
                A[i, j] = orig + steps[j]
                up = stat_fn(A, other) if first else stat_fn(other, A)
                A[i, j] = orig - steps[j]
                down = stat_fn(A, other) if first else stat_fn(other, A)
                A[i, j] = orig
                G[i, j] = (up - down) / (2.0 * steps[j])
        return G

    Sx = _block(X, Y, True)
    Sy = _block(Y, X, False)
    return SensitivityMap(Sx, Sy, None)


def ascent_step(X, Y, S: SensitivityMap, eps: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Points displaced along the field, (x + eps S^x, y + eps S^y).

    The default eps = 1e-2 / max|S| moves no coordinate by more than 0.01.
    """
    X, Y = check_pair(X, Y)
    if S.Sx.shape != X.shape or S.Sy.shape != Y.shape:
        raise ShapeMismatch("sensitivity map does not match the data")
    if eps is None:
        peak = float(np.max(np.abs(S.S)))
        if peak == 0:
            return X.copy(), Y.copy()
        eps = 1e-2 / peak
    return X + eps * S.Sx, Y + eps * S.Sy
