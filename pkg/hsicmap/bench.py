"""Empirical checks of the random-feature approximation: error rates, bound and run time.

Product errors are reported raw (unnormalised n x n kernel products, no 1/n^2),
the scale at which the error bound below is stated.
"""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass

import numpy as np

from hsicmap.errors import InputError, NonPositiveError, PowerIterationNoConvergence
from hsicmap.hsic import centered_gram, check_pair, hsic, rhsic
from hsicmap.kernelcore import Bandwidth, Heuristic, as_bandwidth, bandwidth_heuristic
from hsicmap.rff import approx_gram, feature_pair
from hsicmap.seeding import generator, spawn_seeds
from hsicmap.sensmap import SensitivityMap, hsic_sensitivity, rhsic_sensitivity

logger = logging.getLogger(__name__)

STANDARD_GRID = (16, 64, 256, 1024)


@dataclass(frozen=True, eq=False)
class RateFit:
    grid_D: np.ndarray
    errors: np.ndarray
    slope: float
    intercept: float


def fit_rate(grid_D, errors) -> RateFit:
    """Least squares of log(error) on log(D)."""
    grid = np.asarray(grid_D, dtype=np.float64)
    err = np.asarray(errors, dtype=np.float64)
    if grid.shape != err.shape or grid.ndim != 1:
        raise InputError("grid and errors must be 1-D and of equal length")
    if grid.size < 3:
        raise InputError(f"Need at least 3 grid points, got {grid.size}")
    if np.any(np.diff(grid) <= 0):
        raise InputError("grid must be strictly increasing")
    if not np.all(np.isfinite(err)) or np.any(err <= 0):
        raise NonPositiveError("All errors must be finite and positive for a log-log fit")
    slope, intercept = np.polyfit(np.log(grid), np.log(err), 1)
    return RateFit(grid, err, float(slope), float(intercept))


def spectral_norm(E: np.ndarray, *, tol: float = 1e-8, max_iter: int = 10000, seed: int = 0) -> float:
    """Largest singular value by power iteration on E^T E."""
    v = generator(seed).standard_normal(E.shape[1])
    v /= np.linalg.norm(v)
    prev = 0.0
    for it in range(1, max_iter + 1):
        u = E @ v
        s = float(np.linalg.norm(u))
        if s == 0.0:
            return 0.0
        w = E.T @ (u / s)
        v = w / np.linalg.norm(w)
        if it > 1 and abs(s - prev) <= tol * s:
            return float(np.linalg.norm(E @ v))
        prev = s
    raise PowerIterationNoConvergence(f"Power iteration did not converge in {max_iter} iterations")


def product_error(
    X,
    Y,
    sigma_x: Bandwidth | float,
    sigma_y: Bandwidth | float,
    D: int,
    seed: int = 0,
    *,
    max_iter: int = 10000,
) -> float:
    """Spectral norm of K^_x K^_y - K_x K_y with centred Grams and centred maps."""
    X, Y = check_pair(X, Y)
    sx, sy = as_bandwidth(sigma_x), as_bandwidth(sigma_y)
    Lx, Ly = centered_gram(X, sx), centered_gram(Y, sy)
    Zx, Zy = feature_pair(X, Y, D, sx, sy, seed)
    E = approx_gram(Zx).values @ approx_gram(Zy).values - Lx @ Ly
    return spectral_norm(E, max_iter=max_iter, seed=seed)


def product_error_bound(n: int, D: int) -> float:
    """sqrt(3 n^4 log n / D) + 2 n^2 log n / D."""
    log_n = math.log(n)
    return math.sqrt(3.0 * n ** 4 * log_n / D) + 2.0 * n * n * log_n / D


def _repeated_errors(
    X: np.ndarray,
    Y: np.ndarray,
    sx: Bandwidth,
    sy: Bandwidth,
    D: int,
    rep_seeds: list[int],
    exact: float,
    exact_map: SensitivityMap,
    with_product: bool,
) -> tuple[float, float, float]:
    """Medians over `rep_seeds` of |RHSIC - HSIC|, the map error and the product error."""
    stat_err, map_err, prod_err = [], [], []
    for s in rep_seeds:
        Zx, Zy = feature_pair(X, Y, D, sx, sy, s)
        stat_err.append(abs(rhsic(Zx, Zy).value - exact))
        map_err.append(float(np.linalg.norm(rhsic_sensitivity(X, Y, Zx, Zy).S - exact_map.S)))
        if with_product:
            prod_err.append(product_error(X, Y, sx, sy, D, s))
    return (
        float(np.median(stat_err)),
        float(np.median(map_err)),
        float(np.median(prod_err)) if with_product else math.nan,
    )


@dataclass(frozen=True, eq=False)
class ConvergenceStudy:
    grid_D: np.ndarray
    stat_error: np.ndarray  # median |RHSIC - HSIC|
    sensitivity_error: np.ndarray  # median Frobenius error of the map
    product_error: np.ndarray  # median spectral error
    bound: np.ndarray

    def fits(self) -> dict[str, RateFit]:
        return {
            "stat": fit_rate(self.grid_D, self.stat_error),
            "sensitivity": fit_rate(self.grid_D, self.sensitivity_error),
            "product": fit_rate(self.grid_D, self.product_error),
        }


def convergence_study(
    X,
    Y,
    grid_D=STANDARD_GRID,
    seeds: int = 10,
    seed: int = 0,
    *,
    heuristic: Heuristic = Heuristic.MEAN,
    with_product: bool = True,
) -> ConvergenceStudy:
    """Median errors of RHSIC against the exact path over `seeds` repetitions per D."""
    X, Y = check_pair(X, Y)
    sx = bandwidth_heuristic(X, heuristic)
    sy = bandwidth_heuristic(Y, heuristic)
    exact = hsic(X, Y, sx, sy).value
    exact_map = hsic_sensitivity(X, Y, sx, sy)
    rep_seeds = spawn_seeds(seed, seeds)

    grid = np.asarray(grid_D, dtype=np.int64)
    stat_err, sens_err, prod_err = [], [], []
    for D in grid:
        s_e, m_e, p_e = _repeated_errors(X, Y, sx, sy, int(D), rep_seeds, exact, exact_map, with_product)
        stat_err.append(s_e)
        sens_err.append(m_e)
        prod_err.append(p_e)
        logger.info("D=%s |RHSIC-HSIC|=%.3g map err=%.3g product err=%.3g", D, stat_err[-1], sens_err[-1], prod_err[-1])

    n = X.shape[0]
    return ConvergenceStudy(
        grid_D=grid,
        stat_error=np.array(stat_err),
        sensitivity_error=np.array(sens_err),
        product_error=np.array(prod_err),
        bound=np.array([product_error_bound(n, int(D)) for D in grid]),
    )


@dataclass(frozen=True)
class BenchRow:
    n: int
    D: int
    hsic: float
    rhsic: float
    hsic_ms: float
    rhsic_ms: float
    stat_error: float  # median |RHSIC - HSIC| over the repetitions
    sensitivity_error: float
    product_error: float
    bound: float

    HEADER = (
        "n", "D", "hsic", "rhsic", "hsic_ms", "rhsic_ms",
        "stat_error", "sensitivity_error", "product_error", "bound",
    )

    def as_row(self) -> tuple:
        return (
            self.n, self.D, self.hsic, self.rhsic, self.hsic_ms, self.rhsic_ms,
            self.stat_error, self.sensitivity_error, self.product_error, self.bound,
        )


def _best_ms(fn, repeats: int) -> tuple[float, object]:
    best, out = math.inf, None
    for _ in range(max(1, repeats)):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, (time.perf_counter() - t0) * 1000.0)
    return best, out


def uniform_pair(n: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Two independent U[0, 1] samples, the setting of the run-time experiment."""
    g = generator(seed)
    return g.uniform(0, 1, (n, 1)), g.uniform(0, 1, (n, 1))


def timing_study(
    sizes,
    grid_D=(30,),
    seed: int = 0,
    *,
    exact_limit: int = 4000,
    repeats: int = 1,
    seeds: int = 1,
    with_product: bool = True,
) -> list[BenchRow]:
    """Per-(n, D) statistic values, wall times and approximation errors.

    The error columns are medians over `seeds` feature draws, each from its
    own sub-stream of the data seed; the timed RHSIC run uses the first one.
    Everything that needs the exact path is NaN when n exceeds `exact_limit`.
    """
    if seeds < 1:
        raise InputError(f"Need at least one repetition, got seeds={seeds}")
    rows = []
    for n, data_seed in zip(sizes, spawn_seeds(seed, len(sizes))):
        n = int(n)
        X, Y = uniform_pair(n, data_seed)
        rep_seeds = spawn_seeds(data_seed, seeds)
        sx = bandwidth_heuristic(X) if n <= exact_limit else _sampled_bandwidth(X, data_seed)
        sy = bandwidth_heuristic(Y) if n <= exact_limit else _sampled_bandwidth(Y, data_seed)

        exact, hsic_ms, exact_map = math.nan, math.nan, None
        if n <= exact_limit:
            hsic_ms, stat = _best_ms(lambda: hsic(X, Y, sx, sy), repeats)
            exact = stat.value
            exact_map = hsic_sensitivity(X, Y, sx, sy)

        for D in grid_D:
            D = int(D)

            def _run():
                Zx, Zy = feature_pair(X, Y, D, sx, sy, rep_seeds[0])
                return rhsic(Zx, Zy)

            rhsic_ms, stat = _best_ms(_run, repeats)
            errors = (math.nan, math.nan, math.nan)
            if exact_map is not None:
                errors = _repeated_errors(X, Y, sx, sy, D, rep_seeds, exact, exact_map, with_product)
            rows.append(BenchRow(n, D, exact, stat.value, hsic_ms, rhsic_ms, *errors, product_error_bound(n, D)))
            logger.info("n=%s D=%s hsic=%.2fms rhsic=%.2fms |RHSIC-HSIC|=%.3g", n, D, hsic_ms, rhsic_ms, errors[0])
    return rows


def _sampled_bandwidth(X: np.ndarray, seed: int, m: int = 2000) -> Bandwidth:
    # mean distance over a subsample; the full O(n^2) pass is what large n avoids
    idx = generator(seed).choice(X.shape[0], size=min(m, X.shape[0]), replace=False)
    return bandwidth_heuristic(X[np.sort(idx)])
